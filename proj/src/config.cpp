#include "brl/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "brl/format.hpp"

namespace brl {

namespace {

constexpr std::string_view kKinds[] = {"bandit-regret", "mdp-regret", "online-brvi", "normality", "solve"};
constexpr std::string_view kVariants[] = {"plain", "truncated", "inflated"};
constexpr std::string_view kPresets[] = {"linear-bandit", "linear-bandit-bounded", "frozen-lake", "random-mdp"};

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
    std::vector<std::string_view> out;
    while (true) {
        const auto comma = s.find(',');
        out.push_back(trim(s.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        s.remove_prefix(comma + 1);
    }
    return out;
}

template <typename T>
T parse_number(std::string_view text, std::size_t line, std::string_view key) {
    T value{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec != std::errc{} || ptr != end)
        throw ConfigError("invalid value '" + std::string(text) + "' for key '" + std::string(key) + "'", line);
    return value;
}

std::string format_list(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_double(v[i]);
    return out;
}

std::string format_list(const std::vector<std::size_t>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + std::to_string(v[i]);
    return out;
}

using Setter = std::function<void(ExperimentConfig&, std::string_view, std::size_t)>;

template <typename T>
Setter number(T ExperimentConfig::*field, std::string_view key) {
    return [field, key](ExperimentConfig& c, std::string_view v, std::size_t line) {
        c.*field = parse_number<T>(v, line, key);
    };
}

template <typename T>
Setter optional_number(std::optional<T> ExperimentConfig::*field, std::string_view key) {
    return [field, key](ExperimentConfig& c, std::string_view v, std::size_t line) {
        if (v == "none")
            (c.*field).reset();
        else
            c.*field = parse_number<T>(v, line, key);
    };
}

template <typename T>
Setter number_list(std::vector<T> ExperimentConfig::*field, std::string_view key) {
    return [field, key](ExperimentConfig& c, std::string_view v, std::size_t line) {
        std::vector<T> out;
        for (auto item : split_list(v)) out.push_back(parse_number<T>(item, line, key));
        c.*field = std::move(out);
    };
}

const std::map<std::string, std::map<std::string, Setter, std::less<>>, std::less<>>& schema() {
    static const std::map<std::string, std::map<std::string, Setter, std::less<>>, std::less<>> table = {
        {"experiment",
         {
             {"kind",
              [](ExperimentConfig& c, std::string_view v, std::size_t line) {
                  try {
                      c.kind = parse_experiment_kind(v);
                  } catch (const ConfigError& e) {
                      throw ConfigError(e.what(), line);
                  }
              }},
             {"replications", number(&ExperimentConfig::replications, "replications")},
             {"seed", number(&ExperimentConfig::seed, "seed")},
             {"threads", number(&ExperimentConfig::threads, "threads")},
             {"output", [](ExperimentConfig& c, std::string_view v, std::size_t) { c.output = std::string(v); }},
             {"stride", number(&ExperimentConfig::stride, "stride")},
         }},
        {"risk",
         {
             {"alphas", number_list(&ExperimentConfig::alphas, "alphas")},
             {"delta", number(&ExperimentConfig::delta, "delta")},
             {"variant",
              [](ExperimentConfig& c, std::string_view v, std::size_t line) {
                  try {
                      c.variant = parse_bandit_variant(v);
                  } catch (const ConfigError& e) {
                      throw ConfigError(e.what(), line);
                  }
              }},
             {"fixed_scale", optional_number(&ExperimentConfig::fixed_scale, "fixed_scale")},
             {"br_eval_kernels", number(&ExperimentConfig::br_eval_kernels, "br_eval_kernels")},
         }},
        {"horizon",
         {
             {"steps", number(&ExperimentConfig::steps, "steps")},
             {"episode_length", number(&ExperimentConfig::episode_length, "episode_length")},
             {"planning_iterations", number(&ExperimentConfig::planning_iterations, "planning_iterations")},
         }},
        {"environment",
         {
             {"preset", [](ExperimentConfig& c, std::string_view v, std::size_t) { c.preset = std::string(v); }},
             {"hole_exit", optional_number(&ExperimentConfig::hole_exit, "hole_exit")},
             {"discount", optional_number(&ExperimentConfig::discount, "discount")},
             {"states", number(&ExperimentConfig::states, "states")},
             {"actions", number(&ExperimentConfig::actions, "actions")},
             {"instance_seed", number(&ExperimentConfig::instance_seed, "instance_seed")},
             {"noise", optional_number(&ExperimentConfig::noise, "noise")},
         }},
        {"normality",
         {
             {"data_sizes", number_list(&ExperimentConfig::data_sizes, "data_sizes")},
             {"posterior_samples", number(&ExperimentConfig::posterior_samples, "posterior_samples")},
             {"vi_iterations", number(&ExperimentConfig::vi_iterations, "vi_iterations")},
             {"state", number(&ExperimentConfig::state, "state")},
             {"min_visits", number(&ExperimentConfig::min_visits, "min_visits")},
         }},
    };
    return table;
}

std::string optional_text(const std::optional<double>& v) { return v ? format_double(*v) : "none"; }

std::string canonical(const ExperimentConfig& c, bool with_runtime) {
    std::ostringstream os;
    os << "[experiment]\n"
       << "kind = " << to_string(c.kind) << '\n'
       << "replications = " << c.replications << '\n'
       << "seed = " << c.seed << '\n';
    if (with_runtime) os << "threads = " << c.threads << '\n' << "output = " << c.output << '\n';
    os << "stride = " << c.stride << "\n\n"
       << "[risk]\n"
       << "alphas = " << format_list(c.alphas) << '\n'
       << "delta = " << format_double(c.delta) << '\n'
       << "variant = " << to_string(c.variant) << '\n'
       << "fixed_scale = " << optional_text(c.fixed_scale) << '\n'
       << "br_eval_kernels = " << c.br_eval_kernels << "\n\n"
       << "[horizon]\n"
       << "steps = " << c.steps << '\n'
       << "episode_length = " << c.episode_length << '\n'
       << "planning_iterations = " << c.planning_iterations << "\n\n"
       << "[environment]\n"
       << "preset = " << c.preset << '\n'
       << "hole_exit = " << optional_text(c.hole_exit) << '\n'
       << "discount = " << optional_text(c.discount) << '\n'
       << "states = " << c.states << '\n'
       << "actions = " << c.actions << '\n'
       << "instance_seed = " << c.instance_seed << '\n'
       << "noise = " << optional_text(c.noise) << "\n\n"
       << "[normality]\n"
       << "data_sizes = " << format_list(c.data_sizes) << '\n'
       << "posterior_samples = " << c.posterior_samples << '\n'
       << "vi_iterations = " << c.vi_iterations << '\n'
       << "state = " << c.state << '\n'
       << "min_visits = " << c.min_visits << '\n';
    return os.str();
}

}  // namespace

ConfigError::ConfigError(const std::string& message, std::size_t line)
    : std::runtime_error(line ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}

std::string_view to_string(ExperimentKind kind) { return kKinds[static_cast<std::size_t>(kind)]; }

ExperimentKind parse_experiment_kind(std::string_view text) {
    for (std::size_t i = 0; i < std::size(kKinds); ++i)
        if (kKinds[i] == text) return static_cast<ExperimentKind>(i);
    throw ConfigError("unknown experiment kind '" + std::string(text) + "'");
}

std::string_view to_string(BanditVariant variant) { return kVariants[static_cast<std::size_t>(variant)]; }

BanditVariant parse_bandit_variant(std::string_view text) {
    for (std::size_t i = 0; i < std::size(kVariants); ++i)
        if (kVariants[i] == text) return static_cast<BanditVariant>(i);
    throw ConfigError("unknown bandit variant '" + std::string(text) + "'");
}

bool is_bandit_preset(std::string_view preset) {
    return preset == "linear-bandit" || preset == "linear-bandit-bounded";
}

void ExperimentConfig::validate() const {
    if (replications < 1) throw ConfigError("replications must be at least 1");
    if (threads < 1) throw ConfigError("threads must be at least 1");
    if (stride < 1) throw ConfigError("stride must be at least 1");
    if (output.empty()) throw ConfigError("output directory must not be empty");
    if (alphas.empty()) throw ConfigError("alphas must list at least one risk level");
    for (double a : alphas)
        if (!(a >= 0.0 && a < 1.0)) throw ConfigError("risk level " + format_double(a) + " is outside [0, 1)");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
    if (fixed_scale && !(*fixed_scale > 0.0)) throw ConfigError("fixed_scale must be positive");
    if (steps < 1) throw ConfigError("steps must be at least 1");
    if (episode_length < 1) throw ConfigError("episode_length must be at least 1");
    if (std::find(std::begin(kPresets), std::end(kPresets), preset) == std::end(kPresets))
        throw ConfigError("unknown environment preset '" + preset + "'");
    if (hole_exit && !(*hole_exit > 0.0 && *hole_exit < 1.0)) throw ConfigError("hole_exit must lie in (0, 1)");
    if (discount && !(*discount >= 0.0 && *discount < 1.0)) throw ConfigError("discount must lie in [0, 1)");
    if (noise && !(*noise >= 0.0)) throw ConfigError("noise must be nonnegative");
    if (states < 1 || actions < 1) throw ConfigError("states and actions must be at least 1");
    if (data_sizes.empty()) throw ConfigError("data_sizes must list at least one size");
    if (posterior_samples < 1) throw ConfigError("posterior_samples must be at least 1");

    const bool bandit = is_bandit_preset(preset);
    if ((kind == ExperimentKind::bandit_regret) != bandit)
        throw ConfigError("preset '" + preset + "' cannot be used for " + std::string(to_string(kind)));
    if (kind == ExperimentKind::bandit_regret && variant == BanditVariant::truncated &&
        preset != "linear-bandit-bounded")
        throw ConfigError("the truncated variant needs the linear-bandit-bounded preset");
    if (kind == ExperimentKind::normality) {
        for (double a : alphas)
            if (a == 0.0) throw ConfigError("normality experiments need risk levels in (0, 1)");
        const std::size_t n_states = preset == "frozen-lake" ? 16 : states;
        if (state >= n_states) throw ConfigError("normality state is out of range");
    }
}

ExperimentConfig parse_config_text(std::string_view text) {
    ExperimentConfig config;
    const auto& table = schema();
    const std::map<std::string, Setter, std::less<>>* section = nullptr;
    std::string section_name;
    std::map<std::string, std::size_t> seen;
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const auto eol = text.find('\n');
        std::string_view line = text.substr(0, eol);
        text.remove_prefix(eol == std::string_view::npos ? text.size() : eol + 1);
        const auto comment = line.find_first_of("#;");
        line = trim(line.substr(0, comment));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("malformed section header", line_no);
            section_name = std::string(trim(line.substr(1, line.size() - 2)));
            const auto it = table.find(section_name);
            if (it == table.end()) throw ConfigError("unknown section [" + section_name + "]", line_no);
            section = &it->second;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'", line_no);
        if (!section) throw ConfigError("key outside of any section", line_no);
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        const auto it = section->find(key);
        if (it == section->end())
            throw ConfigError("unknown key '" + std::string(key) + "' in [" + section_name + "]", line_no);
        const std::string qualified = section_name + "." + std::string(key);
        if (!seen.emplace(qualified, line_no).second)
            throw ConfigError("duplicate key '" + std::string(key) + "' in [" + section_name + "]", line_no);
        it->second(config, value, line_no);
    }
    config.validate();
    return config;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

std::string serialize(const ExperimentConfig& config) { return canonical(config, true); }

std::uint64_t config_hash(const ExperimentConfig& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical(config, false)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace brl
