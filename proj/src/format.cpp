#include "brl/format.hpp"

#include <array>
#include <charconv>

namespace brl {

std::string format_double(double x) {
    std::array<char, 64> buf{};
    const auto result = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    return {buf.data(), result.ptr};
}

}  // namespace brl
