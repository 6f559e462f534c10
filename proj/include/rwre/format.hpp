#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <system_error>

namespace rwre
{

// Shortest round-trip decimal form of a double; "nan"/"inf" for non-finite.
inline std::string fmt(double x)
{
    if (std::isnan(x))
        return "nan";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    if (ec != std::errc{})
        return "nan";
    return std::string(buf, end);
}

}  // namespace rwre
