#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace rwre
{

// Largest lattice dimension supported. Unused trailing coordinates of a Site
// are always zero.
inline constexpr int kMaxDim = 4;

// Largest admissible step set |J|.
inline constexpr std::size_t kMaxSteps = 32;

using Coord = std::int32_t;
using Site = std::array<Coord, kMaxDim>;
using Level = std::int64_t;

inline Site operator+(const Site& a, const Site& b)
{
    Site r{};
    for (int i = 0; i < kMaxDim; ++i)
        r[i] = a[i] + b[i];
    return r;
}

inline Site operator-(const Site& a, const Site& b)
{
    Site r{};
    for (int i = 0; i < kMaxDim; ++i)
        r[i] = a[i] - b[i];
    return r;
}

inline Site operator-(const Site& a)
{
    Site r{};
    for (int i = 0; i < kMaxDim; ++i)
        r[i] = -a[i];
    return r;
}

inline Level dot(const Site& a, const Site& b)
{
    Level s = 0;
    for (int i = 0; i < kMaxDim; ++i)
        s += static_cast<Level>(a[i]) * b[i];
    return s;
}

inline double norm(const Site& a)
{
    double s = 0;
    for (int i = 0; i < kMaxDim; ++i)
        s += static_cast<double>(a[i]) * a[i];
    return std::sqrt(s);
}

inline bool is_zero(const Site& a)
{
    for (auto c : a)
        if (c != 0)
            return false;
    return true;
}

// Builds a Site from the first `values.size()` coordinates.
Site make_site(std::span<const long long> values);
Site make_site(std::initializer_list<long long> values);

// Unit vector e_{axis+1}.
Site unit(int axis);

std::string to_string(const Site& s, int dim);

struct SiteHash
{
    std::size_t operator()(const Site& s) const noexcept
    {
        std::uint64_t h = 0x9e3779b97f4a7c15ull;
        for (auto c : s)
        {
            h ^= static_cast<std::uint32_t>(c);
            h *= 0xbf58476d1ce4e5b9ull;
            h ^= h >> 31;
        }
        return static_cast<std::size_t>(h);
    }
};

}  // namespace rwre
