#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string_view>

#include "rwre/lattice.hpp"

namespace rwre
{

//---------------------------------------------------------------------------//
// Keyed counter-based randomness.
//
// Every random quantity in the library is a pure function of a 64-bit key.
// Keys are built by folding integers into a seed with the SplitMix64
// finalizer, so (seed, site, index) tuples map to effectively independent
// streams without any stored state.
//---------------------------------------------------------------------------//

// SplitMix64 output function (Stafford variant 13).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

// Folds one more word into a key.
constexpr std::uint64_t fold(std::uint64_t key, std::uint64_t word) noexcept
{
    return mix64(key + kGolden + mix64(word ^ 0xd6e8feb86659fd93ull));
}

inline std::uint64_t fold_site(std::uint64_t key, const Site& x) noexcept
{
    for (auto c : x)
        key = fold(key, static_cast<std::uint64_t>(static_cast<std::int64_t>(c)));
    return key;
}

// FNV-1a of a tag, used to separate seed namespaces by name.
constexpr std::uint64_t hash_tag(std::string_view tag) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char c : tag)
    {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

// Documented seed-splitting rule: child = fold(fold(mix64(master), fnv(tag)), index).
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::string_view tag,
                                    std::uint64_t index) noexcept
{
    return fold(fold(mix64(master), hash_tag(tag)), index);
}

// Top 53 bits to a double in [0, 1).
constexpr double to_unit(std::uint64_t bits) noexcept
{
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

//---------------------------------------------------------------------------//
/*!
 * Sequential SplitMix64 stream. Satisfies UniformRandomBitGenerator so it can
 * drive standard distributions, but the samplers below are used instead to
 * keep results identical across standard library implementations.
 */
class SplitMix64
{
  public:
    using result_type = std::uint64_t;

    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept
    {
        state_ += kGolden;
        return mix64(state_);
    }

    // Uniform in [0, 1).
    constexpr double uniform() noexcept { return to_unit((*this)()); }

    // Uniform in (0, 1].
    constexpr double uniform_pos() noexcept { return 1.0 - uniform(); }

  private:
    std::uint64_t state_;
};

// Standard normal by the Marsaglia polar method.
inline double sample_normal(SplitMix64& rng)
{
    while (true)
    {
        double u = 2.0 * rng.uniform() - 1.0;
        double v = 2.0 * rng.uniform() - 1.0;
        double s = u * u + v * v;
        if (s > 0.0 && s < 1.0)
            return u * std::sqrt(-2.0 * std::log(s) / s);
    }
}

// Gamma(shape, 1) by Marsaglia-Tsang; shape < 1 uses the U^{1/a} boost.
inline double sample_gamma(SplitMix64& rng, double shape)
{
    double boost = 1.0;
    if (shape < 1.0)
    {
        boost = std::pow(rng.uniform_pos(), 1.0 / shape);
        shape += 1.0;
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    while (true)
    {
        double x = sample_normal(rng);
        double v = 1.0 + c * x;
        if (v <= 0.0)
            continue;
        v = v * v * v;
        double u = rng.uniform_pos();
        if (u < 1.0 - 0.0331 * x * x * x * x
            || std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
            return boost * d * v;
    }
}

}  // namespace rwre
