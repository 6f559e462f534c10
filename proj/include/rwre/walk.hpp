#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "rwre/environment.hpp"
#include "rwre/lattice.hpp"
#include "rwre/rng.hpp"

namespace rwre
{

//! Seed of a walk's own randomness, independent of the environment seed.
struct WalkSeed
{
    std::uint64_t value = 0;
};

//---------------------------------------------------------------------------//
/*!
 * A finite trajectory X_0..X_n with cached levels X_k·û and running maxima.
 */
struct WalkPath
{
    int dim = 0;
    Site direction{};
    std::vector<Site> sites;
    std::vector<Level> levels;
    std::vector<Level> running_max;

    WalkPath() = default;
    WalkPath(int dim, const Site& direction, const Site& start);

    const Site& start() const { return sites.front(); }
    std::size_t steps() const { return sites.size() - 1; }
    std::size_t size() const { return sites.size(); }

    void push(const Site& x);
    void truncate(std::size_t count);
};

// Maps the current site to the next one.
using Stepper = std::function<Site(const Site&)>;

//! Steps drawn from ω_x with uniforms from the walk's own SplitMix64 stream.
class QuenchedStepper
{
  public:
    QuenchedStepper(Environment env, WalkSeed seed) : env_(std::move(env)), rng_(seed.value) {}

    Site operator()(const Site& x) { return env_.step_from(x, rng_.uniform()); }

  private:
    Environment env_;
    SplitMix64 rng_;
};

//---------------------------------------------------------------------------//
/*!
 * A path extended on demand by a stepper. Used wherever the horizon needed is
 * only known while scanning (regeneration checks, coupled walks).
 */
class LazyPath
{
  public:
    LazyPath(int dim, const Site& direction, const Site& start, Stepper stepper);

    std::size_t size() const { return path_.size(); }
    void extend_to(std::size_t count);

    const Site& site(std::size_t k)
    {
        extend_to(k + 1);
        return path_.sites[k];
    }
    Level level(std::size_t k)
    {
        extend_to(k + 1);
        return path_.levels[k];
    }

    // First index k >= from with level(k) >= target, realizing at most `cap`
    // sites in total.
    std::optional<std::size_t> first_at_or_above(Level target, std::size_t from, std::size_t cap);

    // Drops sites from index `count` on and continues with a new stepper.
    void restart_from(std::size_t count, Stepper stepper);

    const WalkPath& path() const { return path_; }

  private:
    WalkPath path_;
    Stepper stepper_;
};

//---------------------------------------------------------------------------//
// Operations
//---------------------------------------------------------------------------//

// n-step quenched walk under P_start^ω. simulate(n') is a prefix of simulate(n).
WalkPath simulate(const Environment& env, const Site& start, std::size_t n, WalkSeed seed);

// γ_ℓ = min{k : levels[k] >= ℓ}, or nullopt if the path never reaches ℓ.
std::optional<std::size_t> first_passage(const WalkPath& path, Level level);

// B_n(t) = (X_[nt] - X_0 - [nt] v) / sqrt(n) for each t.
std::vector<std::vector<double>> diffusive_scale(const WalkPath& path,
                                                 std::span<const double> velocity,
                                                 double n,
                                                 std::span<const double> t_grid);

// CSV with columns k, x_1..x_d, level.
void write_path_csv(std::ostream& os, const WalkPath& path);

}  // namespace rwre
