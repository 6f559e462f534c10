#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rwre/lattice.hpp"
#include "rwre/rng.hpp"
#include "rwre/stats.hpp"

namespace rwre
{

//---------------------------------------------------------------------------//
/*!
 * A symmetric, nondegenerate step distribution on Z with finite support.
 */
class SymmetricWalk1D
{
  public:
    explicit SymmetricWalk1D(const std::map<long long, double>& pmf);

    // ±1 with probability 1/2 each.
    static SymmetricWalk1D simple();

    // Steps in increasing order with positive probability.
    const std::vector<std::pair<long long, double>>& pmf() const { return pmf_; }
    double p(long long k) const;
    long long range() const { return range_; }
    // gcd of the support, which fixes the lattice the walk lives on.
    long long period() const { return period_; }

    long long sample(double u) const;
    long long sample(SplitMix64& rng) const { return sample(rng.uniform()); }

  private:
    std::vector<std::pair<long long, double>> pmf_;
    std::vector<double> cdf_;
    long long range_ = 0;
    long long period_ = 1;
};

struct LadderResult
{
    std::vector<double> pmf;  // pmf[h] = P{Z = h}, pmf[0] = 0
    std::size_t K = 0;        // truncation depth of the reported solve
    double truncation_error = 0;
    bool warning = false;
};

// Strict ascending ladder height pmf by an absorbing linear solve on -K..0.
// The reported table uses depth 2K; the error estimate is its difference from
// the depth-K solve. K = 0 picks 100 times the step range.
LadderResult ladder_heights(const SymmetricWalk1D& walk, std::size_t K = 0);

//---------------------------------------------------------------------------//
/*!
 * Ladder-variable tables for the half-line Green function.
 *
 * v(m) is the ladder renewal function: v(0) = 1 and
 * v(m) = Σ_j P{Z = j} v(m - j). With x = s - r0 - 1 and y = t - r0 - 1,
 * g(s, t) = c Σ_{n=0}^{min(x,y)} v(x - n) v(y - n), where c is fixed once by
 * matching g(r0+1, r0+1) to the linear-solve oracle.
 */
struct LadderTables
{
    LadderResult ladder;
    std::vector<double> v_table;
    double normalization = 1;

    void ensure(std::size_t m_max);
};

LadderTables build_ladder_tables(const SymmetricWalk1D& walk, std::size_t m_max = 64, std::size_t K = 0);

// Expected visits to t before entering (-∞, r0], starting from s.
double half_line_green(const SymmetricWalk1D& walk, long long r0, long long s, long long t, LadderTables& tables);

// g(s, t) for s, t in r0+1..s_max by a sparse linear solve. Jumps past the top
// of the state space are folded back by multiples of the walk's period.
// Entry (i, j) corresponds to (r0+1+i, r0+1+j).
Eigen::MatrixXd half_line_green_oracle(const SymmetricWalk1D& walk, long long r0, long long s_max,
                                       std::size_t pad = 0);

struct MonteCarloValue
{
    double value = 0;
    double se = 0;
    std::size_t reps = 0;
    double truncated_fraction = 0;
};

MonteCarloValue half_line_green_mc(const SymmetricWalk1D& walk, long long r0, long long s, long long t,
                                   std::size_t reps, std::uint64_t seed, unsigned workers = 1,
                                   std::size_t step_cap = 10'000'000);

enum class TailMode
{
    exact,
    monte_carlo,
};

struct TailRow
{
    std::size_t a = 0;
    double value = 0;
    double se = 0;
};

// P{T̄ >= a} with T̄ = inf{n >= 1 : S_n < 0}, S_0 = 0. The exact mode is a
// dynamic program over surviving positions.
std::vector<TailRow> first_passage_tail(const SymmetricWalk1D& walk, std::span<const std::size_t> a_grid,
                                        TailMode mode, std::size_t reps = 0, std::uint64_t seed = 0,
                                        unsigned workers = 1);

// P{leave [r0+1, r] into [r+1, ∞) before entering (-∞, r0]} from x.
double exit_probability(const SymmetricWalk1D& walk, long long r0, long long r, long long x);
MonteCarloValue exit_probability_mc(const SymmetricWalk1D& walk, long long r0, long long r, long long x,
                                    std::size_t reps, std::uint64_t seed, unsigned workers = 1);

//---------------------------------------------------------------------------//
// Perturbed Markov chains on Z^d
//---------------------------------------------------------------------------//

struct StepAtom
{
    Site z{};
    double p = 0;
};

/*!
 * Chain that, at state x, steps from `alternative` with probability
 * min(1, C (|x| ∨ 1)^{-p1}) and from the symmetric base otherwise.
 */
struct PerturbedChainSpec
{
    int dim = 2;
    std::vector<StepAtom> base;         // symmetric pmf on Z^d
    std::vector<StepAtom> alternative;  // defaults to {e1: 1}
    double C = 0.5;
    double p1 = 16;

    enum class HKind
    {
        power,
        origin,
    };
    HKind h_kind = HKind::power;
    double C_h = 1;
    double p2 = 16;
    std::vector<Site> starts{Site{}};

    // Base step with each coordinate drawn independently from `walk`.
    static std::vector<StepAtom> product_base(const SymmetricWalk1D& walk, int dim);

    void validate() const;
    bool exploratory() const { return p1 <= 15; }
    double perturbation(const Site& x) const;
    double h(const Site& x) const;
    // max{1 - p2/(2p1 - 4), 1/2 + 13/(2p1 - 4)}.
    double theorem_exponent() const;
};

class PerturbedChain
{
  public:
    explicit PerturbedChain(PerturbedChainSpec spec);

    const PerturbedChainSpec& spec() const { return spec_; }
    Site step(const Site& x, SplitMix64& rng) const;

  private:
    PerturbedChainSpec spec_;
    std::vector<double> base_cdf_;
    std::vector<double> alt_cdf_;
};

struct GreenCurveRow
{
    std::size_t n = 0;
    double value = 0;  // mean over reps and starts of Σ_{k<n} h(Y_k)
    double se = 0;
};

struct GreenBoundReport
{
    std::vector<GreenCurveRow> rows;
    ExponentFit fit;
    bool fit_valid = false;
    double theorem_exponent = 0;
    bool exploratory = false;
};

GreenBoundReport green_bound_experiment(const PerturbedChainSpec& spec, std::span<const std::size_t> n_grid,
                                        std::size_t reps, std::uint64_t seed, unsigned workers = 1);

struct ExitTimeRow
{
    std::size_t r = 0;
    double mean = 0;
    double se = 0;
};

struct ExitTimeReport
{
    std::vector<ExitTimeRow> rows;
    ExponentFit fit;  // over r >= 1
    bool fit_valid = false;
};

// Mean of U_r = min{n >= 1 : Y_n ∉ [-r, r]^d} from the first configured start.
ExitTimeReport cube_exit_time(const PerturbedChainSpec& spec, std::span<const std::size_t> r_grid,
                              std::size_t reps, std::uint64_t seed, unsigned workers = 1);

void write_v_table_csv(std::ostream& os, const LadderTables& tables);

}  // namespace rwre
