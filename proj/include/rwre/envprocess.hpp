#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rwre/environment.hpp"
#include "rwre/stats.hpp"

namespace rwre
{

//---------------------------------------------------------------------------//
/*!
 * A bounded function of the environment that reads ω only on a finite window
 * of sites relative to the current position.
 *
 * The evaluator receives the site vectors on `window` in declaration order.
 * `level_floor` is the smallest a >= 0 with x·û >= -a for every window site.
 */
class LocalFunction
{
  public:
    using Evaluator = std::function<double(std::span<const SiteVector>)>;

    LocalFunction(std::string name, std::vector<Site> window, Evaluator eval, double bound);

    // Ψ(ω) = Σ_z π_{0,z} (z·u), the local drift projected on u.
    static LocalFunction drift_dot(const StepSupport& support, std::span<const double> u);
    static LocalFunction constant(double c);
    // 1{π_{offset, J[step]} > threshold}.
    static LocalFunction indicator(const Site& offset, std::size_t step, double threshold);

    const std::string& name() const { return name_; }
    const std::vector<Site>& window() const { return window_; }
    double bound() const { return bound_; }
    Level level_floor(const Site& direction) const;

    // Ψ(T_x ω).
    double operator()(const Environment& env, const Site& x) const;

  private:
    std::string name_;
    std::vector<Site> window_;
    Evaluator eval_;
    double bound_;
};

struct CesaroTrace
{
    std::vector<std::size_t> n;
    std::vector<double> mean;
};

// Running means n^{-1} Σ_{j<n} Ψ(T_{X_j}ω) along one trajectory, recorded at
// each checkpoint.
CesaroTrace ergodic_average(std::shared_ptr<const EnvironmentModel> model, const LocalFunction& psi,
                            std::span<const std::size_t> checkpoints, std::uint64_t seed);

struct ErgodicEnsemble
{
    std::vector<CesaroTrace> runs;
    std::vector<std::size_t> n;
    std::vector<double> mean;  // across runs
    std::vector<double> sd;    // across runs
};

ErgodicEnsemble ergodic_ensemble(std::shared_ptr<const EnvironmentModel> model, const LocalFunction& psi,
                                 std::span<const std::size_t> checkpoints, std::size_t runs,
                                 std::uint64_t seed, unsigned workers = 1);

struct VariationRow
{
    std::size_t ell = 0;
    std::size_t hits = 0;
    std::size_t trials = 0;
    double i_hat = 0;
    double ci_lo = 0;
    double ci_hi = 0;
};

struct VariationReport
{
    std::size_t n = 0;
    std::vector<VariationRow> rows;
    ExponentFit fit;  // over rows with at least one hit
    bool fit_valid = false;
};

// Î_{n,ℓ} = P̂_0{max_{j<=n} X_j·û > X_n·û + ℓ/2}; one set of paths serves every ℓ.
VariationReport variation_proxy(std::shared_ptr<const EnvironmentModel> model, std::size_t n,
                                std::span<const std::size_t> ell_grid, std::size_t reps,
                                std::uint64_t seed, unsigned workers = 1);

struct EinfEstimate
{
    double value = 0;
    double se = 0;
    std::vector<double> chain_means;
};

// Mean of Ψ over steps [n_burn, n_burn + n_chain) of independent chains.
EinfEstimate estimate_Einf(std::shared_ptr<const EnvironmentModel> model, const LocalFunction& psi,
                           std::size_t n_chain, std::size_t n_burn, std::size_t chains,
                           std::uint64_t seed, unsigned workers = 1);

void write_cesaro_csv(std::ostream& os, const ErgodicEnsemble& e);
void write_variation_csv(std::ostream& os, const VariationReport& r);

}  // namespace rwre
