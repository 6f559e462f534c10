#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rwre/lattice.hpp"

namespace rwre
{

//---------------------------------------------------------------------------//
/*!
 * Admissible steps J of the walk together with the transience direction û.
 *
 * The order of `steps` is significant: site vectors are indexed by it and the
 * inverse-CDF step sampler walks it front to back.
 */
struct StepSupport
{
    int dim = 0;
    std::vector<Site> steps;
    Site direction{};

    // Largest Euclidean norm over J.
    double step_bound() const;

    // Throws std::invalid_argument when an invariant is violated.
    void validate() const;

    std::size_t size() const { return steps.size(); }
};

enum class LawKind
{
    deterministic,
    dirichlet,
    discrete_mixture,
};

std::string_view to_string(LawKind kind);

struct MixtureAtom
{
    std::vector<double> p;
    double weight = 0;
};

//! A probability vector on J stored inline.
struct SiteVector
{
    std::array<double, kMaxSteps> p{};
    std::size_t size = 0;

    double operator[](std::size_t i) const { return p[i]; }
    std::span<const double> values() const { return {p.data(), size}; }
};

//---------------------------------------------------------------------------//
/*!
 * Law of one site vector ω_x; the environment is the i.i.d. product of it.
 *
 * An optional ellipticity floor κ replaces each drawn vector q by
 * (1 - κ|J|) q + κ, which keeps every entry at least κ.
 */
class EnvironmentModel
{
  public:
    static EnvironmentModel deterministic(StepSupport support,
                                          std::vector<double> p,
                                          double floor = 0.0);
    static EnvironmentModel dirichlet(StepSupport support,
                                      std::vector<double> alpha,
                                      double floor = 0.0);
    static EnvironmentModel mixture(StepSupport support,
                                    std::vector<MixtureAtom> atoms,
                                    double floor = 0.0);

    const StepSupport& support() const { return support_; }
    int dim() const { return support_.dim; }
    LawKind kind() const { return kind_; }
    double floor() const { return floor_; }
    const std::vector<double>& params() const { return params_; }
    const std::vector<MixtureAtom>& atoms() const { return atoms_; }

    // E π_{0,z} for each z in J.
    const std::vector<double>& mean_probabilities() const { return mean_; }

    // Mean drift Σ z E π_{0,z}.
    std::vector<double> mean_drift() const;

    // Extreme points of the (closed) set of realizable site vectors.
    std::vector<std::vector<double>> extreme_vectors() const;

    // Sample from the law using a site key; deterministic in the key.
    SiteVector draw(std::uint64_t site_key) const;

    // Copy of this model with a different transience direction.
    EnvironmentModel with_direction(const Site& direction) const;

  private:
    EnvironmentModel() = default;
    void finish();
    void apply_floor(SiteVector& v) const;

    StepSupport support_;
    LawKind kind_ = LawKind::deterministic;
    double floor_ = 0;
    std::vector<double> params_;  // p for deterministic, alpha for dirichlet
    std::vector<MixtureAtom> atoms_;
    std::vector<double> mean_;
    SiteVector fixed_;  // floored vector for the deterministic kind
    std::vector<double> atom_cdf_;
};

//---------------------------------------------------------------------------//
/*!
 * A lazily realized environment ω.
 *
 * `site_vector(x)` is a pure function of (seed, x): the vector at x is drawn
 * from a stream keyed by a SplitMix64 fold of the seed and the coordinates of
 * x. Dirichlet components use one sub-stream per component (component i is
 * keyed by (site key, i)), so each coordinate's Gamma draw is reproducible no
 * matter how many rejection rounds the others needed.
 *
 * Immutable and safe to share across threads.
 */
class Environment
{
  public:
    Environment(std::shared_ptr<const EnvironmentModel> model, std::uint64_t seed);

    const EnvironmentModel& model() const { return *model_; }
    std::shared_ptr<const EnvironmentModel> model_ptr() const { return model_; }
    std::uint64_t seed() const { return seed_; }
    const StepSupport& support() const { return model_->support(); }

    SiteVector site_vector(const Site& x) const;

    // Inverse-CDF draw of a step index from ω_x using a uniform u in [0,1).
    std::size_t sample_step(const Site& x, double u) const;

    Site step_from(const Site& x, double u) const
    {
        return x + support().steps[sample_step(x, u)];
    }

  private:
    std::shared_ptr<const EnvironmentModel> model_;
    std::uint64_t seed_;
    bool homogeneous_;
};

// Inverse CDF over a probability vector.
std::size_t inverse_cdf(std::span<const double> p, double u);

//---------------------------------------------------------------------------//
// Level structure and static hypothesis checks
//---------------------------------------------------------------------------//

// gcd of |z·û| over z in J with z·û != 0. Throws if every z·û is zero.
Level compute_h(const StepSupport& support);

struct NonNestling
{
    bool holds = false;
    double delta = 0;  // minimal drift·û over realizable vectors
};

struct UniformEllipticity
{
    bool holds = false;
    double kappa = 0;
};

struct HypothesisReport
{
    bool bounded_steps = true;
    double step_bound = 0;
    Level gcd_h = 1;
    std::optional<NonNestling> non_nestling;
    std::optional<UniformEllipticity> uniform_ellipticity;
    bool r_span = false;
    int span_rank = 0;
    bool r_restricted_path = false;
    std::string notes;
};

HypothesisReport check_hypotheses(const EnvironmentModel& model);

// Rank of the linear span of a set of integer vectors in R^dim.
int span_rank(std::span<const Site> vectors, int dim);

}  // namespace rwre
