#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rwre/environment.hpp"
#include "rwre/walk.hpp"

namespace rwre
{

//! Increment between consecutive regeneration candidates.
struct Slab
{
    std::size_t dtau = 0;
    Site dx{};
    bool confirmed = false;  // both endpoints confirmed
};

//---------------------------------------------------------------------------//
/*!
 * Regeneration times detected on a finite path.
 *
 * A candidate is a time n >= 1 whose level is a strict record and is never
 * undercut later within the horizon. It is confirmed when the walk went on to
 * reach level + margin and the level lies at least `tail_cut` below the final
 * running maximum. Confirmed candidates always form a prefix of `tau`.
 */
struct RegenerationRecord
{
    int dim = 0;
    std::vector<std::size_t> tau;
    std::vector<bool> confirmed;
    std::optional<std::size_t> beta;
    std::optional<Slab> initial_slab;  // 0 -> tau_1; never used by estimators
    std::vector<Slab> slabs;           // tau_k -> tau_{k+1}, k >= 1
    std::size_t horizon = 0;
    Level margin = 0;
    Level tail_cut = 0;
    std::size_t unconfirmed = 0;

    std::size_t confirmed_count() const { return tau.size() - unconfirmed; }
    std::vector<Slab> confirmed_slabs() const;
};

// β = min{n >= 0 : level_n < level_0}, or nullopt if the path never backtracks.
std::optional<std::size_t> backtrack_time(const WalkPath& path);

RegenerationRecord detect_regenerations(const WalkPath& path, Level margin, Level tail_cut);

struct VelocityEstimate
{
    std::vector<double> v_hat;
    std::vector<double> se;
    std::size_t n_slabs = 0;
};

struct DiffusionEstimate
{
    Eigen::MatrixXd d_hat;
    std::size_t n_slabs = 0;
};

// Ratio estimator ΣΔX / ΣΔτ over confirmed slabs; batch-means standard errors.
VelocityEstimate estimate_velocity(std::span<const Slab> slabs, int dim);
VelocityEstimate estimate_velocity(const RegenerationRecord& record);

// mean[(ΔX - Δτ v)(ΔX - Δτ v)^t] / mean[Δτ] over confirmed slabs.
DiffusionEstimate estimate_diffusion(std::span<const Slab> slabs, int dim, std::span<const double> v);
DiffusionEstimate estimate_diffusion(const RegenerationRecord& record, std::span<const double> v);

//---------------------------------------------------------------------------//
// Renewal diagnostics
//---------------------------------------------------------------------------//

struct MomentRow
{
    std::size_t index = 0;  // ℓ or m
    double value = 0;
    double se = 0;
    std::size_t count = 0;
};

struct FrequencyRow
{
    std::size_t n = 0;
    std::size_t hits = 0;
    std::size_t trials = 0;
    double frequency = 0;
};

struct RenewalDiagnostics
{
    double order = 1;
    std::vector<MomentRow> tau_moments;        // E[τ_ℓ^p] / ℓ^p
    std::vector<MomentRow> overshoot_moments;  // E|τ_{J_m} - m|^p
    std::vector<MomentRow> backtrack_moments;  // E|inf_n (X_{m+n} - X_m)·û|^p
    std::vector<FrequencyRow> slow_progress;   // P{(X_n - X_0)·û <= sqrt(n)}
};

RenewalDiagnostics renewal_diagnostics(std::span<const WalkPath> paths,
                                       std::span<const RegenerationRecord> records,
                                       double order,
                                       std::span<const std::size_t> grid);

struct RedirectConfig
{
    std::size_t paths = 200;
    std::size_t horizon = 5000;
    std::size_t burn_in = 2500;
    Level margin = 20;
    Level tail_cut = 20;
    double order = 2;
    std::vector<std::size_t> grid{1, 2, 4, 8, 16, 32};
    std::uint64_t seed = 1;
    unsigned workers = 1;
};

struct RedirectReport
{
    Site direction{};
    Level gcd_h = 1;
    double transience_fraction = 0;
    std::size_t confirmed_regenerations = 0;
    RenewalDiagnostics diagnostics;
};

// Reruns detection and diagnostics with a replacement direction. Paths do not
// depend on the direction, so the same seeds give the same trajectories.
RedirectReport redirect_analysis(const EnvironmentModel& model,
                                 const Site& new_direction,
                                 std::span<const double> v_hat,
                                 const RedirectConfig& config);

// CSV with columns k, dtau, dx_1..dx_d, confirmed. `first_index` offsets k.
void write_slab_csv(std::ostream& os, const RegenerationRecord& record, bool header = true,
                    std::size_t first_index = 1);

}  // namespace rwre
