#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rwre/environment.hpp"
#include "rwre/stats.hpp"

namespace rwre
{

// B_n(1) = (X_n - n v) / sqrt(n) for `m_walks` walks from the origin in one ω.
std::vector<Eigen::VectorXd> quenched_samples(const Environment& env, std::size_t n, std::size_t m_walks,
                                              std::span<const double> v, std::uint64_t seed,
                                              unsigned workers = 1);

struct ProjectionTest
{
    Eigen::VectorXd u;
    double variance = 0;  // u^t D̂ u
    bool degenerate = false;
    double statistic = 0;
    double p_value = 1;
    bool pass = true;
};

struct EnvironmentCLT
{
    Eigen::MatrixXd covariance;
    double frobenius_to_d = 0;
    std::vector<ProjectionTest> tests;
    bool pass = true;
};

struct QuenchedCLTReport
{
    double alpha = 0.01;
    std::vector<EnvironmentCLT> environments;
    std::size_t passing = 0;
    double max_frobenius_to_d = 0;
    double max_pairwise_frobenius = 0;
    bool degenerate = false;
    std::string verdict;
};

// One-dimensional KS tests of each environment's samples along the coordinate
// axes and an orthonormal basis of the hyperplane orthogonal to û.
QuenchedCLTReport clt_check(const std::vector<std::vector<Eigen::VectorXd>>& samples,
                            const Eigen::MatrixXd& d_hat,
                            const Site& direction,
                            double alpha = 0.01);

// Orthonormal basis of span{x - y : E π_{0x} E π_{0y} > 0}^⊥, one column per
// vector; zero columns when the differences span R^d.
Eigen::MatrixXd degeneracy_directions(const EnvironmentModel& model);

//---------------------------------------------------------------------------//

struct QuenchedMeanRow
{
    std::size_t n = 0;
    std::vector<double> var_corrected;  // per coordinate, floored at 0
    double trace = 0;                   // floored at 0
    double trace_raw = 0;
    double se = 0;
    bool floored = false;
};

struct QuenchedMeanReport
{
    std::size_t n_env = 0;
    std::size_t m_walks = 0;
    std::vector<QuenchedMeanRow> rows;
    ExponentFit fit;  // over rows with positive trace
    bool fit_valid = false;
};

// Var(E_0^ω X_n) by between-environment variance minus mean within-environment
// variance / m_walks. Each walk is simulated once to max(n_grid).
QuenchedMeanReport quenched_mean_variance(std::shared_ptr<const EnvironmentModel> model,
                                          std::span<const std::size_t> n_grid,
                                          std::size_t n_env, std::size_t m_walks,
                                          std::uint64_t seed, unsigned workers = 1);

struct CenteredMeanRow
{
    std::size_t n = 0;
    std::vector<double> mean;  // Ê_0(X_n) - n v̂, per coordinate
    std::vector<double> se;
};

struct CenteredMeanReport
{
    std::vector<CenteredMeanRow> rows;
    double max_abs = 0;        // max_n |Ê_0(X_n) - n v̂| (Euclidean)
    double max_abs_upper = 0;  // same with each coordinate pushed out by 1.96 se
    double slope = 0;          // mean per-replica trend of (X_n - n v̂)·û in n
    double slope_se = 0;       // includes the uncertainty of v̂·û
    double p_value = 1;
    bool no_trend = true;      // at level alpha
};

CenteredMeanReport centered_mean_bound(std::shared_ptr<const EnvironmentModel> model,
                                       std::span<const std::size_t> n_grid,
                                       std::span<const double> v_hat,
                                       std::span<const double> v_se,
                                       std::size_t reps, std::uint64_t seed,
                                       unsigned workers = 1, double alpha = 0.01);

}  // namespace rwre
