#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace rwre
{

double mean(std::span<const double> x);

// Unbiased sample variance; zero for fewer than two values.
double variance(std::span<const double> x);

// Standard error of the mean from nonoverlapping batch means. Falls back to
// one value per batch when there are fewer values than batches.
double batch_means_se(std::span<const double> x, std::size_t batches = 32);

// Unbiased sample covariance of row-stacked samples.
Eigen::MatrixXd sample_covariance(const std::vector<Eigen::VectorXd>& samples);

//---------------------------------------------------------------------------//
/*!
 * Least-squares line through (log n, log y). `slope_se` comes from the OLS
 * residuals and is NaN for fewer than three points.
 */
struct ExponentFit
{
    std::vector<double> n_grid;
    std::vector<double> y;
    double slope = 0;
    double intercept = 0;
    double slope_se = 0;
    double r_squared = 0;
};

ExponentFit fit_exponent(std::span<const double> n_grid, std::span<const double> y);

struct LinearFit
{
    double slope = 0;
    double intercept = 0;
    double slope_se = 0;
    double r_squared = 0;
};

LinearFit fit_line(std::span<const double> x, std::span<const double> y);

//---------------------------------------------------------------------------//
// Distribution functions and tests
//---------------------------------------------------------------------------//

double normal_cdf(double x);

// Two-sided p-value of a standard normal statistic.
double normal_two_sided_p(double z);

// Asymptotic Kolmogorov survival function Q_KS(λ).
double kolmogorov_q(double lambda);

struct KsResult
{
    double statistic = 0;
    double p_value = 1;
};

// One-sample Kolmogorov-Smirnov test against a continuous CDF.
KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf);

// Wilson score interval for a binomial proportion.
std::pair<double, double> wilson_interval(std::size_t hits, std::size_t trials, double z = 1.959963984540054);

// Pearson chi-square upper tail P(χ²_k > x).
double chi_square_sf(double x, double dof);

}  // namespace rwre
