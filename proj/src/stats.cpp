#include "rwre/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>

namespace rwre
{

double mean(std::span<const double> x)
{
    if (x.empty())
        throw std::invalid_argument("mean of empty sample");
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(std::span<const double> x)
{
    if (x.size() < 2)
        return 0.0;
    const double m = mean(x);
    double ss = 0;
    for (double v : x)
        ss += (v - m) * (v - m);
    return ss / static_cast<double>(x.size() - 1);
}

double batch_means_se(std::span<const double> x, std::size_t batches)
{
    if (x.size() < 2)
        return 0.0;
    batches = std::min(batches, x.size());
    const std::size_t per = x.size() / batches;
    std::vector<double> means;
    means.reserve(batches);
    for (std::size_t b = 0; b < batches; ++b)
        means.push_back(mean(x.subspan(b * per, per)));
    return std::sqrt(variance(means) / static_cast<double>(batches));
}

Eigen::MatrixXd sample_covariance(const std::vector<Eigen::VectorXd>& samples)
{
    if (samples.size() < 2)
        throw std::invalid_argument("covariance needs at least two samples");
    const auto d = samples.front().size();
    Eigen::VectorXd m = Eigen::VectorXd::Zero(d);
    for (const auto& s : samples)
        m += s;
    m /= static_cast<double>(samples.size());
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(d, d);
    for (const auto& s : samples)
        c += (s - m) * (s - m).transpose();
    return c / static_cast<double>(samples.size() - 1);
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_line needs at least two paired points");
    const double n = static_cast<double>(x.size());
    const double mx = mean(x), my = mean(y);
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0)
        throw std::invalid_argument("fit_line: abscissae are all equal");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double rss = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        double r = y[i] - f.intercept - f.slope * x[i];
        rss += r * r;
    }
    f.slope_se = x.size() > 2 ? std::sqrt(rss / (n - 2) / sxx)
                              : std::numeric_limits<double>::quiet_NaN();
    f.r_squared = syy > 0 ? 1.0 - rss / syy : 1.0;
    return f;
}

ExponentFit fit_exponent(std::span<const double> n_grid, std::span<const double> y)
{
    if (n_grid.size() != y.size())
        throw std::invalid_argument("fit_exponent: grid and values differ in length");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < y.size(); ++i)
    {
        if (!(n_grid[i] > 0) || !(y[i] > 0))
            throw std::invalid_argument("fit_exponent: values must be positive");
        lx.push_back(std::log(n_grid[i]));
        ly.push_back(std::log(y[i]));
    }
    LinearFit lf = fit_line(lx, ly);
    ExponentFit f;
    f.n_grid.assign(n_grid.begin(), n_grid.end());
    f.y.assign(y.begin(), y.end());
    f.slope = lf.slope;
    f.intercept = lf.intercept;
    f.slope_se = lf.slope_se;
    f.r_squared = lf.r_squared;
    return f;
}

double normal_cdf(double x)
{
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

double normal_two_sided_p(double z)
{
    return std::erfc(std::abs(z) / std::sqrt(2.0));
}

double kolmogorov_q(double lambda)
{
    if (lambda < 0.2)
        return 1.0;
    double sum = 0;
    double sign = 1;
    for (int k = 1; k <= 100; ++k)
    {
        double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
        sum += term;
        if (std::abs(term) < 1e-16 * std::abs(sum))
            break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf)
{
    if (samples.empty())
        throw std::invalid_argument("ks_test: empty sample");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0;
    for (std::size_t i = 0; i < samples.size(); ++i)
    {
        double f = cdf(samples[i]);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
    }
    const double rn = std::sqrt(n);
    KsResult r;
    r.statistic = d;
    r.p_value = kolmogorov_q((rn + 0.12 + 0.11 / rn) * d);
    return r;
}

std::pair<double, double> wilson_interval(std::size_t hits, std::size_t trials, double z)
{
    if (trials == 0)
        return {0.0, 1.0};
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(hits) / n;
    const double z2 = z * z;
    const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
    const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n);
    const double lo = hits == 0 ? 0.0 : std::max(0.0, centre - half);
    const double hi = hits == trials ? 1.0 : std::min(1.0, centre + half);
    return {lo, hi};
}

double chi_square_sf(double x, double dof)
{
    if (x <= 0)
        return 1.0;
    return boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), x));
}

}  // namespace rwre
