#include "rwre/clt.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rwre/parallel.hpp"
#include "rwre/rng.hpp"
#include "rwre/walk.hpp"

namespace rwre
{

std::vector<Eigen::VectorXd> quenched_samples(const Environment& env, std::size_t n, std::size_t m_walks,
                                              std::span<const double> v, std::uint64_t seed, unsigned workers)
{
    const int d = env.support().dim;
    if (v.size() != static_cast<std::size_t>(d))
        throw std::invalid_argument("quenched_samples: velocity dimension mismatch");
    if (n == 0)
        throw std::invalid_argument("quenched_samples: n must be positive");
    const double root = std::sqrt(static_cast<double>(n));
    return parallel_map(m_walks, workers, [&](std::size_t k) {
        WalkPath p = simulate(env, Site{}, n, WalkSeed{derive_seed(seed, "quenched-walk", k)});
        Eigen::VectorXd b(d);
        for (int i = 0; i < d; ++i)
            b[i] = (static_cast<double>(p.sites.back()[i]) - static_cast<double>(n) * v[i]) / root;
        return b;
    });
}

namespace
{

// Coordinate axes followed by a basis of û^⊥ that is not already covered.
std::vector<Eigen::VectorXd> projection_directions(const Site& direction, int d)
{
    std::vector<Eigen::VectorXd> dirs;
    auto add = [&](Eigen::VectorXd u) {
        double nrm = u.norm();
        if (nrm < 1e-9)
            return;
        u /= nrm;
        for (const auto& w : dirs)
            if (std::abs(std::abs(u.dot(w)) - 1.0) < 1e-12)
                return;
        dirs.push_back(std::move(u));
    };
    for (int i = 0; i < d; ++i)
        add(Eigen::VectorXd::Unit(d, i));

    Eigen::VectorXd uh(d);
    for (int i = 0; i < d; ++i)
        uh[i] = static_cast<double>(direction[i]);
    uh.normalize();
    std::vector<Eigen::VectorXd> perp;
    for (int i = 0; i < d; ++i)
    {
        Eigen::VectorXd w = Eigen::VectorXd::Unit(d, i) - uh[i] * uh;
        for (const auto& p : perp)
            w -= w.dot(p) * p;
        if (w.norm() > 1e-9)
            perp.push_back(w.normalized());
    }
    for (auto& p : perp)
        add(p);
    return dirs;
}

}  // namespace

QuenchedCLTReport clt_check(const std::vector<std::vector<Eigen::VectorXd>>& samples,
                            const Eigen::MatrixXd& d_hat,
                            const Site& direction,
                            double alpha)
{
    if (samples.size() < 2)
        throw std::invalid_argument("clt_check: need at least 2 environments");
    const int d = static_cast<int>(d_hat.rows());
    const auto dirs = projection_directions(direction, d);

    QuenchedCLTReport rep;
    rep.alpha = alpha;
    rep.degenerate = true;
    for (const auto& env_samples : samples)
    {
        if (env_samples.size() < 2)
            throw std::invalid_argument("clt_check: need at least 2 samples per environment");
        EnvironmentCLT e;
        e.covariance = sample_covariance(env_samples);
        e.frobenius_to_d = (e.covariance - d_hat).norm();
        for (const auto& u : dirs)
        {
            ProjectionTest t;
            t.u = u;
            t.variance = u.dot(d_hat * u);
            std::vector<double> proj;
            proj.reserve(env_samples.size());
            for (const auto& b : env_samples)
                proj.push_back(u.dot(b));
            if (t.variance < 1e-12)
            {
                t.degenerate = true;
                double worst = 0;
                for (double x : proj)
                    worst = std::max(worst, std::abs(x));
                t.statistic = worst;
                t.pass = worst < 1e-9;
                t.p_value = t.pass ? 1.0 : 0.0;
            }
            else
            {
                rep.degenerate = false;
                const double sd = std::sqrt(t.variance);
                auto ks = ks_test(std::move(proj), [sd](double x) { return normal_cdf(x / sd); });
                t.statistic = ks.statistic;
                t.p_value = ks.p_value;
                t.pass = ks.p_value >= alpha;
            }
            e.pass = e.pass && t.pass;
            e.tests.push_back(std::move(t));
        }
        rep.passing += e.pass ? 1 : 0;
        rep.max_frobenius_to_d = std::max(rep.max_frobenius_to_d, e.frobenius_to_d);
        rep.environments.push_back(std::move(e));
    }
    for (std::size_t i = 0; i < rep.environments.size(); ++i)
        for (std::size_t j = i + 1; j < rep.environments.size(); ++j)
            rep.max_pairwise_frobenius = std::max(
                rep.max_pairwise_frobenius,
                (rep.environments[i].covariance - rep.environments[j].covariance).norm());

    const bool all = rep.passing == rep.environments.size();
    if (rep.degenerate)
        rep.verdict = all ? "degenerate, consistent" : "degenerate, inconsistent";
    else
        rep.verdict = std::to_string(rep.passing) + "/" + std::to_string(rep.environments.size())
                      + " environments pass at level " + std::to_string(alpha);
    return rep;
}

Eigen::MatrixXd degeneracy_directions(const EnvironmentModel& model)
{
    const auto& J = model.support();
    const auto& mean = model.mean_probabilities();
    const int d = J.dim;
    std::vector<Eigen::VectorXd> diffs;
    for (std::size_t a = 0; a < J.size(); ++a)
        for (std::size_t b = a + 1; b < J.size(); ++b)
        {
            if (!(mean[a] > 0 && mean[b] > 0))
                continue;
            Eigen::VectorXd v(d);
            for (int i = 0; i < d; ++i)
                v[i] = static_cast<double>(J.steps[a][i] - J.steps[b][i]);
            diffs.push_back(v);
        }
    if (diffs.empty())
        return Eigen::MatrixXd::Identity(d, d);

    Eigen::MatrixXd A(static_cast<Eigen::Index>(diffs.size()), d);
    for (std::size_t r = 0; r < diffs.size(); ++r)
        A.row(static_cast<Eigen::Index>(r)) = diffs[r].transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const double tol = 1e-9 * std::max(1.0, s.size() ? s[0] : 0.0);
    int rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        rank += s[i] > tol ? 1 : 0;

    Eigen::MatrixXd basis = svd.matrixV().rightCols(d - rank);
    // Fix signs so the first nonzero entry is positive.
    for (Eigen::Index c = 0; c < basis.cols(); ++c)
    {
        for (Eigen::Index r = 0; r < basis.rows(); ++r)
        {
            if (std::abs(basis(r, c)) > 1e-12)
            {
                if (basis(r, c) < 0)
                    basis.col(c) *= -1.0;
                break;
            }
        }
    }
    return basis;
}

//---------------------------------------------------------------------------//

namespace
{

std::vector<std::size_t> sorted_grid(std::span<const std::size_t> n_grid)
{
    if (n_grid.empty())
        throw std::invalid_argument("n_grid is empty");
    std::vector<std::size_t> g(n_grid.begin(), n_grid.end());
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    if (g.front() == 0)
        throw std::invalid_argument("n_grid entries must be positive");
    return g;
}

}  // namespace

QuenchedMeanReport quenched_mean_variance(std::shared_ptr<const EnvironmentModel> model,
                                          std::span<const std::size_t> n_grid,
                                          std::size_t n_env, std::size_t m_walks,
                                          std::uint64_t seed, unsigned workers)
{
    if (n_env < 30)
        throw std::invalid_argument("quenched_mean_variance: n_env must be >= 30");
    if (m_walks < 2)
        throw std::invalid_argument("quenched_mean_variance: m_walks must be >= 2");
    const auto grid = sorted_grid(n_grid);
    const int d = model->dim();
    const std::size_t G = grid.size();
    const std::size_t n_max = grid.back();

    // Per environment: for each grid point, the mean and unbiased variance of
    // each coordinate over the m walks.
    struct EnvStats
    {
        std::vector<double> mean;  // G*d
        std::vector<double> var;   // G*d
    };
    auto stats = parallel_map(n_env, workers, [&](std::size_t j) {
        Environment env(model, derive_seed(seed, "qmv-env", j));
        const std::uint64_t wseed = derive_seed(seed, "qmv-walk", j);
        std::vector<double> s(G * d, 0.0), ss(G * d, 0.0);
        for (std::size_t k = 0; k < m_walks; ++k)
        {
            QuenchedStepper step(env, WalkSeed{fold(wseed, k)});
            Site x{};
            std::size_t gi = 0;
            for (std::size_t t = 1; t <= n_max; ++t)
            {
                x = step(x);
                if (t == grid[gi])
                {
                    for (int i = 0; i < d; ++i)
                    {
                        const double c = static_cast<double>(x[i]);
                        s[gi * d + i] += c;
                        ss[gi * d + i] += c * c;
                    }
                    ++gi;
                }
            }
        }
        EnvStats out;
        out.mean.resize(G * d);
        out.var.resize(G * d);
        const double m = static_cast<double>(m_walks);
        for (std::size_t q = 0; q < G * d; ++q)
        {
            out.mean[q] = s[q] / m;
            out.var[q] = std::max(0.0, (ss[q] - m * out.mean[q] * out.mean[q]) / (m - 1));
        }
        return out;
    });

    QuenchedMeanReport rep;
    rep.n_env = n_env;
    rep.m_walks = m_walks;
    const double E = static_cast<double>(n_env);
    const double m = static_cast<double>(m_walks);
    std::vector<double> fit_n, fit_y;
    for (std::size_t gi = 0; gi < G; ++gi)
    {
        QuenchedMeanRow row;
        row.n = grid[gi];
        std::vector<double> w_trace(n_env, 0.0);
        for (int i = 0; i < d; ++i)
        {
            const std::size_t q = gi * d + i;
            double grand = 0;
            for (const auto& st : stats)
                grand += st.mean[q];
            grand /= E;
            double sum_w = 0;
            for (std::size_t j = 0; j < n_env; ++j)
            {
                const double dev = stats[j].mean[q] - grand;
                const double w = dev * dev * E / (E - 1) - stats[j].var[q] / m;
                w_trace[j] += w;
                sum_w += w;
            }
            row.var_corrected.push_back(std::max(0.0, sum_w / E));
        }
        row.trace_raw = mean(w_trace);
        row.se = std::sqrt(variance(w_trace) / E);
        row.floored = row.trace_raw <= 0;
        row.trace = std::max(0.0, row.trace_raw);
        if (!row.floored)
        {
            fit_n.push_back(static_cast<double>(row.n));
            fit_y.push_back(row.trace);
        }
        rep.rows.push_back(std::move(row));
    }
    if (fit_n.size() >= 2)
    {
        rep.fit = fit_exponent(fit_n, fit_y);
        rep.fit_valid = true;
    }
    return rep;
}

CenteredMeanReport centered_mean_bound(std::shared_ptr<const EnvironmentModel> model,
                                       std::span<const std::size_t> n_grid,
                                       std::span<const double> v_hat,
                                       std::span<const double> v_se,
                                       std::size_t reps, std::uint64_t seed,
                                       unsigned workers, double alpha)
{
    const int d = model->dim();
    if (v_hat.size() != static_cast<std::size_t>(d) || v_se.size() != static_cast<std::size_t>(d))
        throw std::invalid_argument("centered_mean_bound: velocity dimension mismatch");
    if (reps < 2)
        throw std::invalid_argument("centered_mean_bound: need at least 2 replicas");
    const auto grid = sorted_grid(n_grid);
    if (grid.size() < 2)
        throw std::invalid_argument("centered_mean_bound: need at least 2 grid points");
    const std::size_t G = grid.size();
    const Site& u = model->support().direction;

    std::vector<double> xs(grid.begin(), grid.end());
    struct Replica
    {
        std::vector<double> centered;  // G*d
        double slope = 0;
    };
    auto reps_out = parallel_map(reps, workers, [&](std::size_t r) {
        Environment env(model, derive_seed(seed, "centered-env", r));
        QuenchedStepper step(env, WalkSeed{derive_seed(seed, "centered-walk", r)});
        Replica out;
        out.centered.resize(G * d);
        std::vector<double> level(G);
        Site x{};
        std::size_t gi = 0;
        for (std::size_t t = 1; gi < G; ++t)
        {
            x = step(x);
            if (t == grid[gi])
            {
                double lv = 0;
                for (int i = 0; i < d; ++i)
                {
                    const double c = static_cast<double>(x[i]) - static_cast<double>(t) * v_hat[i];
                    out.centered[gi * d + i] = c;
                    lv += c * static_cast<double>(u[i]);
                }
                level[gi] = lv;
                ++gi;
            }
        }
        out.slope = fit_line(xs, level).slope;
        return out;
    });

    CenteredMeanReport rep;
    const double R = static_cast<double>(reps);
    for (std::size_t gi = 0; gi < G; ++gi)
    {
        CenteredMeanRow row;
        row.n = grid[gi];
        double norm2 = 0, norm2_up = 0;
        for (int i = 0; i < d; ++i)
        {
            std::vector<double> c(reps);
            for (std::size_t r = 0; r < reps; ++r)
                c[r] = reps_out[r].centered[gi * d + i];
            const double mu = mean(c);
            const double se = std::sqrt(variance(c) / R);
            row.mean.push_back(mu);
            row.se.push_back(se);
            norm2 += mu * mu;
            norm2_up += (std::abs(mu) + 1.96 * se) * (std::abs(mu) + 1.96 * se);
        }
        rep.max_abs = std::max(rep.max_abs, std::sqrt(norm2));
        rep.max_abs_upper = std::max(rep.max_abs_upper, std::sqrt(norm2_up));
        rep.rows.push_back(std::move(row));
    }

    std::vector<double> slopes(reps);
    for (std::size_t r = 0; r < reps; ++r)
        slopes[r] = reps_out[r].slope;
    double vu_var = 0;
    for (int i = 0; i < d; ++i)
        vu_var += static_cast<double>(u[i]) * static_cast<double>(u[i]) * v_se[i] * v_se[i];
    rep.slope = mean(slopes);
    rep.slope_se = std::sqrt(variance(slopes) / R + vu_var);
    rep.p_value = rep.slope_se > 0 ? normal_two_sided_p(rep.slope / rep.slope_se) : (rep.slope == 0 ? 1.0 : 0.0);
    rep.no_trend = rep.p_value >= alpha;
    return rep;
}

}  // namespace rwre
