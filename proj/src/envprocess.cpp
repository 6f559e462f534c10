#include "rwre/envprocess.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "rwre/format.hpp"
#include "rwre/parallel.hpp"
#include "rwre/rng.hpp"
#include "rwre/walk.hpp"

namespace rwre
{

LocalFunction::LocalFunction(std::string name, std::vector<Site> window, Evaluator eval, double bound)
    : name_(std::move(name)), window_(std::move(window)), eval_(std::move(eval)), bound_(bound)
{
    if (!eval_)
        throw std::invalid_argument("LocalFunction: missing evaluator");
}

LocalFunction LocalFunction::drift_dot(const StepSupport& support, std::span<const double> u)
{
    if (u.size() != static_cast<std::size_t>(support.dim))
        throw std::invalid_argument("drift_dot: direction dimension mismatch");
    std::vector<double> proj;
    double bound = 0;
    for (const auto& z : support.steps)
    {
        double s = 0;
        for (int i = 0; i < support.dim; ++i)
            s += static_cast<double>(z[i]) * u[i];
        proj.push_back(s);
        bound = std::max(bound, std::abs(s));
    }
    return LocalFunction(
        "drift_dot", {Site{}},
        [proj](std::span<const SiteVector> w) {
            double s = 0;
            for (std::size_t k = 0; k < proj.size(); ++k)
                s += w[0][k] * proj[k];
            return s;
        },
        bound);
}

LocalFunction LocalFunction::constant(double c)
{
    return LocalFunction("constant", {}, [c](std::span<const SiteVector>) { return c; }, std::abs(c));
}

LocalFunction LocalFunction::indicator(const Site& offset, std::size_t step, double threshold)
{
    return LocalFunction(
        "indicator", {offset},
        [step, threshold](std::span<const SiteVector> w) {
            if (step >= w[0].size)
                throw std::out_of_range("indicator: step index outside J");
            return w[0][step] > threshold ? 1.0 : 0.0;
        },
        1.0);
}

Level LocalFunction::level_floor(const Site& direction) const
{
    Level a = 0;
    for (const auto& x : window_)
        a = std::max(a, -dot(x, direction));
    return a;
}

double LocalFunction::operator()(const Environment& env, const Site& x) const
{
    std::array<SiteVector, 8> small;
    std::vector<SiteVector> large;
    std::span<SiteVector> buf;
    if (window_.size() <= small.size())
    {
        buf = std::span<SiteVector>(small.data(), window_.size());
    }
    else
    {
        large.resize(window_.size());
        buf = large;
    }
    for (std::size_t i = 0; i < window_.size(); ++i)
        buf[i] = env.site_vector(x + window_[i]);
    return eval_(buf);
}

//---------------------------------------------------------------------------//

namespace
{

std::vector<std::size_t> checked_grid(std::span<const std::size_t> g, const char* what)
{
    std::vector<std::size_t> out(g.begin(), g.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    if (out.empty() || out.front() == 0)
        throw std::invalid_argument(std::string(what) + ": grid must be nonempty and positive");
    return out;
}

}  // namespace

CesaroTrace ergodic_average(std::shared_ptr<const EnvironmentModel> model, const LocalFunction& psi,
                            std::span<const std::size_t> checkpoints, std::uint64_t seed)
{
    const auto grid = checked_grid(checkpoints, "ergodic_average");
    Environment env(model, derive_seed(seed, "ergodic-env", 0));
    QuenchedStepper step(env, WalkSeed{derive_seed(seed, "ergodic-walk", 0)});
    CesaroTrace out;
    Site x{};
    double sum = 0;
    std::size_t gi = 0;
    for (std::size_t j = 0; gi < grid.size(); ++j)
    {
        sum += psi(env, x);
        if (j + 1 == grid[gi])
        {
            out.n.push_back(j + 1);
            out.mean.push_back(sum / static_cast<double>(j + 1));
            ++gi;
        }
        if (gi < grid.size())
            x = step(x);
    }
    return out;
}

ErgodicEnsemble ergodic_ensemble(std::shared_ptr<const EnvironmentModel> model, const LocalFunction& psi,
                                 std::span<const std::size_t> checkpoints, std::size_t runs,
                                 std::uint64_t seed, unsigned workers)
{
    if (runs < 2)
        throw std::invalid_argument("ergodic_ensemble: need at least 2 runs");
    ErgodicEnsemble e;
    e.runs = parallel_map(runs, workers, [&](std::size_t r) {
        return ergodic_average(model, psi, checkpoints, derive_seed(seed, "ergodic-run", r));
    });
    e.n = e.runs.front().n;
    for (std::size_t i = 0; i < e.n.size(); ++i)
    {
        std::vector<double> v;
        for (const auto& t : e.runs)
            v.push_back(t.mean[i]);
        e.mean.push_back(mean(v));
        e.sd.push_back(std::sqrt(variance(v)));
    }
    return e;
}

VariationReport variation_proxy(std::shared_ptr<const EnvironmentModel> model, std::size_t n,
                                std::span<const std::size_t> ell_grid, std::size_t reps,
                                std::uint64_t seed, unsigned workers)
{
    if (reps < 1000)
        throw std::invalid_argument("variation_proxy: reps must be >= 1000");
    if (n == 0)
        throw std::invalid_argument("variation_proxy: n must be positive");
    const auto grid = checked_grid(ell_grid, "variation_proxy");

    // gap = max_{j<=n} level_j - level_n; the event is {2 gap > ℓ}.
    auto gaps = parallel_map(reps, workers, [&](std::size_t r) {
        Environment env(model, derive_seed(seed, "variation-env", r));
        WalkPath p = simulate(env, Site{}, n, WalkSeed{derive_seed(seed, "variation-walk", r)});
        return p.running_max.back() - p.levels.back();
    });

    VariationReport rep;
    rep.n = n;
    std::vector<double> fx, fy;
    for (std::size_t ell : grid)
    {
        VariationRow row;
        row.ell = ell;
        row.trials = reps;
        for (Level g : gaps)
            row.hits += (2 * g > static_cast<Level>(ell)) ? 1 : 0;
        row.i_hat = static_cast<double>(row.hits) / static_cast<double>(reps);
        std::tie(row.ci_lo, row.ci_hi) = wilson_interval(row.hits, reps);
        if (row.hits > 0)
        {
            fx.push_back(static_cast<double>(ell));
            fy.push_back(row.i_hat);
        }
        rep.rows.push_back(row);
    }
    if (fx.size() >= 2)
    {
        rep.fit = fit_exponent(fx, fy);
        rep.fit_valid = true;
    }
    return rep;
}

EinfEstimate estimate_Einf(std::shared_ptr<const EnvironmentModel> model, const LocalFunction& psi,
                           std::size_t n_chain, std::size_t n_burn, std::size_t chains,
                           std::uint64_t seed, unsigned workers)
{
    if (n_chain == 0 || chains == 0)
        throw std::invalid_argument("estimate_Einf: n_chain and chains must be positive");
    EinfEstimate est;
    est.chain_means = parallel_map(chains, workers, [&](std::size_t c) {
        Environment env(model, derive_seed(seed, "einf-env", c));
        QuenchedStepper step(env, WalkSeed{derive_seed(seed, "einf-walk", c)});
        Site x{};
        for (std::size_t j = 0; j < n_burn; ++j)
            x = step(x);
        double sum = 0;
        for (std::size_t j = 0; j < n_chain; ++j)
        {
            sum += psi(env, x);
            if (j + 1 < n_chain)
                x = step(x);
        }
        return sum / static_cast<double>(n_chain);
    });
    est.value = mean(est.chain_means);
    est.se = chains > 1 ? std::sqrt(variance(est.chain_means) / static_cast<double>(chains)) : 0.0;
    return est;
}

void write_cesaro_csv(std::ostream& os, const ErgodicEnsemble& e)
{
    os << "n,cesaro_mean,sd\n";
    for (std::size_t i = 0; i < e.n.size(); ++i)
        os << e.n[i] << ',' << fmt(e.mean[i]) << ',' << fmt(e.sd[i]) << '\n';
}

void write_variation_csv(std::ostream& os, const VariationReport& r)
{
    os << "ell,I_hat,ci_lo,ci_hi\n";
    for (const auto& row : r.rows)
        os << row.ell << ',' << fmt(row.i_hat) << ',' << fmt(row.ci_lo) << ',' << fmt(row.ci_hi) << '\n';
}

}  // namespace rwre
