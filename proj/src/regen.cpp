#include "rwre/regen.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "rwre/parallel.hpp"
#include "rwre/stats.hpp"

namespace rwre
{

std::vector<Slab> RegenerationRecord::confirmed_slabs() const
{
    std::vector<Slab> out;
    for (const auto& s : slabs)
        if (s.confirmed)
            out.push_back(s);
    return out;
}

std::optional<std::size_t> backtrack_time(const WalkPath& path)
{
    const Level l0 = path.levels.front();
    for (std::size_t n = 1; n < path.levels.size(); ++n)
        if (path.levels[n] < l0)
            return n;
    return std::nullopt;
}

RegenerationRecord detect_regenerations(const WalkPath& path, Level margin, Level tail_cut)
{
    if (margin < 1)
        throw std::invalid_argument("detect_regenerations: margin must be >= 1");
    if (tail_cut < margin)
        throw std::invalid_argument("detect_regenerations: tail cut must be >= margin");

    RegenerationRecord rec;
    rec.dim = path.dim;
    rec.horizon = path.steps();
    rec.margin = margin;
    rec.tail_cut = tail_cut;
    rec.beta = backtrack_time(path);

    const auto& lv = path.levels;
    const std::size_t n = lv.size();
    std::vector<Level> suffix_min(n);
    suffix_min[n - 1] = lv[n - 1];
    for (std::size_t k = n - 1; k-- > 0;)
        suffix_min[k] = std::min(lv[k], suffix_min[k + 1]);

    const Level final_max = path.running_max.back();
    for (std::size_t k = 1; k < n; ++k)
    {
        if (lv[k] <= path.running_max[k - 1] || suffix_min[k] < lv[k])
            continue;
        rec.tau.push_back(k);
        // No later dip is already guaranteed by the suffix minimum.
        bool ok = lv[k] <= final_max - tail_cut && final_max >= lv[k] + margin;
        rec.confirmed.push_back(ok);
        if (!ok)
            ++rec.unconfirmed;
    }

    auto make_slab = [&](std::size_t a, std::size_t b, bool ok) {
        Slab s;
        s.dtau = b - a;
        s.dx = path.sites[b] - path.sites[a];
        s.confirmed = ok;
        return s;
    };
    if (!rec.tau.empty())
        rec.initial_slab = make_slab(0, rec.tau.front(), rec.confirmed.front());
    for (std::size_t i = 0; i + 1 < rec.tau.size(); ++i)
        rec.slabs.push_back(make_slab(rec.tau[i], rec.tau[i + 1], rec.confirmed[i] && rec.confirmed[i + 1]));
    return rec;
}

VelocityEstimate estimate_velocity(std::span<const Slab> all, int dim)
{
    std::vector<const Slab*> slabs;
    for (const auto& s : all)
        if (s.confirmed)
            slabs.push_back(&s);
    if (slabs.size() < 2)
        throw std::invalid_argument("estimate_velocity: need at least 2 confirmed slabs, have "
                                    + std::to_string(slabs.size()));

    std::int64_t sum_tau = 0;
    std::array<std::int64_t, kMaxDim> sum_x{};
    for (const Slab* s : slabs)
    {
        sum_tau += static_cast<std::int64_t>(s->dtau);
        for (int i = 0; i < dim; ++i)
            sum_x[i] += s->dx[i];
    }
    const double m = static_cast<double>(slabs.size());
    const double mean_tau = static_cast<double>(sum_tau) / m;

    VelocityEstimate est;
    est.n_slabs = slabs.size();
    std::vector<double> resid(slabs.size());
    for (int i = 0; i < dim; ++i)
    {
        const double v = static_cast<double>(sum_x[i]) / static_cast<double>(sum_tau);
        for (std::size_t k = 0; k < slabs.size(); ++k)
            resid[k] = static_cast<double>(slabs[k]->dx[i]) - v * static_cast<double>(slabs[k]->dtau);
        est.v_hat.push_back(v);
        est.se.push_back(batch_means_se(resid) / mean_tau);
    }
    return est;
}

VelocityEstimate estimate_velocity(const RegenerationRecord& record)
{
    return estimate_velocity(record.slabs, record.dim);
}

DiffusionEstimate estimate_diffusion(std::span<const Slab> all, int dim, std::span<const double> v)
{
    if (v.size() != static_cast<std::size_t>(dim))
        throw std::invalid_argument("estimate_diffusion: velocity dimension mismatch");
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(dim, dim);
    std::int64_t sum_tau = 0;
    std::size_t count = 0;
    Eigen::VectorXd r(dim);
    for (const auto& s : all)
    {
        if (!s.confirmed)
            continue;
        for (int i = 0; i < dim; ++i)
            r[i] = static_cast<double>(s.dx[i]) - static_cast<double>(s.dtau) * v[i];
        acc.noalias() += r * r.transpose();
        sum_tau += static_cast<std::int64_t>(s.dtau);
        ++count;
    }
    if (count < 2)
        throw std::invalid_argument("estimate_diffusion: need at least 2 confirmed slabs");
    DiffusionEstimate est;
    est.n_slabs = count;
    est.d_hat = acc / static_cast<double>(sum_tau);
    est.d_hat = 0.5 * (est.d_hat + est.d_hat.transpose()).eval();
    return est;
}

DiffusionEstimate estimate_diffusion(const RegenerationRecord& record, std::span<const double> v)
{
    return estimate_diffusion(record.slabs, record.dim, v);
}

//---------------------------------------------------------------------------//

namespace
{

MomentRow summarize(std::size_t index, const std::vector<double>& x)
{
    MomentRow row;
    row.index = index;
    row.count = x.size();
    if (!x.empty())
    {
        row.value = mean(x);
        row.se = x.size() > 1 ? std::sqrt(variance(x) / static_cast<double>(x.size())) : 0.0;
    }
    return row;
}

std::vector<std::size_t> confirmed_taus(const RegenerationRecord& rec)
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < rec.tau.size(); ++i)
        if (rec.confirmed[i])
            out.push_back(rec.tau[i]);
    return out;
}

}  // namespace

RenewalDiagnostics renewal_diagnostics(std::span<const WalkPath> paths,
                                       std::span<const RegenerationRecord> records,
                                       double order,
                                       std::span<const std::size_t> grid)
{
    if (records.empty())
        throw std::invalid_argument("renewal_diagnostics: no records");
    if (paths.size() != records.size())
        throw std::invalid_argument("renewal_diagnostics: paths and records differ in count");

    std::vector<std::vector<std::size_t>> taus;
    for (const auto& r : records)
        taus.push_back(confirmed_taus(r));

    RenewalDiagnostics out;
    out.order = order;
    for (std::size_t g : grid)
    {
        std::vector<double> tau_vals, over_vals, back_vals;
        FrequencyRow freq;
        freq.n = g;
        for (std::size_t j = 0; j < records.size(); ++j)
        {
            const auto& t = taus[j];
            const auto& lv = paths[j].levels;
            if (g >= 1 && t.size() >= g)
                tau_vals.push_back(std::pow(static_cast<double>(t[g - 1]) / static_cast<double>(g), order));

            // J_m with τ_0 = 0: first confirmed regeneration at or after m.
            std::optional<std::size_t> tj;
            if (g == 0)
                tj = 0;
            else if (auto it = std::lower_bound(t.begin(), t.end(), g); it != t.end())
                tj = *it;
            if (tj)
            {
                over_vals.push_back(std::pow(static_cast<double>(*tj - g), order));
                // The walk never returns below its level at τ_{J_m}, so the
                // infimum over all n is attained by time τ_{J_m}.
                Level lo = lv[g];
                for (std::size_t k = g; k <= *tj; ++k)
                    lo = std::min(lo, lv[k]);
                back_vals.push_back(std::pow(static_cast<double>(lv[g] - lo), order));
            }
            if (g < lv.size())
            {
                ++freq.trials;
                if (static_cast<double>(lv[g] - lv[0]) <= std::sqrt(static_cast<double>(g)))
                    ++freq.hits;
            }
        }
        if (g >= 1)
            out.tau_moments.push_back(summarize(g, tau_vals));
        out.overshoot_moments.push_back(summarize(g, over_vals));
        out.backtrack_moments.push_back(summarize(g, back_vals));
        freq.frequency = freq.trials ? static_cast<double>(freq.hits) / static_cast<double>(freq.trials) : 0.0;
        out.slow_progress.push_back(freq);
    }
    return out;
}

RedirectReport redirect_analysis(const EnvironmentModel& model,
                                 const Site& new_direction,
                                 std::span<const double> v_hat,
                                 const RedirectConfig& config)
{
    const int d = model.dim();
    if (v_hat.size() != static_cast<std::size_t>(d))
        throw std::invalid_argument("redirect_analysis: velocity dimension mismatch");
    double proj = 0;
    for (int i = 0; i < d; ++i)
        proj += static_cast<double>(new_direction[i]) * v_hat[i];
    if (!(proj > 0))
        throw std::invalid_argument("redirect_analysis: new direction has u·v <= 0");
    if (config.paths == 0 || config.horizon == 0)
        throw std::invalid_argument("redirect_analysis: paths and horizon must be positive");

    auto redirected = std::make_shared<const EnvironmentModel>(model.with_direction(new_direction));
    RedirectReport rep;
    rep.direction = new_direction;
    rep.gcd_h = compute_h(redirected->support());

    const Site origin{};
    auto paths = parallel_map(config.paths, config.workers, [&](std::size_t i) {
        Environment env(redirected, derive_seed(config.seed, "redirect-env", i));
        return simulate(env, origin, config.horizon, WalkSeed{derive_seed(config.seed, "redirect-walk", i)});
    });
    std::vector<RegenerationRecord> records;
    std::size_t transient = 0;
    for (const auto& p : paths)
    {
        records.push_back(detect_regenerations(p, config.margin * rep.gcd_h, config.tail_cut * rep.gcd_h));
        rep.confirmed_regenerations += records.back().confirmed_count();
        const std::size_t from = std::min(config.burn_in, p.steps());
        Level lo = *std::min_element(p.levels.begin() + static_cast<std::ptrdiff_t>(from), p.levels.end());
        if (lo >= p.levels.front())
            ++transient;
    }
    rep.transience_fraction = static_cast<double>(transient) / static_cast<double>(paths.size());
    rep.diagnostics = renewal_diagnostics(paths, records, config.order, config.grid);
    return rep;
}

void write_slab_csv(std::ostream& os, const RegenerationRecord& record, bool header, std::size_t first_index)
{
    if (header)
    {
        os << "k,dtau";
        for (int i = 1; i <= record.dim; ++i)
            os << ",dx_" << i;
        os << ",confirmed\n";
    }
    for (std::size_t k = 0; k < record.slabs.size(); ++k)
    {
        const auto& s = record.slabs[k];
        os << (first_index + k) << ',' << s.dtau;
        for (int i = 0; i < record.dim; ++i)
            os << ',' << s.dx[i];
        os << ',' << (s.confirmed ? 1 : 0) << '\n';
    }
}

}  // namespace rwre
