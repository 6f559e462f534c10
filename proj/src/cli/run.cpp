#include "rwre/cli/run.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <openssl/evp.h>

#include "rwre/clt.hpp"
#include "rwre/envprocess.hpp"
#include "rwre/format.hpp"
#include "rwre/green.hpp"
#include "rwre/pair.hpp"
#include "rwre/parallel.hpp"
#include "rwre/regen.hpp"
#include "rwre/walk.hpp"

#ifndef RWRE_VERSION_STRING
#    define RWRE_VERSION_STRING "0.0.0"
#endif

namespace rwre::cli
{

std::string_view version()
{
    return RWRE_VERSION_STRING;
}

std::uint64_t kind_seed(const ExperimentConfig& cfg, std::uint64_t k)
{
    return derive_seed(cfg.master_seed, cfg.kind, k);
}

std::string sha256_hex(std::string_view data)
{
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr))
        throw std::runtime_error("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i)
    {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

namespace
{

Json site_json(const Site& x, int dim)
{
    Json a = Json::array();
    for (int i = 0; i < dim; ++i)
        a.push_back(x[i]);
    return a;
}

Json matrix_json(const Eigen::MatrixXd& m)
{
    Json a = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
    {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            row.push_back(m(i, j));
        a.push_back(row);
    }
    return a;
}

// NaN is not valid JSON; emit null instead.
Json num(double x)
{
    return std::isfinite(x) ? Json(x) : Json(nullptr);
}

Json fit_json(const ExponentFit& f, bool valid)
{
    if (!valid)
        return nullptr;
    return {{"slope", num(f.slope)},
            {"intercept", num(f.intercept)},
            {"slope_se", num(f.slope_se)},
            {"r_squared", num(f.r_squared)},
            {"points", f.n_grid.size()}};
}

std::string dim_header(const std::string& prefix, int dim)
{
    std::string s;
    for (int i = 0; i < dim; ++i)
        s += "," + prefix + std::to_string(i + 1);
    return s;
}

void put_site(std::ostream& os, const Site& x, int dim)
{
    for (int i = 0; i < dim; ++i)
        os << ',' << x[i];
}

//---------------------------------------------------------------------------//

void run_check(const ExperimentConfig& cfg, RunOutput& out)
{
    const auto& m = *cfg.model;
    auto rep = check_hypotheses(m);
    Json j;
    j["law"] = std::string(to_string(m.kind()));
    j["bounded_steps"] = rep.bounded_steps;
    j["step_bound"] = rep.step_bound;
    j["gcd_h"] = rep.gcd_h;
    if (rep.non_nestling)
        j["non_nestling"] = {{"holds", rep.non_nestling->holds}, {"delta", rep.non_nestling->delta}};
    else
        j["non_nestling"] = nullptr;
    if (rep.uniform_ellipticity)
        j["uniform_ellipticity"] = {{"holds", rep.uniform_ellipticity->holds},
                                    {"kappa", rep.uniform_ellipticity->kappa}};
    else
        j["uniform_ellipticity"] = nullptr;
    j["r_span"] = rep.r_span;
    j["span_rank"] = rep.span_rank;
    j["r_restricted_path"] = rep.r_restricted_path;
    j["notes"] = rep.notes;
    j["mean_drift"] = m.mean_drift();
    j["degenerate_directions"] = matrix_json(degeneracy_directions(m).transpose());
    out.summary["hypotheses"] = j;
}

void run_regen(const ExperimentConfig& cfg, const RegenParams& p, RunOutput& out)
{
    const auto& model = cfg.model;
    const int dim = model->dim();
    const auto seed = kind_seed(cfg, 0);
    struct PathResult
    {
        WalkPath path;
        RegenerationRecord record;
    };
    auto results = parallel_map(p.paths, cfg.workers, [&](std::size_t i) {
        Environment env(model, derive_seed(seed, "regen-env", i));
        PathResult r;
        r.path = simulate(env, Site{}, p.horizon, WalkSeed{derive_seed(seed, "regen-walk", i)});
        r.record = detect_regenerations(r.path, p.margin, p.tail_cut);
        return r;
    });

    std::vector<Slab> pooled;
    std::vector<WalkPath> paths;
    std::vector<RegenerationRecord> records;
    std::size_t confirmed = 0, unconfirmed = 0, backtracked = 0;
    std::ostringstream slabs;
    slabs << "path,k,dtau" << dim_header("dx_", dim) << ",confirmed\n";
    for (std::size_t i = 0; i < results.size(); ++i)
    {
        const auto& rec = results[i].record;
        confirmed += rec.confirmed_count();
        unconfirmed += rec.unconfirmed;
        backtracked += rec.beta ? 1 : 0;
        for (std::size_t k = 0; k < rec.slabs.size(); ++k)
        {
            const auto& s = rec.slabs[k];
            slabs << i << ',' << k + 1 << ',' << s.dtau;
            put_site(slabs, s.dx, dim);
            slabs << ',' << (s.confirmed ? 1 : 0) << '\n';
            if (s.confirmed)
                pooled.push_back(s);
        }
        paths.push_back(std::move(results[i].path));
        records.push_back(rec);
    }
    out.files["slabs.csv"] = slabs.str();

    Json& j = out.summary;
    j["paths"] = p.paths;
    j["horizon"] = p.horizon;
    j["confirmed_regenerations"] = confirmed;
    j["unconfirmed_regenerations"] = unconfirmed;
    j["paths_backtracked"] = backtracked;
    j["confirmed_slabs"] = pooled.size();
    std::vector<double> v_hat;
    if (pooled.size() >= 2)
    {
        auto v = estimate_velocity(pooled, dim);
        auto D = estimate_diffusion(pooled, dim, v.v_hat);
        v_hat = v.v_hat;
        j["v_hat"] = v.v_hat;
        j["v_se"] = v.se;
        j["D_hat"] = matrix_json(D.d_hat);
    }
    else
    {
        j["v_hat"] = nullptr;
        j["D_hat"] = nullptr;
        j["warning"] = "fewer than two confirmed slabs; increase horizon or paths";
    }

    auto diag = renewal_diagnostics(paths, records, p.order, p.grid);
    std::ostringstream ren;
    ren << "quantity,index,value,se,count\n";
    auto put_rows = [&](const char* name, const std::vector<MomentRow>& rows) {
        for (const auto& r : rows)
            ren << name << ',' << r.index << ',' << fmt(r.value) << ',' << fmt(r.se) << ',' << r.count << '\n';
    };
    put_rows("tau_moment", diag.tau_moments);
    put_rows("overshoot_moment", diag.overshoot_moments);
    put_rows("backtrack_moment", diag.backtrack_moments);
    for (const auto& r : diag.slow_progress)
    {
        double se = r.trials ? std::sqrt(r.frequency * (1 - r.frequency) / static_cast<double>(r.trials)) : 0.0;
        ren << "slow_progress," << r.n << ',' << fmt(r.frequency) << ',' << fmt(se) << ',' << r.trials << '\n';
    }
    out.files["renewal.csv"] = ren.str();
    j["moment_order"] = p.order;

    if (p.redirect)
    {
        if (v_hat.empty())
            throw std::runtime_error("redirect analysis needs a velocity estimate");
        RedirectConfig rc;
        rc.paths = p.redirect_paths;
        rc.horizon = p.redirect_horizon;
        rc.burn_in = p.redirect_burn_in;
        rc.margin = p.margin;
        rc.tail_cut = p.tail_cut;
        rc.order = p.order;
        rc.grid = p.grid;
        rc.seed = kind_seed(cfg, 1);
        rc.workers = cfg.workers;
        auto rr = redirect_analysis(*model, *p.redirect, v_hat, rc);
        j["redirect"] = {{"direction", site_json(rr.direction, dim)},
                         {"gcd_h", rr.gcd_h},
                         {"transience_fraction", rr.transience_fraction},
                         {"confirmed_regenerations", rr.confirmed_regenerations}};
        std::ostringstream rcsv;
        rcsv << "quantity,index,value,se,count\n";
        for (const auto& r : rr.diagnostics.tau_moments)
            rcsv << "tau_moment," << r.index << ',' << fmt(r.value) << ',' << fmt(r.se) << ',' << r.count << '\n';
        for (const auto& r : rr.diagnostics.overshoot_moments)
            rcsv << "overshoot_moment," << r.index << ',' << fmt(r.value) << ',' << fmt(r.se) << ',' << r.count
                 << '\n';
        for (const auto& r : rr.diagnostics.backtrack_moments)
            rcsv << "backtrack_moment," << r.index << ',' << fmt(r.value) << ',' << fmt(r.se) << ',' << r.count
                 << '\n';
        out.files["redirect.csv"] = rcsv.str();
    }
}

void run_clt(const ExperimentConfig& cfg, const CltParams& p, RunOutput& out)
{
    const auto& model = cfg.model;
    const int dim = model->dim();
    const auto seed = kind_seed(cfg, 0);
    Eigen::MatrixXd D(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int k = 0; k < dim; ++k)
            D(i, k) = p.D[i][k];

    std::vector<std::vector<Eigen::VectorXd>> samples;
    for (std::size_t e = 0; e < p.environments; ++e)
    {
        Environment env(model, derive_seed(seed, "clt-env", e));
        samples.push_back(quenched_samples(env, p.n, p.walks, p.v, derive_seed(seed, "clt-walk", e), cfg.workers));
    }
    auto rep = clt_check(samples, D, model->support().direction, p.alpha);

    std::ostringstream proj, cov;
    proj << "environment,test" << dim_header("u_", dim) << ",variance,degenerate,statistic,p_value,pass\n";
    cov << "environment,i,j,covariance\n";
    for (std::size_t e = 0; e < rep.environments.size(); ++e)
    {
        const auto& env = rep.environments[e];
        for (std::size_t t = 0; t < env.tests.size(); ++t)
        {
            const auto& tst = env.tests[t];
            proj << e << ',' << t;
            for (int i = 0; i < dim; ++i)
                proj << ',' << fmt(tst.u(i));
            proj << ',' << fmt(tst.variance) << ',' << (tst.degenerate ? 1 : 0) << ',' << fmt(tst.statistic)
                 << ',' << fmt(tst.p_value) << ',' << (tst.pass ? 1 : 0) << '\n';
        }
        for (int i = 0; i < dim; ++i)
            for (int k = 0; k < dim; ++k)
                cov << e << ',' << i << ',' << k << ',' << fmt(env.covariance(i, k)) << '\n';
    }
    out.files["clt_projections.csv"] = proj.str();
    out.files["covariance.csv"] = cov.str();

    Json& j = out.summary;
    j["n"] = p.n;
    j["walks"] = p.walks;
    j["alpha"] = p.alpha;
    j["environments"] = p.environments;
    j["passing_environments"] = rep.passing;
    j["max_frobenius_to_D"] = rep.max_frobenius_to_d;
    j["max_pairwise_frobenius"] = rep.max_pairwise_frobenius;
    j["degenerate"] = rep.degenerate;
    j["verdict"] = rep.verdict;
}

void run_quenched_mean(const ExperimentConfig& cfg, const QuenchedMeanParams& p, RunOutput& out)
{
    const int dim = cfg.model->dim();
    auto rep = quenched_mean_variance(cfg.model, p.n_grid, p.environments, p.walks, kind_seed(cfg, 0), cfg.workers);
    std::ostringstream os;
    os << "n" << dim_header("var_corrected_", dim) << ",trace,se,floored\n";
    for (const auto& r : rep.rows)
    {
        os << r.n;
        for (double v : r.var_corrected)
            os << ',' << fmt(v);
        os << ',' << fmt(r.trace) << ',' << fmt(r.se) << ',' << (r.floored ? 1 : 0) << '\n';
    }
    out.files["quenched_mean.csv"] = os.str();
    Json& j = out.summary;
    j["environments"] = p.environments;
    j["walks"] = p.walks;
    j["fit"] = fit_json(rep.fit, rep.fit_valid);
    if (rep.fit_valid)
    {
        const double s = rep.fit.slope, se = rep.fit.slope_se;
        j["two_alpha"] = num(s);
        j["subdiffusive"] = s + 3 * se < 1;
        j["consistent_with_half"] = std::abs(s - 0.5) <= 3 * se;
    }
}

void run_intersections(const ExperimentConfig& cfg, const IntersectionParams& p, RunOutput& out)
{
    auto grid = p.n_grid;
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    const std::size_t n_max = grid.back();
    const auto seed = kind_seed(cfg, 0);
    auto counts = parallel_map(p.replicas, cfg.workers, [&](std::size_t r) {
        Environment env(cfg.model, derive_seed(seed, "intersect-env", r));
        auto pp = simulate_pair(env, Site{}, Site{}, n_max, WalkSeed{derive_seed(seed, "intersect-walk", 2 * r)},
                                WalkSeed{derive_seed(seed, "intersect-walk", 2 * r + 1)});
        std::vector<double> c;
        for (auto n : grid)
            c.push_back(static_cast<double>(count_intersections(pp, n)));
        return c;
    });
    std::ostringstream os;
    os << "n,mean,se\n";
    std::vector<double> xs, ys;
    for (std::size_t g = 0; g < grid.size(); ++g)
    {
        std::vector<double> v;
        for (const auto& c : counts)
            v.push_back(c[g]);
        double m = mean(v);
        double se = v.size() > 1 ? std::sqrt(variance(v) / static_cast<double>(v.size())) : 0.0;
        os << grid[g] << ',' << fmt(m) << ',' << fmt(se) << '\n';
        if (m > 0)
        {
            xs.push_back(static_cast<double>(grid[g]));
            ys.push_back(m);
        }
    }
    out.files["intersections.csv"] = os.str();
    Json& j = out.summary;
    j["replicas"] = p.replicas;
    bool valid = xs.size() >= 2;
    ExponentFit fit;
    if (valid)
        fit = fit_exponent(xs, ys);
    j["fit"] = fit_json(fit, valid);
    if (valid)
        j["sublinear"] = fit.slope + 3 * fit.slope_se < 0.9;
}

void run_joint_regen(const ExperimentConfig& cfg, const JointRegenParams& p, RunOutput& out)
{
    const int dim = cfg.model->dim();
    const auto seed = kind_seed(cfg, 0);
    JointRegenConfig jc{p.margin, p.horizon_cap};
    auto recs = parallel_map(p.replicas, cfg.workers, [&](std::size_t r) {
        Environment env(cfg.model, derive_seed(seed, "joint-env", r));
        return first_joint_regeneration(env, Site{}, p.x0, WalkSeed{derive_seed(seed, "joint-walk", 2 * r)},
                                        WalkSeed{derive_seed(seed, "joint-walk", 2 * r + 1)}, jc);
    });
    std::ostringstream lam;
    lam << "replica,Lambda,mu1,mu1_tilde,rounds,confirmed\n";
    std::size_t confirmed = 0;
    for (std::size_t r = 0; r < recs.size(); ++r)
    {
        const auto& rec = recs[r];
        lam << r << ',';
        if (rec.Lambda)
            lam << *rec.Lambda;
        lam << ',' << rec.mu1 << ',' << rec.mu1_tilde << ',' << rec.lambda_levels.size() << ','
            << (rec.confirmed ? 1 : 0) << '\n';
        confirmed += rec.confirmed ? 1 : 0;
    }
    out.files["lambda.csv"] = lam.str();

    // Unconfirmed replicas count as Λ > m for every m.
    std::ostringstream tail;
    tail << "m,p_hat,se\n";
    std::vector<double> xs, ys;
    const double R = static_cast<double>(recs.size());
    for (auto m : p.tail_grid)
    {
        std::size_t hits = 0;
        for (const auto& rec : recs)
            hits += (!rec.confirmed || !rec.Lambda || *rec.Lambda > static_cast<Level>(m)) ? 1 : 0;
        double ph = static_cast<double>(hits) / R;
        tail << m << ',' << fmt(ph) << ',' << fmt(std::sqrt(ph * (1 - ph) / R)) << '\n';
        if (hits > 0 && m > 0)
        {
            xs.push_back(static_cast<double>(m));
            ys.push_back(ph);
        }
    }
    out.files["tail.csv"] = tail.str();

    Json& j = out.summary;
    j["x0"] = site_json(p.x0, dim);
    j["replicas"] = p.replicas;
    j["confirmed"] = confirmed;
    bool valid = xs.size() >= 2;
    ExponentFit fit;
    if (valid)
        fit = fit_exponent(xs, ys);
    j["tail_fit"] = fit_json(fit, valid);

    if (p.chains > 0 && p.chain_steps > 0)
    {
        YChainConfig yc;
        yc.joint = jc;
        const auto cseed = kind_seed(cfg, 1);
        auto chains = parallel_map(p.chains, cfg.workers, [&](std::size_t c) {
            auto s = derive_seed(cseed, "chain", c);
            return p.independent ? sample_Ybar_chain(cfg.model, p.x0, p.chain_steps, s, yc)
                                 : sample_Y_chain(cfg.model, p.x0, p.chain_steps, s, yc);
        });
        std::ostringstream ys_csv;
        ys_csv << "chain,k,Lambda" << dim_header("y_", dim) << '\n';
        std::size_t rejections = 0, restarts = 0;
        for (std::size_t c = 0; c < chains.size(); ++c)
        {
            const auto& ch = chains[c];
            rejections += ch.rejections;
            restarts += ch.restarts;
            for (std::size_t k = 0; k < ch.y.size(); ++k)
            {
                ys_csv << c << ',' << k << ',';
                if (k > 0 && k - 1 < ch.Lambda.size())
                    ys_csv << ch.Lambda[k - 1];
                put_site(ys_csv, ch.y[k], dim);
                ys_csv << '\n';
            }
        }
        out.files["ychain.csv"] = ys_csv.str();
        j["chain"] = {{"independent", p.independent},
                      {"chains", p.chains},
                      {"steps", p.chain_steps},
                      {"rejections", rejections},
                      {"restarts", restarts}};
    }
}

void run_coupling(const ExperimentConfig& cfg, const CouplingParams& p, RunOutput& out)
{
    const int dim = cfg.model->dim();
    const auto seed = kind_seed(cfg, 0);
    CouplingConfig cc;
    cc.joint.margin = p.margin;
    cc.lookahead = p.lookahead;
    std::vector<CouplingOutcome> all;
    std::ostringstream mis;
    mis << "point" << dim_header("x0_", dim) << ",norm,triples,mismatch,se,hit_rate,mean_rejections\n";
    Json points = Json::array();
    std::size_t violations = 0;
    for (std::size_t i = 0; i < p.x0.size(); ++i)
    {
        const auto pseed = derive_seed(seed, "coupling-point", i);
        auto rows = parallel_map(p.triples, cfg.workers, [&](std::size_t t) {
            return coupled_triple(cfg.model, p.x0[i], derive_seed(pseed, "triple", t), cc);
        });
        std::size_t diff = 0, hits = 0, rej = 0;
        for (const auto& r : rows)
        {
            diff += r.equal ? 0 : 1;
            hits += r.hit_X_path ? 1 : 0;
            rej += r.rejections;
            violations += (!r.hit_X_path && !r.equal) ? 1 : 0;
        }
        const double T = static_cast<double>(rows.size());
        const double ph = static_cast<double>(diff) / T;
        const double se = std::sqrt(ph * (1 - ph) / T);
        const double x0_norm = rwre::norm(p.x0[i]);
        mis << i;
        put_site(mis, p.x0[i], dim);
        mis << ',' << fmt(x0_norm) << ',' << rows.size() << ',' << fmt(ph) << ',' << fmt(se) << ','
            << fmt(static_cast<double>(hits) / T) << ',' << fmt(static_cast<double>(rej) / T) << '\n';
        points.push_back({{"x0", site_json(p.x0[i], dim)}, {"mismatch", ph}, {"se", se}});
        all.insert(all.end(), rows.begin(), rows.end());
    }
    std::ostringstream rep;
    write_replica_csv(rep, dim, all);
    out.files["replicas.csv"] = rep.str();
    out.files["mismatch.csv"] = mis.str();
    Json& j = out.summary;
    j["triples"] = p.triples;
    j["points"] = points;
    j["invariant_violations"] = violations;

    if (p.support_samples > 0)
    {
        auto sr = support_inheritance_check(cfg.model, p.x0.front(), p.support_samples, kind_seed(cfg, 1),
                                            cfg.workers);
        Json flagged = Json::array();
        for (const auto& a : sr.flagged)
            flagged.push_back({{"y", site_json(a.y, dim)}, {"count_q", a.count_q}});
        j["support"] = {{"samples", sr.samples},
                        {"atoms", sr.atoms.size()},
                        {"q_only", sr.q_only.size()},
                        {"flagged", flagged},
                        {"threshold", sr.threshold},
                        {"note", sr.note}};
    }
}

LocalFunction make_psi(const ExperimentConfig& cfg, const ErgodicParams& p)
{
    const auto& J = cfg.model->support();
    if (p.function == "constant")
        return LocalFunction::constant(p.constant);
    if (p.function == "indicator")
        return LocalFunction::indicator(p.offset, p.step, p.threshold);
    std::vector<double> u = p.u;
    if (u.empty())
    {
        double n = norm(J.direction);
        for (int i = 0; i < J.dim; ++i)
            u.push_back(static_cast<double>(J.direction[i]) / n);
    }
    return LocalFunction::drift_dot(J, u);
}

void run_ergodic(const ExperimentConfig& cfg, const ErgodicParams& p, RunOutput& out)
{
    auto psi = make_psi(cfg, p);
    auto ens = ergodic_ensemble(cfg.model, psi, p.checkpoints, p.runs, kind_seed(cfg, 0), cfg.workers);
    std::ostringstream os;
    write_cesaro_csv(os, ens);
    out.files["cesaro.csv"] = os.str();
    Json& j = out.summary;
    j["function"] = psi.name();
    j["runs"] = p.runs;
    j["terminal_mean"] = ens.mean.back();
    j["terminal_se"] = ens.sd.back() / std::sqrt(static_cast<double>(p.runs));
    j["sd_ratio_last_first"] = num(ens.sd.back() / ens.sd.front());
    if (p.einf_chains > 0)
    {
        auto e = estimate_Einf(cfg.model, psi, p.einf_length, p.einf_burn, p.einf_chains, kind_seed(cfg, 1),
                               cfg.workers);
        j["einf"] = {{"value", e.value}, {"se", e.se}, {"chains", p.einf_chains}};
    }
}

void run_variation(const ExperimentConfig& cfg, const VariationParams& p, RunOutput& out)
{
    auto rep = variation_proxy(cfg.model, p.n, p.ell_grid, p.reps, kind_seed(cfg, 0), cfg.workers);
    std::ostringstream os;
    write_variation_csv(os, rep);
    out.files["variation.csv"] = os.str();
    bool monotone = true;
    for (std::size_t i = 1; i < rep.rows.size(); ++i)
        monotone = monotone && rep.rows[i].i_hat <= rep.rows[i - 1].i_hat;
    Json& j = out.summary;
    j["n"] = p.n;
    j["reps"] = p.reps;
    j["non_increasing"] = monotone;
    j["fit"] = fit_json(rep.fit, rep.fit_valid);
}

void run_green(const ExperimentConfig& cfg, const GreenParams& p, RunOutput& out)
{
    SymmetricWalk1D walk(p.walk);
    const std::size_t span = static_cast<std::size_t>(p.s_max - p.r0);
    auto tables = build_ladder_tables(walk, span + 1, p.ladder_depth);
    Json& j = out.summary;
    j["range"] = walk.range();
    j["period"] = walk.period();
    j["ladder_depth"] = tables.ladder.K;
    j["ladder_truncation_error"] = tables.ladder.truncation_error;
    j["ladder_warning"] = tables.ladder.warning;
    j["normalization"] = tables.normalization;

    {
        std::ostringstream os;
        write_v_table_csv(os, tables);
        out.files["v_table.csv"] = os.str();
    }
    {
        std::ostringstream os;
        os << "h,p\n";
        for (std::size_t h = 1; h < tables.ladder.pmf.size(); ++h)
            if (tables.ladder.pmf[h] != 0)
                os << h << ',' << fmt(tables.ladder.pmf[h]) << '\n';
        out.files["ladder.csv"] = os.str();
    }
    auto oracle = half_line_green_oracle(walk, p.r0, p.s_max);
    double max_diff = 0;
    {
        std::ostringstream os;
        os << "s,t,g,oracle,abs_diff\n";
        for (long long s = p.r0 + 1; s <= p.s_max; ++s)
            for (long long t = p.r0 + 1; t <= p.s_max; ++t)
            {
                double g = half_line_green(walk, p.r0, s, t, tables);
                double o = oracle(s - p.r0 - 1, t - p.r0 - 1);
                max_diff = std::max(max_diff, std::abs(g - o));
                os << s << ',' << t << ',' << fmt(g) << ',' << fmt(o) << ',' << fmt(std::abs(g - o)) << '\n';
            }
        out.files["green.csv"] = os.str();
    }
    j["max_abs_diff_vs_oracle"] = max_diff;

    if (!p.mc_points.empty())
    {
        std::ostringstream os;
        os << "s,t,value,se,reps,truncated_fraction,ladder\n";
        Json pts = Json::array();
        for (std::size_t i = 0; i < p.mc_points.size(); ++i)
        {
            auto [s, t] = p.mc_points[i];
            auto mc = half_line_green_mc(walk, p.r0, s, t, p.mc_reps, kind_seed(cfg, 10 + i), cfg.workers,
                                         p.step_cap);
            double g = half_line_green(walk, p.r0, s, t, tables);
            os << s << ',' << t << ',' << fmt(mc.value) << ',' << fmt(mc.se) << ',' << mc.reps << ','
               << fmt(mc.truncated_fraction) << ',' << fmt(g) << '\n';
            pts.push_back({{"s", s}, {"t", t}, {"z", num(mc.se > 0 ? (mc.value - g) / mc.se : 0.0)}});
        }
        out.files["green_mc.csv"] = os.str();
        j["mc"] = pts;
    }
    if (!p.tail_grid.empty())
    {
        auto mode = p.tail_mode == "exact" ? TailMode::exact : TailMode::monte_carlo;
        auto rows = first_passage_tail(walk, p.tail_grid, mode, p.tail_reps, kind_seed(cfg, 1), cfg.workers);
        std::ostringstream os;
        os << "a,value,se,sqrt_a_value\n";
        for (const auto& r : rows)
            os << r.a << ',' << fmt(r.value) << ',' << fmt(r.se) << ','
               << fmt(std::sqrt(static_cast<double>(r.a)) * r.value) << '\n';
        out.files["tail.csv"] = os.str();
        j["tail_mode"] = p.tail_mode;
    }
    if (p.exit_r)
    {
        std::ostringstream os;
        os << "x,probability\n";
        for (long long x = p.r0 + 1; x <= *p.exit_r; ++x)
            os << x << ',' << fmt(exit_probability(walk, p.r0, *p.exit_r, x)) << '\n';
        out.files["exit.csv"] = os.str();
    }
}

void run_green_bound(const ExperimentConfig& cfg, const GreenBoundParams& p, RunOutput& out)
{
    auto rep = green_bound_experiment(p.spec, p.n_grid, p.reps, kind_seed(cfg, 0), cfg.workers);
    std::ostringstream os;
    os << "n,value,se\n";
    for (const auto& r : rep.rows)
        os << r.n << ',' << fmt(r.value) << ',' << fmt(r.se) << '\n';
    out.files["green_bound.csv"] = os.str();
    Json& j = out.summary;
    j["fit"] = fit_json(rep.fit, rep.fit_valid);
    j["theorem_exponent"] = rep.theorem_exponent;
    j["exploratory"] = rep.exploratory;
    if (rep.fit_valid)
        j["below_theorem_exponent"] = rep.fit.slope <= rep.theorem_exponent;
}

void run_exit_time(const ExperimentConfig& cfg, const ExitTimeParams& p, RunOutput& out)
{
    auto rep = cube_exit_time(p.spec, p.r_grid, p.reps, kind_seed(cfg, 0), cfg.workers);
    std::ostringstream os;
    os << "r,mean,se\n";
    for (const auto& r : rep.rows)
        os << r.r << ',' << fmt(r.mean) << ',' << fmt(r.se) << '\n';
    out.files["exit_time.csv"] = os.str();
    out.summary["fit"] = fit_json(rep.fit, rep.fit_valid);
}

}  // namespace

RunOutput execute(const ExperimentConfig& cfg)
{
    RunOutput out;
    out.summary = Json::object();
    std::visit(
        [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, CheckParams>)
                run_check(cfg, out);
            else if constexpr (std::is_same_v<P, RegenParams>)
                run_regen(cfg, p, out);
            else if constexpr (std::is_same_v<P, CltParams>)
                run_clt(cfg, p, out);
            else if constexpr (std::is_same_v<P, QuenchedMeanParams>)
                run_quenched_mean(cfg, p, out);
            else if constexpr (std::is_same_v<P, IntersectionParams>)
                run_intersections(cfg, p, out);
            else if constexpr (std::is_same_v<P, JointRegenParams>)
                run_joint_regen(cfg, p, out);
            else if constexpr (std::is_same_v<P, CouplingParams>)
                run_coupling(cfg, p, out);
            else if constexpr (std::is_same_v<P, ErgodicParams>)
                run_ergodic(cfg, p, out);
            else if constexpr (std::is_same_v<P, VariationParams>)
                run_variation(cfg, p, out);
            else if constexpr (std::is_same_v<P, GreenParams>)
                run_green(cfg, p, out);
            else if constexpr (std::is_same_v<P, GreenBoundParams>)
                run_green_bound(cfg, p, out);
            else
                run_exit_time(cfg, p, out);
        },
        cfg.params);

    Json summary;
    summary["kind"] = cfg.kind;
    summary["master_seed"] = cfg.master_seed;
    summary["config"] = cfg.raw;
    summary["results"] = std::move(out.summary);
    out.summary = std::move(summary);
    out.files["summary.json"] = out.summary.dump(2) + "\n";
    return out;
}

RunManifest run(const ExperimentConfig& cfg)
{
    namespace fs = std::filesystem;
    const auto t0 = std::chrono::steady_clock::now();
    RunOutput out = execute(cfg);
    const auto t1 = std::chrono::steady_clock::now();

    RunManifest man;
    man.config_hash = sha256_hex(cfg.raw.dump() + "#" + std::to_string(cfg.master_seed));
    man.version = std::string(version());
    man.wall_seconds = std::chrono::duration<double>(t1 - t0).count();

    fs::create_directories(cfg.output_dir);
    for (const auto& [name, data] : out.files)
    {
        std::ofstream f(fs::path(cfg.output_dir) / name, std::ios::binary);
        f << data;
        if (!f)
            throw std::runtime_error("cannot write " + (fs::path(cfg.output_dir) / name).string());
        man.digests[name] = sha256_hex(data);
    }
    Json m;
    m["config_hash"] = man.config_hash;
    m["version"] = man.version;
    m["kind"] = cfg.kind;
    m["master_seed"] = cfg.master_seed;
    m["workers"] = cfg.workers;
    m["wall_seconds"] = man.wall_seconds;
    m["files"] = man.digests;
    std::ofstream f(fs::path(cfg.output_dir) / "manifest.json", std::ios::binary);
    f << m.dump(2) << "\n";
    return man;
}

}  // namespace rwre::cli
