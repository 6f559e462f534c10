// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Experiments are driven from the shipped configs so the numbers here
// are the ones `rwre <kind> --config configs/...` reproduces.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "rwre/cli/config.hpp"
#include "rwre/cli/run.hpp"
#include "rwre/clt.hpp"
#include "rwre/green.hpp"
#include "rwre/regen.hpp"

#ifndef RWRE_CONFIG_DIR
#define RWRE_CONFIG_DIR "configs"
#endif

namespace
{

using namespace rwre;
using cli::Json;

unsigned workers()
{
    return std::max(1u, std::thread::hardware_concurrency());
}

Json read_config(const std::string& name)
{
    std::ifstream in(std::string(RWRE_CONFIG_DIR) + "/" + name);
    if (!in)
        throw std::runtime_error("cannot open config " + name);
    return Json::parse(in);
}

cli::ExperimentConfig parse(const Json& j, unsigned w = workers())
{
    auto r = cli::parse_config(j.dump());
    if (!r.config)
        throw std::runtime_error("config rejected: " + cli::to_string(r.errors.front()));
    r.config->workers = w;
    return *r.config;
}

// Each shipped config runs at most once per process.
const cli::RunOutput& run_config(const std::string& name)
{
    static std::map<std::string, cli::RunOutput> done;
    auto it = done.find(name);
    if (it == done.end())
        it = done.emplace(name, cli::execute(parse(read_config(name)))).first;
    return it->second;
}

// Rows of a CSV file as strings, header dropped.
std::vector<std::vector<std::string>> csv_rows(const std::string& text)
{
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line))
    {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ','))
            cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

std::string f(double x, int prec = 4)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    return buf;
}

struct Outcome
{
    bool pass = false;
    std::string detail;
};

// v̂, its se and D̂ for the drift model; shared by several criteria.
struct DriftEstimates
{
    std::vector<double> v, v_se;
    Eigen::MatrixXd D;
};

const DriftEstimates& drift_estimates()
{
    static const DriftEstimates est = [] {
        const auto& out = run_config("regen_drift.json");
        const auto& r = out.summary["results"];
        DriftEstimates e;
        e.v = r["v_hat"].get<std::vector<double>>();
        e.v_se = r["v_se"].get<std::vector<double>>();
        auto rows = r["D_hat"].get<std::vector<std::vector<double>>>();
        e.D.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t k = 0; k < rows.size(); ++k)
                e.D(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
        std::cerr << "  drift model: v_hat = (" << f(e.v[0], 7) << ", " << f(e.v[1], 3) << "), se = ("
                  << f(e.v_se[0], 2) << ", " << f(e.v_se[1], 2) << "), D_hat = [[" << f(e.D(0, 0)) << ", "
                  << f(e.D(0, 1)) << "], [" << f(e.D(1, 0)) << ", " << f(e.D(1, 1)) << "]]\n";
        return e;
    }();
    return est;
}

Outcome check_homogeneous()
{
    const auto& out = run_config("regen_homogeneous.json");
    const auto& r = out.summary["results"];
    const auto slabs = r["confirmed_slabs"].get<std::size_t>();
    auto v = r["v_hat"].get<std::vector<double>>();
    auto se = r["v_se"].get<std::vector<double>>();
    auto D = r["D_hat"].get<std::vector<std::vector<double>>>();
    // A step is e1 w.p. 1/2, ±e2 w.p. 1/4 each: mean (1/2, 0), covariance diag(1/4, 1/2).
    const double vx = 0.5, vy = 0.0;
    const double fro = std::sqrt(std::pow(D[0][0] - 0.25, 2) + std::pow(D[0][1], 2) + std::pow(D[1][0], 2)
                                 + std::pow(D[1][1] - 0.5, 2));
    const bool ok = slabs >= 100000 && std::abs(v[0] - vx) <= 3 * se[0] && std::abs(v[1] - vy) <= 3 * se[1]
                    && fro < 0.02;
    return {ok, std::to_string(slabs) + " slabs, v_hat = (" + f(v[0], 6) + ", " + f(v[1], 3) + ") se (" + f(se[0], 2)
                    + ", " + f(se[1], 2) + "), |D_hat - diag(0.25, 0.5)|_F = " + f(fro, 3)};
}

Outcome check_degeneracy()
{
    StepSupport J;
    J.dim = 2;
    J.steps = {make_site({1, 0}), make_site({0, 1})};
    J.direction = make_site({1, 1});
    auto two = std::make_shared<const EnvironmentModel>(EnvironmentModel::dirichlet(J, {2, 2}, 0.05));
    Eigen::MatrixXd B = degeneracy_directions(*two);
    if (B.cols() != 1)
        return {false, "J = {e1, e2}: expected one degenerate direction, got " + std::to_string(B.cols())};
    Eigen::VectorXd u = B.col(0);
    const bool u_ok = std::abs(u[0] - std::sqrt(0.5)) < 1e-12 && std::abs(u[1] - std::sqrt(0.5)) < 1e-12;

    std::vector<Slab> slabs;
    for (std::uint64_t s = 0; s < 4; ++s)
    {
        Environment env(two, derive_seed(211, "degeneracy-env", s));
        auto path = simulate(env, Site{}, 50000, WalkSeed{derive_seed(211, "degeneracy-walk", s)});
        auto rec = detect_regenerations(path, 20, 20);
        auto c = rec.confirmed_slabs();
        slabs.insert(slabs.end(), c.begin(), c.end());
    }
    auto v = estimate_velocity(slabs, 2);
    auto D = estimate_diffusion(slabs, 2, v.v_hat);
    const double quad = u.dot(D.d_hat * u);

    StepSupport J3;
    J3.dim = 2;
    J3.steps = {make_site({1, 0}), make_site({0, 1}), make_site({0, -1})};
    J3.direction = unit(0);
    EnvironmentModel three = EnvironmentModel::dirichlet(J3, {30, 10, 10}, 0.05);
    const auto empty = degeneracy_directions(three).cols();

    return {u_ok && quad < 1e-12 && empty == 0,
            "u = (" + f(u[0], 6) + ", " + f(u[1], 6) + "), u^t D_hat u = " + f(quad, 3) + " from "
                + std::to_string(D.n_slabs) + " slabs; J = {e1, e2, -e2} basis size " + std::to_string(empty)};
}

Outcome check_green_function()
{
    const auto& out = run_config("green_simple.json");
    double worst_closed = 0, worst_oracle = 0;
    std::size_t cells = 0;
    for (const auto& row : csv_rows(out.files.at("green.csv")))
    {
        const long long s = std::stoll(row[0]), t = std::stoll(row[1]);
        const double g = std::stod(row[2]), o = std::stod(row[3]);
        worst_closed = std::max(worst_closed, std::abs(g - 2.0 * static_cast<double>(std::min(s, t))));
        worst_oracle = std::max(worst_oracle, std::abs(g - o));
        ++cells;
    }
    double worst_z = 0;
    std::size_t reps = 0;
    std::string pts;
    for (const auto& row : csv_rows(out.files.at("green_mc.csv")))
    {
        const double value = std::stod(row[2]), se = std::stod(row[3]), g = std::stod(row[6]);
        reps = std::stoul(row[4]);
        worst_z = std::max(worst_z, std::abs(value - g) / se);
        pts += " g(" + row[0] + "," + row[1] + ")=" + f(value, 4) + "±" + f(se, 2);
    }
    const bool ok = cells == 2500 && worst_closed < 1e-6 && worst_oracle < 1e-6 && reps >= 100000 && worst_z <= 3;
    return {ok, std::to_string(cells) + " cells, max |g - 2 min(s,t)| = " + f(worst_closed, 2)
                    + ", max |g - solve| = " + f(worst_oracle, 2) + "; MC" + pts + ", max |z| = " + f(worst_z, 3)};
}

Outcome check_first_passage()
{
    const auto& out = run_config("green_simple.json");
    double p2 = -1, p4 = -1;
    for (const auto& row : csv_rows(out.files.at("tail.csv")))
    {
        if (row[0] == "2")
            p2 = std::stod(row[1]);
        if (row[0] == "4")
            p4 = std::stod(row[1]);
    }
    std::vector<std::size_t> a{10000};
    auto mc = first_passage_tail(SymmetricWalk1D::simple(), a, TailMode::monte_carlo, 1000000, 307, workers());
    const double scaled = 100.0 * mc[0].value;
    const bool ok = p2 == 0.5 && p4 == 0.375 && scaled >= 0.66 && scaled <= 0.94;
    return {ok, "P{T>=2} = " + f(p2, 17) + ", P{T>=4} = " + f(p4, 17) + ", sqrt(a) P{T>=a} at a = 1e4: "
                    + f(scaled, 4) + " ± " + f(100.0 * mc[0].se, 2)};
}

Outcome check_quenched_mean()
{
    const auto& out = run_config("quenched_mean_drift.json");
    const auto& r = out.summary["results"];
    if (r["fit"].is_null())
        return {false, "no fit: fewer than two grid points with positive corrected variance"};
    const double s = r["fit"]["slope"].get<double>(), se = r["fit"]["slope_se"].get<double>();
    const bool half = r["consistent_with_half"].get<bool>();
    return {s + 3 * se < 1, "2alpha = " + f(s, 3) + " ± " + f(se, 2) + " over " + std::to_string(r["fit"]["points"].get<int>())
                                + " points; " + (half ? "consistent" : "not consistent")
                                + " with 1/2 at 3 se"};
}

Outcome check_intersections()
{
    const auto& out = run_config("intersections_drift.json");
    const auto& fit = out.summary["results"]["fit"];
    const double s = fit["slope"].get<double>(), se = fit["slope_se"].get<double>();
    return {s + 3 * se < 0.9, "slope = " + f(s, 3) + " ± " + f(se, 2)};
}

Outcome check_coupling()
{
    const auto& out = run_config("coupling_drift.json");
    const auto& r = out.summary["results"];
    std::vector<double> p, se;
    std::string list;
    for (const auto& pt : r["points"])
    {
        p.push_back(pt["mismatch"].get<double>());
        se.push_back(pt["se"].get<double>());
        list += (list.empty() ? "" : ", ") + f(p.back(), 3);
    }
    bool mono = true;
    for (std::size_t i = 1; i < p.size(); ++i)
        mono = mono && p[i] <= p[i - 1] + 3 * std::hypot(se[i], se[i - 1]);
    const bool ok = p.size() == 5 && mono && p.back() < 0.5 * p.front()
                    && r["invariant_violations"].get<std::size_t>() == 0;
    return {ok, "P(Y1 != Ybar1) at |x0| = 1,2,4,8,16: " + list + "; invariant violations "
                    + std::to_string(r["invariant_violations"].get<std::size_t>())};
}

Outcome check_clt()
{
    const auto& est = drift_estimates();
    Json j = read_config("clt_drift.json");
    j["params"]["v"] = est.v;
    Json D = Json::array();
    for (Eigen::Index i = 0; i < est.D.rows(); ++i)
    {
        Json row = Json::array();
        for (Eigen::Index k = 0; k < est.D.cols(); ++k)
            row.push_back(est.D(i, k));
        D.push_back(row);
    }
    j["params"]["D"] = D;
    auto out = cli::execute(parse(j));
    const auto& r = out.summary["results"];
    const auto passing = r["passing_environments"].get<std::size_t>();
    const double to_d = r["max_frobenius_to_D"].get<double>();
    const double pair = r["max_pairwise_frobenius"].get<double>();
    std::string pv;
    for (const auto& row : csv_rows(out.files.at("clt_projections.csv")))
        pv += (pv.empty() ? "" : " ") + f(std::stod(row[7]), 2);
    return {passing >= 4 && to_d < 0.1 && pair < 0.1,
            std::to_string(passing) + "/5 environments pass; max |cov - D_hat|_F = " + f(to_d, 3)
                + ", max pairwise = " + f(pair, 3) + "; p-values " + pv};
}

Outcome check_ergodic()
{
    const auto& est = drift_estimates();
    const auto& out = run_config("ergodic_drift.json");
    const auto& r = out.summary["results"];
    const double ratio = r["sd_ratio_last_first"].get<double>();
    const double m = r["terminal_mean"].get<double>(), se = r["terminal_se"].get<double>();
    const double combined = std::hypot(se, est.v_se[0]);
    const double gap = std::abs(m - est.v[0]);
    return {ratio <= 1.0 / 3.0 && gap <= 4 * combined,
            "sd ratio = " + f(ratio, 3) + "; Cesaro mean " + f(m, 6) + " vs v_hat.u " + f(est.v[0], 6)
                + ", gap = " + f(gap / combined, 3) + " combined se"};
}

Outcome check_variation()
{
    const auto& mono = run_config("variation_monotone.json");
    const auto& back = run_config("variation_backtrack.json");
    auto rates = [](const cli::RunOutput& o) {
        std::vector<double> r;
        for (const auto& row : csv_rows(o.files.at("variation.csv")))
            r.push_back(std::stod(row[1]));
        return r;
    };
    auto rm = rates(mono), rb = rates(back);
    const bool zero = std::all_of(rm.begin(), rm.end(), [](double x) { return x == 0.0; });
    const bool nonincreasing = std::is_sorted(rb.rbegin(), rb.rend()) && std::is_sorted(rm.rbegin(), rm.rend());
    const auto& fit = back.summary["results"]["fit"];
    if (fit.is_null())
        return {false, "backtracking model: fewer than two nonzero points"};
    const double s = fit["slope"].get<double>();
    std::string list;
    for (auto x : rb)
        list += (list.empty() ? "" : ", ") + f(x, 3);
    return {zero && nonincreasing && s <= -1,
            std::string("monotone model ") + (zero ? "identically 0" : "nonzero") + "; backtracking I_hat " + list
                + ", slope = " + f(s, 3) + " ± " + f(fit["slope_se"].get<double>(), 2)};
}

Outcome check_centering()
{
    const auto& est = drift_estimates();
    auto model = parse(read_config("regen_drift.json")).model;
    std::vector<std::size_t> grid;
    for (std::size_t n = 16; n <= 4096; n *= 2)
        grid.push_back(n);
    auto rep = centered_mean_bound(model, grid, est.v, est.v_se, 4000, 401, workers(), 0.01);
    return {rep.no_trend, "trend = " + f(rep.slope, 3) + " ± " + f(rep.slope_se, 2) + " per step, p = "
                              + f(rep.p_value, 3) + ", max |E X_n - n v_hat| = " + f(rep.max_abs, 3)};
}

// Reduced versions of every shipped experiment, rerun at 1 and 8 workers.
Outcome check_determinism()
{
    struct Case
    {
        const char* file;
        Json params;
    };
    std::vector<Case> cases{
        {"check_drift.json", Json::object()},
        {"regen_drift.json", {{"paths", 3}, {"horizon", 20000}, {"redirect", {{"direction", {1, 1}}, {"paths", 20}}}}},
        {"clt_drift.json", {{"n", 256}, {"walks", 100}}},
        {"quenched_mean_drift.json", {{"n_grid", {16, 64}}, {"environments", 30}, {"walks", 10}}},
        {"intersections_drift.json", {{"n_grid", {32, 128}}, {"replicas", 50}}},
        {"joint_regen_drift.json", {{"replicas", 50}, {"chains", 3}, {"chain_steps", 5}}},
        {"coupling_drift.json", {{"x0", {{0, 1}, {0, 4}}}, {"triples", 200}, {"support_samples", 100}}},
        {"ergodic_drift.json", {{"checkpoints", {100, 1000}}, {"runs", 4}, {"einf_chains", 3}, {"einf_length", 500}}},
        {"variation_backtrack.json", {{"n", 200}, {"reps", 1000}}},
        {"green_lazy.json", {{"mc_points", {{1, 2}}}, {"mc_reps", 10000}, {"step_cap", 10000}, {"tail_mode", "monte-carlo"}, {"tail_reps", 2000}}},
        {"green_bound.json", {{"n_grid", {16, 256}}, {"reps", 50}}},
        {"exit_time.json", {{"r_grid", {4, 8}}, {"reps", 50}}},
    };
    std::size_t files = 0;
    for (const auto& c : cases)
    {
        Json j = read_config(c.file);
        for (const auto& [k, v] : c.params.items())
            j["params"][k] = v;
        auto a = cli::execute(parse(j, 1));
        auto b = cli::execute(parse(j, 8));
        for (const auto& [name, body] : a.files)
        {
            if (name.size() < 4 || name.substr(name.size() - 4) != ".csv")
                continue;
            auto it = b.files.find(name);
            if (it == b.files.end() || it->second != body)
                return {false, std::string(c.file) + ": " + name + " differs between 1 and 8 workers"};
            ++files;
        }
        if (a.files != b.files)
            return {false, std::string(c.file) + ": file sets differ between 1 and 8 workers"};
    }
    return {files > 0, std::to_string(files) + " CSV files across " + std::to_string(cases.size())
                           + " experiment kinds identical at 1 and 8 workers"};
}

}  // namespace

// Optional arguments select criteria by number; default runs all.
int main(int argc, char** argv)
{
    struct Criterion
    {
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {"homogeneous velocity and diffusion", check_homogeneous},
        {"degenerate directions", check_degeneracy},
        {"half-line Green function", check_green_function},
        {"first-passage tail", check_first_passage},
        {"quenched-mean subdiffusivity", check_quenched_mean},
        {"intersection sublinearity", check_intersections},
        {"coupling decay", check_coupling},
        {"quenched CLT", check_clt},
        {"ergodic averages", check_ergodic},
        {"variation proxy", check_variation},
        {"bounded centering", check_centering},
        {"worker-count determinism", check_determinism},
    };
    std::vector<bool> selected(criteria.size(), argc < 2);
    for (int a = 1; a < argc; ++a)
    {
        const auto k = std::stoul(argv[a]);
        if (k >= 1 && k <= criteria.size())
            selected[k - 1] = true;
    }
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i)
    {
        if (!selected[i])
            continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try
        {
            o = criteria[i].run();
        }
        catch (const std::exception& e)
        {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failures += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].name << ": " << o.detail
                  << " [" << f(secs, 3) << " s]" << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
