#include "rwre/green.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "rwre/format.hpp"
#include "rwre/parallel.hpp"

namespace rwre
{

SymmetricWalk1D::SymmetricWalk1D(const std::map<long long, double>& pmf)
{
    double total = 0;
    for (const auto& [k, p] : pmf)
    {
        if (!(p >= 0) || !std::isfinite(p))
            throw std::invalid_argument("SymmetricWalk1D: probabilities must be finite and nonnegative");
        if (p == 0)
            continue;
        pmf_.emplace_back(k, p);
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("SymmetricWalk1D: probabilities sum to " + fmt(total));
    long long g = 0;
    for (const auto& [k, p] : pmf_)
    {
        auto it = pmf.find(-k);
        const double q = it == pmf.end() ? 0.0 : it->second;
        if (std::abs(p - q) > 1e-12)
            throw std::invalid_argument("SymmetricWalk1D: p(" + std::to_string(k) + ") != p(" + std::to_string(-k) + ")");
        range_ = std::max(range_, std::abs(k));
        g = std::gcd(g, std::abs(k));
    }
    if (range_ == 0)
        throw std::invalid_argument("SymmetricWalk1D: walk is degenerate");
    period_ = g;
    double c = 0;
    for (const auto& [k, p] : pmf_)
        cdf_.push_back(c += p);
    cdf_.back() = 1.0;
}

SymmetricWalk1D SymmetricWalk1D::simple()
{
    return SymmetricWalk1D({{-1, 0.5}, {1, 0.5}});
}

double SymmetricWalk1D::p(long long k) const
{
    for (const auto& [j, q] : pmf_)
        if (j == k)
            return q;
    return 0.0;
}

long long SymmetricWalk1D::sample(double u) const
{
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end())
        --it;
    return pmf_[static_cast<std::size_t>(it - cdf_.begin())].first;
}

//---------------------------------------------------------------------------//

namespace
{

using SpMat = Eigen::SparseMatrix<double>;

// Index of s' after folding it back into [lo, hi] by multiples of the period.
long long fold_into(long long s, long long lo, long long hi, long long g)
{
    if (s < lo)
        return s + g * ((lo - s + g - 1) / g);
    if (s > hi)
        return s - g * ((s - hi + g - 1) / g);
    return s;
}

std::vector<double> ladder_solve(const SymmetricWalk1D& walk, long long K)
{
    const long long R = walk.range();
    const long long g = walk.period();
    const auto n = static_cast<Eigen::Index>(K + 1);  // states -K..0
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, R + 1);
    for (long long s = -K; s <= 0; ++s)
    {
        const auto i = static_cast<Eigen::Index>(s + K);
        trip.emplace_back(i, i, 1.0);
        for (const auto& [k, p] : walk.pmf())
        {
            const long long to = s + k;
            if (to >= 1)
                rhs(i, to) += p;
            else
                trip.emplace_back(i, static_cast<Eigen::Index>(fold_into(to, -K, 0, g) + K), -p);
        }
    }
    SpMat A(n, n);
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<SpMat> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success)
        throw std::runtime_error("ladder_heights: factorization failed");
    Eigen::MatrixXd f = lu.solve(rhs);
    std::vector<double> pmf(static_cast<std::size_t>(R + 1), 0.0);
    for (long long h = 1; h <= R; ++h)
        pmf[static_cast<std::size_t>(h)] = f(n - 1, h);
    return pmf;
}

}  // namespace

LadderResult ladder_heights(const SymmetricWalk1D& walk, std::size_t K)
{
    const auto R = static_cast<std::size_t>(walk.range());
    if (K == 0)
        K = 100 * R;
    if (K < 10 * R)
        throw std::invalid_argument("ladder_heights: K must be at least 10 times the step range");
    auto coarse = ladder_solve(walk, static_cast<long long>(K));
    LadderResult res;
    res.K = 2 * K;
    res.pmf = ladder_solve(walk, static_cast<long long>(2 * K));
    for (std::size_t h = 0; h < res.pmf.size(); ++h)
        res.truncation_error = std::max(res.truncation_error, std::abs(res.pmf[h] - coarse[h]));
    res.warning = res.truncation_error > 1e-10;
    return res;
}

void LadderTables::ensure(std::size_t m_max)
{
    if (v_table.empty())
        v_table.push_back(1.0);
    const auto& z = ladder.pmf;
    for (std::size_t m = v_table.size(); m <= m_max; ++m)
    {
        double s = 0;
        for (std::size_t j = 1; j < z.size() && j <= m; ++j)
            s += z[j] * v_table[m - j];
        v_table.push_back(s);
    }
}

LadderTables build_ladder_tables(const SymmetricWalk1D& walk, std::size_t m_max, std::size_t K)
{
    LadderTables t;
    t.ladder = ladder_heights(walk, K);
    t.ensure(m_max);
    t.normalization = half_line_green_oracle(walk, 0, 1)(0, 0);
    return t;
}

double half_line_green(const SymmetricWalk1D&, long long r0, long long s, long long t, LadderTables& tables)
{
    if (s <= r0 || t <= r0)
        return 0.0;
    const auto x = static_cast<std::size_t>(s - r0 - 1);
    const auto y = static_cast<std::size_t>(t - r0 - 1);
    tables.ensure(std::max(x, y));
    const auto& v = tables.v_table;
    double sum = 0;
    for (std::size_t n = 0; n <= std::min(x, y); ++n)
        sum += v[x - n] * v[y - n];
    return tables.normalization * sum;
}

Eigen::MatrixXd half_line_green_oracle(const SymmetricWalk1D& walk, long long r0, long long s_max, std::size_t pad)
{
    if (s_max <= r0)
        throw std::invalid_argument("half_line_green_oracle: s_max must exceed r0");
    const long long m = s_max - r0;
    if (pad == 0)
        pad = static_cast<std::size_t>(std::max<long long>(400, 100 * walk.range()));
    const long long L = m + static_cast<long long>(pad);
    const long long g = walk.period();
    std::vector<Eigen::Triplet<double>> trip;
    for (long long i = 0; i < L; ++i)
    {
        trip.emplace_back(i, i, 1.0);
        for (const auto& [k, p] : walk.pmf())
        {
            const long long to = i + k;
            if (to < 0)
                continue;  // killed
            trip.emplace_back(i, fold_into(to, 0, L - 1, g), -p);
        }
    }
    SpMat A(L, L);
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<SpMat> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success)
        throw std::runtime_error("half_line_green_oracle: factorization failed");
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Identity(L, m);
    Eigen::MatrixXd G = lu.solve(rhs);
    return G.topRows(m);
}

MonteCarloValue half_line_green_mc(const SymmetricWalk1D& walk, long long r0, long long s, long long t,
                                   std::size_t reps, std::uint64_t seed, unsigned workers, std::size_t step_cap)
{
    if (reps < 10000)
        throw std::invalid_argument("half_line_green_mc: reps must be >= 10^4");
    MonteCarloValue out;
    out.reps = reps;
    if (s <= r0 || t <= r0)
        return out;
    struct Rep
    {
        double visits;
        bool truncated;
    };
    auto res = parallel_map(reps, workers, [&](std::size_t i) {
        SplitMix64 rng(derive_seed(seed, "green-mc", i));
        long long x = s;
        std::size_t visits = x == t ? 1 : 0;
        for (std::size_t k = 0; k < step_cap; ++k)
        {
            x += walk.sample(rng);
            if (x <= r0)
                return Rep{static_cast<double>(visits), false};
            visits += x == t ? 1 : 0;
        }
        return Rep{static_cast<double>(visits), true};
    });
    std::vector<double> v;
    v.reserve(reps);
    std::size_t trunc = 0;
    for (const auto& r : res)
    {
        v.push_back(r.visits);
        trunc += r.truncated ? 1 : 0;
    }
    out.value = mean(v);
    out.se = batch_means_se(v, 100);
    out.truncated_fraction = static_cast<double>(trunc) / static_cast<double>(reps);
    return out;
}

std::vector<TailRow> first_passage_tail(const SymmetricWalk1D& walk, std::span<const std::size_t> a_grid,
                                        TailMode mode, std::size_t reps, std::uint64_t seed, unsigned workers)
{
    std::vector<std::size_t> grid(a_grid.begin(), a_grid.end());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    if (grid.empty())
        return {};
    if (grid.front() == 0)
        throw std::invalid_argument("first_passage_tail: a must be >= 1");
    const std::size_t a_max = grid.back();
    std::vector<TailRow> rows;

    if (mode == TailMode::exact)
    {
        if (a_max > 20000)
            throw std::invalid_argument("first_passage_tail: exact mode supports a <= 20000");
        const auto R = static_cast<std::size_t>(walk.range());
        std::vector<double> dist(1, 1.0), next;
        std::size_t gi = 0;
        // survival[n] = P{S_1..S_n >= 0} = P{T̄ >= n + 1}
        for (std::size_t n = 0; gi < grid.size(); ++n)
        {
            double surv = std::accumulate(dist.begin(), dist.end(), 0.0);
            while (gi < grid.size() && grid[gi] == n + 1)
            {
                rows.push_back({grid[gi], surv, 0.0});
                ++gi;
            }
            if (gi == grid.size())
                break;
            next.assign(dist.size() + R, 0.0);
            for (std::size_t s = 0; s < dist.size(); ++s)
            {
                if (dist[s] == 0)
                    continue;
                for (const auto& [k, p] : walk.pmf())
                {
                    const long long to = static_cast<long long>(s) + k;
                    if (to >= 0)
                        next[static_cast<std::size_t>(to)] += dist[s] * p;
                }
            }
            while (!next.empty() && next.back() == 0)
                next.pop_back();
            dist.swap(next);
        }
        return rows;
    }

    if (reps == 0)
        throw std::invalid_argument("first_passage_tail: Monte Carlo mode needs reps > 0");
    // T̄ truncated at a_max, which is enough to decide {T̄ >= a} for every a.
    auto hits = parallel_map(reps, workers, [&](std::size_t i) {
        SplitMix64 rng(derive_seed(seed, "tail-mc", i));
        long long x = 0;
        for (std::size_t n = 1; n < a_max; ++n)
        {
            x += walk.sample(rng);
            if (x < 0)
                return n;
        }
        return a_max;
    });
    for (std::size_t a : grid)
    {
        std::size_t c = 0;
        for (std::size_t T : hits)
            c += T >= a ? 1 : 0;
        const double p = static_cast<double>(c) / static_cast<double>(reps);
        rows.push_back({a, p, std::sqrt(p * (1 - p) / static_cast<double>(reps))});
    }
    return rows;
}

double exit_probability(const SymmetricWalk1D& walk, long long r0, long long r, long long x)
{
    if (!(r0 < x && x <= r))
        throw std::invalid_argument("exit_probability: need r0 < x <= r");
    const auto m = static_cast<Eigen::Index>(r - r0);
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(m, m);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    for (long long s = r0 + 1; s <= r; ++s)
    {
        const auto i = static_cast<Eigen::Index>(s - r0 - 1);
        for (const auto& [k, p] : walk.pmf())
        {
            const long long to = s + k;
            if (to > r)
                b[i] += p;
            else if (to > r0)
                A(i, static_cast<Eigen::Index>(to - r0 - 1)) -= p;
        }
    }
    Eigen::VectorXd f = A.partialPivLu().solve(b);
    return f[static_cast<Eigen::Index>(x - r0 - 1)];
}

MonteCarloValue exit_probability_mc(const SymmetricWalk1D& walk, long long r0, long long r, long long x,
                                    std::size_t reps, std::uint64_t seed, unsigned workers)
{
    if (!(r0 < x && x <= r))
        throw std::invalid_argument("exit_probability_mc: need r0 < x <= r");
    if (reps == 0)
        throw std::invalid_argument("exit_probability_mc: reps must be positive");
    auto res = parallel_map(reps, workers, [&](std::size_t i) {
        SplitMix64 rng(derive_seed(seed, "exit-mc", i));
        long long y = x;
        while (y > r0 && y <= r)
            y += walk.sample(rng);
        return y > r ? 1.0 : 0.0;
    });
    MonteCarloValue out;
    out.reps = reps;
    out.value = mean(res);
    out.se = std::sqrt(out.value * (1 - out.value) / static_cast<double>(reps));
    return out;
}

//---------------------------------------------------------------------------//

namespace
{

std::vector<double> atom_cdf(const std::vector<StepAtom>& atoms)
{
    std::vector<double> c;
    double s = 0;
    for (const auto& a : atoms)
        c.push_back(s += a.p);
    if (!c.empty())
        c.back() = 1.0;
    return c;
}

const Site& pick(const std::vector<StepAtom>& atoms, const std::vector<double>& cdf, double u)
{
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end())
        --it;
    return atoms[static_cast<std::size_t>(it - cdf.begin())].z;
}

double site_norm(const Site& x, int dim)
{
    double s = 0;
    for (int i = 0; i < dim; ++i)
        s += static_cast<double>(x[i]) * static_cast<double>(x[i]);
    return std::sqrt(s);
}

void check_pmf(const std::vector<StepAtom>& atoms, int dim, const char* what)
{
    if (atoms.empty())
        throw std::invalid_argument(std::string(what) + " is empty");
    double total = 0;
    for (const auto& a : atoms)
    {
        if (!(a.p >= 0))
            throw std::invalid_argument(std::string(what) + " has a negative probability");
        for (int i = dim; i < kMaxDim; ++i)
            if (a.z[i] != 0)
                throw std::invalid_argument(std::string(what) + " has a step outside the dimension");
        total += a.p;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument(std::string(what) + " sums to " + fmt(total));
}

}  // namespace

std::vector<StepAtom> PerturbedChainSpec::product_base(const SymmetricWalk1D& walk, int dim)
{
    if (dim < 1 || dim > kMaxDim)
        throw std::invalid_argument("product_base: dimension out of range");
    std::vector<StepAtom> atoms{{Site{}, 1.0}};
    for (int i = 0; i < dim; ++i)
    {
        std::vector<StepAtom> next;
        for (const auto& a : atoms)
            for (const auto& [k, p] : walk.pmf())
            {
                StepAtom b = a;
                b.z[i] = static_cast<Coord>(k);
                b.p *= p;
                next.push_back(b);
            }
        atoms.swap(next);
    }
    return atoms;
}

void PerturbedChainSpec::validate() const
{
    if (dim < 1 || dim > kMaxDim)
        throw std::invalid_argument("perturbed chain: dimension out of range");
    check_pmf(base, dim, "base pmf");
    for (const auto& a : base)
    {
        double q = 0;
        for (const auto& b : base)
            if (b.z == -a.z)
                q += b.p;
        double pa = 0;
        for (const auto& b : base)
            if (b.z == a.z)
                pa += b.p;
        if (std::abs(pa - q) > 1e-12)
            throw std::invalid_argument("perturbed chain: base pmf is not symmetric");
    }
    if (!alternative.empty())
        check_pmf(alternative, dim, "alternative kernel");
    if (!(C >= 0) || !(p1 > 0))
        throw std::invalid_argument("perturbed chain: need C >= 0 and p1 > 0");
    if (h_kind == HKind::power && !(p2 > 0))
        throw std::invalid_argument("perturbed chain: h must decay (p2 > 0)");
    if (!(C_h > 0))
        throw std::invalid_argument("perturbed chain: C_h must be positive");
    if (starts.empty())
        throw std::invalid_argument("perturbed chain: no start states");
}

double PerturbedChainSpec::perturbation(const Site& x) const
{
    return std::min(1.0, C * std::pow(std::max(site_norm(x, dim), 1.0), -p1));
}

double PerturbedChainSpec::h(const Site& x) const
{
    if (h_kind == HKind::origin)
        return is_zero(x) ? 1.0 : 0.0;
    return C_h * std::pow(std::max(site_norm(x, dim), 1.0), -p2);
}

double PerturbedChainSpec::theorem_exponent() const
{
    const double den = 2 * p1 - 4;
    if (!(den > 0))
        return std::numeric_limits<double>::quiet_NaN();
    return std::max(1 - p2 / den, 0.5 + 13 / den);
}

PerturbedChain::PerturbedChain(PerturbedChainSpec spec) : spec_(std::move(spec))
{
    if (spec_.alternative.empty())
        spec_.alternative.push_back({unit(0), 1.0});
    spec_.validate();
    base_cdf_ = atom_cdf(spec_.base);
    alt_cdf_ = atom_cdf(spec_.alternative);
}

Site PerturbedChain::step(const Site& x, SplitMix64& rng) const
{
    const double u = rng.uniform();
    const double w = rng.uniform();
    if (u < spec_.perturbation(x))
        return x + pick(spec_.alternative, alt_cdf_, w);
    return x + pick(spec_.base, base_cdf_, w);
}

GreenBoundReport green_bound_experiment(const PerturbedChainSpec& spec, std::span<const std::size_t> n_grid,
                                        std::size_t reps, std::uint64_t seed, unsigned workers)
{
    PerturbedChain chain(spec);
    std::vector<std::size_t> grid(n_grid.begin(), n_grid.end());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    if (grid.empty() || grid.front() == 0)
        throw std::invalid_argument("green_bound_experiment: n_grid must be positive");
    if (reps < 2)
        throw std::invalid_argument("green_bound_experiment: need at least 2 replicas");
    const auto& starts = chain.spec().starts;
    const std::size_t total = reps * starts.size();

    auto sums = parallel_map(total, workers, [&](std::size_t i) {
        SplitMix64 rng(derive_seed(seed, "green-bound", i));
        Site y = starts[i / reps];
        std::vector<double> out;
        out.reserve(grid.size());
        double acc = 0;
        std::size_t gi = 0;
        for (std::size_t k = 0; gi < grid.size(); ++k)
        {
            acc += chain.spec().h(y);
            if (k + 1 == grid[gi])
            {
                out.push_back(acc);
                ++gi;
            }
            if (gi < grid.size())
                y = chain.step(y, rng);
        }
        return out;
    });

    GreenBoundReport rep;
    rep.theorem_exponent = chain.spec().theorem_exponent();
    rep.exploratory = chain.spec().exploratory();
    std::vector<double> fx, fy;
    for (std::size_t gi = 0; gi < grid.size(); ++gi)
    {
        std::vector<double> v(total);
        for (std::size_t i = 0; i < total; ++i)
            v[i] = sums[i][gi];
        GreenCurveRow row{grid[gi], mean(v), std::sqrt(variance(v) / static_cast<double>(total))};
        if (row.value > 0)
        {
            fx.push_back(static_cast<double>(row.n));
            fy.push_back(row.value);
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

ExitTimeReport cube_exit_time(const PerturbedChainSpec& spec, std::span<const std::size_t> r_grid,
                              std::size_t reps, std::uint64_t seed, unsigned workers)
{
    PerturbedChain chain(spec);
    if (reps < 2)
        throw std::invalid_argument("cube_exit_time: need at least 2 replicas");
    const Site start = chain.spec().starts.front();
    const int d = chain.spec().dim;
    ExitTimeReport rep;
    std::vector<double> fx, fy;
    for (std::size_t r : r_grid)
    {
        const auto rr = static_cast<Coord>(r);
        auto inside = [&](const Site& y) {
            for (int i = 0; i < d; ++i)
                if (y[i] < -rr || y[i] > rr)
                    return false;
            return true;
        };
        auto times = parallel_map(reps, workers, [&](std::size_t i) {
            SplitMix64 rng(derive_seed(seed, "cube-exit-" + std::to_string(r), i));
            Site y = start;
            double n = 0;
            do
            {
                y = chain.step(y, rng);
                n += 1;
            } while (inside(y));
            return n;
        });
        ExitTimeRow row{r, mean(times), std::sqrt(variance(times) / static_cast<double>(reps))};
        if (r >= 1 && row.mean > 0)
        {
            fx.push_back(static_cast<double>(r));
            fy.push_back(row.mean);
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

void write_v_table_csv(std::ostream& os, const LadderTables& tables)
{
    os << "m,v\n";
    for (std::size_t m = 0; m < tables.v_table.size(); ++m)
        os << m << ',' << fmt(tables.v_table[m]) << '\n';
}

}  // namespace rwre
