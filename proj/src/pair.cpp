#include "rwre/pair.hpp"

#include <algorithm>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "rwre/parallel.hpp"
#include "rwre/rng.hpp"

namespace rwre
{

PairPath simulate_pair(const Environment& env, const Site& x, const Site& y, std::size_t n,
                       WalkSeed seed_x, WalkSeed seed_y)
{
    return {simulate(env, x, n, seed_x), simulate(env, y, n, seed_y)};
}

std::size_t count_intersections(const PairPath& p, std::size_t n)
{
    if (p.x.size() < n || p.x_tilde.size() < n)
        throw std::invalid_argument("count_intersections: paths shorter than horizon");
    std::unordered_set<Site, SiteHash> range(p.x.sites.begin(), p.x.sites.begin() + static_cast<std::ptrdiff_t>(n));
    std::unordered_set<Site, SiteHash> common;
    for (std::size_t k = 0; k < n; ++k)
        if (range.count(p.x_tilde.sites[k]))
            common.insert(p.x_tilde.sites[k]);
    return common.size();
}

//---------------------------------------------------------------------------//

namespace
{

// First index k >= from with level >= target, tracking the largest index read.
std::optional<std::size_t>
scan_up(LazyPath& p, std::size_t from, Level target, std::size_t cap, std::size_t& end)
{
    for (std::size_t k = from; k < cap; ++k)
    {
        end = std::max(end, k);
        if (p.level(k) >= target)
            return k;
    }
    return std::nullopt;
}

bool dips_below(const WalkPath& p, std::size_t from, std::size_t end, Level floor)
{
    end = std::min(end, p.size() - 1);
    for (std::size_t k = from; k <= end; ++k)
        if (p.levels[k] < floor)
            return true;
    return false;
}

}  // namespace

JointRegenRecord first_joint_regeneration(LazyPath& a, std::size_t from,
                                          LazyPath& b, std::size_t from_tilde,
                                          Level start_level, Level h,
                                          const JointRegenConfig& config)
{
    if (config.margin < 1)
        throw std::invalid_argument("first_joint_regeneration: margin must be >= 1");
    if (a.level(from) != start_level || b.level(from_tilde) != start_level)
        throw std::invalid_argument("first_joint_regeneration: walks must start on the given level");

    JointRegenRecord rec;
    rec.end = from;
    rec.end_tilde = from_tilde;
    const std::size_t cap = config.horizon_cap;

    Level target = start_level + h;
    std::size_t ga = from, gb = from_tilde;
    while (true)
    {
        // Common fresh level: both first passages land on it exactly. A walk
        // that jumps over `target` can never hit the levels it skipped, so the
        // next candidate is the higher of the two landing levels.
        while (true)
        {
            auto ka = scan_up(a, ga, target, cap, rec.end);
            auto kb = scan_up(b, gb, target, cap, rec.end_tilde);
            if (!ka || !kb)
                return rec;
            ga = *ka;
            gb = *kb;
            const Level la = a.level(ga), lb = b.level(gb);
            if (la == target && lb == target)
                break;
            target = std::max(la, lb);
        }
        rec.lambda_levels.push_back(target);

        // Lockstep margin test from (γ_λ, γ̃_λ).
        bool pass_a = false, pass_b = false, dipped = false;
        std::size_t k = 0;
        for (; !(pass_a && pass_b); ++k)
        {
            if (ga + k >= cap || gb + k >= cap)
                return rec;
            if (!pass_a)
            {
                rec.end = std::max(rec.end, ga + k);
                Level l = a.level(ga + k);
                dipped |= l < target;
                pass_a = l >= target + config.margin;
            }
            if (!pass_b)
            {
                rec.end_tilde = std::max(rec.end_tilde, gb + k);
                Level l = b.level(gb + k);
                dipped |= l < target;
                pass_b = l >= target + config.margin;
            }
            if (dipped)
                break;
        }
        if (!dipped)
        {
            rec.Lambda = target;
            rec.mu1 = ga;
            rec.mu1_tilde = gb;
            rec.confirmed = true;
            return rec;
        }
        // Restart above everything either walk has seen so far.
        a.extend_to(ga + k + 1);
        b.extend_to(gb + k + 1);
        rec.end = std::max(rec.end, ga + k);
        rec.end_tilde = std::max(rec.end_tilde, gb + k);
        target = std::max(a.path().running_max[ga + k], b.path().running_max[gb + k]) + h;
        ga += k;
        gb += k;
    }
}

JointRegenRecord first_joint_regeneration(const Environment& env, const Site& x, const Site& y,
                                          WalkSeed seed_x, WalkSeed seed_y,
                                          const JointRegenConfig& config)
{
    const auto& J = env.support();
    if (dot(x, J.direction) != dot(y, J.direction))
        throw std::invalid_argument("first_joint_regeneration: starts are on different levels");
    LazyPath a(J.dim, J.direction, x, QuenchedStepper(env, seed_x));
    LazyPath b(J.dim, J.direction, y, QuenchedStepper(env, seed_y));
    return first_joint_regeneration(a, 0, b, 0, dot(x, J.direction), compute_h(J), config);
}

//---------------------------------------------------------------------------//

namespace
{

void require_in_hyperplane(const EnvironmentModel& model, const Site& x0)
{
    if (dot(x0, model.support().direction) != 0)
        throw std::invalid_argument("x0 must satisfy x0·u = 0");
}

YChainSample run_chain(std::shared_ptr<const EnvironmentModel> model, const Site& x0, std::size_t K,
                       std::uint64_t seed, const YChainConfig& config, bool independent)
{
    require_in_hyperplane(*model, x0);
    const auto& J = model->support();
    const Level h = compute_h(J);
    const Site origin{};

    YChainSample out;
    out.y.push_back(x0);
    if (K == 0)
        return out;

    std::unique_ptr<LazyPath> a, b;
    std::unique_ptr<Environment> env_a, env_b;
    JointRegenRecord rec;
    std::uint64_t attempt = 0;
    while (true)
    {
        if (attempt > config.rejection_cap)
            throw std::runtime_error("Y chain: rejection cap exceeded on the first slab");
        env_a = std::make_unique<Environment>(model, derive_seed(seed, "y-env", attempt));
        env_b = std::make_unique<Environment>(
            model, independent ? derive_seed(seed, "ybar-env", attempt) : env_a->seed());
        a = std::make_unique<LazyPath>(J.dim, J.direction, origin,
                                       QuenchedStepper(*env_a, WalkSeed{derive_seed(seed, "y-walk", 2 * attempt)}));
        b = std::make_unique<LazyPath>(J.dim, J.direction, x0,
                                       QuenchedStepper(*env_b, WalkSeed{derive_seed(seed, "y-walk", 2 * attempt + 1)}));
        rec = first_joint_regeneration(*a, 0, *b, 0, 0, h, config.joint);
        if (rec.confirmed && !dips_below(a->path(), 0, rec.end, 0) && !dips_below(b->path(), 0, rec.end_tilde, 0))
            break;
        ++out.rejections;
        ++attempt;
    }

    auto push = [&](const JointRegenRecord& r) {
        out.y.push_back(b->path().sites[r.mu1_tilde] - a->path().sites[r.mu1]);
        out.Lambda.push_back(*r.Lambda);
    };
    push(rec);

    for (std::size_t k = 1; k < K; ++k)
    {
        const std::size_t mu = rec.mu1, mu_t = rec.mu1_tilde;
        const Level lam = *rec.Lambda;
        for (std::uint64_t r = 0;; ++r)
        {
            if (r > config.rejection_cap)
                throw std::runtime_error("Y chain: restart cap exceeded on slab " + std::to_string(k + 1));
            if (r > 0)
            {
                // The previous margin check was fooled; redraw both futures.
                const std::uint64_t key = fold(fold(attempt, k), r);
                a->restart_from(mu + 1, QuenchedStepper(*env_a, WalkSeed{derive_seed(seed, "y-restart", 2 * key)}));
                b->restart_from(mu_t + 1,
                                QuenchedStepper(*env_b, WalkSeed{derive_seed(seed, "y-restart", 2 * key + 1)}));
                ++out.restarts;
            }
            JointRegenRecord next = first_joint_regeneration(*a, mu, *b, mu_t, lam, h, config.joint);
            if (next.confirmed && !dips_below(a->path(), mu, next.end, lam)
                && !dips_below(b->path(), mu_t, next.end_tilde, lam))
            {
                rec = std::move(next);
                break;
            }
        }
        push(rec);
    }
    return out;
}

}  // namespace

YChainSample sample_Y_chain(std::shared_ptr<const EnvironmentModel> model, const Site& x0,
                            std::size_t K, std::uint64_t seed, const YChainConfig& config)
{
    return run_chain(std::move(model), x0, K, seed, config, false);
}

YChainSample sample_Ybar_chain(std::shared_ptr<const EnvironmentModel> model, const Site& x0,
                               std::size_t K, std::uint64_t seed, const YChainConfig& config)
{
    return run_chain(std::move(model), x0, K, seed, config, true);
}

//---------------------------------------------------------------------------//

namespace
{

//! Steps driven by per-site visit-indexed uniforms z^x_k.
class VisitStepper
{
  public:
    VisitStepper(Environment env, std::uint64_t zseed)
        : env_(std::move(env)), zseed_(zseed), visits_(std::make_shared<Counts>())
    {
    }

    Site operator()(const Site& x)
    {
        std::uint64_t k = (*visits_)[x]++;
        return env_.step_from(x, to_unit(fold(fold_site(zseed_, x), k)));
    }

  private:
    using Counts = std::unordered_map<Site, std::uint64_t, SiteHash>;
    Environment env_;
    std::uint64_t zseed_;
    std::shared_ptr<Counts> visits_;
};

//! One triple (X, X̃, X̄) of the coupling.
class Triple
{
  public:
    Triple(std::shared_ptr<const EnvironmentModel> model, const Site& x0, std::uint64_t seed,
           std::size_t m, const CouplingConfig& config)
        : J_(model->support()),
          env_(model, derive_seed(seed, "triple-env", m)),
          env_bar_(model, derive_seed(seed, "triple-env-bar", m)),
          z_(derive_seed(seed, "triple-z", m)),
          z_bar_(derive_seed(seed, "triple-z-bar", m)),
          config_(config),
          x_(J_.dim, J_.direction, Site{}, QuenchedStepper(env_, WalkSeed{derive_seed(seed, "triple-x", m)})),
          x_tilde_(J_.dim, J_.direction, x0, VisitStepper(env_, z_)),
          x_bar_(J_.dim, J_.direction, x0, [this](const Site& y) { return bar_step(y); })
    {
    }

    Triple(const Triple&) = delete;
    Triple& operator=(const Triple&) = delete;

    LazyPath& x() { return x_; }
    LazyPath& x_tilde() { return x_tilde_; }
    LazyPath& x_bar() { return x_bar_; }

    // Whether X̄ has visited any site of X's realized range.
    bool hit()
    {
        sync();
        for (const auto& s : x_bar_.path().sites)
            if (range_.count(s))
                return true;
        return false;
    }

  private:
    void sync()
    {
        const auto& sites = x_.path().sites;
        for (; synced_ < sites.size(); ++synced_)
            range_.insert(sites[synced_]);
    }

    Site bar_step(const Site& y)
    {
        const Level need = dot(y, J_.direction) + config_.lookahead;
        while (x_.path().running_max.back() < need && x_.size() < config_.joint.horizon_cap)
            x_.extend_to(x_.size() + 1);
        sync();
        std::uint64_t k = bar_visits_[y]++;
        if (range_.count(y))
            return env_bar_.step_from(y, to_unit(fold(fold_site(z_bar_, y), k)));
        return env_.step_from(y, to_unit(fold(fold_site(z_, y), k)));
    }

    const StepSupport& J_;
    Environment env_;
    Environment env_bar_;
    std::uint64_t z_;
    std::uint64_t z_bar_;
    CouplingConfig config_;
    LazyPath x_;
    LazyPath x_tilde_;
    LazyPath x_bar_;
    std::unordered_set<Site, SiteHash> range_;
    std::size_t synced_ = 0;
    std::unordered_map<Site, std::uint64_t, SiteHash> bar_visits_;
};

std::optional<Site> try_slab(LazyPath& a, LazyPath& b, Level h, const JointRegenConfig& cfg, JointRegenRecord* out)
{
    JointRegenRecord rec = first_joint_regeneration(a, 0, b, 0, 0, h, cfg);
    if (!rec.confirmed || dips_below(a.path(), 0, rec.end, 0) || dips_below(b.path(), 0, rec.end_tilde, 0))
        return std::nullopt;
    if (out)
        *out = rec;
    return b.path().sites[rec.mu1_tilde] - a.path().sites[rec.mu1];
}

}  // namespace

CouplingOutcome coupled_triple(std::shared_ptr<const EnvironmentModel> model, const Site& x0,
                               std::uint64_t seed, const CouplingConfig& config)
{
    require_in_hyperplane(*model, x0);
    const Level h = compute_h(model->support());

    CouplingOutcome out;
    out.x0 = x0;
    std::optional<Site> y1, ybar1;
    for (std::size_t m = 1; !(y1 && ybar1); ++m)
    {
        if (m > config.triple_cap)
            throw std::runtime_error("coupled_triple: triple cap exceeded");
        Triple t(model, x0, seed, m, config);
        if (!y1)
        {
            JointRegenRecord rec;
            if ((y1 = try_slab(t.x(), t.x_tilde(), h, config.joint, &rec)))
            {
                out.M = m;
                out.Lambda = *rec.Lambda;
                out.mu1 = rec.mu1;
                out.mu1_tilde = rec.mu1_tilde;
            }
        }
        if (!ybar1)
        {
            if ((ybar1 = try_slab(t.x(), t.x_bar(), h, config.joint, nullptr)))
                out.M_bar = m;
            out.hit_X_path = out.hit_X_path || t.hit();
        }
    }
    out.Y1 = *y1;
    out.Ybar1 = *ybar1;
    out.equal = out.Y1 == out.Ybar1;
    out.rejections = std::max(out.M, out.M_bar) - 1;
    return out;
}

void write_replica_csv(std::ostream& os, int dim, std::span<const CouplingOutcome> rows)
{
    auto vec_cols = [&](const char* name) {
        for (int i = 1; i <= dim; ++i)
            os << ',' << name << '_' << i;
    };
    os << "replica";
    vec_cols("x0");
    os << ",Lambda,mu1,mu1_tilde";
    vec_cols("Y1");
    vec_cols("Ybar1");
    os << ",equal,hit_X_path,rejections\n";
    for (std::size_t r = 0; r < rows.size(); ++r)
    {
        const auto& o = rows[r];
        os << r;
        for (int i = 0; i < dim; ++i)
            os << ',' << o.x0[i];
        os << ',' << o.Lambda << ',' << o.mu1 << ',' << o.mu1_tilde;
        for (int i = 0; i < dim; ++i)
            os << ',' << o.Y1[i];
        for (int i = 0; i < dim; ++i)
            os << ',' << o.Ybar1[i];
        os << ',' << (o.equal ? 1 : 0) << ',' << (o.hit_X_path ? 1 : 0) << ',' << o.rejections << '\n';
    }
}

//---------------------------------------------------------------------------//

SupportReport support_inheritance_check(std::shared_ptr<const EnvironmentModel> model, const Site& x0,
                                        std::size_t samples, std::uint64_t seed, unsigned workers,
                                        double threshold_factor, const YChainConfig& config)
{
    if (samples == 0)
        throw std::invalid_argument("support_inheritance_check: samples must be positive");
    auto q = parallel_map(samples, workers, [&](std::size_t i) {
        return sample_Y_chain(model, x0, 1, derive_seed(seed, "support-q", i), config).y.back();
    });
    auto qbar = parallel_map(samples, workers, [&](std::size_t i) {
        return sample_Ybar_chain(model, x0, 1, derive_seed(seed, "support-qbar", i), config).y.back();
    });

    std::map<Site, SupportAtom> atoms;
    for (const auto& y : q)
    {
        auto& a = atoms[y];
        a.y = y;
        ++a.count_q;
    }
    for (const auto& y : qbar)
    {
        auto& a = atoms[y];
        a.y = y;
        ++a.count_qbar;
    }

    SupportReport rep;
    rep.samples = samples;
    rep.threshold = threshold_factor / static_cast<double>(samples);
    for (const auto& [key, a] : atoms)
    {
        rep.atoms.push_back(a);
        if (a.count_qbar == 0)
        {
            rep.q_only.push_back(a);
            if (static_cast<double>(a.count_q) / static_cast<double>(samples) > rep.threshold)
                rep.flagged.push_back(a);
        }
    }
    rep.note = std::to_string(rep.atoms.size()) + " atoms compared at " + std::to_string(samples)
               + " samples each; rare q-only atoms are expected by chance, only those above "
               + "the frequency threshold are flagged";
    return rep;
}

}  // namespace rwre
