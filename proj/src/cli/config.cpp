#include "rwre/cli/config.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace rwre::cli
{

std::string to_string(const ConfigError& e)
{
    return e.field.empty() ? e.reason : e.field + ": " + e.reason;
}

const std::vector<std::string_view>& experiment_kinds()
{
    static const std::vector<std::string_view> kinds{
        "check", "regen", "clt", "quenched-mean", "intersections", "joint-regen",
        "coupling", "ergodic", "variation", "green", "green-bound", "exit-time"};
    return kinds;
}

namespace
{

std::string join_kinds()
{
    std::string s;
    for (auto k : experiment_kinds())
    {
        if (!s.empty())
            s += ", ";
        s += k;
    }
    return s;
}

//---------------------------------------------------------------------------//
/*!
 * Typed access to one JSON object that records schema errors with their
 * dotted field path instead of throwing.
 */
class Reader
{
  public:
    Reader(const Json* node, std::string path, std::vector<ConfigError>& errors)
        : node_(node), path_(std::move(path)), errors_(&errors)
    {
        if (node_ && !node_->is_null() && !node_->is_object())
            fail("", "must be an object");
    }

    bool has(const std::string& key) const { return get(key) != nullptr; }

    Reader child(const std::string& key)
    {
        seen_.insert(key);
        return Reader(get(key), field(key), *errors_);
    }

    void fail(const std::string& key, const std::string& reason) const
    {
        errors_->push_back({key.empty() ? path_ : field(key), reason});
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    std::uint64_t u64(const std::string& key, std::uint64_t def)
    {
        const Json* j = mark(key);
        if (!j)
            return def;
        if (j->is_number_unsigned())
            return j->get<std::uint64_t>();
        if (j->is_number_integer() && j->get<std::int64_t>() >= 0)
            return static_cast<std::uint64_t>(j->get<std::int64_t>());
        fail(key, "must be a nonnegative integer");
        return def;
    }

    std::size_t count(const std::string& key, std::size_t def, std::size_t lo = 0,
                      std::size_t hi = std::numeric_limits<std::size_t>::max())
    {
        const Json* j = mark(key);
        if (!j)
            return def;
        return to_count(*j, field(key), def, lo, hi);
    }

    long long integer(const std::string& key, long long def, long long lo = std::numeric_limits<long long>::min(),
                      long long hi = std::numeric_limits<long long>::max())
    {
        const Json* j = mark(key);
        if (!j)
            return def;
        if (!j->is_number_integer())
        {
            fail(key, "must be an integer");
            return def;
        }
        auto v = j->get<long long>();
        if (v < lo || v > hi)
        {
            fail(key, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "], got "
                          + std::to_string(v));
            return def;
        }
        return v;
    }

    double real(const std::string& key, double def, double lo = -std::numeric_limits<double>::infinity(),
                double hi = std::numeric_limits<double>::infinity())
    {
        const Json* j = mark(key);
        if (!j)
            return def;
        if (!j->is_number())
        {
            fail(key, "must be a number");
            return def;
        }
        double v = j->get<double>();
        if (!(v >= lo && v <= hi))
        {
            fail(key, "out of range");
            return def;
        }
        return v;
    }

    bool flag(const std::string& key, bool def)
    {
        const Json* j = mark(key);
        if (!j)
            return def;
        if (!j->is_boolean())
        {
            fail(key, "must be true or false");
            return def;
        }
        return j->get<bool>();
    }

    std::string str(const std::string& key, const std::string& def, const std::vector<std::string>& allowed = {})
    {
        const Json* j = mark(key);
        if (!j)
            return def;
        if (!j->is_string())
        {
            fail(key, "must be a string");
            return def;
        }
        auto v = j->get<std::string>();
        if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), v) == allowed.end())
        {
            std::string list;
            for (const auto& a : allowed)
                list += (list.empty() ? "" : ", ") + a;
            fail(key, "unknown value '" + v + "'; expected one of: " + list);
            return def;
        }
        return v;
    }

    std::vector<std::size_t> counts(const std::string& key, std::vector<std::size_t> def, std::size_t lo = 1)
    {
        const Json* j = mark(key);
        if (!j)
            return def;
        if (!j->is_array() || j->empty())
        {
            fail(key, "must be a nonempty array of integers");
            return def;
        }
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < j->size(); ++i)
            out.push_back(to_count((*j)[i], field(key) + "[" + std::to_string(i) + "]", lo, lo,
                                   std::numeric_limits<std::size_t>::max()));
        return out;
    }

    std::vector<double> reals(const std::string& key, std::vector<double> def)
    {
        const Json* j = mark(key);
        if (!j)
            return def;
        return to_reals(*j, field(key));
    }

    Site site(const std::string& key, int dim, Site def = {})
    {
        const Json* j = mark(key);
        if (!j)
            return def;
        return to_site(*j, field(key), dim);
    }

    std::vector<Site> sites(const std::string& key, int dim)
    {
        const Json* j = mark(key);
        if (!j)
            return {};
        if (!j->is_array())
        {
            fail(key, "must be an array of integer vectors");
            return {};
        }
        std::vector<Site> out;
        for (std::size_t i = 0; i < j->size(); ++i)
            out.push_back(to_site((*j)[i], field(key) + "[" + std::to_string(i) + "]", dim));
        return out;
    }

    const Json* raw(const std::string& key) { return mark(key); }

    // Reports keys that no accessor asked for.
    void finish() const
    {
        if (!node_ || !node_->is_object())
            return;
        for (const auto& [k, v] : node_->items())
            if (!seen_.count(k))
                errors_->push_back({field(k), "unknown field"});
    }

    std::vector<double> to_reals(const Json& j, const std::string& where) const
    {
        std::vector<double> out;
        if (!j.is_array())
        {
            errors_->push_back({where, "must be an array of numbers"});
            return out;
        }
        for (const auto& e : j)
        {
            if (!e.is_number())
            {
                errors_->push_back({where, "must contain only numbers"});
                return {};
            }
            out.push_back(e.get<double>());
        }
        return out;
    }

    Site to_site(const Json& j, const std::string& where, int dim) const
    {
        Site s{};
        if (!j.is_array() || static_cast<int>(j.size()) != dim)
        {
            errors_->push_back({where, "must be an integer vector of length " + std::to_string(dim)});
            return s;
        }
        for (int i = 0; i < dim; ++i)
        {
            const auto& e = j[static_cast<std::size_t>(i)];
            if (!e.is_number_integer() || std::abs(e.get<long long>()) > 1'000'000)
            {
                errors_->push_back({where, "entries must be integers with |x| <= 10^6"});
                return Site{};
            }
            s[i] = static_cast<Coord>(e.get<long long>());
        }
        return s;
    }

  private:
    const Json* get(const std::string& key) const
    {
        if (!node_ || !node_->is_object())
            return nullptr;
        auto it = node_->find(key);
        return it == node_->end() ? nullptr : &*it;
    }

    const Json* mark(const std::string& key)
    {
        seen_.insert(key);
        return get(key);
    }

    std::size_t to_count(const Json& j, const std::string& where, std::size_t def, std::size_t lo,
                         std::size_t hi) const
    {
        if (!j.is_number_integer())
        {
            errors_->push_back({where, "must be an integer"});
            return def;
        }
        if (j.is_number_integer() && !j.is_number_unsigned() && j.get<long long>() < 0)
        {
            errors_->push_back({where, "must be nonnegative, got " + std::to_string(j.get<long long>())});
            return def;
        }
        auto v = j.get<std::uint64_t>();
        if (v < lo || v > hi)
        {
            errors_->push_back({where, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi)
                                           + "], got " + std::to_string(v)});
            return def;
        }
        return static_cast<std::size_t>(v);
    }

    const Json* node_;
    std::string path_;
    std::vector<ConfigError>* errors_;
    std::set<std::string> seen_;
};

constexpr std::size_t kBig = 1'000'000'000;

//---------------------------------------------------------------------------//

std::shared_ptr<const EnvironmentModel> parse_model(Reader r)
{
    const int dim = static_cast<int>(r.integer("dim", 2, 1, kMaxDim));
    StepSupport J;
    J.dim = dim;
    J.steps = r.sites("steps", dim);
    if (!r.has("steps"))
        r.fail("steps", "required");
    J.direction = r.site("direction", dim, unit(0));
    const std::string law = r.str("law", "deterministic", {"deterministic", "dirichlet", "mixture"});
    const double floor = r.real("floor", 0.0, 0.0, 1.0);

    std::vector<double> p, alpha;
    std::vector<MixtureAtom> atoms;
    if (law == "deterministic")
    {
        p = r.reals("p", {});
        if (!r.has("p"))
            r.fail("p", "required for law 'deterministic'");
    }
    else if (law == "dirichlet")
    {
        alpha = r.reals("alpha", {});
        if (!r.has("alpha"))
            r.fail("alpha", "required for law 'dirichlet'");
    }
    else
    {
        const Json* a = r.raw("atoms");
        if (!a || !a->is_array() || a->empty())
            r.fail("atoms", "required for law 'mixture' as a nonempty array");
        else
            for (std::size_t i = 0; i < a->size(); ++i)
            {
                const Json& e = (*a)[i];
                MixtureAtom atom;
                if (!e.is_object() || !e.contains("p") || !e.contains("weight") || !e["weight"].is_number())
                {
                    r.fail("atoms", "each atom needs 'p' (array) and 'weight' (number)");
                    continue;
                }
                atom.p = r.to_reals(e["p"], r.field("atoms") + "[" + std::to_string(i) + "].p");
                atom.weight = e["weight"].get<double>();
                atoms.push_back(std::move(atom));
            }
    }
    r.finish();

    try
    {
        EnvironmentModel m = law == "deterministic" ? EnvironmentModel::deterministic(J, p, floor)
                             : law == "dirichlet"   ? EnvironmentModel::dirichlet(J, alpha, floor)
                                                    : EnvironmentModel::mixture(J, atoms, floor);
        return std::make_shared<const EnvironmentModel>(std::move(m));
    }
    catch (const std::exception& e)
    {
        r.fail("", e.what());
        return nullptr;
    }
}

std::map<long long, double> parse_walk(Reader& r, const std::string& key, std::map<long long, double> def)
{
    const Json* j = r.raw(key);
    if (!j)
        return def;
    std::map<long long, double> out;
    bool ok = j->is_array() && !j->empty();
    if (ok)
        for (const auto& e : *j)
        {
            if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number())
            {
                ok = false;
                break;
            }
            out[e[0].get<long long>()] += e[1].get<double>();
        }
    if (!ok)
    {
        r.fail(key, "must be an array of [step, probability] pairs");
        return def;
    }
    try
    {
        SymmetricWalk1D check(out);
    }
    catch (const std::exception& e)
    {
        r.fail(key, e.what());
        return def;
    }
    return out;
}

std::vector<StepAtom> parse_atoms(Reader& r, const std::string& key, int dim)
{
    const Json* j = r.raw(key);
    std::vector<StepAtom> out;
    if (!j)
        return out;
    if (!j->is_array() || j->empty())
    {
        r.fail(key, "must be a nonempty array of {\"z\": [...], \"p\": ...}");
        return out;
    }
    for (std::size_t i = 0; i < j->size(); ++i)
    {
        const auto& e = (*j)[i];
        const std::string where = r.field(key) + "[" + std::to_string(i) + "]";
        if (!e.is_object() || !e.contains("z") || !e.contains("p") || !e["p"].is_number())
        {
            r.fail(key, "each entry needs 'z' (integer vector) and 'p' (number)");
            return {};
        }
        out.push_back({r.to_site(e["z"], where + ".z", dim), e["p"].get<double>()});
    }
    return out;
}

PerturbedChainSpec parse_chain(Reader r)
{
    PerturbedChainSpec spec;
    spec.dim = static_cast<int>(r.integer("dim", 2, 1, kMaxDim));
    if (r.has("base"))
        spec.base = parse_atoms(r, "base", spec.dim);
    else
    {
        auto walk = parse_walk(r, "base_walk", {{-1, 0.5}, {1, 0.5}});
        spec.base = PerturbedChainSpec::product_base(SymmetricWalk1D(walk), spec.dim);
    }
    if (r.has("base") && r.has("base_walk"))
        r.fail("base_walk", "give either 'base' or 'base_walk', not both");
    spec.alternative = parse_atoms(r, "alternative", spec.dim);
    spec.C = r.real("C", spec.C, 0.0);
    spec.p1 = r.real("p1", spec.p1, 0.0);
    {
        Reader h = r.child("h");
        const auto kind = h.str("kind", "power", {"power", "origin"});
        spec.h_kind = kind == "origin" ? PerturbedChainSpec::HKind::origin : PerturbedChainSpec::HKind::power;
        spec.C_h = h.real("C_h", spec.C_h);
        spec.p2 = h.real("p2", spec.p2);
        h.finish();
    }
    if (r.has("starts"))
        spec.starts = r.sites("starts", spec.dim);
    r.finish();
    if (spec.alternative.empty())
        spec.alternative.push_back({unit(0), 1.0});
    try
    {
        spec.validate();
    }
    catch (const std::exception& e)
    {
        r.fail("", e.what());
    }
    return spec;
}

KindParams parse_params(const std::string& kind, Reader r, const EnvironmentModel* model)
{
    const int dim = model ? model->dim() : 2;
    if (kind == "check")
    {
        r.finish();
        return CheckParams{};
    }
    if (kind == "regen")
    {
        RegenParams p;
        p.paths = r.count("paths", p.paths, 1, 100000);
        p.horizon = r.count("horizon", p.horizon, 10, 100'000'000);
        p.margin = r.integer("margin", p.margin, 1, 100000);
        p.tail_cut = r.integer("tail_cut", p.margin > p.tail_cut ? p.margin : p.tail_cut, 1, 100000);
        if (p.tail_cut < p.margin)
            r.fail("tail_cut", "must be >= margin");
        p.order = r.real("order", p.order, 0.0, 64.0);
        p.grid = r.counts("grid", p.grid, 0);
        if (r.has("redirect"))
        {
            Reader rd = r.child("redirect");
            p.redirect = rd.site("direction", dim);
            p.redirect_paths = rd.count("paths", p.redirect_paths, 1, kBig);
            p.redirect_horizon = rd.count("horizon", p.redirect_horizon, 1, kBig);
            p.redirect_burn_in = rd.count("burn_in", p.redirect_burn_in, 0, kBig);
            if (!rd.has("direction"))
                rd.fail("direction", "required");
            rd.finish();
        }
        r.finish();
        return p;
    }
    if (kind == "clt")
    {
        CltParams p;
        p.n = r.count("n", p.n, 1, kBig);
        p.environments = r.count("environments", p.environments, 2, 100000);
        p.walks = r.count("walks", p.walks, 2, kBig);
        p.alpha = r.real("alpha", p.alpha, 0.0, 1.0);
        p.v = r.reals("v", {});
        if (const Json* D = r.raw("D"); D)
        {
            if (!D->is_array())
                r.fail("D", "must be a matrix (array of rows)");
            else
                for (std::size_t i = 0; i < D->size(); ++i)
                    p.D.push_back(r.to_reals((*D)[i], r.field("D") + "[" + std::to_string(i) + "]"));
        }
        if (p.v.empty() || p.D.empty())
            r.fail("", "clt needs a velocity and diffusion estimate: run `rwre regen` on the same model "
                       "first and copy v_hat into params.v and D_hat into params.D");
        else
        {
            bool ok = p.v.size() == static_cast<std::size_t>(dim) && p.D.size() == static_cast<std::size_t>(dim);
            for (const auto& row : p.D)
                ok = ok && row.size() == static_cast<std::size_t>(dim);
            if (!ok)
                r.fail("", "params.v must have length d and params.D must be d x d");
        }
        r.finish();
        return p;
    }
    if (kind == "quenched-mean")
    {
        QuenchedMeanParams p;
        p.n_grid = r.counts("n_grid", p.n_grid);
        p.environments = r.count("environments", p.environments, 30, kBig);
        p.walks = r.count("walks", p.walks, 2, kBig);
        r.finish();
        return p;
    }
    if (kind == "intersections")
    {
        IntersectionParams p;
        p.n_grid = r.counts("n_grid", p.n_grid);
        p.replicas = r.count("replicas", p.replicas, 1, kBig);
        r.finish();
        return p;
    }
    if (kind == "joint-regen")
    {
        JointRegenParams p;
        Site def{};
        def[dim > 1 ? 1 : 0] = 4;
        p.x0 = r.site("x0", dim, def);
        p.replicas = r.count("replicas", p.replicas, 1, kBig);
        p.margin = r.integer("margin", p.margin, 1, 100000);
        p.horizon_cap = r.count("horizon_cap", p.horizon_cap, 10, kBig);
        p.tail_grid = r.counts("tail_grid", p.tail_grid, 0);
        p.chain_steps = r.count("chain_steps", p.chain_steps, 0, kBig);
        p.chains = r.count("chains", p.chains, 0, kBig);
        p.independent = r.flag("independent", p.independent);
        if (model && dot(p.x0, model->support().direction) != 0)
            r.fail("x0", "must satisfy x0·u = 0");
        r.finish();
        return p;
    }
    if (kind == "coupling")
    {
        CouplingParams p;
        p.x0 = r.sites("x0", dim);
        if (p.x0.empty())
            r.fail("x0", "required: list of start offsets with x0·u = 0");
        p.triples = r.count("triples", p.triples, 1, kBig);
        p.margin = r.integer("margin", p.margin, 1, 100000);
        p.lookahead = r.integer("lookahead", p.lookahead, 0, 100000);
        p.support_samples = r.count("support_samples", p.support_samples, 0, kBig);
        if (model)
            for (const auto& x : p.x0)
                if (dot(x, model->support().direction) != 0)
                    r.fail("x0", "every start offset must satisfy x0·u = 0");
        r.finish();
        return p;
    }
    if (kind == "ergodic")
    {
        ErgodicParams p;
        p.function = r.str("function", p.function, {"drift_dot", "constant", "indicator"});
        p.u = r.reals("u", {});
        if (!p.u.empty() && p.u.size() != static_cast<std::size_t>(dim))
            r.fail("u", "must have length d");
        p.constant = r.real("constant", p.constant);
        p.offset = r.site("offset", dim);
        p.step = r.count("step", p.step, 0, model ? model->support().size() - 1 : kMaxSteps - 1);
        p.threshold = r.real("threshold", p.threshold);
        p.checkpoints = r.counts("checkpoints", p.checkpoints);
        p.runs = r.count("runs", p.runs, 2, kBig);
        p.einf_chains = r.count("einf_chains", p.einf_chains, 0, kBig);
        p.einf_length = r.count("einf_length", p.einf_length, 1, kBig);
        p.einf_burn = r.count("einf_burn", p.einf_burn, 0, kBig);
        r.finish();
        return p;
    }
    if (kind == "variation")
    {
        VariationParams p;
        p.n = r.count("n", p.n, 1, kBig);
        p.ell_grid = r.counts("ell_grid", p.ell_grid);
        p.reps = r.count("reps", p.reps, 1000, kBig);
        r.finish();
        return p;
    }
    if (kind == "green")
    {
        GreenParams p;
        p.walk = parse_walk(r, "walk", p.walk);
        p.r0 = r.integer("r0", p.r0, -1'000'000, 1'000'000);
        p.s_max = r.integer("s_max", p.r0 + 50, p.r0 + 1, p.r0 + 100000);
        p.ladder_depth = r.count("ladder_depth", p.ladder_depth, 0, 10'000'000);
        if (const Json* pts = r.raw("mc_points"); pts)
        {
            bool ok = pts->is_array();
            if (ok)
                for (const auto& e : *pts)
                {
                    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
                    {
                        ok = false;
                        break;
                    }
                    p.mc_points.emplace_back(e[0].get<long long>(), e[1].get<long long>());
                }
            if (!ok)
                r.fail("mc_points", "must be an array of [s, t] integer pairs");
        }
        p.mc_reps = r.count("mc_reps", p.mc_reps, 10000, kBig);
        p.step_cap = r.count("step_cap", p.step_cap, 1, kBig);
        if (r.has("tail_grid"))
            p.tail_grid = r.counts("tail_grid", {});
        p.tail_mode = r.str("tail_mode", p.tail_mode, {"exact", "monte-carlo"});
        p.tail_reps = r.count("tail_reps", p.tail_reps, 1, kBig);
        if (r.has("exit_r"))
        {
            p.exit_r = r.integer("exit_r", p.r0 + 10, p.r0 + 1, p.r0 + 1'000'000);
        }
        r.finish();
        return p;
    }
    if (kind == "green-bound")
    {
        GreenBoundParams p;
        p.spec = parse_chain(r.child("chain"));
        p.n_grid = r.counts("n_grid", p.n_grid);
        p.reps = r.count("reps", p.reps, 2, kBig);
        r.finish();
        return p;
    }
    // exit-time
    ExitTimeParams p;
    p.spec = parse_chain(r.child("chain"));
    p.r_grid = r.counts("r_grid", p.r_grid, 0);
    p.reps = r.count("reps", p.reps, 2, kBig);
    r.finish();
    return p;
}

bool needs_model(const std::string& kind)
{
    return kind != "green" && kind != "green-bound" && kind != "exit-time";
}

std::pair<std::size_t, std::size_t> line_col(std::string_view text, std::size_t byte)
{
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    {
        if (text[i] == '\n')
        {
            ++line;
            col = 1;
        }
        else
            ++col;
    }
    return {line, col};
}

}  // namespace

ParseResult parse_config(std::string_view text, std::string_view kind_override)
{
    ParseResult res;
    Json root;
    try
    {
        root = Json::parse(text.begin(), text.end());
    }
    catch (const Json::parse_error& e)
    {
        auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
        std::string what = e.what();
        if (auto c = what.find("column"); c != std::string::npos)
            if (auto k = what.find(": ", c); k != std::string::npos)
                what = what.substr(k + 2);
        res.errors.push_back({"", "parse error at line " + std::to_string(line) + ", column "
                                      + std::to_string(col) + ": " + what});
        return res;
    }
    if (!root.is_object())
    {
        res.errors.push_back({"", "top level must be an object"});
        return res;
    }

    auto& errors = res.errors;
    Reader r(&root, "", errors);
    ExperimentConfig cfg;
    cfg.raw = root;

    std::string kind = r.str("kind", "");
    if (!kind_override.empty())
    {
        if (!kind.empty() && kind != kind_override)
            errors.push_back({"kind", "config says '" + kind + "' but the command asks for '"
                                          + std::string(kind_override) + "'"});
        kind = std::string(kind_override);
    }
    const auto& kinds = experiment_kinds();
    if (kind.empty())
    {
        errors.push_back({"kind", "missing; valid kinds are: " + join_kinds()});
        return res;
    }
    if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end())
    {
        errors.push_back({"kind", "unknown experiment kind '" + kind + "'; valid kinds are: " + join_kinds()});
        return res;
    }
    cfg.kind = kind;
    cfg.master_seed = r.u64("master_seed", cfg.master_seed);
    cfg.workers = static_cast<unsigned>(r.count("workers", cfg.workers, 1, 1024));
    cfg.output_dir = r.str("output_dir", "out/" + kind);

    if (needs_model(kind))
    {
        if (!r.has("model"))
            errors.push_back({"model", "required for kind '" + kind + "'"});
        else
            cfg.model = parse_model(r.child("model"));
    }
    else if (r.has("model"))
    {
        r.child("model");  // accepted and ignored
    }
    cfg.params = parse_params(kind, r.child("params"), cfg.model.get());
    r.finish();

    if (errors.empty())
        res.config = std::move(cfg);
    return res;
}

ParseResult load_config(const std::string& path, std::string_view kind_override)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
    {
        ParseResult res;
        res.errors.push_back({"", "cannot read config file '" + path + "'"});
        return res;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), kind_override);
}

}  // namespace rwre::cli
