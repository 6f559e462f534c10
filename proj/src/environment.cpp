#include "rwre/environment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include <Eigen/Dense>

#include "rwre/rng.hpp"

namespace rwre
{
namespace
{
constexpr double kSumTol = 1e-9;
constexpr std::uint64_t kAtomTag = 0x61746f6d5f706963ull;

void check_probability_vector(std::span<const double> p, std::size_t n, const char* what)
{
    if (p.size() != n)
        throw std::invalid_argument(std::string(what) + ": expected "
                                    + std::to_string(n) + " entries, got "
                                    + std::to_string(p.size()));
    double sum = 0;
    for (double x : p)
    {
        if (!(x >= 0.0) || !std::isfinite(x))
            throw std::invalid_argument(std::string(what) + ": negative or non-finite entry");
        sum += x;
    }
    if (std::abs(sum - 1.0) > kSumTol)
        throw std::invalid_argument(std::string(what) + ": entries sum to "
                                    + std::to_string(sum) + ", not 1");
}
}  // namespace

std::string_view to_string(LawKind kind)
{
    switch (kind)
    {
        case LawKind::deterministic:
            return "deterministic";
        case LawKind::dirichlet:
            return "dirichlet";
        case LawKind::discrete_mixture:
            return "discrete_mixture";
    }
    return "unknown";
}

//---------------------------------------------------------------------------//
// StepSupport
//---------------------------------------------------------------------------//

double StepSupport::step_bound() const
{
    double m = 0;
    for (const auto& z : steps)
        m = std::max(m, norm(z));
    return m;
}

void StepSupport::validate() const
{
    if (dim < 1 || dim > kMaxDim)
        throw std::invalid_argument("dimension must be in 1.." + std::to_string(kMaxDim));
    if (steps.empty())
        throw std::invalid_argument("step set J is empty");
    if (steps.size() > kMaxSteps)
        throw std::invalid_argument("step set J has more than " + std::to_string(kMaxSteps)
                                    + " elements");
    std::set<Site> seen;
    for (const auto& z : steps)
    {
        for (int i = dim; i < kMaxDim; ++i)
            if (z[i] != 0)
                throw std::invalid_argument("step has coordinates beyond the dimension");
        if (!seen.insert(z).second)
            throw std::invalid_argument("duplicate step " + to_string(z, dim));
    }
    for (int i = dim; i < kMaxDim; ++i)
        if (direction[i] != 0)
            throw std::invalid_argument("direction has coordinates beyond the dimension");
    if (is_zero(direction))
        throw std::invalid_argument("direction must be nonzero");
    bool forward = std::any_of(steps.begin(), steps.end(),
                               [&](const Site& z) { return dot(z, direction) > 0; });
    if (!forward)
        throw std::invalid_argument("no step has positive projection on the direction");
}

//---------------------------------------------------------------------------//
// EnvironmentModel
//---------------------------------------------------------------------------//

EnvironmentModel
EnvironmentModel::deterministic(StepSupport support, std::vector<double> p, double floor)
{
    support.validate();
    check_probability_vector(p, support.size(), "deterministic p");
    EnvironmentModel m;
    m.support_ = std::move(support);
    m.kind_ = LawKind::deterministic;
    m.floor_ = floor;
    m.params_ = std::move(p);
    m.finish();
    return m;
}

EnvironmentModel
EnvironmentModel::dirichlet(StepSupport support, std::vector<double> alpha, double floor)
{
    support.validate();
    if (alpha.size() != support.size())
        throw std::invalid_argument("dirichlet alpha: expected one weight per step");
    for (double a : alpha)
        if (!(a > 0.0) || !std::isfinite(a))
            throw std::invalid_argument("dirichlet alpha: weights must be positive");
    EnvironmentModel m;
    m.support_ = std::move(support);
    m.kind_ = LawKind::dirichlet;
    m.floor_ = floor;
    m.params_ = std::move(alpha);
    m.finish();
    return m;
}

EnvironmentModel
EnvironmentModel::mixture(StepSupport support, std::vector<MixtureAtom> atoms, double floor)
{
    support.validate();
    if (atoms.empty())
        throw std::invalid_argument("mixture needs at least one atom");
    double wsum = 0;
    for (const auto& a : atoms)
    {
        check_probability_vector(a.p, support.size(), "mixture atom");
        if (!(a.weight >= 0.0))
            throw std::invalid_argument("mixture weights must be nonnegative");
        wsum += a.weight;
    }
    if (std::abs(wsum - 1.0) > kSumTol)
        throw std::invalid_argument("mixture weights must sum to 1");
    EnvironmentModel m;
    m.support_ = std::move(support);
    m.kind_ = LawKind::discrete_mixture;
    m.floor_ = floor;
    m.atoms_ = std::move(atoms);
    m.finish();
    return m;
}

void EnvironmentModel::finish()
{
    const std::size_t n = support_.size();
    if (!(floor_ >= 0.0) || floor_ * static_cast<double>(n) > 1.0)
        throw std::invalid_argument("ellipticity floor must satisfy 0 <= floor * |J| <= 1");

    std::vector<double> raw(n, 0.0);
    switch (kind_)
    {
        case LawKind::deterministic:
            raw = params_;
            break;
        case LawKind::dirichlet: {
            double total = std::accumulate(params_.begin(), params_.end(), 0.0);
            for (std::size_t i = 0; i < n; ++i)
                raw[i] = params_[i] / total;
            break;
        }
        case LawKind::discrete_mixture:
            atom_cdf_.clear();
            for (const auto& a : atoms_)
            {
                for (std::size_t i = 0; i < n; ++i)
                    raw[i] += a.weight * a.p[i];
                atom_cdf_.push_back((atom_cdf_.empty() ? 0.0 : atom_cdf_.back()) + a.weight);
            }
            break;
    }
    mean_.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        mean_[i] = (1.0 - floor_ * static_cast<double>(n)) * raw[i] + floor_;
    for (std::size_t i = 0; i < n; ++i)
        if (!(mean_[i] > 0.0))
            throw std::invalid_argument("step " + to_string(support_.steps[i], support_.dim)
                                        + " has zero mean probability; drop it from J");

    if (kind_ == LawKind::deterministic)
    {
        fixed_.size = n;
        for (std::size_t i = 0; i < n; ++i)
            fixed_.p[i] = mean_[i];
    }
}

void EnvironmentModel::apply_floor(SiteVector& v) const
{
    if (floor_ == 0.0)
        return;
    const double scale = 1.0 - floor_ * static_cast<double>(v.size);
    for (std::size_t i = 0; i < v.size; ++i)
        v.p[i] = scale * v.p[i] + floor_;
}

std::vector<double> EnvironmentModel::mean_drift() const
{
    std::vector<double> drift(support_.dim, 0.0);
    for (std::size_t i = 0; i < support_.size(); ++i)
        for (int k = 0; k < support_.dim; ++k)
            drift[k] += mean_[i] * support_.steps[i][k];
    return drift;
}

std::vector<std::vector<double>> EnvironmentModel::extreme_vectors() const
{
    const std::size_t n = support_.size();
    std::vector<std::vector<double>> raw;
    switch (kind_)
    {
        case LawKind::deterministic:
            raw.push_back(params_);
            break;
        case LawKind::dirichlet:
            for (std::size_t i = 0; i < n; ++i)
            {
                std::vector<double> e(n, 0.0);
                e[i] = 1.0;
                raw.push_back(std::move(e));
            }
            break;
        case LawKind::discrete_mixture:
            for (const auto& a : atoms_)
                if (a.weight > 0.0)
                    raw.push_back(a.p);
            break;
    }
    const double scale = 1.0 - floor_ * static_cast<double>(n);
    for (auto& v : raw)
        for (auto& x : v)
            x = scale * x + floor_;
    return raw;
}

SiteVector EnvironmentModel::draw(std::uint64_t site_key) const
{
    const std::size_t n = support_.size();
    SiteVector v;
    v.size = n;
    switch (kind_)
    {
        case LawKind::deterministic:
            return fixed_;
        case LawKind::dirichlet: {
            double total = 0;
            for (std::size_t i = 0; i < n; ++i)
            {
                SplitMix64 stream(fold(site_key, i));
                v.p[i] = sample_gamma(stream, params_[i]);
                total += v.p[i];
            }
            for (std::size_t i = 0; i < n; ++i)
                v.p[i] /= total;
            break;
        }
        case LawKind::discrete_mixture: {
            double u = to_unit(fold(site_key, kAtomTag));
            std::size_t a = 0;
            while (a + 1 < atom_cdf_.size() && !(u < atom_cdf_[a]))
                ++a;
            for (std::size_t i = 0; i < n; ++i)
                v.p[i] = atoms_[a].p[i];
            break;
        }
    }
    apply_floor(v);
    return v;
}

EnvironmentModel EnvironmentModel::with_direction(const Site& direction) const
{
    EnvironmentModel m = *this;
    m.support_.direction = direction;
    m.support_.validate();
    return m;
}

//---------------------------------------------------------------------------//
// Environment
//---------------------------------------------------------------------------//

Environment::Environment(std::shared_ptr<const EnvironmentModel> model, std::uint64_t seed)
    : model_(std::move(model))
    , seed_(seed)
    , homogeneous_(model_->kind() == LawKind::deterministic)
{
}

SiteVector Environment::site_vector(const Site& x) const
{
    if (homogeneous_)
        return model_->draw(0);
    return model_->draw(fold_site(mix64(seed_), x));
}

std::size_t inverse_cdf(std::span<const double> p, double u)
{
    double acc = 0;
    const std::size_t last = p.size() - 1;
    for (std::size_t i = 0; i < last; ++i)
    {
        acc += p[i];
        if (u < acc)
            return i;
    }
    return last;
}

std::size_t Environment::sample_step(const Site& x, double u) const
{
    SiteVector v = site_vector(x);
    return inverse_cdf(v.values(), u);
}

//---------------------------------------------------------------------------//
// Hypotheses
//---------------------------------------------------------------------------//

Level compute_h(const StepSupport& support)
{
    Level g = 0;
    for (const auto& z : support.steps)
        g = std::gcd(g, std::abs(dot(z, support.direction)));
    if (g == 0)
        throw std::invalid_argument("every step is orthogonal to the direction");
    return g;
}

int span_rank(std::span<const Site> vectors, int dim)
{
    if (vectors.empty())
        return 0;
    Eigen::MatrixXd m(dim, static_cast<Eigen::Index>(vectors.size()));
    for (std::size_t j = 0; j < vectors.size(); ++j)
        for (int i = 0; i < dim; ++i)
            m(i, static_cast<Eigen::Index>(j)) = vectors[j][i];
    Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
    lu.setThreshold(1e-9);
    return static_cast<int>(lu.rank());
}

HypothesisReport check_hypotheses(const EnvironmentModel& model)
{
    const StepSupport& J = model.support();
    const std::size_t n = J.size();
    HypothesisReport r;
    r.bounded_steps = true;
    r.step_bound = J.step_bound();
    r.gcd_h = compute_h(J);

    const auto vertices = model.extreme_vectors();

    // drift·û is linear in the site vector, so its infimum over the law is
    // attained at an extreme point.
    NonNestling nn;
    nn.delta = std::numeric_limits<double>::infinity();
    for (const auto& v : vertices)
    {
        double drift = 0;
        for (std::size_t i = 0; i < n; ++i)
            drift += v[i] * static_cast<double>(dot(J.steps[i], J.direction));
        nn.delta = std::min(nn.delta, drift);
    }
    nn.holds = nn.delta > 0.0;
    r.non_nestling = nn;

    // Uniform ellipticity is defined for nearest-neighbor supports.
    bool nearest = std::all_of(J.steps.begin(), J.steps.end(), [](const Site& z) {
        int nz = 0;
        for (auto c : z)
            nz += std::abs(c);
        return nz <= 1;
    });
    if (nearest)
    {
        UniformEllipticity ue;
        bool all_units = true;
        ue.kappa = std::numeric_limits<double>::infinity();
        for (int axis = 0; axis < J.dim; ++axis)
        {
            for (int sign : {1, -1})
            {
                Site e{};
                e[axis] = sign;
                auto it = std::find(J.steps.begin(), J.steps.end(), e);
                if (it == J.steps.end())
                {
                    all_units = false;
                    continue;
                }
                auto idx = static_cast<std::size_t>(it - J.steps.begin());
                for (const auto& v : vertices)
                    ue.kappa = std::min(ue.kappa, v[idx]);
            }
        }
        if (!all_units)
            ue.kappa = 0;
        ue.holds = all_units && ue.kappa > 0.0;
        r.uniform_ellipticity = ue;
    }

    r.span_rank = span_rank(J.steps, J.dim);
    r.r_span = r.span_rank >= 2;

    // The event {∃z: π00 + π0z = 1} has full probability only when every
    // realizable vector puts all its mass on {0, z} for a single z.
    auto concentrated = [&](const std::vector<double>& v) {
        std::size_t outside_zero = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (!is_zero(J.steps[i]) && v[i] > 0.0)
                ++outside_zero;
        return outside_zero <= 1;
    };
    switch (model.kind())
    {
        case LawKind::deterministic:
        case LawKind::discrete_mixture:
            r.r_restricted_path = !std::all_of(vertices.begin(), vertices.end(), concentrated);
            break;
        case LawKind::dirichlet: {
            // Dirichlet vectors have every entry positive almost surely.
            std::size_t nonzero_steps = std::count_if(
                J.steps.begin(), J.steps.end(), [](const Site& z) { return !is_zero(z); });
            r.r_restricted_path = nonzero_steps >= 2;
            break;
        }
    }

    r.notes = "Hypothesis (T) on the regeneration time is not statically decidable; "
              "probe it with the regen renewal diagnostics.";
    if (!nn.holds && model.kind() == LawKind::dirichlet && model.floor() == 0.0)
        r.notes += " Dirichlet law without an ellipticity floor reaches the simplex vertices,"
                   " so drift·û has infimum " + std::to_string(nn.delta) + ".";
    return r;
}

}  // namespace rwre
