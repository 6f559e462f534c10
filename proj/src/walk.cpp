#include "rwre/walk.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace rwre
{

WalkPath::WalkPath(int dim_, const Site& direction_, const Site& start) : dim(dim_), direction(direction_)
{
    Level l = dot(start, direction);
    sites.push_back(start);
    levels.push_back(l);
    running_max.push_back(l);
}

void WalkPath::push(const Site& x)
{
    Level l = dot(x, direction);
    sites.push_back(x);
    levels.push_back(l);
    running_max.push_back(std::max(running_max.back(), l));
}

void WalkPath::truncate(std::size_t count)
{
    if (count == 0 || count > sites.size())
        throw std::invalid_argument("truncate: count out of range");
    sites.resize(count);
    levels.resize(count);
    running_max.resize(count);
}

LazyPath::LazyPath(int dim, const Site& direction, const Site& start, Stepper stepper)
    : path_(dim, direction, start), stepper_(std::move(stepper))
{
}

void LazyPath::extend_to(std::size_t count)
{
    if (count <= path_.size())
        return;
    path_.sites.reserve(count);
    path_.levels.reserve(count);
    path_.running_max.reserve(count);
    while (path_.size() < count)
        path_.push(stepper_(path_.sites.back()));
}

std::optional<std::size_t>
LazyPath::first_at_or_above(Level target, std::size_t from, std::size_t cap)
{
    for (std::size_t k = from; k < cap; ++k)
    {
        extend_to(k + 1);
        if (path_.levels[k] >= target)
            return k;
    }
    return std::nullopt;
}

void LazyPath::restart_from(std::size_t count, Stepper stepper)
{
    path_.truncate(count);
    stepper_ = std::move(stepper);
}

WalkPath simulate(const Environment& env, const Site& start, std::size_t n, WalkSeed seed)
{
    const auto& J = env.support();
    WalkPath path(J.dim, J.direction, start);
    path.sites.reserve(n + 1);
    path.levels.reserve(n + 1);
    path.running_max.reserve(n + 1);
    QuenchedStepper step(env, seed);
    for (std::size_t k = 0; k < n; ++k)
        path.push(step(path.sites.back()));
    return path;
}

std::optional<std::size_t> first_passage(const WalkPath& path, Level level)
{
    // running_max is nondecreasing, so γ_ℓ is a lower bound search on it.
    auto it = std::lower_bound(path.running_max.begin(), path.running_max.end(), level);
    if (it == path.running_max.end())
        return std::nullopt;
    return static_cast<std::size_t>(it - path.running_max.begin());
}

std::vector<std::vector<double>> diffusive_scale(const WalkPath& path,
                                                 std::span<const double> velocity,
                                                 double n,
                                                 std::span<const double> t_grid)
{
    if (!(n > 0))
        throw std::invalid_argument("diffusive_scale: scale n must be positive");
    if (velocity.size() != static_cast<std::size_t>(path.dim))
        throw std::invalid_argument("diffusive_scale: velocity dimension mismatch");
    std::vector<std::vector<double>> out;
    out.reserve(t_grid.size());
    const double root = std::sqrt(n);
    for (double t : t_grid)
    {
        if (t < 0)
            throw std::invalid_argument("diffusive_scale: negative time");
        auto k = static_cast<std::size_t>(std::floor(n * t));
        if (k >= path.size())
            throw std::invalid_argument("diffusive_scale: path has " + std::to_string(path.steps())
                                        + " steps, needs " + std::to_string(k));
        std::vector<double> b(path.dim);
        for (int i = 0; i < path.dim; ++i)
            b[i] = (static_cast<double>(path.sites[k][i] - path.sites[0][i])
                    - static_cast<double>(k) * velocity[i])
                   / root;
        out.push_back(std::move(b));
    }
    return out;
}

void write_path_csv(std::ostream& os, const WalkPath& path)
{
    os << 'k';
    for (int i = 1; i <= path.dim; ++i)
        os << ",x_" << i;
    os << ",level\n";
    for (std::size_t k = 0; k < path.size(); ++k)
    {
        os << k;
        for (int i = 0; i < path.dim; ++i)
            os << ',' << path.sites[k][i];
        os << ',' << path.levels[k] << '\n';
    }
}

}  // namespace rwre
