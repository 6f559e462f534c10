#include "rwre/lattice.hpp"

#include <sstream>
#include <stdexcept>

namespace rwre
{

Site make_site(std::span<const long long> values)
{
    if (values.size() > static_cast<std::size_t>(kMaxDim))
        throw std::invalid_argument("site has more than " + std::to_string(kMaxDim)
                                    + " coordinates");
    Site s{};
    for (std::size_t i = 0; i < values.size(); ++i)
        s[i] = static_cast<Coord>(values[i]);
    return s;
}

Site make_site(std::initializer_list<long long> values)
{
    return make_site(std::span<const long long>(values.begin(), values.size()));
}

Site unit(int axis)
{
    if (axis < 0 || axis >= kMaxDim)
        throw std::invalid_argument("axis out of range");
    Site s{};
    s[axis] = 1;
    return s;
}

std::string to_string(const Site& s, int dim)
{
    std::ostringstream os;
    os << '(';
    for (int i = 0; i < dim; ++i)
    {
        if (i)
            os << ',';
        os << s[i];
    }
    os << ')';
    return os.str();
}

}  // namespace rwre
