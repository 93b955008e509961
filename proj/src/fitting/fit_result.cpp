#include "purcell/fitting/nlls.hpp"

#include "purcell/errors.hpp"

#include <algorithm>

namespace purcell::fit
{
std::size_t FitResult::index(const std::string &name) const
{
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end())
    {
        throw FitError("fit result has no parameter '" + name + "'");
    }
    return static_cast<std::size_t>(it - names.begin());
}

double FitResult::value(const std::string &name) const
{
    return params[index(name)];
}

double FitResult::error(const std::string &name) const
{
    return sigma[index(name)];
}

const NamedValue &FitResult::derived_value(const std::string &name) const
{
    const auto it = std::find_if(derived.begin(), derived.end(), [&](const NamedValue &v) { return v.name == name; });
    if (it == derived.end())
    {
        throw FitError("fit result has no derived value '" + name + "'");
    }
    return *it;
}

void FitResult::set_derived(std::string name, double value, double sigma_value)
{
    const auto it = std::find_if(derived.begin(), derived.end(), [&](const NamedValue &v) { return v.name == name; });
    if (it != derived.end())
    {
        it->value = value;
        it->sigma = sigma_value;
        return;
    }
    derived.push_back({std::move(name), value, sigma_value});
}

} // namespace purcell::fit
