#include "purcell/errors.hpp"
#include "purcell/fitting/fits.hpp"

#include <cmath>
#include <numbers>

namespace purcell::fit
{
double fitted_curve(const FitResult &r, double x)
{
    const auto &p = r.params;
    if (r.model_id == "fano")
    {
        const double d = x - p[2];
        const double half = 0.5 * p[3];
        const double num = half + p[1] * d;
        return p[0] * num * num / (half * half + d * d) + p[4];
    }
    if (r.model_id.rfind("lorentzian_x", 0) == 0)
    {
        double y = p[0];
        for (std::size_t i = 1; i + 2 < p.size(); i += 3)
        {
            y += p[i] * lorentzian_unit(x, p[i + 1], p[i + 2]);
        }
        return y;
    }
    if (r.model_id == "exp_decay")
    {
        return p[0] * std::exp(-(x - r.derived_value("t_peak_ns").value) / p[1]) + p[2];
    }
    if (r.model_id == "sinusoid")
    {
        return p[0] * std::cos(2.0 * std::numbers::pi * (x - p[1]) / p[2]) + p[3];
    }
    throw FitError("no curve for model '" + r.model_id + "'");
}

} // namespace purcell::fit
