#include "purcell/solvers.hpp"

#include "purcell/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace purcell
{
namespace
{
constexpr double kRadToDeg = 180.0 / std::numbers::pi;
}

PhiCurve::PhiCurve(EnhancementPair source, double eta_dw) : source_(std::move(source)), eta_dw_(eta_dw)
{
    check_fraction(eta_dw_, "eta_dw");
    source_.geometry.validate();
}

double PhiCurve::operator()(double eta_br) const
{
    const double t = tan_theta(source_, eta_dw_, eta_br);
    const double theta = std::atan(std::abs(t)) * kRadToDeg;
    return phi_from_theta(source_.geometry, theta);
}

bool PhiCurve::admissible(double eta_br) const
{
    if (!(eta_br > 0.0 && eta_br < 1.0))
    {
        return false;
    }
    const double num_c = source_.zeta_c + eta_dw_ * eta_br - 1.0;
    const double num_d = source_.zeta_d + eta_dw_ * (1.0 - eta_br) - 1.0;
    return num_c > 0.0 && num_d >= 0.0;
}

double PhiCurve::eval_or_nan(double eta_br) const
{
    if (!admissible(eta_br))
    {
        return std::numeric_limits<double>::quiet_NaN();
    }
    try
    {
        return (*this)(eta_br);
    }
    catch (const DegenerateError &)
    {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

double phi_of_eta(const EnhancementPair &pair, double eta_dw, double eta_br)
{
    return PhiCurve(pair, eta_dw)(eta_br);
}

std::vector<std::pair<double, double>> sample_phi_curve(const PhiCurve &curve, const SolverSettings &settings,
                                                        double step)
{
    std::vector<std::pair<double, double>> out;
    const auto n = static_cast<std::size_t>(std::floor((settings.eta_max - settings.eta_min) / step + 1e-9));
    out.reserve(n + 1);
    for (std::size_t i = 0; i <= n; ++i)
    {
        const double eta = settings.eta_min + static_cast<double>(i) * step;
        out.emplace_back(eta, curve.eval_or_nan(eta));
    }
    return out;
}

} // namespace purcell
