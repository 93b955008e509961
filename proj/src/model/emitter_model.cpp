#include "purcell/model.hpp"

#include "purcell/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace purcell
{
namespace
{
constexpr double kMinBranchWeight = 1e-9;
}

void check_fraction(double value, const char *name)
{
    if (!(value > 0.0 && value < 1.0))
    {
        throw DomainError(std::string(name) + " must lie in (0, 1), got " + std::to_string(value));
    }
}

EmitterPhysics EmitterPhysics::from_fractions(double gamma0, double eta_dw, double eta_br)
{
    if (!(gamma0 > 0.0))
    {
        throw DomainError("gamma0 must be positive");
    }
    check_fraction(eta_dw, "eta_dw");
    check_fraction(eta_br, "eta_br");
    EmitterPhysics p;
    p.gamma_c = gamma0 * eta_dw * eta_br;
    p.gamma_d = gamma0 * eta_dw * (1.0 - eta_br);
    p.gamma_psb = gamma0 * (1.0 - eta_dw);
    return p;
}

void EmitterPhysics::validate() const
{
    if (!(gamma_c >= 0.0 && gamma_d >= 0.0 && gamma_psb >= 0.0))
    {
        throw DomainError("emission rates must be non-negative");
    }
    if (!(gamma0() > 0.0))
    {
        throw DomainError("total emission rate must be positive");
    }
    check_fraction(eta_dw(), "eta_dw");
    check_fraction(eta_br(), "eta_br");
}

double rate_from_lifetime(double tau_ns)
{
    if (!(tau_ns > 0.0))
    {
        throw DomainError("lifetime must be positive");
    }
    return 1.0 / tau_ns;
}

double bulk_rate(const EmitterPhysics &physics)
{
    return physics.gamma_c + physics.gamma_d + physics.gamma_psb;
}

double total_rate(const EmitterPhysics &physics, double f_c, double f_d)
{
    if (!(f_c >= 0.0 && f_d >= 0.0))
    {
        throw DomainError("Purcell factors must be non-negative");
    }
    return f_c * physics.gamma_c + f_d * physics.gamma_d + physics.gamma_psb;
}

double enhancement_ratio(double f_c, double f_d, double eta_dw, double eta_br)
{
    check_fraction(eta_dw, "eta_dw");
    check_fraction(eta_br, "eta_br");
    return f_c * eta_dw * eta_br + f_d * eta_dw * (1.0 - eta_br) + (1.0 - eta_dw);
}

PurcellFactors purcell_from_zeta(double zeta_c, double zeta_d, double eta_dw, double eta_br)
{
    check_fraction(eta_dw, "eta_dw");
    if (!(eta_br >= 0.0 && eta_br <= 1.0))
    {
        throw DomainError("eta_br must lie in [0, 1]");
    }
    const double weight_c = eta_dw * eta_br;
    const double weight_d = eta_dw * (1.0 - eta_br);
    if (weight_c < kMinBranchWeight || weight_d < kMinBranchWeight)
    {
        throw DegenerateError("branching ratio too close to 0 or 1 to separate C and D");
    }
    return {(zeta_c + weight_c - 1.0) / weight_c, (zeta_d + weight_d - 1.0) / weight_d};
}

PurcellFactors purcell_from_zeta(const EnhancementPair &pair, double eta_dw, double eta_br)
{
    return purcell_from_zeta(pair.zeta_c, pair.zeta_d, eta_dw, eta_br);
}

double tan_theta(const EnhancementPair &pair, double eta_dw, double eta_br)
{
    check_fraction(eta_dw, "eta_dw");
    check_fraction(eta_br, "eta_br");
    const double num_c = pair.zeta_c + eta_dw * eta_br - 1.0;
    if (std::abs(num_c) < kMinBranchWeight)
    {
        throw DegenerateError("F_C numerator vanishes; theta undefined");
    }
    const double num_d = pair.zeta_d + eta_dw * (1.0 - eta_br) - 1.0;
    return (num_d / num_c) * (eta_br / (1.0 - eta_br));
}

double fourier_limit_linewidth_mhz(double tau_ns)
{
    if (std::isinf(tau_ns) && tau_ns > 0.0)
    {
        return 0.0;
    }
    if (!(tau_ns > 0.0))
    {
        throw DomainError("lifetime must be positive");
    }
    // 1 / (2 pi tau[ns]) is in GHz
    return 1e3 / (2.0 * std::numbers::pi * tau_ns);
}

void check_zeta_floor(const EnhancementPair &pair, double eta_dw)
{
    check_fraction(eta_dw, "eta_dw");
    const double floor = 1.0 - eta_dw;
    if (pair.zeta_c < floor || pair.zeta_d < floor)
    {
        throw DomainError("enhancement ratio below the physical floor 1 - eta_dw = " +
                          std::to_string(floor) +
                          (pair.label.empty() ? std::string() : " (" + pair.label + ")"));
    }
}

} // namespace purcell
