#include "purcell/solvers.hpp"

#include "purcell/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace purcell
{
namespace
{
constexpr double kInvPhi = 0.6180339887498949; // 1 / golden ratio

double objective_or_inf(std::span<const PhiCurve> curves, double eta)
{
    const double v = consensus_objective(curves, eta);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}
} // namespace

double consensus_objective(std::span<const PhiCurve> curves, double eta_br)
{
    std::vector<double> phi(curves.size());
    for (std::size_t i = 0; i < curves.size(); ++i)
    {
        phi[i] = curves[i].eval_or_nan(eta_br);
        if (!std::isfinite(phi[i]))
        {
            return std::numeric_limits<double>::quiet_NaN();
        }
    }
    double sum = 0.0;
    std::size_t n_pairs = 0;
    for (std::size_t i = 0; i < phi.size(); ++i)
    {
        for (std::size_t j = i + 1; j < phi.size(); ++j)
        {
            sum += std::abs(phi[i] - phi[j]);
            ++n_pairs;
        }
    }
    return sum / static_cast<double>(n_pairs);
}

PurcellSolution solve_consensus(std::span<const PhiCurve> curves, const SolverSettings &settings)
{
    if (curves.size() < 2)
    {
        throw DomainError("consensus solve needs at least two curves");
    }
    if (!(settings.eta_min > 0.0 && settings.eta_max < 1.0 && settings.eta_min < settings.eta_max) ||
        !(settings.grid_step > 0.0) || !(settings.golden_tol > 0.0))
    {
        throw DomainError("invalid consensus solver settings");
    }

    const auto n = static_cast<std::size_t>(std::ceil((settings.eta_max - settings.eta_min) / settings.grid_step));
    double best_eta = std::numeric_limits<double>::quiet_NaN();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i <= n; ++i)
    {
        const double eta = std::min(settings.eta_min + static_cast<double>(i) * settings.grid_step, settings.eta_max);
        const double v = objective_or_inf(curves, eta);
        if (v < best)
        {
            best = v;
            best_eta = eta;
        }
    }
    if (!std::isfinite(best))
    {
        throw DomainError("consensus objective is undefined across the whole bracket");
    }

    double a = std::max(settings.eta_min, best_eta - settings.grid_step);
    double b = std::min(settings.eta_max, best_eta + settings.grid_step);
    double c = b - kInvPhi * (b - a);
    double d = a + kInvPhi * (b - a);
    double fc = objective_or_inf(curves, c);
    double fd = objective_or_inf(curves, d);
    while (b - a > settings.golden_tol)
    {
        if (fc < fd)
        {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = objective_or_inf(curves, c);
        }
        else
        {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = objective_or_inf(curves, d);
        }
    }
    double eta = 0.5 * (a + b);
    double value = objective_or_inf(curves, eta);
    // Keep the grid point if the refinement wandered onto an undefined stretch.
    if (!(value <= best))
    {
        eta = best_eta;
        value = best;
    }

    PurcellSolution solution;
    solution.eta_br = eta;
    solution.residual = value;
    double phi_sum = 0.0;
    std::vector<EnhancementPair> pairs;
    pairs.reserve(curves.size());
    for (const auto &curve : curves)
    {
        phi_sum += curve(eta);
        pairs.push_back(curve.source());
    }
    solution.phi_deg = phi_sum / static_cast<double>(curves.size());
    attach_purcell_factors(solution, pairs, curves.front().eta_dw());
    return solution;
}

} // namespace purcell
