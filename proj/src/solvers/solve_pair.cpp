#include "purcell/solvers.hpp"

#include "purcell/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>

namespace purcell
{
namespace
{
constexpr double kRadToDeg = 180.0 / std::numbers::pi;
constexpr double kCoincidentDeg = 1e-9;
constexpr int kBisectionSteps = 8;
constexpr int kMaxSecantSteps = 100;

std::vector<double> eta_grid(const SolverSettings &settings)
{
    if (!(settings.eta_min > 0.0 && settings.eta_max < 1.0 && settings.eta_min < settings.eta_max))
    {
        throw DomainError("eta bracket must satisfy 0 < eta_min < eta_max < 1");
    }
    if (!(settings.grid_step > 0.0) || !(settings.tol > 0.0))
    {
        throw DomainError("grid step and tolerance must be positive");
    }
    const auto n = static_cast<std::size_t>(std::ceil((settings.eta_max - settings.eta_min) / settings.grid_step));
    std::vector<double> grid(n + 1);
    for (std::size_t i = 0; i <= n; ++i)
    {
        grid[i] = std::min(settings.eta_min + static_cast<double>(i) * settings.grid_step, settings.eta_max);
    }
    return grid;
}

double refine_root(const auto &diff, double lo, double hi, double f_lo, double tol)
{
    for (int i = 0; i < kBisectionSteps && hi - lo > tol; ++i)
    {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = diff(mid);
        if (f_mid == 0.0)
        {
            return mid;
        }
        if ((f_mid < 0.0) == (f_lo < 0.0))
        {
            lo = mid;
            f_lo = f_mid;
        }
        else
        {
            hi = mid;
        }
    }

    // Secant from the current bracket ends, falling back to bisection whenever
    // the step would leave the bracket.
    double f_hi = diff(hi);
    double x0 = lo, f0 = f_lo;
    double x1 = hi, f1 = f_hi;
    for (int i = 0; i < kMaxSecantSteps; ++i)
    {
        double x2 = (f1 != f0) ? x1 - f1 * (x1 - x0) / (f1 - f0) : 0.5 * (lo + hi);
        if (!(x2 > lo && x2 < hi))
        {
            x2 = 0.5 * (lo + hi);
        }
        const double f2 = diff(x2);
        if (f2 == 0.0)
        {
            return x2;
        }
        if ((f2 < 0.0) == (f_lo < 0.0))
        {
            lo = x2;
            f_lo = f2;
        }
        else
        {
            hi = x2;
        }
        const double step = std::abs(x2 - x1);
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = f2;
        if (step < tol || hi - lo < tol)
        {
            return x2;
        }
    }
    return x1;
}
} // namespace

void attach_purcell_factors(PurcellSolution &solution, std::span<const EnhancementPair> pairs, double eta_dw)
{
    solution.per_emitter.clear();
    for (const auto &pair : pairs)
    {
        const PurcellFactors f = purcell_from_zeta(pair, eta_dw, solution.eta_br);
        EmitterSolution e;
        e.label = pair.label;
        e.f_c = f.f_c;
        e.f_d = f.f_d;
        e.f_total = std::hypot(f.f_c, f.f_d);
        e.theta_deg = std::atan2(f.f_d, f.f_c) * kRadToDeg;
        if (f.f_c < 0.0 || f.f_d < 0.0)
        {
            solution.warnings.push_back("negative Purcell factor for emitter '" + pair.label + "'");
        }
        solution.per_emitter.push_back(std::move(e));
    }
}

PurcellSolution solve_pair(const PhiCurve &curve_a, const PhiCurve &curve_b, const SolverSettings &settings)
{
    const std::vector<double> grid = eta_grid(settings);
    auto diff = [&](double eta) { return curve_a.eval_or_nan(eta) - curve_b.eval_or_nan(eta); };

    std::vector<double> d(grid.size());
    bool any_finite = false;
    bool all_coincident = true;
    for (std::size_t i = 0; i < grid.size(); ++i)
    {
        d[i] = diff(grid[i]);
        if (std::isfinite(d[i]))
        {
            any_finite = true;
            all_coincident = all_coincident && std::abs(d[i]) < kCoincidentDeg;
        }
    }
    if (!any_finite)
    {
        throw NoIntersectionError("phi curves are undefined across the whole bracket",
                                  std::numeric_limits<double>::quiet_NaN(),
                                  std::numeric_limits<double>::quiet_NaN());
    }
    if (all_coincident)
    {
        throw DegenerateError("phi curves coincide across the bracket; crossing is not unique");
    }

    std::optional<double> root;
    for (std::size_t i = 0; i < grid.size() && !root; ++i)
    {
        if (d[i] == 0.0)
        {
            root = grid[i];
        }
        else if (i + 1 < grid.size() && std::isfinite(d[i]) && std::isfinite(d[i + 1]) &&
                 (d[i] < 0.0) != (d[i + 1] < 0.0))
        {
            root = refine_root(diff, grid[i], grid[i + 1], d[i], settings.tol);
        }
    }
    if (!root)
    {
        double lo_val = std::numeric_limits<double>::quiet_NaN();
        double hi_val = lo_val;
        for (double v : d)
        {
            if (std::isfinite(v))
            {
                hi_val = v;
                if (std::isnan(lo_val))
                {
                    lo_val = v;
                }
            }
        }
        std::ostringstream msg;
        msg << "phi curves do not cross on [" << settings.eta_min << ", " << settings.eta_max
            << "]: phi_a - phi_b = " << lo_val << " deg at the low end, " << hi_val << " deg at the high end";
        throw NoIntersectionError(msg.str(), lo_val, hi_val);
    }

    PurcellSolution solution;
    solution.eta_br = *root;
    const double phi_a = curve_a(*root);
    const double phi_b = curve_b(*root);
    solution.phi_deg = 0.5 * (phi_a + phi_b);
    solution.residual = std::abs(phi_a - phi_b);
    const EnhancementPair pairs[] = {curve_a.source(), curve_b.source()};
    attach_purcell_factors(solution, pairs, curve_a.eta_dw());
    return solution;
}

PurcellSolution solve_branching(std::span<const EnhancementPair> pairs, const SolverSettings &settings)
{
    if (pairs.size() < 2)
    {
        throw DomainError("at least two emitters are needed to separate eta_br and phi");
    }
    std::vector<PhiCurve> curves;
    curves.reserve(pairs.size());
    for (const auto &p : pairs)
    {
        curves.emplace_back(p, settings.eta_dw);
    }
    if (curves.size() == 2)
    {
        return solve_pair(curves[0], curves[1], settings);
    }
    return solve_consensus(curves, settings);
}

} // namespace purcell
