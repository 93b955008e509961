#include "purcell/solvers.hpp"

#include <cmath>
#include <exception>
#include <vector>

namespace purcell
{
namespace
{
constexpr double kRelativeStep = 1e-4;

// Flattened outputs of one solve: eta, phi, then (f_c, f_d) per emitter.
std::vector<double> solve_outputs(std::span<const EnhancementPair> pairs, const SolverSettings &settings)
{
    const PurcellSolution s = solve_branching(pairs, settings);
    std::vector<double> out{s.eta_br, s.phi_deg};
    for (const auto &e : s.per_emitter)
    {
        out.push_back(e.f_c);
        out.push_back(e.f_d);
    }
    return out;
}
} // namespace

PurcellSolution propagate_uncertainty(PurcellSolution solution, std::span<const EnhancementPair> pairs,
                                      const SolverSettings &settings)
{
    const std::size_t n_out = 2 + 2 * pairs.size();
    std::vector<double> variance(n_out, 0.0);
    bool singular = false;

    std::vector<EnhancementPair> work(pairs.begin(), pairs.end());
    for (std::size_t j = 0; j < work.size() && !singular; ++j)
    {
        for (int component = 0; component < 2 && !singular; ++component)
        {
            double &zeta = component == 0 ? work[j].zeta_c : work[j].zeta_d;
            const double sigma = component == 0 ? pairs[j].sigma_zeta_c : pairs[j].sigma_zeta_d;
            if (sigma == 0.0)
            {
                continue;
            }
            const double z0 = zeta;
            const double h = kRelativeStep * std::max(std::abs(z0), 1e-12);
            try
            {
                zeta = z0 + h;
                const auto plus = solve_outputs(work, settings);
                zeta = z0 - h;
                const auto minus = solve_outputs(work, settings);
                zeta = z0;
                for (std::size_t k = 0; k < n_out; ++k)
                {
                    const double derivative = (plus[k] - minus[k]) / (2.0 * h);
                    if (!std::isfinite(derivative))
                    {
                        singular = true;
                    }
                    variance[k] += derivative * derivative * sigma * sigma;
                }
            }
            catch (const std::exception &e)
            {
                zeta = z0;
                singular = true;
                solution.warnings.push_back(std::string("sensitivity solve failed: ") + e.what());
            }
        }
    }

    if (singular)
    {
        solution.warnings.push_back("singular sensitivity; uncertainties omitted");
        solution.sigma_eta_br.reset();
        solution.sigma_phi_deg.reset();
        for (auto &e : solution.per_emitter)
        {
            e.sigma_f_c.reset();
            e.sigma_f_d.reset();
        }
        return solution;
    }

    solution.sigma_eta_br = std::sqrt(variance[0]);
    solution.sigma_phi_deg = std::sqrt(variance[1]);
    for (std::size_t j = 0; j < solution.per_emitter.size() && 2 + 2 * j + 1 < n_out; ++j)
    {
        solution.per_emitter[j].sigma_f_c = std::sqrt(variance[2 + 2 * j]);
        solution.per_emitter[j].sigma_f_d = std::sqrt(variance[3 + 2 * j]);
    }
    return solution;
}

} // namespace purcell
