#ifndef PURCELL_SOLVERS_HPP
#define PURCELL_SOLVERS_HPP

#include "purcell/model.hpp"

#include <span>
#include <utility>
#include <vector>

namespace purcell
{
struct SolverSettings
{
    double eta_dw = kDefaultEtaDw;
    double eta_min = 0.01;
    double eta_max = 0.99;
    double tol = 1e-6;        // |d eta| at termination of solve_pair
    double grid_step = 1e-3;  // coarse scan spacing
    double golden_tol = 1e-6; // consensus refinement width in eta
};

// phi(eta) for one emitter: evaluate tan(theta) from the measured ratios,
// fold to [0,90] and invert the geometry branch the emitter's device declares.
class PhiCurve
{
public:
    PhiCurve(EnhancementPair source, double eta_dw);

    const EnhancementPair &source() const { return source_; }
    double eta_dw() const { return eta_dw_; }

    // Fabrication offset (degrees) consistent with this emitter at eta_br.
    // Throws DegenerateError when the F_C numerator vanishes.
    double operator()(double eta_br) const;

    // Same, but NaN instead of throwing, and NaN where either implied Purcell
    // factor would be negative.
    double eval_or_nan(double eta_br) const;

    // Both implied Purcell factors are non-negative at eta_br.
    bool admissible(double eta_br) const;

private:
    EnhancementPair source_;
    double eta_dw_;
};

/// phi(eta) for a single pair, as plotted to find the crossing.
double phi_of_eta(const EnhancementPair &pair, double eta_dw, double eta_br);

/// Crossing of two phi(eta) curves. The bracket is scanned at grid_step to
/// find the lowest admissible sign change of phi_a - phi_b, which is then
/// refined by bisection followed by safeguarded secant steps to |d eta| < tol.
/// Throws NoIntersectionError when no sign change exists, DegenerateError
/// when the curves coincide everywhere.
PurcellSolution solve_pair(const PhiCurve &curve_a, const PhiCurve &curve_b,
                           const SolverSettings &settings = {});

/// Mean absolute pairwise difference of the curves at eta_br (NaN if any curve is undefined).
double consensus_objective(std::span<const PhiCurve> curves, double eta_br);

/// Minimizes consensus_objective: coarse grid scan then golden-section
/// refinement. Requires at least two curves.
PurcellSolution solve_consensus(std::span<const PhiCurve> curves, const SolverSettings &settings = {});

/// Dispatch used by the CLI and the uncertainty propagation: solve_pair for
/// two emitters, solve_consensus for three or more.
PurcellSolution solve_branching(std::span<const EnhancementPair> pairs, const SolverSettings &settings = {});

/// Fills the per-emitter block (theta, F, F_C, F_D) of a solution at its eta_br.
void attach_purcell_factors(PurcellSolution &solution, std::span<const EnhancementPair> pairs,
                            double eta_dw);

/// First-order uncertainty: central differences (relative step 1e-4) of the
/// full solve w.r.t. every zeta, combined in quadrature with the input sigmas.
/// Sensitivities that come out non-finite leave the sigma fields empty and add
/// a warning.
PurcellSolution propagate_uncertainty(PurcellSolution solution, std::span<const EnhancementPair> pairs,
                                      const SolverSettings &settings = {});

/// phi(eta) sampled on [eta_min, eta_max] for plotting; NaN where undefined.
std::vector<std::pair<double, double>> sample_phi_curve(const PhiCurve &curve, const SolverSettings &settings,
                                                        double step);

} // namespace purcell

#endif // PURCELL_SOLVERS_HPP
