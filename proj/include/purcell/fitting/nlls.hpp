#ifndef PURCELL_FITTING_NLLS_HPP
#define PURCELL_FITTING_NLLS_HPP

#include <Eigen/Dense>

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace purcell::fit
{
// y = f(x; p). Must be deterministic and side-effect free; fits may run concurrently.
using ModelFunction = std::function<double(double x, std::span<const double> params)>;

struct Model
{
    std::string id;
    std::vector<std::string> param_names;
    ModelFunction eval;
};

struct Bounds
{
    std::vector<double> lower;
    std::vector<double> upper;

    static Bounds unbounded(std::size_t n)
    {
        return {std::vector<double>(n, -std::numeric_limits<double>::infinity()),
                std::vector<double>(n, std::numeric_limits<double>::infinity())};
    }
};

struct FitData
{
    std::span<const double> x;
    std::span<const double> y;
    std::span<const double> sigma; // empty: unit weights and covariance rescaled by reduced chi2
};

struct NllsOptions
{
    int max_iterations = 200;
    double rel_chi2_tol = 1e-10;
    double step_tol = 1e-12;
    double jacobian_rel_step = 1e-6;
    // Per-parameter magnitude below which the finite-difference step stops
    // shrinking with |p|. Empty: derived from the initial values.
    std::vector<double> param_scale;
};

struct NamedValue
{
    std::string name;
    double value = 0.0;
    double sigma = 0.0;
};

struct FitResult
{
    std::string model_id;
    std::vector<std::string> names;
    std::vector<double> params;
    std::vector<double> sigma;
    Eigen::MatrixXd covariance;
    double chi2 = 0.0;
    double reduced_chi2 = 0.0;
    std::size_t n_points = 0;
    std::pair<double, double> fit_window{0.0, 0.0};
    bool converged = false;
    int iterations = 0;
    // Quantities computed from the parameters (Q, zeta_i, tau, FWHM, ...).
    std::vector<NamedValue> derived;
    std::vector<std::string> warnings;

    double value(const std::string &name) const;
    double error(const std::string &name) const;
    std::size_t index(const std::string &name) const;
    const NamedValue &derived_value(const std::string &name) const;
    void set_derived(std::string name, double value, double sigma);
};

/// Central-difference Jacobian of the model at params, one row per x.
Eigen::MatrixXd numeric_jacobian(const Model &model, std::span<const double> x, std::span<const double> params,
                                 double rel_step, std::span<const double> param_scale = {});

/// Weighted nonlinear least squares with Levenberg-Marquardt damping and
/// box bounds enforced by projection. Returns best-so-far parameters with
/// converged=false when the iteration budget runs out. Throws FitError when
/// the normal matrix stays singular after damped retries.
FitResult nlls_fit(const Model &model, const FitData &data, std::vector<double> init, const Bounds &bounds,
                   const NllsOptions &options = {});

} // namespace purcell::fit

#endif // PURCELL_FITTING_NLLS_HPP
