#include "purcell/fitting/nlls.hpp"

#include "purcell/errors.hpp"

#include <algorithm>
#include <cmath>

namespace purcell::fit
{
namespace
{
constexpr double kLambdaInit = 1e-3;
constexpr double kLambdaMax = 1e20;
constexpr int kMaxDampingTries = 40;

struct Problem
{
    const Model &model;
    const FitData &data;
    std::vector<std::size_t> free;

    double weight(std::size_t i) const { return data.sigma.empty() ? 1.0 : 1.0 / data.sigma[i]; }

    Eigen::VectorXd residuals(std::span<const double> p) const
    {
        Eigen::VectorXd r(static_cast<Eigen::Index>(data.x.size()));
        for (std::size_t i = 0; i < data.x.size(); ++i)
        {
            r[static_cast<Eigen::Index>(i)] = (data.y[i] - model.eval(data.x[i], p)) * weight(i);
        }
        return r;
    }

    // Weighted Jacobian restricted to the free parameters.
    Eigen::MatrixXd jacobian(std::span<const double> p, double rel_step, std::span<const double> scale) const
    {
        const Eigen::MatrixXd full = numeric_jacobian(model, data.x, p, rel_step, scale);
        Eigen::MatrixXd j(full.rows(), static_cast<Eigen::Index>(free.size()));
        for (std::size_t k = 0; k < free.size(); ++k)
        {
            j.col(static_cast<Eigen::Index>(k)) = full.col(static_cast<Eigen::Index>(free[k]));
        }
        for (Eigen::Index i = 0; i < j.rows(); ++i)
        {
            j.row(i) *= weight(static_cast<std::size_t>(i));
        }
        return j;
    }
};

// Jacobi scaling of the normal matrix so parameters of wildly different
// magnitude (counts vs nm) share one conditioning.
Eigen::VectorXd jacobi_scale(const Eigen::MatrixXd &normal)
{
    Eigen::VectorXd d = normal.diagonal();
    const double floor = std::max(d.maxCoeff(), 1e-300) * 1e-14;
    for (Eigen::Index k = 0; k < d.size(); ++k)
    {
        d[k] = 1.0 / std::sqrt(std::max(d[k], floor));
    }
    return d;
}

void clamp_to_bounds(std::vector<double> &p, const Bounds &bounds)
{
    for (std::size_t k = 0; k < p.size(); ++k)
    {
        p[k] = std::clamp(p[k], bounds.lower[k], bounds.upper[k]);
    }
}
} // namespace

Eigen::MatrixXd numeric_jacobian(const Model &model, std::span<const double> x, std::span<const double> params,
                                 double rel_step, std::span<const double> param_scale)
{
    const auto n = static_cast<Eigen::Index>(x.size());
    const auto m = static_cast<Eigen::Index>(params.size());
    Eigen::MatrixXd jac(n, m);
    std::vector<double> p(params.begin(), params.end());
    for (Eigen::Index k = 0; k < m; ++k)
    {
        const auto ku = static_cast<std::size_t>(k);
        const double scale = param_scale.empty() ? 1.0 : param_scale[ku];
        const double h = rel_step * std::max(std::abs(params[ku]), scale);
        p[ku] = params[ku] + h;
        const double up = p[ku];
        std::vector<double> f_plus(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
        {
            f_plus[i] = model.eval(x[i], p);
        }
        p[ku] = params[ku] - h;
        const double down = p[ku];
        for (std::size_t i = 0; i < x.size(); ++i)
        {
            jac(static_cast<Eigen::Index>(i), k) = (f_plus[i] - model.eval(x[i], p)) / (up - down);
        }
        p[ku] = params[ku];
    }
    return jac;
}

FitResult nlls_fit(const Model &model, const FitData &data, std::vector<double> init, const Bounds &bounds,
                   const NllsOptions &options)
{
    const std::size_t n_params = init.size();
    if (model.param_names.size() != n_params || bounds.lower.size() != n_params || bounds.upper.size() != n_params)
    {
        throw FitError("parameter, name and bound counts disagree for model " + model.id);
    }
    if (data.x.size() != data.y.size() || (!data.sigma.empty() && data.sigma.size() != data.y.size()))
    {
        throw FitError("data arrays differ in length");
    }
    for (double s : data.sigma)
    {
        if (!(s > 0.0))
        {
            throw FitError("measurement sigmas must be positive");
        }
    }
    for (std::size_t k = 0; k < n_params; ++k)
    {
        if (!(init[k] >= bounds.lower[k] && init[k] <= bounds.upper[k]))
        {
            throw FitError("initial value of '" + model.param_names[k] + "' outside its bounds");
        }
    }

    Problem problem{model, data, {}};
    for (std::size_t k = 0; k < n_params; ++k)
    {
        if (bounds.lower[k] < bounds.upper[k])
        {
            problem.free.push_back(k);
        }
    }
    const std::size_t n_free = problem.free.size();
    if (data.x.size() < n_free)
    {
        throw FitError("fewer data points than free parameters");
    }

    std::vector<double> scale = options.param_scale;
    if (scale.empty())
    {
        scale.resize(n_params);
        for (std::size_t k = 0; k < n_params; ++k)
        {
            scale[k] = std::abs(init[k]) > 0.0 ? std::abs(init[k]) : 1.0;
        }
    }

    std::vector<double> p = std::move(init);
    Eigen::VectorXd r = problem.residuals(p);
    double chi2 = r.squaredNorm();
    if (!std::isfinite(chi2))
    {
        throw FitError("model is not finite at the initial parameters");
    }

    double lambda = kLambdaInit;
    bool converged = chi2 == 0.0;
    int iteration = 0;
    while (!converged && iteration < options.max_iterations)
    {
        ++iteration;
        const Eigen::MatrixXd j = problem.jacobian(p, options.jacobian_rel_step, scale);
        const Eigen::MatrixXd normal = j.transpose() * j;
        const Eigen::VectorXd gradient = j.transpose() * r;
        const Eigen::VectorXd s = jacobi_scale(normal);
        const Eigen::MatrixXd scaled = s.asDiagonal() * normal * s.asDiagonal();

        bool accepted = false;
        int singular_tries = 0;
        for (int attempt = 0; attempt < kMaxDampingTries && !accepted; ++attempt)
        {
            Eigen::MatrixXd damped = scaled;
            damped.diagonal().array() += lambda;
            Eigen::LLT<Eigen::MatrixXd> llt(damped);
            if (llt.info() != Eigen::Success)
            {
                if (++singular_tries > 10)
                {
                    throw FitError("normal matrix singular after damped retries in model " + model.id);
                }
                lambda *= 10.0;
                continue;
            }
            const Eigen::VectorXd delta = s.asDiagonal() * llt.solve(s.asDiagonal() * gradient);

            std::vector<double> trial = p;
            for (std::size_t k = 0; k < n_free; ++k)
            {
                trial[problem.free[k]] += delta[static_cast<Eigen::Index>(k)];
            }
            clamp_to_bounds(trial, bounds);

            double step_sq = 0.0;
            double norm_sq = 0.0;
            for (std::size_t k : problem.free)
            {
                step_sq += (trial[k] - p[k]) * (trial[k] - p[k]) / (scale[k] * scale[k]);
                norm_sq += p[k] * p[k] / (scale[k] * scale[k]);
            }
            const double rel_step = std::sqrt(step_sq) / std::max(std::sqrt(norm_sq), 1.0);

            const Eigen::VectorXd r_trial = problem.residuals(trial);
            const double chi2_trial = r_trial.squaredNorm();
            if (std::isfinite(chi2_trial) && chi2_trial < chi2)
            {
                const double rel_change = (chi2 - chi2_trial) / std::max(chi2_trial, 1e-300);
                p = std::move(trial);
                r = r_trial;
                chi2 = chi2_trial;
                lambda = std::max(lambda / 10.0, 1e-12);
                accepted = true;
                if (rel_change < options.rel_chi2_tol || rel_step < options.step_tol || chi2 == 0.0)
                {
                    converged = true;
                }
            }
            else
            {
                // No downhill step even at this tiny size: sitting on the minimum.
                if (rel_step < options.step_tol || lambda > kLambdaMax)
                {
                    converged = true;
                    break;
                }
                lambda *= 10.0;
            }
        }
        if (!accepted && !converged)
        {
            break;
        }
    }

    FitResult result;
    result.model_id = model.id;
    result.names = model.param_names;
    result.params = p;
    result.chi2 = chi2;
    result.n_points = data.x.size();
    result.iterations = iteration;
    result.converged = converged;
    if (!data.x.empty())
    {
        const auto [lo, hi] = std::minmax_element(data.x.begin(), data.x.end());
        result.fit_window = {*lo, *hi};
    }
    const std::size_t dof = data.x.size() - n_free;
    result.reduced_chi2 = dof > 0 ? chi2 / static_cast<double>(dof) : std::numeric_limits<double>::quiet_NaN();
    if (!converged)
    {
        result.warnings.push_back("did not converge within the iteration budget");
    }

    // Covariance of the free block from the undamped normal matrix.
    const Eigen::MatrixXd j = problem.jacobian(p, options.jacobian_rel_step, scale);
    const Eigen::MatrixXd normal = j.transpose() * j;
    const Eigen::VectorXd s = jacobi_scale(normal);
    const Eigen::MatrixXd scaled = s.asDiagonal() * normal * s.asDiagonal();
    Eigen::MatrixXd inv_scaled;
    Eigen::LLT<Eigen::MatrixXd> llt(scaled);
    const auto nf = static_cast<Eigen::Index>(n_free);
    if (llt.info() == Eigen::Success)
    {
        inv_scaled = llt.solve(Eigen::MatrixXd::Identity(nf, nf));
    }
    else
    {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scaled);
        const Eigen::VectorXd ev = eig.eigenvalues();
        Eigen::VectorXd inv_ev(ev.size());
        const double cutoff = std::max(ev.cwiseAbs().maxCoeff(), 1e-300) * 1e-13;
        for (Eigen::Index k = 0; k < ev.size(); ++k)
        {
            inv_ev[k] = ev[k] > cutoff ? 1.0 / ev[k] : 0.0;
        }
        inv_scaled = eig.eigenvectors() * inv_ev.asDiagonal() * eig.eigenvectors().transpose();
        result.warnings.push_back("normal matrix ill-conditioned; covariance from pseudo-inverse");
    }
    Eigen::MatrixXd cov_free = s.asDiagonal() * inv_scaled * s.asDiagonal();
    if (data.sigma.empty() && dof > 0)
    {
        cov_free *= result.reduced_chi2;
    }
    cov_free = 0.5 * (cov_free + cov_free.transpose()).eval();
    for (Eigen::Index k = 0; k < nf; ++k)
    {
        if (!(normal(k, k) > 0.0))
        {
            cov_free(k, k) = std::numeric_limits<double>::infinity();
        }
    }

    const auto np = static_cast<Eigen::Index>(n_params);
    result.covariance = Eigen::MatrixXd::Zero(np, np);
    for (std::size_t a = 0; a < n_free; ++a)
    {
        for (std::size_t b = 0; b < n_free; ++b)
        {
            result.covariance(static_cast<Eigen::Index>(problem.free[a]), static_cast<Eigen::Index>(problem.free[b])) =
                cov_free(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        }
    }
    result.sigma.resize(n_params);
    for (std::size_t k = 0; k < n_params; ++k)
    {
        result.sigma[k] = std::sqrt(std::max(result.covariance(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)), 0.0));
    }
    return result;
}

} // namespace purcell::fit
