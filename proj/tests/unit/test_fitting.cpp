#include <doctest.h>

#include "purcell/errors.hpp"
#include "purcell/fitting/fits.hpp"
#include "purcell/io/rng.hpp"
#include "purcell/io/synth.hpp"

#include <cmath>
#include <vector>

using namespace purcell;
using namespace purcell::fit;

namespace
{
double decay(double t, std::span<const double> p)
{
    return p[0] * std::exp(-t / p[1]) + p[2];
}

std::vector<double> linspace(double lo, double hi, std::size_t n)
{
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        x[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    return x;
}
} // namespace

TEST_SUITE("fitting")
{
    TEST_CASE("numeric Jacobian matches the analytic derivatives")
    {
        const Model model{"exp", {"a", "tau", "c"}, decay};
        const auto x = linspace(0.0, 30.0, 50);
        const std::vector<double> p{1000.0, 9.412, 12.0};
        const Eigen::MatrixXd j = numeric_jacobian(model, x, p, 1e-6);
        REQUIRE(j.rows() == 50);
        REQUIRE(j.cols() == 3);
        for (std::size_t i = 0; i < x.size(); ++i)
        {
            const double e = std::exp(-x[i] / p[1]);
            const auto r = static_cast<Eigen::Index>(i);
            CHECK(j(r, 0) == doctest::Approx(e).epsilon(1e-7));
            CHECK(j(r, 1) == doctest::Approx(p[0] * e * x[i] / (p[1] * p[1])).epsilon(1e-6).scale(1e-6));
            CHECK(j(r, 2) == doctest::Approx(1.0).epsilon(1e-7));
        }
    }

    TEST_CASE("numeric Jacobian of a Fano profile")
    {
        const Model model{"fano5", {"a", "q", "x0", "g", "c"}, [](double x, std::span<const double> p) {
                              return fano_value(x, p[0], p[1], p[2], p[3], p[4]);
                          }};
        const auto x = linspace(618.8, 619.2, 41);
        const std::vector<double> p{0.5, 2.0, 619.0, 0.1, 0.2};
        const Eigen::MatrixXd j = numeric_jacobian(model, x, p, 1e-6);
        for (std::size_t i = 0; i < x.size(); ++i)
        {
            const double d = x[i] - p[2];
            const double h = p[3] / 2.0;
            const double num = p[1] * h + d;
            const double den = h * h + d * d;
            const auto r = static_cast<Eigen::Index>(i);
            CHECK(j(r, 0) == doctest::Approx(num * num / den).epsilon(1e-6));
            CHECK(j(r, 1) == doctest::Approx(p[0] * 2.0 * num * h / den).epsilon(1e-6));
            CHECK(j(r, 4) == doctest::Approx(1.0).epsilon(1e-9));
        }
    }

    TEST_CASE("noiseless data are fitted exactly")
    {
        const Model model{"exp", {"a", "tau", "c"}, decay};
        const auto x = linspace(0.0, 40.0, 200);
        std::vector<double> y;
        for (const double t : x)
        {
            const double p[] = {500.0, 4.57, 3.0};
            y.push_back(decay(t, p));
        }
        const FitResult r = nlls_fit(model, FitData{x, y, {}}, {300.0, 2.0, 0.0}, Bounds::unbounded(3));
        CHECK(r.converged);
        CHECK(r.value("a") == doctest::Approx(500.0).epsilon(1e-8));
        CHECK(r.value("tau") == doctest::Approx(4.57).epsilon(1e-8));
        CHECK(r.value("c") == doctest::Approx(3.0).epsilon(1e-6));
        CHECK(r.n_points == 200);
        CHECK_THROWS(r.value("missing"));
    }

    TEST_CASE("bounds are respected")
    {
        const Model model{"exp", {"a", "tau", "c"}, decay};
        const auto x = linspace(0.0, 40.0, 100);
        std::vector<double> y;
        for (const double t : x)
        {
            const double p[] = {500.0, 4.57, 3.0};
            y.push_back(decay(t, p));
        }
        Bounds b = Bounds::unbounded(3);
        b.upper[1] = 3.0;
        const FitResult r = nlls_fit(model, FitData{x, y, {}}, {300.0, 2.0, 0.0}, b);
        CHECK(r.value("tau") <= 3.0);
    }

    TEST_CASE("a parameter the model ignores is reported as unconstrained")
    {
        const Model model{"flat", {"a", "b"}, [](double, std::span<const double> p) { return p[0]; }};
        const auto x = linspace(0.0, 1.0, 20);
        const std::vector<double> y(20, 2.0);
        const FitResult r = nlls_fit(model, FitData{x, y, {}}, {1.0, 1.0}, Bounds::unbounded(2));
        CHECK(r.value("a") == doctest::Approx(2.0));
        CHECK(std::isinf(r.error("b")));
        CHECK_FALSE(r.warnings.empty());
    }

    TEST_CASE("invalid fit inputs")
    {
        const Model model{"exp", {"a", "tau", "c"}, decay};
        const std::vector<double> x{0, 1, 2}, y{1, 2, 3}, bad_sigma{1, 0, 1};
        CHECK_THROWS_AS(nlls_fit(model, FitData{x, y, {}}, {1, 1}, Bounds::unbounded(3)), FitError);
        CHECK_THROWS_AS(nlls_fit(model, FitData{x, y, bad_sigma}, {1, 1, 1}, Bounds::unbounded(3)), FitError);
        const std::vector<double> x2{0, 1}, y2{1, 2};
        CHECK_THROWS_AS(nlls_fit(model, FitData{x2, y2, {}}, {1, 1, 1}, Bounds::unbounded(3)), FitError);
    }

    TEST_CASE("reduced chi-square and parameter pulls are calibrated")
    {
        const Model model{"exp", {"a", "tau", "c"}, decay};
        const auto x = linspace(0.0, 30.0, 120);
        const double truth[] = {200.0, 6.0, 10.0};
        const double sigma = 4.0;
        const std::vector<double> sig(x.size(), sigma);
        io::Rng rng(99);
        double chi2_sum = 0.0;
        int within = 0;
        const int trials = 400;
        for (int k = 0; k < trials; ++k)
        {
            std::vector<double> y;
            for (const double t : x)
            {
                y.push_back(decay(t, truth) + rng.normal(0.0, sigma));
            }
            const FitResult r = nlls_fit(model, FitData{x, y, sig}, {150.0, 5.0, 8.0}, Bounds::unbounded(3));
            chi2_sum += r.reduced_chi2;
            if (std::abs(r.value("tau") - truth[1]) < r.error("tau"))
            {
                ++within;
            }
        }
        CHECK(chi2_sum / trials == doctest::Approx(1.0).epsilon(0.02));
        const double frac = static_cast<double>(within) / trials;
        CHECK(frac > 0.62);
        CHECK(frac < 0.74);
    }

    TEST_CASE("Fano fit on a noiseless lamp-shaped spectrum")
    {
        io::SpectrumParams sp;
        sp.amplitude = 0.5;
        sp.offset = 0.2;
        sp.lamp = io::LampShape{619.5, 3.0, 0.5};
        const SpectrumTrace raw = io::synth_spectrum(io::SpectrumKind::fano, sp, {}, 1);
        REQUIRE(raw.background_counts.has_value());
        const SpectrumTrace bg{raw.wavelength_nm, *raw.background_counts, std::nullopt};
        SpectrumTrace signal = raw;
        signal.background_counts.reset();
        const SpectrumTrace corrected = background_correct(signal, bg);
        const FitResult r = fit_fano(corrected, {618.0, 620.0});
        CHECK(r.derived_value("Q").value == doctest::Approx(6032.0).epsilon(1e-6));
        CHECK(r.derived_value("q").value == doctest::Approx(2.0).epsilon(1e-6));
        CHECK(r.derived_value("amplitude").value == doctest::Approx(0.5).epsilon(1e-6));
        CHECK(r.value("offset") == doctest::Approx(0.2).epsilon(1e-6));
        for (const double x : {618.5, 619.0, 619.05, 619.6})
        {
            CHECK(fitted_curve(r, x) == doctest::Approx(fano_value(x, 0.5, 2.0, 619.0, 619.0 / 6032.0, 0.2)));
        }
    }

    TEST_CASE("Fano with negative asymmetry")
    {
        io::SpectrumParams sp;
        sp.q = -3.0;
        sp.fwhm_nm = 619.0 / 3942.0;
        const SpectrumTrace s = io::synth_spectrum(io::SpectrumKind::fano, sp, {}, 1);
        const FitResult r = fit_fano(SpectrumTrace{s.wavelength_nm, s.counts, std::nullopt}, {618.0, 620.0});
        CHECK(r.derived_value("Q").value == doctest::Approx(3942.0).epsilon(1e-6));
        CHECK(r.derived_value("q").value == doctest::Approx(-3.0).epsilon(1e-5));
    }

    TEST_CASE("under-resolved Fano is rejected")
    {
        io::SpectrumParams sp;
        sp.n_points = 41;
        sp.fwhm_nm = 0.02;
        const SpectrumTrace s = io::synth_spectrum(io::SpectrumKind::fano, sp, {}, 1);
        CHECK_THROWS_AS(fit_fano(SpectrumTrace{s.wavelength_nm, s.counts, std::nullopt}, {618.0, 620.0}), FitError);
    }

    TEST_CASE("background correction")
    {
        const SpectrumTrace sig{{1.0, 2.0, 3.0, 4.0}, {2.0, 4.0, 6.0, 8.0}, std::nullopt};
        const SpectrumTrace bg{{1.5, 3.5}, {2.0, 4.0}, std::nullopt};
        const SpectrumTrace d = background_correct(sig, bg);
        REQUIRE(d.size() == 2);
        CHECK(d.wavelength_nm[0] == 2.0);
        CHECK(d.counts[0] == doctest::Approx(4.0 / 2.5));
        CHECK(d.counts[1] == doctest::Approx(6.0 / 3.5));
        const SpectrumTrace s = background_correct(sig, bg, BackgroundMode::subtract);
        CHECK(s.counts[0] == doctest::Approx(1.5));
        const SpectrumTrace far{{10.0, 11.0}, {1.0, 1.0}, std::nullopt};
        CHECK_THROWS_AS(background_correct(sig, far), DomainError);
        CHECK(crop(sig, 1.5, 3.0).size() == 2);
    }

    TEST_CASE("heuristics")
    {
        const std::vector<double> y{0, 1, 0, 5, 0, 0, 9, 8, 9, 0, 0};
        const auto m = median_filter5(y);
        CHECK(m.size() == y.size());
        CHECK(m[3] == 0.0);
        CHECK(m[7] == 8.0);
        const auto peaks = find_peaks(std::vector<double>{0, 1, 3, 1, 0, 0, 2, 6, 9, 6, 2, 0});
        REQUIRE(!peaks.empty());
        CHECK(std::abs(static_cast<int>(peaks.front()) - 8) <= 1);
        const std::vector<double> x{0, 1, 2, 3, 4};
        const std::vector<double> tri{0, 5, 10, 5, 0};
        CHECK(*half_max_width(x, tri, 2, 0.0) == doctest::Approx(2.0));
        CHECK_FALSE(half_max_width(x, std::vector<double>{10, 10, 10, 10, 10}, 2, 0.0).has_value());
    }

    TEST_CASE("double Lorentzian recovers the ratios of noiseless data")
    {
        TuningSeries s;
        for (const double x : linspace(618.0, 621.0, 121))
        {
            const double rate = 0.1 * (1.0 + 3.672 * lorentzian_unit(x, 619.0, 0.1) +
                                       0.985 * lorentzian_unit(x, 620.1, 0.1));
            s.cavity_wavelength_nm.push_back(x);
            s.rate.push_back(rate);
            s.rate_sigma.push_back(0.01 * rate);
        }
        const std::vector<double> centers{619.0, 620.1};
        const FitResult r = fit_multi_lorentzian(s, 2, centers);
        CHECK(r.derived_value("zeta_1").value == doctest::Approx(4.672).epsilon(1e-6));
        CHECK(r.derived_value("zeta_2").value == doctest::Approx(1.985).epsilon(1e-6));
        CHECK(r.value("center_2_nm") == doctest::Approx(620.1).epsilon(1e-9));
        CHECK(fitted_curve(r, 619.0) == doctest::Approx(s.rate[40]).epsilon(1e-6));
    }

    TEST_CASE("Lorentzian fit needs one centre per peak")
    {
        const std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8};
        const std::vector<double> y{1, 1, 2, 5, 2, 1, 1, 1};
        const std::vector<double> c{4.0};
        CHECK_THROWS_AS(fit_lorentzians(x, y, {}, 2, c), FitError);
        CHECK_THROWS_AS(fit_lorentzians(std::vector<double>{1, 2}, std::vector<double>{1, 2}, {}, 1, c), FitError);
    }

    TEST_CASE("linewidth conversion to frequency")
    {
        for (const auto &[fwhm_pm, lo_mhz, hi_mhz] :
             {std::tuple{0.417, 320.0, 330.0}, std::tuple{1.236, 950.0, 1000.0}})
        {
            io::SpectrumParams sp;
            sp.lo_nm = 619.0 - 0.01;
            sp.hi_nm = 619.0 + 0.01;
            sp.n_points = 401;
            sp.offset = 0.0;
            sp.peaks = {{1.0, 619.0, fwhm_pm * 1e-3}};
            const SpectrumTrace s = io::synth_spectrum(io::SpectrumKind::lorentzian_peaks, sp, {}, 1);
            const FitResult r = fit_linewidth(s);
            CHECK(r.derived_value("fwhm_pm").value == doctest::Approx(fwhm_pm).epsilon(1e-6));
            CHECK(r.derived_value("fwhm_mhz").value > lo_mhz);
            CHECK(r.derived_value("fwhm_mhz").value < hi_mhz);
        }
    }

    TEST_CASE("under-resolved linewidth is rejected")
    {
        io::SpectrumParams sp;
        sp.lo_nm = 618.9;
        sp.hi_nm = 619.1;
        sp.n_points = 21;
        sp.peaks = {{1.0, 619.0, 0.4e-3}};
        const SpectrumTrace s = io::synth_spectrum(io::SpectrumKind::lorentzian_peaks, sp, {}, 1);
        CHECK_THROWS_AS(fit_linewidth(s), FitError);
    }

    TEST_CASE("exponential decay of a synthetic histogram")
    {
        io::DecayHistogramParams p;
        p.tau_ns = 4.57;
        p.expected_counts = 1e6;
        const LifetimeTrace t = io::synth_decay_histogram(p, 5);
        const FitResult r = fit_exp_decay(t);
        const auto &tau = r.derived_value("tau_ns");
        CHECK(std::abs(tau.value - 4.57) < 4.0 * tau.sigma);
        CHECK(r.derived_value("rate_per_ns").value == doctest::Approx(1.0 / tau.value));
        CHECK(r.derived_value("t_peak_ns").value == doctest::Approx(36.0).epsilon(0.01));
        const double t_mid = 0.5 * (r.fit_window.first + r.fit_window.second);
        CHECK(std::isfinite(fitted_curve(r, t_mid)));
    }

    TEST_CASE("exponential decay in an explicit window")
    {
        io::DecayHistogramParams p;
        p.tau_ns = 9.412;
        p.expected_counts = 1e6;
        const LifetimeTrace t = io::synth_decay_histogram(p, 6);
        const FitResult r = fit_exp_decay(t, DecayWindow{37.0, 70.0});
        CHECK(r.fit_window.first == 37.0);
        CHECK(std::abs(r.derived_value("tau_ns").value - 9.412) < 4.0 * r.derived_value("tau_ns").sigma);
        CHECK_THROWS_AS(fit_exp_decay(t, DecayWindow{40.0, 40.1}), FitError);
        CHECK_THROWS_AS(fit_exp_decay(t, DecayWindow{50.0, 40.0}), FitError);
    }

    TEST_CASE("empty lifetime trace is rejected")
    {
        LifetimeTrace t;
        t.bin_width_ps = 32.0;
        t.counts.assign(100, 0);
        CHECK_THROWS_AS(fit_exp_decay(t), FitError);
    }

    TEST_CASE("sinusoid over pattern angle")
    {
        std::vector<double> angle, amp;
        for (int a = 0; a < 360; a += 10)
        {
            angle.push_back(a);
            amp.push_back(3.0 * std::cos(2.0 * M_PI * (a - 40.0) / 180.0) + 5.0);
        }
        const FitResult r = fit_sinusoid(angle, amp);
        CHECK(r.derived_value("period_deg").value == doctest::Approx(180.0).epsilon(1e-6));
        CHECK(fitted_curve(r, 40.0) == doctest::Approx(8.0).epsilon(1e-6));
        CHECK_THROWS_AS(fit_sinusoid(angle, std::vector<double>(angle.size(), 2.0)), DegenerateError);
    }

    TEST_CASE("fitted_curve rejects unknown models")
    {
        FitResult r;
        r.model_id = "mystery";
        CHECK_THROWS_AS(fitted_curve(r, 1.0), FitError);
    }
}
