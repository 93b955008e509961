#include <doctest.h>

#include "purcell/errors.hpp"
#include "purcell/model.hpp"
#include "purcell/traces.hpp"

#include <cmath>
#include <random>

using namespace purcell;

TEST_SUITE("model")
{
    TEST_CASE("unit Purcell factors leave the bulk rate unchanged")
    {
        const auto physics = EmitterPhysics::from_fractions(1.0 / 9.412, 0.57, 0.7815);
        CHECK(total_rate(physics, 1.0, 1.0) == doctest::Approx(bulk_rate(physics)).epsilon(1e-15));
        CHECK(physics.eta_dw() == doctest::Approx(0.57));
        CHECK(physics.eta_br() == doctest::Approx(0.7815));
        CHECK(enhancement_ratio(1.0, 1.0, 0.57, 0.7815) == doctest::Approx(1.0));
    }

    TEST_CASE("total_rate over bulk_rate equals enhancement_ratio")
    {
        std::mt19937_64 gen(7);
        std::uniform_real_distribution<double> frac(0.05, 0.95), f(0.0, 60.0);
        for (int i = 0; i < 200; ++i)
        {
            const double dw = frac(gen), br = frac(gen), fc = f(gen), fd = f(gen);
            const auto physics = EmitterPhysics::from_fractions(0.1, dw, br);
            CHECK(total_rate(physics, fc, fd) / bulk_rate(physics) ==
                  doctest::Approx(enhancement_ratio(fc, fd, dw, br)).epsilon(1e-12));
        }
    }

    TEST_CASE("purcell_from_zeta inverts enhancement_ratio")
    {
        std::mt19937_64 gen(11);
        std::uniform_real_distribution<double> frac(0.05, 0.95), f(0.0, 60.0);
        for (int i = 0; i < 500; ++i)
        {
            const double dw = frac(gen), br = frac(gen), fc = f(gen), fd = f(gen);
            const auto back = purcell_from_zeta(enhancement_ratio(fc, 1.0, dw, br),
                                                enhancement_ratio(1.0, fd, dw, br), dw, br);
            CHECK(back.f_c == doctest::Approx(fc).epsilon(1e-10));
            CHECK(back.f_d == doctest::Approx(fd).epsilon(1e-10));
        }
    }

    TEST_CASE("forward ratios of the published Purcell factors")
    {
        CHECK(enhancement_ratio(9.243, 1.0, 0.57, 0.7815) == doctest::Approx(4.6718855650).epsilon(1e-9));
        CHECK(enhancement_ratio(1.0, 8.910, 0.57, 0.7815) == doctest::Approx(1.9851509500).epsilon(1e-9));
    }

    TEST_CASE("purcell_from_zeta at the published branching ratio")
    {
        const auto p = purcell_from_zeta(4.672, 1.985, 0.57, 0.7815);
        CHECK(p.f_c == doctest::Approx(9.24325689).epsilon(1e-8));
        CHECK(p.f_d == doctest::Approx(8.90878799).epsilon(1e-8));
        const auto a = purcell_from_zeta(12.230, 1.514, 0.57, 0.7815);
        CHECK(a.f_c == doctest::Approx(26.21017836).epsilon(1e-8));
        CHECK(a.f_d == doctest::Approx(5.12702236).epsilon(1e-8));
    }

    TEST_CASE("fourier-limited linewidth")
    {
        CHECK(fourier_limit_linewidth_mhz(9.412) == doctest::Approx(16.9097899588).epsilon(1e-10));
        CHECK(fourier_limit_linewidth_mhz(INFINITY) == 0.0);
        CHECK_THROWS_AS(fourier_limit_linewidth_mhz(0.0), DomainError);
        CHECK_THROWS_AS(rate_from_lifetime(-1.0), DomainError);
        CHECK(rate_from_lifetime(4.0) == doctest::Approx(0.25));
    }

    TEST_CASE("fractions outside (0,1) are rejected")
    {
        CHECK_THROWS_AS(enhancement_ratio(2, 2, 0.0, 0.5), DomainError);
        CHECK_THROWS_AS(enhancement_ratio(2, 2, 0.5, 1.0), DomainError);
        CHECK_THROWS_AS(EmitterPhysics::from_fractions(0.1, 1.2, 0.5), DomainError);
        CHECK_THROWS_AS(total_rate(EmitterPhysics::from_fractions(0.1, 0.5, 0.5), -1.0, 1.0), DomainError);
        CHECK_THROWS_AS(purcell_from_zeta(2.0, 2.0, 0.57, 1e-13), DegenerateError);
    }

    TEST_CASE("zeta below the physical floor is rejected")
    {
        EnhancementPair p;
        p.zeta_c = 0.42;
        CHECK_THROWS_AS(check_zeta_floor(p, 0.57), DomainError);
        p.zeta_c = 0.44;
        CHECK_NOTHROW(check_zeta_floor(p, 0.57));
    }

    TEST_CASE("folded angle lies in [0, 90]")
    {
        std::mt19937_64 gen(3);
        std::uniform_real_distribution<double> angle(-1000.0, 1000.0);
        for (int i = 0; i < 2000; ++i)
        {
            const double a = angle(gen);
            const double t = fold_angle_deg(a);
            CHECK(t >= 0.0);
            CHECK(t <= 90.0);
            CHECK(std::abs(std::cos(a * M_PI / 180.0)) ==
                  doctest::Approx(std::cos(t * M_PI / 180.0)).epsilon(1e-9));
        }
        CHECK(fold_angle_deg(-10.0) == doctest::Approx(10.0));
        CHECK(fold_angle_deg(100.0) == doctest::Approx(80.0));
        CHECK(fold_angle_deg(180.0) == doctest::Approx(0.0));
    }

    TEST_CASE("geometry angle and its inverse")
    {
        for (const double pattern : {0.0, 20.0, 55.0, 70.0})
        {
            for (const auto family : {DipoleFamily::primary, DipoleFamily::orthogonal})
            {
                for (const double phi : {-4.0, -1.0, 0.0, 1.1, 4.5})
                {
                    DeviceGeometry g;
                    g.pattern_angle_deg = pattern;
                    g.fab_offset_deg = phi;
                    g.dipole_family = family;
                    const double theta = theta_from_geometry(g);
                    CHECK(theta >= 0.0);
                    CHECK(theta <= 90.0);
                    CHECK(phi_from_theta(g, theta) == doctest::Approx(phi).epsilon(1e-12));
                }
            }
        }
        DeviceGeometry parallel;
        CHECK(theta_from_geometry(parallel) == doctest::Approx(45.0));
        DeviceGeometry angled;
        angled.pattern_angle_deg = 55.0;
        CHECK(theta_from_geometry(angled) == doctest::Approx(10.0));
    }

    TEST_CASE("tan theta matches the ratio of implied Purcell factors")
    {
        EnhancementPair p{4.672, 1.985, 0, 0, {}, "p"};
        const auto f = purcell_from_zeta(p, 0.57, 0.7815);
        CHECK(tan_theta(p, 0.57, 0.7815) == doctest::Approx(f.f_d / f.f_c).epsilon(1e-12));
        CHECK(tan_theta(p, 0.57, 0.7815) == doctest::Approx(0.9638148209).epsilon(1e-9));
    }

    TEST_CASE("geometry validation")
    {
        DeviceGeometry g;
        g.pattern_angle_deg = 95.0;
        CHECK_THROWS_AS(g.validate(), DomainError);
        g.pattern_angle_deg = 10.0;
        g.quality_factor = -3.0;
        CHECK_THROWS_AS(g.validate(), DomainError);
    }

    TEST_CASE("trace validation")
    {
        SpectrumTrace s{{1.0, 1.0}, {2.0, 3.0}, std::nullopt};
        CHECK_THROWS_AS(s.validate(), DomainError);
        TuningSeries t{{1.0, 2.0}, {0.1, -0.1}, {0.01, 0.01}};
        CHECK_THROWS_AS(t.validate(), DomainError);
        LifetimeTrace l;
        l.counts = {1, 2, 3};
        CHECK_THROWS_AS(l.validate(), DomainError);
        l.bin_width_ps = 32.0;
        CHECK(l.total() == 6);
        CHECK(l.time_ns(0) == doctest::Approx(0.016));
    }

    TEST_CASE("photoluminescence enhancement of two scaled lines")
    {
        SpectrumTrace on, off;
        for (int i = 0; i <= 400; ++i)
        {
            const double x = 618.0 + 0.005 * i;
            const double line = 1.0 / (1.0 + std::pow((x - 619.0) / 0.01, 2));
            on.wavelength_nm.push_back(x);
            off.wavelength_nm.push_back(x);
            on.counts.push_back(100.0 + 0.5 * x + 7.0 * line);
            off.counts.push_back(40.0 - 0.2 * x + 1.0 * line);
        }
        CHECK(pl_enhancement(on, off, 619.0, 0.5) == doctest::Approx(7.0).epsilon(0.01));
    }
}
