#include <doctest.h>

#include "purcell/errors.hpp"
#include "purcell/solvers.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace purcell;

namespace
{
EnhancementPair published_parallel()
{
    return {4.672, 1.985, 0.0, 0.0, {}, "parallel"};
}

EnhancementPair published_angled()
{
    EnhancementPair p{12.230, 1.514, 0.0, 0.0, {}, "angled"};
    p.geometry.pattern_angle_deg = 55.0;
    return p;
}

EnhancementPair published_second()
{
    EnhancementPair p{1.022, 1.971, 0.0, 0.0, {}, "second"};
    p.geometry.pattern_angle_deg = 55.0;
    p.geometry.dipole_family = DipoleFamily::orthogonal;
    return p;
}

EnhancementPair forward(double pattern, double phi, double f, double eta_dw, double eta_br)
{
    EnhancementPair p;
    p.geometry.pattern_angle_deg = pattern;
    p.geometry.fab_offset_deg = phi;
    const double theta = theta_from_geometry(p.geometry) * M_PI / 180.0;
    p.zeta_c = enhancement_ratio(f * std::cos(theta), 1.0, eta_dw, eta_br);
    p.zeta_d = enhancement_ratio(1.0, f * std::sin(theta), eta_dw, eta_br);
    p.geometry.fab_offset_deg = 0.0;
    return p;
}
} // namespace

TEST_SUITE("solvers")
{
    TEST_CASE("pair solution for the published enhancement ratios")
    {
        const std::vector<EnhancementPair> pairs{published_parallel(), published_angled()};
        PurcellSolution s = solve_branching(pairs);
        CHECK(s.eta_br == doctest::Approx(0.7814387708).epsilon(1e-8));
        CHECK(s.phi_deg == doctest::Approx(1.0647316174).epsilon(1e-7));
        CHECK(s.residual < 1e-6);
        attach_purcell_factors(s, pairs, kDefaultEtaDw);
        REQUIRE(s.per_emitter.size() == 2);
        CHECK(s.per_emitter[0].f_c == doctest::Approx(9.24390279).epsilon(1e-7));
        CHECK(s.per_emitter[0].f_d == doctest::Approx(8.90657237).epsilon(1e-7));
        CHECK(s.per_emitter[1].f_c == doctest::Approx(26.21215369).epsilon(1e-7));
        CHECK(s.per_emitter[1].f_d == doctest::Approx(5.12586619).epsilon(1e-7));
        CHECK(s.per_emitter[0].theta_deg == doctest::Approx(43.93526838).epsilon(1e-7));
        CHECK(s.per_emitter[1].theta_deg == doctest::Approx(11.06473162).epsilon(1e-7));
    }

    TEST_CASE("consensus over three emitters")
    {
        const std::vector<EnhancementPair> pairs{published_parallel(), published_angled(), published_second()};
        PurcellSolution s = solve_branching(pairs);
        CHECK(s.eta_br == doctest::Approx(0.7814386003).epsilon(1e-6));
        CHECK(s.residual == doctest::Approx(2.8399676618).epsilon(1e-6));
        attach_purcell_factors(s, pairs, kDefaultEtaDw);
        CHECK(s.per_emitter[2].f_c == doctest::Approx(1.04939159).epsilon(1e-6));
        CHECK(s.per_emitter[2].f_d == doctest::Approx(8.79418861).epsilon(1e-6));
    }

    TEST_CASE("pair root agrees with a brute-force scan within one grid step")
    {
        const PhiCurve a(published_parallel(), kDefaultEtaDw);
        const PhiCurve b(published_angled(), kDefaultEtaDw);
        const double step = 1e-5;
        double prev = NAN;
        double root = NAN;
        for (double eta = 0.01; eta <= 0.99; eta += step)
        {
            const double d = a.eval_or_nan(eta) - b.eval_or_nan(eta);
            if (std::isfinite(prev) && std::isfinite(d) && (prev < 0) != (d < 0))
            {
                root = eta;
                break;
            }
            prev = d;
        }
        REQUIRE(std::isfinite(root));
        const PurcellSolution s = solve_pair(a, b);
        CHECK(std::abs(s.eta_br - root) <= step);
    }

    TEST_CASE("consensus minimum agrees with a brute-force scan within one grid step")
    {
        const std::vector<PhiCurve> curves{PhiCurve(published_parallel(), kDefaultEtaDw),
                                           PhiCurve(published_angled(), kDefaultEtaDw),
                                           PhiCurve(published_second(), kDefaultEtaDw)};
        const double step = 1e-5;
        double best = INFINITY;
        double best_eta = NAN;
        for (double eta = 0.01; eta <= 0.99; eta += step)
        {
            const double v = consensus_objective(curves, eta);
            if (std::isfinite(v) && v < best)
            {
                best = v;
                best_eta = eta;
            }
        }
        const PurcellSolution s = solve_consensus(curves);
        CHECK(std::abs(s.eta_br - best_eta) <= step);
        CHECK(s.residual <= best + 1e-9);
    }

    TEST_CASE("exact forward ratios are recovered at the lowest admissible crossing")
    {
        std::mt19937_64 gen(2024);
        std::uniform_real_distribution<double> eta(0.1, 0.9), phi(-5.0, 5.0), f(1.5, 50.0);
        int unique = 0;
        for (int i = 0; i < 300; ++i)
        {
            const double e = eta(gen), p = phi(gen);
            const std::vector<EnhancementPair> pairs{forward(0.0, p, f(gen), 0.57, e),
                                                     forward(55.0, p, f(gen), 0.57, e)};
            const PhiCurve a(pairs[0], 0.57), b(pairs[1], 0.57);
            std::vector<double> crossings;
            double prev = NAN;
            for (double x = 0.01; x <= 0.99; x += 1e-4)
            {
                const double d = a.eval_or_nan(x) - b.eval_or_nan(x);
                if (std::isfinite(prev) && std::isfinite(d) && (prev < 0) != (d < 0))
                {
                    crossings.push_back(x);
                }
                prev = d;
            }
            const PurcellSolution s = solve_branching(pairs);
            REQUIRE(!crossings.empty());
            CHECK(std::abs(s.eta_br - crossings.front()) <= 1e-4);
            if (crossings.size() == 1)
            {
                ++unique;
                CHECK(s.eta_br == doctest::Approx(e).epsilon(1e-4));
                CHECK(std::abs(s.phi_deg - p) < 0.01);
            }
            else
            {
                bool truth_is_a_crossing = false;
                for (const double c : crossings)
                {
                    truth_is_a_crossing = truth_is_a_crossing || std::abs(c - e) <= 1e-4;
                }
                CHECK(truth_is_a_crossing);
            }
        }
        CHECK(unique >= 295);
    }

    TEST_CASE("phi curve of one pair")
    {
        CHECK(phi_of_eta(published_parallel(), 0.57, 0.5) == doctest::Approx(27.2059558495).epsilon(1e-9));
        const PhiCurve c(published_parallel(), 0.57);
        CHECK(c(0.7815) == doctest::Approx(phi_of_eta(published_parallel(), 0.57, 0.7815)));
        const auto samples = sample_phi_curve(c, SolverSettings{}, 1e-3);
        CHECK(samples.size() == 981);
        CHECK(samples.front().first == doctest::Approx(0.01));
        CHECK(samples.back().first == doctest::Approx(0.99));
    }

    TEST_CASE("identical curves are degenerate")
    {
        const PhiCurve a(published_parallel(), kDefaultEtaDw);
        CHECK_THROWS_AS(solve_pair(a, a), DegenerateError);
    }

    TEST_CASE("curves that never cross report both ends of the bracket")
    {
        EnhancementPair b = published_parallel();
        b.zeta_d = 1.2;
        b.label = "shifted";
        try
        {
            solve_pair(PhiCurve(published_parallel(), kDefaultEtaDw), PhiCurve(b, kDefaultEtaDw));
            FAIL("expected NoIntersectionError");
        }
        catch (const NoIntersectionError &e)
        {
            CHECK(e.lo_difference * e.hi_difference > 0.0);
        }
    }

    TEST_CASE("consensus needs two curves")
    {
        const std::vector<PhiCurve> one{PhiCurve(published_parallel(), kDefaultEtaDw)};
        CHECK_THROWS(solve_consensus(one));
    }

    TEST_CASE("uncertainty from one noisy ratio matches a direct central difference")
    {
        std::vector<EnhancementPair> pairs{published_parallel(), published_angled()};
        pairs[0].sigma_zeta_c = 0.05;
        PurcellSolution s = solve_branching(pairs);
        attach_purcell_factors(s, pairs, kDefaultEtaDw);
        s = propagate_uncertainty(s, pairs);
        REQUIRE(s.sigma_eta_br.has_value());
        REQUIRE(s.sigma_phi_deg.has_value());

        const double h = 1e-4 * pairs[0].zeta_c;
        auto plus = pairs, minus = pairs;
        plus[0].zeta_c += h;
        minus[0].zeta_c -= h;
        const auto sp = solve_branching(plus);
        const auto sm = solve_branching(minus);
        CHECK(*s.sigma_eta_br == doctest::Approx(std::abs(sp.eta_br - sm.eta_br) / (2 * h) * 0.05).epsilon(1e-3));
        CHECK(*s.sigma_phi_deg == doctest::Approx(std::abs(sp.phi_deg - sm.phi_deg) / (2 * h) * 0.05).epsilon(1e-3));
        CHECK(s.per_emitter[0].sigma_f_c.has_value());
    }

    TEST_CASE("zero input sigmas give zero propagated sigma")
    {
        const std::vector<EnhancementPair> pairs{published_parallel(), published_angled()};
        PurcellSolution s = solve_branching(pairs);
        s = propagate_uncertainty(s, pairs);
        REQUIRE(s.sigma_eta_br.has_value());
        CHECK(*s.sigma_eta_br == 0.0);
    }
}
