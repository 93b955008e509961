#include "purcell/io/rng.hpp"

#include "purcell/errors.hpp"

#include <cmath>
#include <numbers>

namespace purcell::io
{
double Rng::uniform()
{
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::exponential(double rate)
{
    if (!(rate > 0.0))
    {
        throw DomainError("exponential rate must be positive");
    }
    return -std::log1p(-uniform()) / rate;
}

double Rng::normal()
{
    if (have_spare_)
    {
        have_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0)
    {
        u1 = uniform();
    }
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(angle);
    have_spare_ = true;
    return r * std::cos(angle);
}

std::uint64_t Rng::poisson(double mean)
{
    if (!(mean >= 0.0) || !std::isfinite(mean))
    {
        throw DomainError("Poisson mean must be finite and non-negative");
    }
    if (mean == 0.0)
    {
        return 0;
    }
    if (mean < 30.0)
    {
        const double limit = std::exp(-mean);
        double product = uniform();
        std::uint64_t k = 0;
        while (product > limit)
        {
            product *= uniform();
            ++k;
        }
        return k;
    }

    // PTRS transformed rejection
    const double smu = std::sqrt(mean);
    const double b = 0.931 + 2.53 * smu;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    const double log_mean = std::log(mean);
    while (true)
    {
        const double u = uniform() - 0.5;
        const double v = uniform();
        const double us = 0.5 - std::abs(u);
        const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= vr)
        {
            return static_cast<std::uint64_t>(k);
        }
        if (k < 0.0 || (us < 0.013 && v > us))
        {
            continue;
        }
        if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
            -mean + k * log_mean - std::lgamma(k + 1.0))
        {
            return static_cast<std::uint64_t>(k);
        }
    }
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b)
{
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(seed) ^ a) ^ (b * 0xd1b54a32d192ed03ULL));
}

} // namespace purcell::io
