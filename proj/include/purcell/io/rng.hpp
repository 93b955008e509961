#ifndef PURCELL_IO_RNG_HPP
#define PURCELL_IO_RNG_HPP

#include <cstdint>
#include <random>

namespace purcell::io
{
// Portable seeded generator for synthetic fixtures.
//
// Engine: std::mt19937_64, whose output sequence is fixed by the standard.
// The distributions below are implemented here rather than taken from
// <random>, whose distribution algorithms differ between standard libraries:
//   uniform     (engine() >> 11) * 2^-53, in [0, 1)
//   exponential -log(1 - u) / rate
//   normal      Box-Muller, second variate cached
//   poisson     Knuth multiplication for mean < 30, PTRS (Hormann 1993) above
class Rng
{
public:
    static constexpr const char *kAlgorithm = "mt19937_64+box-muller+ptrs";

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double exponential(double rate);
    double normal();
    double normal(double mean, double sigma) { return mean + sigma * normal(); }
    std::uint64_t poisson(double mean);
    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// SplitMix64 finalizer; derives independent stream seeds from (seed, a, b).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

} // namespace purcell::io

#endif // PURCELL_IO_RNG_HPP
