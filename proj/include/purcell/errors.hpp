#ifndef PURCELL_ERRORS_HPP
#define PURCELL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace purcell
{
// Argument outside the mathematical domain of an operation
// (non-positive lifetime, fraction outside (0,1), negative Purcell factor, ...).
class DomainError : public std::domain_error
{
public:
    using std::domain_error::domain_error;
};

// Branching parameters so close to 0 or 1 that a projection denominator vanishes.
class DegenerateError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// Solver could not find a crossing of the phi(eta) curves on its bracket.
class NoIntersectionError : public std::runtime_error
{
public:
    NoIntersectionError(const std::string &what, double lo_diff, double hi_diff)
        : std::runtime_error(what), lo_difference(lo_diff), hi_difference(hi_diff)
    {
    }

    double lo_difference; // phi_a - phi_b at the bracket low end (degrees)
    double hi_difference; // phi_a - phi_b at the bracket high end (degrees)
};

// Fit-level failures: under-resolved features, too few samples, singular normal matrix.
class FitError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// Malformed input files and configuration.
class ParseError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

} // namespace purcell

#endif // PURCELL_ERRORS_HPP
