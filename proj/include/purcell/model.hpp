#ifndef PURCELL_MODEL_HPP
#define PURCELL_MODEL_HPP

#include <optional>
#include <string>
#include <vector>

namespace purcell
{
// Debye-Waller factor of the SnV- ZPL. Every API takes eta_dw explicitly;
// this is only the default used by configs and the CLI.
inline constexpr double kDefaultEtaDw = 0.57;

// Intrinsic (uncoupled) emission rates of one two-transition emitter, in 1/ns.
// The Debye-Waller factor and branching ratio are derived from the rates so
// the two parameterizations can never disagree.
struct EmitterPhysics
{
    double gamma_c = 0.0;   // C transition (ZPL)
    double gamma_d = 0.0;   // D transition (ZPL)
    double gamma_psb = 0.0; // phonon sideband, never cavity-enhanced

    static EmitterPhysics from_fractions(double gamma0, double eta_dw, double eta_br);

    double gamma0() const { return gamma_c + gamma_d + gamma_psb; }
    double eta_dw() const { return (gamma_c + gamma_d) / gamma0(); }
    double eta_br() const { return gamma_c / (gamma_c + gamma_d); }

    // Throws DomainError unless rates are >= 0 and both fractions lie in (0,1).
    void validate() const;
};

enum class DipoleFamily
{
    primary,
    orthogonal, // dipole pair rotated by 90 degrees relative to the primary emitters
};

struct DeviceGeometry
{
    double pattern_angle_deg = 0.0; // cavity pattern vs <100>: 0 parallel, 55 angled
    double fab_offset_deg = 0.0;    // global lithography offset phi
    DipoleFamily dipole_family = DipoleFamily::primary;
    std::optional<double> quality_factor;
    std::optional<double> resonance_wavelength_nm;
    std::optional<double> mode_volume; // (lambda/n)^3, informational only

    void validate() const;
};

// Measured on/off-resonance rate ratios for one emitter in one device.
struct EnhancementPair
{
    double zeta_c = 1.0;
    double zeta_d = 1.0;
    double sigma_zeta_c = 0.0;
    double sigma_zeta_d = 0.0;
    DeviceGeometry geometry;
    std::string label;
};

struct PurcellFactors
{
    double f_c = 1.0;
    double f_d = 1.0;
};

struct EmitterSolution
{
    std::string label;
    double theta_deg = 0.0;
    double f_total = 0.0; // F with f_c = F cos(theta), f_d = F sin(theta)
    double f_c = 0.0;
    double f_d = 0.0;
    std::optional<double> sigma_f_c;
    std::optional<double> sigma_f_d;
};

struct PurcellSolution
{
    double eta_br = 0.0;
    double phi_deg = 0.0;
    // Mean absolute pairwise spread of the phi curves at eta_br (0 for an exact crossing).
    double residual = 0.0;
    std::optional<double> sigma_eta_br;
    std::optional<double> sigma_phi_deg;
    std::vector<EmitterSolution> per_emitter;
    std::vector<std::string> warnings;
};

/// Spontaneous-emission rate of a lifetime, 1/tau. Throws DomainError for tau <= 0.
double rate_from_lifetime(double tau_ns);

/// Uncoupled emission rate: C + D + sideband.
double bulk_rate(const EmitterPhysics &physics);

/// Cavity-coupled emission rate f_c*gamma_c + f_d*gamma_d + gamma_psb.
/// Unit Purcell factors reproduce bulk_rate() exactly.
double total_rate(const EmitterPhysics &physics, double f_c, double f_d);

/// Coupled/uncoupled rate ratio zeta in terms of the fractional parameters.
double enhancement_ratio(double f_c, double f_d, double eta_dw, double eta_br);

/// Inverts enhancement_ratio for each transition with the opposite factor pinned to 1.
PurcellFactors purcell_from_zeta(double zeta_c, double zeta_d, double eta_dw, double eta_br);
PurcellFactors purcell_from_zeta(const EnhancementPair &pair, double eta_dw, double eta_br);

/// tan(theta) = F_D / F_C written directly in the measured ratios.
double tan_theta(const EnhancementPair &pair, double eta_dw, double eta_br);

/// Unsigned dipole/cavity-mode angle implied by the device geometry, in [0, 90] degrees.
double theta_from_geometry(const DeviceGeometry &geometry);

/// Folds any signed angle onto the unsigned range [0, 90] degrees.
double fold_angle_deg(double angle_deg);

/// Signed dipole/mode angle for the geometry at zero fabrication offset,
/// i.e. 45 - pattern (+90 for the orthogonal family). Determines the branch
/// used when inverting theta back to phi.
double nominal_theta_deg(const DeviceGeometry &geometry);

/// Fabrication offset that places the geometry's dipole at the unsigned angle theta.
double phi_from_theta(const DeviceGeometry &geometry, double theta_deg);

/// Lifetime-limited Lorentzian FWHM 1/(2 pi tau), in MHz.
double fourier_limit_linewidth_mhz(double tau_ns);

/// Lowest admissible zeta_c (F_c >= 0, F_d = 1) is 1 - eta_dw; throws DomainError below it.
void check_zeta_floor(const EnhancementPair &pair, double eta_dw);

// Validation shared by the fractional-parameter operations.
void check_fraction(double value, const char *name);

} // namespace purcell

#endif // PURCELL_MODEL_HPP
