#include "purcell/model.hpp"

#include "purcell/errors.hpp"

#include <cmath>

namespace purcell
{
void DeviceGeometry::validate() const
{
    if (!(pattern_angle_deg >= 0.0 && pattern_angle_deg < 90.0))
    {
        throw DomainError("pattern angle must lie in [0, 90) degrees");
    }
    if (!std::isfinite(fab_offset_deg))
    {
        throw DomainError("fabrication offset must be finite");
    }
    if (quality_factor && !(*quality_factor > 0.0))
    {
        throw DomainError("quality factor must be positive");
    }
}

double fold_angle_deg(double angle_deg)
{
    double folded = std::fmod(std::abs(angle_deg), 180.0);
    if (folded > 90.0)
    {
        folded = 180.0 - folded;
    }
    return folded;
}

double nominal_theta_deg(const DeviceGeometry &geometry)
{
    double theta = 45.0 - geometry.pattern_angle_deg;
    if (geometry.dipole_family == DipoleFamily::orthogonal)
    {
        theta += 90.0;
    }
    return theta;
}

double theta_from_geometry(const DeviceGeometry &geometry)
{
    return fold_angle_deg(nominal_theta_deg(geometry) - geometry.fab_offset_deg);
}

// The fold is piecewise linear; the branch is fixed by where the zero-offset
// angle lands: [0,90] keeps theta = t0 - phi, below 0 mirrors to phi - t0,
// above 90 reflects to 180 - t0 + phi.
double phi_from_theta(const DeviceGeometry &geometry, double theta_deg)
{
    const double t0 = nominal_theta_deg(geometry);
    if (t0 < 0.0)
    {
        return theta_deg + t0;
    }
    if (t0 > 90.0)
    {
        return theta_deg - 180.0 + t0;
    }
    return t0 - theta_deg;
}

} // namespace purcell
