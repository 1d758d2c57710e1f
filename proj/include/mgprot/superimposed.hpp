#pragma once

#include <optional>
#include <stdexcept>

#include "mgprot/sequence.hpp"

namespace mgp {

/// Division guards for incremental ratios (per-unit).
inline constexpr double kEpsilonV = 1e-4;
inline constexpr double kEpsilonI = 1e-4;

/// Faulted value, prefault value and their difference.
class DeltaPair {
public:
    DeltaPair(Phasor fault, Phasor prefault) : fault_(fault), prefault_(prefault), delta_(fault - prefault) {}

    Phasor fault() const { return fault_; }
    Phasor prefault() const { return prefault_; }
    Phasor delta() const { return delta_; }

private:
    Phasor fault_;
    Phasor prefault_;
    Phasor delta_;
};

DeltaPair delta(Phasor fault, Phasor prefault);

/// Incremental negative-sequence admittance. `value` is meaningless when !valid.
struct AdmittanceMeasurement {
    Phasor value;
    double dv_magnitude = 0.0;
    bool valid = false;
};

/// ΔZ2 = ΔV2 / ΔI2, or nullopt when |ΔI2| < kEpsilonI.
std::optional<Phasor> delta_z2(Phasor v2f, Phasor v2pre, Phasor i2f, Phasor i2pre);

/// ΔY2 = ΔI2 / ΔV2; invalid when |ΔV2| < kEpsilonV.
AdmittanceMeasurement delta_y2(Phasor v2f, Phasor v2pre, Phasor i2f, Phasor i2pre);

class UndefinedRatio : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// DG impact factor k = (|ΔI1f| - |I1pre|) / |ΔI1f|, magnitudes only.
/// Throws UndefinedRatio when |ΔI1f| < kEpsilonI.
double impact_factor(Phasor delta_i1f, Phasor i1pre);

/// |If| = (|I1f| + |I2f| + |I0f|) * k.
double adaptive_fault_current(Phasor i1f, Phasor i2f, Phasor i0f, double k);

}  // namespace mgp
