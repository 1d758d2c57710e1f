#include "mgprot/superimposed.hpp"

#include <cmath>
#include <string>

namespace mgp {

DeltaPair delta(Phasor fault, Phasor prefault) { return DeltaPair(fault, prefault); }

std::optional<Phasor> delta_z2(Phasor v2f, Phasor v2pre, Phasor i2f, Phasor i2pre) {
    const Phasor dv = v2f - v2pre;
    const Phasor di = i2f - i2pre;
    if (di.magnitude() < kEpsilonI) return std::nullopt;
    return dv / di;
}

AdmittanceMeasurement delta_y2(Phasor v2f, Phasor v2pre, Phasor i2f, Phasor i2pre) {
    const Phasor dv = v2f - v2pre;
    const Phasor di = i2f - i2pre;
    AdmittanceMeasurement m;
    m.dv_magnitude = dv.magnitude();
    m.valid = m.dv_magnitude >= kEpsilonV;
    if (m.valid) m.value = di / dv;
    return m;
}

double impact_factor(Phasor delta_i1f, Phasor i1pre) {
    const double d = delta_i1f.magnitude();
    if (d < kEpsilonI) {
        throw UndefinedRatio("impact factor undefined: |dI1f| = " + std::to_string(d));
    }
    return (d - i1pre.magnitude()) / d;
}

double adaptive_fault_current(Phasor i1f, Phasor i2f, Phasor i0f, double k) {
    if (!std::isfinite(k)) throw std::invalid_argument("impact factor must be finite");
    return (i1f.magnitude() + i2f.magnitude() + i0f.magnitude()) * k;
}

}  // namespace mgp
