#include "mgprot/sequence.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mgp {

double normalize_deg(double deg) {
    double r = std::fmod(deg, 360.0);
    if (r <= -180.0) r += 360.0;
    if (r > 180.0) r -= 360.0;
    return r;
}

Phasor Phasor::polar(double magnitude, double angle_deg) {
    return Phasor(std::polar(magnitude, angle_deg * kPi / 180.0));
}

double Phasor::angle_deg() const {
    if (value_ == Complex{}) return 0.0;
    return normalize_deg(std::arg(value_) * 180.0 / kPi);
}

SequenceSet to_sequence(const ThreePhaseSet& abc) {
    const Complex a = abc.a.value(), b = abc.b.value(), c = abc.c.value();
    return {
        (a + b + c) / 3.0,
        (a + kA * b + kA2 * c) / 3.0,
        (a + kA2 * b + kA * c) / 3.0,
    };
}

ThreePhaseSet from_sequence(const SequenceSet& seq) {
    const Complex s0 = seq.zero.value(), s1 = seq.positive.value(), s2 = seq.negative.value();
    return {
        s0 + s1 + s2,
        s0 + kA2 * s1 + kA * s2,
        s0 + kA * s1 + kA2 * s2,
    };
}

std::size_t checked_samples_per_cycle(double rate, double f_nominal) {
    if (!(rate > 0.0) || !(f_nominal > 0.0)) {
        throw std::invalid_argument("sample rate and nominal frequency must be positive");
    }
    const double n = rate / f_nominal;
    const double rounded = std::round(n);
    if (std::abs(n - rounded) > 1e-9 * n || rounded < 8.0) {
        throw std::invalid_argument("sample rate " + std::to_string(rate) +
                                    " is not a whole multiple (>= 8) of " + std::to_string(f_nominal) + " Hz");
    }
    return static_cast<std::size_t>(rounded);
}

std::size_t WaveformChannel::samples_per_cycle() const { return checked_samples_per_cycle(rate, f_nominal); }

double instantaneous(Phasor p, std::size_t n, std::size_t samples_per_cycle) {
    // Reduce n modulo N first so the phase argument stays small over long runs.
    const auto k = static_cast<double>(n % samples_per_cycle);
    const double theta = 2.0 * kPi * k / static_cast<double>(samples_per_cycle);
    return kSqrt2 * (p.re() * std::cos(theta) - p.im() * std::sin(theta));
}

WaveformChannel synthesize_waveform(Phasor p, double rate, std::size_t cycles, double f_nominal) {
    if (cycles < 1) throw std::invalid_argument("cycles must be >= 1");
    const std::size_t n_cycle = checked_samples_per_cycle(rate, f_nominal);
    WaveformChannel ch;
    ch.rate = rate;
    ch.f_nominal = f_nominal;
    ch.samples.resize(cycles * n_cycle);
    for (std::size_t n = 0; n < ch.samples.size(); ++n) ch.samples[n] = instantaneous(p, n, n_cycle);
    return ch;
}

}  // namespace mgp
