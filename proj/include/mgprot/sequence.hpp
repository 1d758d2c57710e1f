#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace mgp {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSqrt2 = 1.41421356237309504880;
inline constexpr double kSqrt3 = 1.73205080756887729353;

/// Normalizes an angle in degrees to (-180, 180].
double normalize_deg(double deg);

/// Complex RMS quantity in per-unit. Stored rectangular; polar view in degrees.
class Phasor {
public:
    constexpr Phasor() = default;
    constexpr Phasor(double re, double im) : value_(re, im) {}
    constexpr Phasor(Complex value) : value_(value) {}  // NOLINT(google-explicit-constructor)

    static Phasor polar(double magnitude, double angle_deg);

    constexpr double re() const { return value_.real(); }
    constexpr double im() const { return value_.imag(); }
    constexpr Complex value() const { return value_; }

    double magnitude() const { return std::abs(value_); }
    /// Angle in degrees, normalized to (-180, 180]. Zero phasor reports 0.
    double angle_deg() const;

    friend Phasor operator+(Phasor a, Phasor b) { return a.value_ + b.value_; }
    friend Phasor operator-(Phasor a, Phasor b) { return a.value_ - b.value_; }
    friend Phasor operator*(Phasor a, Phasor b) { return a.value_ * b.value_; }
    friend Phasor operator/(Phasor a, Phasor b) { return a.value_ / b.value_; }
    friend Phasor operator*(double s, Phasor a) { return s * a.value_; }
    friend Phasor operator*(Phasor a, double s) { return a.value_ * s; }
    Phasor operator-() const { return -value_; }
    Phasor& operator+=(Phasor o) { value_ += o.value_; return *this; }
    Phasor& operator-=(Phasor o) { value_ -= o.value_; return *this; }

private:
    Complex value_{};
};

struct ThreePhaseSet {
    Phasor a;
    Phasor b;
    Phasor c;

    Phasor operator[](std::size_t phase) const { return phase == 0 ? a : (phase == 1 ? b : c); }
    Phasor& operator[](std::size_t phase) { return phase == 0 ? a : (phase == 1 ? b : c); }

    friend ThreePhaseSet operator+(const ThreePhaseSet& x, const ThreePhaseSet& y) {
        return {x.a + y.a, x.b + y.b, x.c + y.c};
    }
    friend ThreePhaseSet operator-(const ThreePhaseSet& x, const ThreePhaseSet& y) {
        return {x.a - y.a, x.b - y.b, x.c - y.c};
    }
    friend ThreePhaseSet operator*(Complex s, const ThreePhaseSet& x) {
        return {s * x.a.value(), s * x.b.value(), s * x.c.value()};
    }
};

/// Symmetrical components, index 0 = zero, 1 = positive, 2 = negative.
struct SequenceSet {
    Phasor zero;
    Phasor positive;
    Phasor negative;

    Phasor operator[](std::size_t seq) const { return seq == 0 ? zero : (seq == 1 ? positive : negative); }
    Phasor& operator[](std::size_t seq) { return seq == 0 ? zero : (seq == 1 ? positive : negative); }

    friend SequenceSet operator+(const SequenceSet& x, const SequenceSet& y) {
        return {x.zero + y.zero, x.positive + y.positive, x.negative + y.negative};
    }
    friend SequenceSet operator-(const SequenceSet& x, const SequenceSet& y) {
        return {x.zero - y.zero, x.positive - y.positive, x.negative - y.negative};
    }
    friend SequenceSet operator*(Complex s, const SequenceSet& x) {
        return {s * x.zero.value(), s * x.positive.value(), s * x.negative.value()};
    }
};

enum class Sequence { Zero = 0, Positive = 1, Negative = 2 };

/// The 120 degree rotation operator a = 1∠120°, from exact constants.
inline constexpr Complex kA{-0.5, kSqrt3 / 2.0};
inline constexpr Complex kA2{-0.5, -kSqrt3 / 2.0};

/// Fortescue transform, ABC rotation, phase a as reference.
SequenceSet to_sequence(const ThreePhaseSet& abc);
ThreePhaseSet from_sequence(const SequenceSet& seq);

/// Sampled instantaneous signal at a fixed rate.
struct WaveformChannel {
    std::vector<double> samples;
    double rate = 0.0;        // samples per second
    double f_nominal = 60.0;  // Hz

    /// Samples per nominal cycle; throws if rate / f_nominal is not a whole number >= 8.
    std::size_t samples_per_cycle() const;
};

/// Whole samples per cycle for the given rate, or throws std::invalid_argument.
std::size_t checked_samples_per_cycle(double rate, double f_nominal);

/// x[n] = sqrt(2)|p| cos(2π f n / rate + arg p), n = 0 .. cycles*N - 1.
WaveformChannel synthesize_waveform(Phasor p, double rate, std::size_t cycles, double f_nominal = 60.0);

/// Instantaneous value of an RMS phasor at sample index n (global time origin).
double instantaneous(Phasor p, std::size_t n, std::size_t samples_per_cycle);

}  // namespace mgp
