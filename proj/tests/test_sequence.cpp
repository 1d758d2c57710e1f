#include "doctest.h"

#include "mgprot/sequence.hpp"
#include "oracle.hpp"

using namespace mgp;

namespace {

void check_close(Phasor got, Phasor want, double tol = 1e-12) {
    CHECK((got - want).magnitude() <= tol * std::max(1.0, want.magnitude()));
}

}  // namespace

TEST_CASE("phasor polar form and angle normalization") {
    const Phasor p = Phasor::polar(2.0, 180.0);
    CHECK(p.magnitude() == doctest::Approx(2.0));
    CHECK(p.angle_deg() == doctest::Approx(180.0));
    CHECK(Phasor::polar(1.0, -180.0).angle_deg() == doctest::Approx(180.0));
    CHECK(Phasor::polar(1.0, 540.0).angle_deg() == doctest::Approx(180.0));
    CHECK(Phasor::polar(1.0, -90.0).angle_deg() == doctest::Approx(-90.0));
    CHECK(Phasor().angle_deg() == 0.0);
    CHECK(normalize_deg(-180.0) == 180.0);
    CHECK(normalize_deg(190.0) == doctest::Approx(-170.0));
    CHECK(normalize_deg(720.0) == doctest::Approx(0.0));
}

TEST_CASE("polar and rectangular round trip") {
    oracle::Rng rng(11);
    for (int k = 0; k < 1000; ++k) {
        const double mag = rng.uniform(1e-3, 100.0);
        const double ang = rng.uniform(-179.999, 180.0);
        const Phasor p = Phasor::polar(mag, ang);
        const Phasor back = Phasor::polar(p.magnitude(), p.angle_deg());
        CHECK((back - p).magnitude() <= 1e-12 * mag);
        CHECK(p.magnitude() >= 0.0);
        CHECK(p.angle_deg() > -180.0);
        CHECK(p.angle_deg() <= 180.0);
    }
}

TEST_CASE("rotation operator uses exact constants") {
    CHECK(std::abs(kA - std::polar(1.0, 2.0 * kPi / 3.0)) < 1e-15);
    CHECK(std::abs(kA * kA - kA2) < 1e-15);
    CHECK(std::abs(1.0 + kA + kA2) < 1e-15);
}

TEST_CASE("to_sequence examples") {
    const auto pos = to_sequence({Phasor::polar(1, 0), Phasor::polar(1, -120), Phasor::polar(1, 120)});
    check_close(pos.zero, Phasor());
    check_close(pos.positive, Phasor(1.0, 0.0));
    check_close(pos.negative, Phasor());

    const auto zero = to_sequence({Phasor(1, 0), Phasor(1, 0), Phasor(1, 0)});
    check_close(zero.zero, Phasor(1.0, 0.0));
    check_close(zero.positive, Phasor());
    check_close(zero.negative, Phasor());

    const auto single = to_sequence({Phasor(1, 0), Phasor(), Phasor()});
    for (std::size_t s = 0; s < 3; ++s) check_close(single[s], Phasor(1.0 / 3.0, 0.0));
}

TEST_CASE("from_sequence examples") {
    const auto abc = from_sequence({Phasor(), Phasor(1, 0), Phasor()});
    check_close(abc.a, Phasor(1.0, 0.0));
    check_close(abc.b, Phasor::polar(1, -120));
    check_close(abc.c, Phasor::polar(1, 120));

    const auto third = from_sequence({Phasor(1.0 / 3, 0), Phasor(1.0 / 3, 0), Phasor(1.0 / 3, 0)});
    check_close(third.a, Phasor(1.0, 0.0));
    check_close(third.b, Phasor());
    check_close(third.c, Phasor());

    const auto nil = from_sequence({});
    for (std::size_t p = 0; p < 3; ++p) CHECK(nil[p].magnitude() == 0.0);
}

TEST_CASE("transform matches the textbook matrix oracle") {
    oracle::Rng rng(12);
    for (int k = 0; k < 1000; ++k) {
        const auto x = rng.three(5.0);
        const auto got = to_sequence(x);
        const auto want = oracle::fortescue(x);
        for (std::size_t s = 0; s < 3; ++s) check_close(got[s], want[s]);
        const auto s = SequenceSet{rng.phasor(5.0), rng.phasor(5.0), rng.phasor(5.0)};
        const auto inv = from_sequence(s);
        const auto inv_want = oracle::inverse_fortescue(s);
        for (std::size_t p = 0; p < 3; ++p) check_close(inv[p], inv_want[p]);
    }
}

TEST_CASE("round trip both ways over random sets") {
    oracle::Rng rng(13);
    for (int k = 0; k < 1000; ++k) {
        const auto x = rng.three(10.0);
        const auto back = from_sequence(to_sequence(x));
        for (std::size_t p = 0; p < 3; ++p) check_close(back[p], x[p]);
        const SequenceSet s{rng.phasor(10.0), rng.phasor(10.0), rng.phasor(10.0)};
        const auto again = to_sequence(from_sequence(s));
        for (std::size_t q = 0; q < 3; ++q) check_close(again[q], s[q]);
    }
}

TEST_CASE("transform is linear") {
    oracle::Rng rng(14);
    for (int k = 0; k < 1000; ++k) {
        const auto x = rng.three(3.0);
        const auto y = rng.three(3.0);
        const Complex alpha = rng.phasor(2.0).value(), beta = rng.phasor(2.0).value();
        const auto lhs = to_sequence(alpha * x + beta * y);
        const auto rhs = alpha * to_sequence(x) + beta * to_sequence(y);
        for (std::size_t s = 0; s < 3; ++s) check_close(lhs[s], rhs[s]);
    }
}

TEST_CASE("balanced positive-sequence sets have no zero or negative component") {
    oracle::Rng rng(15);
    for (int k = 0; k < 1000; ++k) {
        const Phasor va = rng.phasor(10.0);
        const auto s = to_sequence({va, va * Phasor(kA2), va * Phasor(kA)});
        CHECK(s.zero.magnitude() <= 1e-12 * std::max(1.0, va.magnitude()));
        CHECK(s.negative.magnitude() <= 1e-12 * std::max(1.0, va.magnitude()));
    }
}

TEST_CASE("synthesize_waveform") {
    const auto w = synthesize_waveform(Phasor(1, 0), 1920.0, 1);
    REQUIRE(w.samples.size() == 32);
    CHECK(w.samples[0] == doctest::Approx(kSqrt2).epsilon(1e-15));
    CHECK(w.samples_per_cycle() == 32);

    const auto z = synthesize_waveform(Phasor(), 3840.0, 3);
    CHECK(z.samples.size() == 192);
    for (double x : z.samples) CHECK(x == 0.0);

    // -90 degrees at quarter-cycle points: 0, sqrt2, 0, -sqrt2.
    const Phasor p = Phasor::polar(1.0, -90.0);
    const double want[4] = {0.0, kSqrt2, 0.0, -kSqrt2};
    for (std::size_t n = 0; n < 4; ++n) CHECK(instantaneous(p, n, 4) == doctest::Approx(want[n]).epsilon(1e-12).scale(1));
    // The channel itself needs N >= 8; at N = 8 every second sample hits the same points.
    const auto w8 = synthesize_waveform(p, 480.0, 1);
    for (std::size_t n = 0; n < 4; ++n) CHECK(w8.samples[2 * n] == doctest::Approx(want[n]).scale(1));

    oracle::Rng rng(16);
    for (int k = 0; k < 50; ++k) {
        const Phasor q = rng.phasor(5.0);
        const auto ch = synthesize_waveform(q, 1920.0, 2);
        for (std::size_t n = 0; n < ch.samples.size(); ++n) {
            const double t = 2.0 * kPi * 60.0 * static_cast<double>(n) / 1920.0;
            CHECK(ch.samples[n] ==
                  doctest::Approx(kSqrt2 * q.magnitude() * std::cos(t + q.angle_deg() * kPi / 180.0)).scale(1));
        }
    }
}

TEST_CASE("synthesize_waveform rejects bad rates") {
    CHECK_THROWS_AS(synthesize_waveform(Phasor(1, 0), 1000.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(synthesize_waveform(Phasor(1, 0), 240.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(synthesize_waveform(Phasor(1, 0), 1920.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(checked_samples_per_cycle(1920.0, 0.0), std::invalid_argument);
    CHECK(checked_samples_per_cycle(1600.0, 50.0) == 32);
}
