#include "doctest.h"

#include <array>

#include "mgprot/estimator.hpp"
#include "oracle.hpp"

using namespace mgp;

namespace {

EstimatorConfig cfg(std::size_t n = 32, std::size_t memory = 2) {
    EstimatorConfig c;
    c.samples_per_cycle = n;
    c.memory_cycles = memory;
    return c;
}

// Feeds a three-phase terminal (same waveform on v and i, scaled for i) through a
// sliding estimator and records the per-sample history.
PhasorHistory run_history(const std::array<std::vector<double>, 3>& x, const EstimatorConfig& c,
                          std::vector<TerminalPhasors>* all = nullptr) {
    PhasorHistory h((c.memory_cycles + 1) * c.samples_per_cycle + 1);
    SlidingEstimator est(6, c);
    std::array<double, 6> s{};
    for (std::size_t n = 0; n < x[0].size(); ++n) {
        for (std::size_t p = 0; p < 3; ++p) {
            s[p] = x[p][n];
            s[3 + p] = 0.5 * x[p][n];
        }
        if (const auto ph = est.step(s)) {
            TerminalPhasors t;
            t.time = static_cast<double>(n) / c.sample_rate();
            t.v = {(*ph)[0], (*ph)[1], (*ph)[2]};
            t.i = {(*ph)[3], (*ph)[4], (*ph)[5]};
            h.push(t);
            if (all) all->push_back(t);
        }
    }
    return h;
}

std::array<std::vector<double>, 3> balanced(Phasor va, std::size_t cycles, std::size_t n) {
    std::array<std::vector<double>, 3> x;
    const Phasor set[3] = {va, va * Phasor(kA2), va * Phasor(kA)};
    for (std::size_t p = 0; p < 3; ++p) {
        for (std::size_t k = 0; k < cycles * n; ++k) x[p].push_back(instantaneous(set[p], k, n));
    }
    return x;
}

}  // namespace

TEST_CASE("config invariants") {
    CHECK_NOTHROW(cfg().validate());
    CHECK_THROWS_AS(cfg(4).validate(), std::invalid_argument);
    CHECK_THROWS_AS(cfg(32, 0).validate(), std::invalid_argument);
    CHECK(cfg(32).sample_rate() == 1920.0);
}

TEST_CASE("estimate_phasor examples") {
    const auto c = cfg();
    const auto one = synthesize_waveform(Phasor(1, 0), 1920.0, 1);
    CHECK(oracle::rel_err(estimate_phasor(one.samples, c), Phasor(1, 0)) <= 1e-10);

    const std::vector<double> zeros(32, 0.0);
    CHECK(estimate_phasor(zeros, c).magnitude() == 0.0);

    const Phasor p = Phasor::polar(2.5, 37.0);
    const auto w = synthesize_waveform(p, 1920.0, 1);
    CHECK(oracle::rel_err(estimate_phasor(w.samples, c), p) <= 1e-10);

    CHECK_THROWS_AS(estimate_phasor(std::vector<double>(31, 0.0), c), std::invalid_argument);
}

TEST_CASE("estimate_phasor matches brute-force DFT and round-trips random phasors") {
    oracle::Rng rng(21);
    for (std::size_t n : {8u, 16u, 32u, 64u}) {
        const auto c = cfg(n);
        for (int k = 0; k < 100; ++k) {
            const Phasor p = rng.phasor(10.0);
            const auto w = synthesize_waveform(p, 60.0 * static_cast<double>(n), 1);
            const Phasor got = estimate_phasor(w.samples, c);
            CHECK(oracle::rel_err(got, p) <= 1e-10);
            CHECK(oracle::rel_err(got, oracle::dft(w.samples, 0, n)) <= 1e-12);
        }
    }
}

TEST_CASE("estimator is linear") {
    oracle::Rng rng(22);
    const auto c = cfg();
    for (int k = 0; k < 100; ++k) {
        std::vector<double> x(32), y(32), z(32);
        const double alpha = rng.uniform(-3, 3), beta = rng.uniform(-3, 3);
        for (std::size_t n = 0; n < 32; ++n) {
            x[n] = rng.uniform(-1, 1);
            y[n] = rng.uniform(-1, 1);
            z[n] = alpha * x[n] + beta * y[n];
        }
        const Phasor lhs = estimate_phasor(z, c);
        const Phasor rhs = alpha * estimate_phasor(x, c) + beta * estimate_phasor(y, c);
        CHECK((lhs - rhs).magnitude() <= 1e-12);
    }
}

TEST_CASE("sliding estimator warm-up and steady output") {
    const auto c = cfg();
    SlidingEstimator est(1, c);
    const auto w = synthesize_waveform(Phasor(1, 0), 1920.0, 2);
    for (std::size_t n = 0; n < 31; ++n) {
        const double x = w.samples[n];
        CHECK_FALSE(est.step(std::span<const double>(&x, 1)).has_value());
    }
    std::size_t emitted = 0;
    for (std::size_t n = 31; n < 64; ++n) {
        const double x = w.samples[n];
        const auto out = est.step(std::span<const double>(&x, 1));
        REQUIRE(out.has_value());
        CHECK(oracle::rel_err((*out)[0], Phasor(1, 0)) <= 1e-10);
        ++emitted;
    }
    CHECK(emitted == 33);
    CHECK(est.samples_seen() == 64);
    CHECK(est.time() == doctest::Approx(63.0 / 1920.0));
    const double bad[2] = {0.0, 0.0};
    CHECK_THROWS_AS(est.step(std::span<const double>(bad, 2)), std::invalid_argument);
    est.reset();
    CHECK(est.samples_seen() == 0);
}

TEST_CASE("sliding estimator agrees with brute-force DFT on arbitrary signals") {
    oracle::Rng rng(23);
    const auto c = cfg(16);
    std::vector<double> x(200);
    for (auto& v : x) v = rng.uniform(-2, 2);
    SlidingEstimator est(1, c);
    for (std::size_t n = 0; n < x.size(); ++n) {
        const auto out = est.step(std::span<const double>(&x[n], 1));
        if (n + 1 < 16) continue;
        REQUIRE(out.has_value());
        CHECK(oracle::rel_err((*out)[0], oracle::dft(x, n + 1 - 16, 16)) <= 1e-12);
    }
}

TEST_CASE("step change settles in exactly one cycle") {
    oracle::Rng rng(24);
    const std::size_t n = 32;
    for (int trial = 0; trial < 20; ++trial) {
        const Phasor before = rng.phasor(3.0), after = rng.phasor(3.0) + Phasor(1.0, 0.0);
        const std::size_t k = 40 + static_cast<std::size_t>(rng.uniform(0, 30));
        SlidingEstimator est(1, cfg(n));
        std::vector<Phasor> out;
        for (std::size_t m = 0; m < k + 3 * n; ++m) {
            const double x = instantaneous(m < k ? before : after, m, n);
            const auto ph = est.step(std::span<const double>(&x, 1));
            out.push_back(ph ? (*ph)[0] : Phasor());
        }
        // Window ending at k+N-1 is the first one made only of post-step samples.
        CHECK(oracle::rel_err(out[k + n - 2], after) > 1e-6);
        for (std::size_t m = k + n - 1; m < out.size(); ++m) CHECK(oracle::rel_err(out[m], after) <= 1e-10);
        CHECK(oracle::rel_err(out[k - 1], before) <= 1e-10);
    }
}

TEST_CASE("phasor history lookup") {
    PhasorHistory h(4);
    const double dt = 1.0 / 1920.0;
    for (int n = 0; n < 10; ++n) {
        TerminalPhasors t;
        t.time = n * dt;
        t.v.a = Phasor(n, 0);
        h.push(t);
    }
    CHECK(h.size() == 4);
    REQUIRE(h.at_time(8 * dt, dt) != nullptr);
    CHECK(h.at_time(8 * dt, dt)->v.a.re() == 8.0);
    CHECK(h.at_time(8.3 * dt, dt)->v.a.re() == 8.0);
    CHECK(h.at_time(5 * dt, dt) == nullptr);
    CHECK(h.at_time(12 * dt, dt) == nullptr);
}

TEST_CASE("latch_prefault on steady input") {
    const auto c = cfg();
    // History runs up to the trigger, as it would in the relay.
    const auto h = run_history(balanced(Phasor(1, 0), 10, 32), c);
    const double trigger = 10.0 / 60.0;
    const auto m = latch_prefault(PrefaultMemory{}, h, trigger, c);
    REQUIRE(m.latched());
    CHECK(oracle::rel_err(m.value()->v.positive, Phasor(1, 0)) <= 1e-10);
    CHECK(m.value()->v.negative.magnitude() <= 1e-10);
    CHECK(oracle::rel_err(m.value()->i.positive, Phasor(0.5, 0)) <= 1e-10);
    CHECK(m.value()->window_time == doctest::Approx(8.0 / 60.0));
    CHECK(m.latch_time() == trigger);
}

TEST_CASE("latch_prefault needs enough history") {
    const auto c = cfg();
    const auto h = run_history(balanced(Phasor(1, 0), 3, 32), c);
    CHECK_THROWS_AS(latch_prefault(PrefaultMemory{}, h, 1.0 / 60.0, c), InsufficientHistory);
    // Evicted: history only keeps three cycles back.
    const auto long_h = run_history(balanced(Phasor(1, 0), 12, 32), c);
    CHECK_THROWS_AS(latch_prefault(PrefaultMemory{}, long_h, 6.0 / 60.0, c), InsufficientHistory);
}

TEST_CASE("latched value predates a disturbance and never changes") {
    const std::size_t n = 32;
    const auto c = cfg(n);
    auto x = balanced(Phasor(1, 0), 14, n);
    // Ramp added to phase a from cycle 9.5 on.
    const std::size_t onset = 9 * n + n / 2;
    for (std::size_t k = onset; k < x[0].size(); ++k) x[0][k] += 0.05 * static_cast<double>(k - onset);

    std::vector<TerminalPhasors> all;
    PhasorHistory h((c.memory_cycles + 1) * n + 1);
    SlidingEstimator est(6, c);
    PrefaultMemory m;
    std::array<double, 6> s{};
    std::optional<LatchedPrefault> first;
    for (std::size_t k = 0; k < x[0].size(); ++k) {
        for (std::size_t p = 0; p < 3; ++p) s[p] = s[3 + p] = x[p][k];
        const auto ph = est.step(s);
        if (!ph) continue;
        TerminalPhasors t;
        t.time = static_cast<double>(k) / c.sample_rate();
        t.v = {(*ph)[0], (*ph)[1], (*ph)[2]};
        t.i = {(*ph)[3], (*ph)[4], (*ph)[5]};
        h.push(t);
        if (k >= 10 * n) {
            m = latch_prefault(m, h, static_cast<double>(10 * n) / c.sample_rate(), c);
            if (!first) first = *m.value();
            CHECK(m.value()->v.positive.value() == first->v.positive.value());
            CHECK(m.value()->v.negative.value() == first->v.negative.value());
        }
    }
    REQUIRE(first.has_value());
    // Oracle: DFT of the window ending at cycle 8, which is clean.
    const ThreePhaseSet want{oracle::dft(x[0], 8 * n + 1 - n, n), oracle::dft(x[1], 8 * n + 1 - n, n),
                             oracle::dft(x[2], 8 * n + 1 - n, n)};
    const auto want_seq = oracle::fortescue(want);
    for (std::size_t q = 0; q < 3; ++q) CHECK(oracle::rel_err(first->v[q], want_seq[q]) <= 1e-12);
    CHECK(oracle::rel_err(first->v.positive, Phasor(1, 0)) <= 1e-10);

    PrefaultMemory cleared = m;
    cleared.reset();
    CHECK_FALSE(cleared.latched());
}
