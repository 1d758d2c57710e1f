#include "mgprot/estimator.hpp"

#include <cmath>

namespace mgp {

void EstimatorConfig::validate() const {
    if (samples_per_cycle < 8) throw std::invalid_argument("samples_per_cycle must be >= 8");
    if (memory_cycles < 1) throw std::invalid_argument("memory_cycles must be >= 1");
    if (!(f_nominal > 0.0)) throw std::invalid_argument("f_nominal must be positive");
}

namespace {

std::vector<Complex> make_twiddles(std::size_t n) {
    std::vector<Complex> w(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double theta = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(n);
        w[k] = Complex(std::cos(theta), -std::sin(theta));
    }
    return w;
}

}  // namespace

Phasor estimate_phasor(std::span<const double> window, const EstimatorConfig& config) {
    config.validate();
    const std::size_t n = config.samples_per_cycle;
    if (window.size() != n) {
        throw std::invalid_argument("window has " + std::to_string(window.size()) + " samples, expected " +
                                    std::to_string(n));
    }
    const auto twiddle = make_twiddles(n);
    Complex acc{};
    for (std::size_t k = 0; k < n; ++k) acc += window[k] * twiddle[k];
    return acc * (kSqrt2 / static_cast<double>(n));
}

SlidingEstimator::SlidingEstimator(std::size_t channels, EstimatorConfig config)
    : config_(config), channels_(channels) {
    config_.validate();
    if (channels_ == 0) throw std::invalid_argument("estimator needs at least one channel");
    ring_.assign(channels_, std::vector<double>(config_.samples_per_cycle, 0.0));
    twiddle_ = make_twiddles(config_.samples_per_cycle);
}

void SlidingEstimator::reset() {
    for (auto& r : ring_) std::fill(r.begin(), r.end(), 0.0);
    count_ = 0;
}

double SlidingEstimator::time() const {
    return count_ == 0 ? 0.0 : static_cast<double>(count_ - 1) / config_.sample_rate();
}

std::optional<std::vector<Phasor>> SlidingEstimator::step(std::span<const double> samples) {
    if (samples.size() != channels_) {
        throw std::invalid_argument("expected " + std::to_string(channels_) + " samples per step");
    }
    const std::size_t n = config_.samples_per_cycle;
    // Slot k of each ring holds the sample whose global index is congruent to k mod N,
    // so the direct sum below is referenced to the global time origin.
    const std::size_t slot = count_ % n;
    for (std::size_t ch = 0; ch < channels_; ++ch) ring_[ch][slot] = samples[ch];
    ++count_;
    if (count_ < n) return std::nullopt;

    std::vector<Phasor> out(channels_);
    const double scale = kSqrt2 / static_cast<double>(n);
    for (std::size_t ch = 0; ch < channels_; ++ch) {
        Complex acc{};
        for (std::size_t k = 0; k < n; ++k) acc += ring_[ch][k] * twiddle_[k];
        out[ch] = acc * scale;
    }
    return out;
}

void PhasorHistory::push(const TerminalPhasors& w) {
    entries_.push_back(w);
    while (entries_.size() > capacity_) entries_.pop_front();
}

const TerminalPhasors* PhasorHistory::at_time(double time, double sample_period) const {
    if (entries_.empty()) return nullptr;
    const double offset = (entries_.back().time - time) / sample_period;
    const double rounded = std::round(offset);
    if (std::abs(offset - rounded) > 0.5 || rounded < 0.0) return nullptr;
    const auto back_steps = static_cast<std::size_t>(rounded);
    if (back_steps >= entries_.size()) return nullptr;
    return &entries_[entries_.size() - 1 - back_steps];
}

PrefaultMemory latch_prefault(PrefaultMemory memory, const PhasorHistory& history, double trigger_time,
                              const EstimatorConfig& config) {
    if (memory.latched()) return memory;
    const double period = 1.0 / config.sample_rate();
    const double target = trigger_time - static_cast<double>(config.memory_cycles) / config.f_nominal;
    // The earliest emitted window ends at sample N-1.
    const double first_window = static_cast<double>(config.samples_per_cycle - 1) * period;
    if (target < first_window - 0.5 * period) {
        throw InsufficientHistory("prefault window at t=" + std::to_string(target) +
                                  " s precedes estimator warm-up");
    }
    const TerminalPhasors* w = history.at_time(target, period);
    if (w == nullptr) {
        throw InsufficientHistory("prefault window at t=" + std::to_string(target) + " s is not in history");
    }
    memory.latched_ = LatchedPrefault{to_sequence(w->v), to_sequence(w->i), w->time};
    memory.latch_time_ = trigger_time;
    return memory;
}

}  // namespace mgp
