#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mgprot/sequence.hpp"

namespace mgp {

struct EstimatorConfig {
    std::size_t samples_per_cycle = 32;
    std::size_t memory_cycles = 2;
    double f_nominal = 60.0;

    double sample_rate() const { return static_cast<double>(samples_per_cycle) * f_nominal; }
    /// Throws std::invalid_argument on samples_per_cycle < 8 or memory_cycles < 1.
    void validate() const;
};

/// Full-cycle DFT of one window, RMS convention, angle relative to the first sample.
Phasor estimate_phasor(std::span<const double> window, const EstimatorConfig& config);

struct TimedPhasor {
    double time = 0.0;  // time of the last sample in the window
    Phasor value;
};

using PhasorStream = std::vector<TimedPhasor>;

/// Sliding one-cycle DFT over a fixed number of channels, advanced one sample at a time.
/// Phase is referenced to sample index 0 so a steady sinusoid gives a constant phasor.
class SlidingEstimator {
public:
    SlidingEstimator(std::size_t channels, EstimatorConfig config);

    /// Consumes one sample per channel. Returns one phasor per channel once a full
    /// cycle has been seen, otherwise nothing.
    std::optional<std::vector<Phasor>> step(std::span<const double> samples);

    std::size_t samples_seen() const { return count_; }
    /// Time stamp of the most recent sample.
    double time() const;
    const EstimatorConfig& config() const { return config_; }
    void reset();

private:
    EstimatorConfig config_;
    std::size_t channels_;
    std::vector<std::vector<double>> ring_;  // per channel, N slots
    std::vector<Complex> twiddle_;           // e^{-j2πk/N}
    std::size_t count_ = 0;
};

/// Voltage and current phasors at one relay terminal for one window.
struct TerminalPhasors {
    double time = 0.0;
    ThreePhaseSet v;
    ThreePhaseSet i;
};

struct LatchedPrefault {
    SequenceSet v;
    SequenceSet i;
    double window_time = 0.0;  // end time of the window the values came from
};

class InsufficientHistory : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bounded history of per-window terminal phasors, one entry per sample.
class PhasorHistory {
public:
    explicit PhasorHistory(std::size_t capacity) : capacity_(capacity) {}

    void push(const TerminalPhasors& w);
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const TerminalPhasors& back() const { return entries_.back(); }
    /// Entry whose window ends at `time` (nearest within half a sample), if retained.
    const TerminalPhasors* at_time(double time, double sample_period) const;
    void clear() { entries_.clear(); }

private:
    std::size_t capacity_;
    std::deque<TerminalPhasors> entries_;
};

/// Prefault values per relay terminal. Once latched, immutable until reset().
class PrefaultMemory {
public:
    bool latched() const { return latched_.has_value(); }
    const std::optional<LatchedPrefault>& value() const { return latched_; }
    double latch_time() const { return latch_time_; }
    void reset() { latched_.reset(); latch_time_ = 0.0; }

    friend PrefaultMemory latch_prefault(PrefaultMemory memory, const PhasorHistory& history,
                                         double trigger_time, const EstimatorConfig& config);

private:
    std::optional<LatchedPrefault> latched_;
    double latch_time_ = 0.0;
};

/// Latches the window estimated memory_cycles before trigger_time. A call on an
/// already-latched memory returns it unchanged. Throws InsufficientHistory when the
/// required window predates the warm-up or has been evicted.
PrefaultMemory latch_prefault(PrefaultMemory memory, const PhasorHistory& history, double trigger_time,
                              const EstimatorConfig& config);

}  // namespace mgp
