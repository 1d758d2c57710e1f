#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mgprot/estimator.hpp"
#include "mgprot/sequence.hpp"
#include "mgprot/superimposed.hpp"

namespace mgp {

/// Which way current must flow through the measured branch end to count as forward.
enum class Polarity { IntoBranch, OutOfBranch };

struct RelaySettings {
    double y_set = 10.0;  // per-unit on the system base
    double phi_deg = 20.0;
    double start_ratio = 0.1;
    std::size_t debounce_windows = 4;
    // Windows after the prefault latch during which classifications are ignored, so the
    // DFT window can clear the disturbance onset. Unset means 0 for a bare relay;
    // replay_waveforms resolves it to one cycle minus a sample.
    std::optional<std::size_t> settle_windows;
    Polarity forward_polarity = Polarity::IntoBranch;
};

struct SettingsViolation {
    std::string field;
    std::string message;
};

/// Every violated invariant, empty when the settings are usable.
std::vector<SettingsViolation> validate_settings(const RelaySettings& settings);

/// |i2|/|i1| strictly above the start ratio, with |i1| guarded.
bool start_check(Phasor i1, Phasor i2, const RelaySettings& settings);
double start_ratio_value(Phasor i1, Phasor i2);

enum class Direction { Forward, Reverse, NoDecision };

/// Angle zones are open intervals; forward additionally needs |y2| > y_set.
Direction classify_direction(const AdmittanceMeasurement& y2, const RelaySettings& settings);

enum class RelayState { Blocked, Started, Forward, Reverse };

std::string_view to_string(RelayState s);
std::string_view to_string(Direction d);
std::optional<RelayState> parse_state(std::string_view s);

struct RelayDecision {
    RelayState state = RelayState::Blocked;
    AdmittanceMeasurement y2;
    double start_ratio_value = 0.0;
    double time = 0.0;
    SequenceSet v;  // sequence voltage at the terminal for this window
    SequenceSet i;
    std::string note;
};

struct RelayEventSummary {
    std::string relay_id;
    std::optional<double> first_start_time;
    RelayState decision = RelayState::Blocked;  // first published direction, Blocked if none
    std::optional<double> decision_time;
    RelayState final_decision = RelayState::Blocked;  // last published direction
};

/// Incremental negative-sequence admittance directional element. Consumes one window of
/// terminal phasors per call, in time order.
class DirectionalRelay {
public:
    DirectionalRelay(std::string id, RelaySettings settings, EstimatorConfig config);

    RelayDecision step(const TerminalPhasors& window);

    const std::string& id() const { return id_; }
    const RelaySettings& settings() const { return settings_; }
    const PrefaultMemory& memory() const { return memory_; }
    RelayEventSummary summary() const { return summary_; }

private:
    std::string id_;
    RelaySettings settings_;
    EstimatorConfig config_;
    PhasorHistory history_;
    PrefaultMemory memory_;
    std::size_t start_false_windows_ = 0;
    std::size_t since_latch_ = 0;
    Direction candidate_ = Direction::NoDecision;
    std::size_t candidate_count_ = 0;
    std::optional<Direction> published_;
    RelayEventSummary summary_;
};

}  // namespace mgp
