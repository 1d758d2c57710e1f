#include "mgprot/relay.hpp"

#include <cmath>

namespace mgp {

std::vector<SettingsViolation> validate_settings(const RelaySettings& s) {
    std::vector<SettingsViolation> out;
    if (!(s.y_set > 0.0) || !std::isfinite(s.y_set)) out.push_back({"y_set", "must be a positive number"});
    if (!(s.phi_deg >= 0.0 && s.phi_deg < 90.0)) out.push_back({"phi", "must lie in [0, 90) degrees"});
    if (!(s.start_ratio > 0.0 && s.start_ratio < 1.0)) out.push_back({"start_ratio", "must lie in (0, 1)"});
    if (s.debounce_windows < 1) out.push_back({"debounce_windows", "must be >= 1"});
    return out;
}

double start_ratio_value(Phasor i1, Phasor i2) {
    const double m1 = i1.magnitude();
    return m1 < kEpsilonI ? 0.0 : i2.magnitude() / m1;
}

bool start_check(Phasor i1, Phasor i2, const RelaySettings& settings) {
    if (i1.magnitude() < kEpsilonI) return false;
    return i2.magnitude() / i1.magnitude() > settings.start_ratio;
}

Direction classify_direction(const AdmittanceMeasurement& y2, const RelaySettings& settings) {
    if (!y2.valid) return Direction::NoDecision;
    double theta = std::arg(y2.value.value()) * 180.0 / kPi;
    if (theta < 0.0) theta += 360.0;
    const double phi = settings.phi_deg;
    if (theta > phi && theta < 180.0 + phi) {
        return y2.value.magnitude() > settings.y_set ? Direction::Forward : Direction::NoDecision;
    }
    if (theta > 180.0 + phi || theta < phi) return Direction::Reverse;
    return Direction::NoDecision;
}

std::string_view to_string(RelayState s) {
    switch (s) {
        case RelayState::Blocked: return "Blocked";
        case RelayState::Started: return "Started";
        case RelayState::Forward: return "Forward";
        case RelayState::Reverse: return "Reverse";
    }
    return "Blocked";
}

std::string_view to_string(Direction d) {
    switch (d) {
        case Direction::Forward: return "Forward";
        case Direction::Reverse: return "Reverse";
        case Direction::NoDecision: return "NoDecision";
    }
    return "NoDecision";
}

std::optional<RelayState> parse_state(std::string_view s) {
    if (s == "Blocked") return RelayState::Blocked;
    if (s == "Started") return RelayState::Started;
    if (s == "Forward") return RelayState::Forward;
    if (s == "Reverse") return RelayState::Reverse;
    return std::nullopt;
}

namespace {

RelayState as_state(Direction d) { return d == Direction::Forward ? RelayState::Forward : RelayState::Reverse; }

}  // namespace

DirectionalRelay::DirectionalRelay(std::string id, RelaySettings settings, EstimatorConfig config)
    : id_(std::move(id)),
      settings_(settings),
      config_(config),
      history_((config.memory_cycles + 1) * config.samples_per_cycle + 1) {
    config_.validate();
    const auto violations = validate_settings(settings_);
    if (!violations.empty()) {
        throw std::invalid_argument("relay " + id_ + ": " + violations.front().field + " " +
                                    violations.front().message);
    }
    summary_.relay_id = id_;
}

RelayDecision DirectionalRelay::step(const TerminalPhasors& window) {
    history_.push(window);
    if (memory_.latched()) ++since_latch_;

    RelayDecision d;
    d.time = window.time;
    d.v = to_sequence(window.v);
    d.i = to_sequence(window.i);
    d.start_ratio_value = start_ratio_value(d.i.positive, d.i.negative);
    const bool started = start_check(d.i.positive, d.i.negative, settings_);

    if (!started) {
        candidate_ = Direction::NoDecision;
        candidate_count_ = 0;
        // The latch is per event: it clears once the start criterion has been
        // false for a full cycle.
        if (memory_.latched() && ++start_false_windows_ >= config_.samples_per_cycle) {
            memory_.reset();
            published_.reset();
            start_false_windows_ = 0;
            since_latch_ = 0;
        }
        if (memory_.latched()) {
            const auto& pre = *memory_.value();
            d.y2 = delta_y2(d.v.negative, pre.v.negative, d.i.negative, pre.i.negative);
        }
        d.state = RelayState::Blocked;
        return d;
    }

    start_false_windows_ = 0;
    if (!summary_.first_start_time) summary_.first_start_time = window.time;
    if (!memory_.latched()) {
        try {
            memory_ = latch_prefault(memory_, history_, window.time, config_);
        } catch (const InsufficientHistory& e) {
            d.state = RelayState::Blocked;
            d.note = e.what();
            return d;
        }
    }

    const auto& pre = *memory_.value();
    d.y2 = delta_y2(d.v.negative, pre.v.negative, d.i.negative, pre.i.negative);
    Direction dir = classify_direction(d.y2, settings_);
    if (since_latch_ < settings_.settle_windows.value_or(0)) {
        dir = Direction::NoDecision;
        d.note = "settling";
    }

    if (dir == Direction::NoDecision) {
        candidate_ = Direction::NoDecision;
        candidate_count_ = 0;
    } else if (dir == candidate_) {
        ++candidate_count_;
    } else {
        candidate_ = dir;
        candidate_count_ = 1;
    }

    if (candidate_ != Direction::NoDecision && candidate_count_ >= settings_.debounce_windows &&
        published_ != candidate_) {
        published_ = candidate_;
        if (!summary_.decision_time) {
            summary_.decision = as_state(candidate_);
            summary_.decision_time = window.time;
        }
        summary_.final_decision = as_state(candidate_);
    }

    d.state = published_ ? as_state(*published_) : RelayState::Started;
    return d;
}

}  // namespace mgp
