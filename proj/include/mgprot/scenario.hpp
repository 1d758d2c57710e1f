#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mgprot/io.hpp"
#include "mgprot/netsim.hpp"
#include "mgprot/relay.hpp"

namespace mgp {

struct RelaySpec {
    std::string id;
    MeasurementPoint point;
    RelaySettings settings;
};

/// A declarative fault case: network, fault, timing, relays and expected directions.
struct Scenario {
    std::string name;
    std::filesystem::path network_path;
    NetworkModel network;
    FaultSpec fault;
    double duration = 0.0;
    double sample_rate = 0.0;
    std::size_t memory_cycles = 2;
    double noise_std = 0.0;  // additive Gaussian noise on every sample, per-unit
    std::vector<RelaySpec> relays;
    std::map<std::string, RelayState> expected;

    EstimatorConfig estimator_config() const;
};

/// Parses and validates a scenario document. Relative network paths resolve against base_dir.
Scenario parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir,
                        const std::string& origin = "scenario");
Scenario load_scenario(const std::filesystem::path& path);

/// Throws ConfigError listing every violated scenario invariant.
void validate_scenario(const Scenario& s);

struct RunOptions {
    std::optional<std::filesystem::path> out_dir;
    std::optional<double> rate;  // overrides the scenario sample rate
    std::uint64_t seed = 0;
    bool write_waveforms = false;
};

struct RelayOutcome {
    RelayEventSummary summary;
    std::optional<RelayState> expected;
    bool matched = true;
    std::optional<double> latency_cycles;  // first decision time after fault inception
    std::vector<RelayDecision> log;
};

struct RunReport {
    std::string scenario;
    bool pass = false;
    std::string error;
    std::vector<RelayOutcome> relays;
    std::vector<std::string> trace_files;
    std::vector<std::string> warnings;
    std::size_t ibdg_iterations = 0;
    double wall_seconds = 0.0;
};

/// Runs one scenario end to end: solve, measure, estimate, step relays per sample.
/// Failures are captured in the report rather than thrown.
RunReport run_scenario(const Scenario& scenario, const RunOptions& options = {});

struct SuiteReport {
    std::vector<RunReport> runs;
    std::size_t passed = 0;
    std::size_t failed = 0;
    bool pass() const { return failed == 0 && !runs.empty(); }
};

/// Runs every *.json scenario in a directory. Throws ConfigError on a missing or empty directory.
SuiteReport run_suite(const std::filesystem::path& dir, const RunOptions& options = {});

nlohmann::json to_json(const RunReport& report);
nlohmann::json to_json(const SuiteReport& report);

/// Combined trace: time_s, relay_id, v2_mag, v2_ang, i2_mag, i2_ang, dy2_mag, dy2_ang, start_ratio, state.
void write_trace_csv(std::ostream& os, const RunReport& report);
/// Per-relay decision log: time_s, state, y2_mag, y2_angle_deg, start_ratio, valid.
void write_decision_log_csv(std::ostream& os, const RelayOutcome& outcome);
nlohmann::json event_summary_json(const RelayEventSummary& s);

/// Runs one relay over recorded terminal waveforms.
std::vector<RelayDecision> replay_waveforms(const TerminalWaveforms& w, const RelaySettings& settings,
                                            const EstimatorConfig& config, const std::string& relay_id,
                                            RelayEventSummary* summary = nullptr);

}  // namespace mgp
