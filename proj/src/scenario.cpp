#include "mgprot/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <random>
#include <set>

namespace mgp {

using nlohmann::json;

EstimatorConfig Scenario::estimator_config() const {
    EstimatorConfig c;
    c.f_nominal = network.base.hz;
    c.samples_per_cycle = checked_samples_per_cycle(sample_rate, c.f_nominal);
    c.memory_cycles = memory_cycles;
    return c;
}

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& msg) { throw ConfigError(where + ": " + msg); }

void allow_only(const json& node, const std::string& where, std::initializer_list<const char*> keys) {
    if (!node.is_object()) fail(where, "expected an object");
    const std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, _] : node.items()) {
        if (!ok.count(k)) fail(where + "." + k, "unknown key");
    }
}

const json& require(const json& node, const std::string& where, const char* key) {
    if (!node.contains(key) || node.at(key).is_null()) fail(where + "." + key, "missing required field");
    return node.at(key);
}

double number(const json& node, const std::string& where, const char* key) {
    const auto& v = require(node, where, key);
    if (!v.is_number()) fail(where + "." + key, "expected a number");
    return v.get<double>();
}

std::string text(const json& node, const std::string& where, const char* key) {
    const auto& v = require(node, where, key);
    if (!v.is_string()) fail(where + "." + key, "expected a string");
    return v.get<std::string>();
}

Polarity parse_polarity(const std::string& s, const std::string& where) {
    if (s == "into_branch") return Polarity::IntoBranch;
    if (s == "out_of_branch") return Polarity::OutOfBranch;
    fail(where, "expected \"into_branch\" or \"out_of_branch\"");
}

RelaySettings parse_settings(const json& node, const std::string& where) {
    allow_only(node, where,
               {"y_set", "phi", "start_ratio", "debounce_windows", "settle_windows", "forward_polarity", "units"});
    RelaySettings s;
    s.y_set = number(node, where, "y_set");
    s.phi_deg = number(node, where, "phi");
    if (node.contains("start_ratio")) s.start_ratio = number(node, where, "start_ratio");
    if (node.contains("debounce_windows")) {
        const double d = number(node, where, "debounce_windows");
        if (d < 1.0 || d != std::floor(d)) fail(where + ".debounce_windows", "must be a whole number >= 1");
        s.debounce_windows = static_cast<std::size_t>(d);
    }
    if (node.contains("settle_windows")) {
        const double w = number(node, where, "settle_windows");
        if (w < 0.0 || w != std::floor(w)) fail(where + ".settle_windows", "must be a whole number >= 0");
        s.settle_windows = static_cast<std::size_t>(w);
    }
    if (node.contains("forward_polarity")) {
        s.forward_polarity = parse_polarity(text(node, where, "forward_polarity"), where + ".forward_polarity");
    }
    if (node.contains("units") && text(node, where, "units") != "pu") {
        fail(where + ".units", "only per-unit admittance settings (\"pu\") are supported");
    }
    return s;
}

}  // namespace

Scenario parse_scenario(const json& doc, const std::filesystem::path& base_dir, const std::string& origin) {
    allow_only(doc, origin,
               {"name", "description", "network", "fault", "duration", "sample_rate", "memory_cycles", "noise_std",
                "relays", "expected"});
    Scenario s;
    s.name = text(doc, origin, "name");
    s.network_path = base_dir / text(doc, origin, "network");
    s.network = load_network(s.network_path);

    const auto& f = require(doc, origin, "fault");
    const std::string fw = origin + ".fault";
    allow_only(f, fw, {"bus", "kind", "phases", "rf", "t_on"});
    s.fault.bus = text(f, fw, "bus");
    const auto kind = parse_fault_kind(text(f, fw, "kind"));
    if (!kind) fail(fw + ".kind", "expected one of SLG, LL, LLG, ThreePhase");
    s.fault.kind = *kind;
    s.fault.phases = f.contains("phases") ? text(f, fw, "phases") : (*kind == FaultKind::ThreePhase ? "ABC" : "");
    if (f.contains("rf")) s.fault.rf = number(f, fw, "rf");
    s.fault.t_on = number(f, fw, "t_on");

    s.duration = number(doc, origin, "duration");
    s.sample_rate = number(doc, origin, "sample_rate");
    if (doc.contains("memory_cycles")) {
        const double m = number(doc, origin, "memory_cycles");
        if (m < 1.0 || m != std::floor(m)) fail(origin + ".memory_cycles", "must be a whole number >= 1");
        s.memory_cycles = static_cast<std::size_t>(m);
    }
    if (doc.contains("noise_std")) s.noise_std = number(doc, origin, "noise_std");

    const auto& relays = require(doc, origin, "relays");
    if (!relays.is_array()) fail(origin + ".relays", "expected an array");
    for (std::size_t k = 0; k < relays.size(); ++k) {
        const std::string rw = origin + ".relays[" + std::to_string(k) + "]";
        allow_only(relays[k], rw, {"id", "branch", "bus", "settings"});
        RelaySpec r;
        r.id = text(relays[k], rw, "id");
        r.settings = parse_settings(require(relays[k], rw, "settings"), rw + ".settings");
        r.point = MeasurementPoint{r.id, text(relays[k], rw, "branch"), text(relays[k], rw, "bus"),
                                   r.settings.forward_polarity};
        s.relays.push_back(std::move(r));
    }

    if (doc.contains("expected")) {
        const auto& e = doc.at("expected");
        if (!e.is_object()) fail(origin + ".expected", "expected an object of relay id -> decision");
        for (const auto& [id, v] : e.items()) {
            const auto state = v.is_string() ? parse_state(v.get<std::string>()) : std::nullopt;
            if (!state || *state == RelayState::Started) {
                fail(origin + ".expected." + id, "expected Forward, Reverse or Blocked");
            }
            s.expected[id] = *state;
        }
    }

    try {
        validate_scenario(s);
    } catch (const ConfigError& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    return parse_scenario(read_json_file(path), path.parent_path(), path.string());
}

void validate_scenario(const Scenario& s) {
    std::vector<std::string> problems;
    const double hz = s.network.base.hz;
    std::size_t n = 0;
    try {
        n = checked_samples_per_cycle(s.sample_rate, hz);
    } catch (const std::invalid_argument& e) {
        problems.push_back(std::string("sample_rate: ") + e.what());
    }
    try {
        s.fault.validate();
        s.network.bus_index(s.fault.bus);
    } catch (const std::exception& e) {
        problems.push_back(std::string("fault: ") + e.what());
    }
    // The prefault window must predate the fault and follow the estimator warm-up.
    const double min_t_on = static_cast<double>(s.memory_cycles + 1) / hz;
    if (!(s.fault.t_on >= min_t_on - 1e-12)) {
        problems.push_back("fault.t_on: must be >= " + fmt_num(min_t_on) +
                           " s (estimator warm-up plus prefault memory)");
    }
    if (n > 0) {
        const double k = s.fault.t_on * s.sample_rate;
        if (std::abs(k - std::round(k)) > 1e-6) problems.push_back("fault.t_on: not on a sample boundary");
    }
    if (!(s.duration >= s.fault.t_on + 6.0 / hz - 1e-12)) {
        problems.push_back("duration: must be >= t_on + 6 cycles");
    }
    if (!(s.noise_std >= 0.0)) problems.push_back("noise_std: must be >= 0");
    if (s.relays.empty()) problems.push_back("relays: at least one relay is required");

    std::set<std::string> ids;
    for (const auto& r : s.relays) {
        if (!ids.insert(r.id).second) problems.push_back("relays: duplicate id '" + r.id + "'");
        for (const auto& v : validate_settings(r.settings)) {
            problems.push_back("relays." + r.id + ".settings." + v.field + ": " + v.message);
        }
        try {
            const auto& br = s.network.branches.at(s.network.branch_index(r.point.branch));
            if (r.point.bus != br.from && r.point.bus != br.to) {
                problems.push_back("relays." + r.id + ".bus: '" + r.point.bus + "' is not an end of branch " + br.id);
            }
        } catch (const std::exception& e) {
            problems.push_back("relays." + r.id + ".branch: " + e.what());
        }
        if (r.point.polarity != r.settings.forward_polarity) {
            problems.push_back("relays." + r.id + ": measurement polarity disagrees with forward_polarity");
        }
    }
    for (const auto& [id, _] : s.expected) {
        if (!ids.count(id)) problems.push_back("expected." + id + ": no relay with this id");
    }
    if (!problems.empty()) {
        std::string msg = problems.front();
        for (std::size_t k = 1; k < problems.size(); ++k) msg += "; " + problems[k];
        throw ConfigError(msg);
    }
}

std::vector<RelayDecision> replay_waveforms(const TerminalWaveforms& w, const RelaySettings& settings,
                                            const EstimatorConfig& config, const std::string& relay_id,
                                            RelayEventSummary* summary) {
    RelaySettings resolved = settings;
    if (!resolved.settle_windows) resolved.settle_windows = config.samples_per_cycle - 1;
    SlidingEstimator est(6, config);
    DirectionalRelay relay(relay_id, resolved, config);
    std::vector<RelayDecision> out;
    std::array<double, 6> sample{};
    for (std::size_t n = 0; n < w.size(); ++n) {
        for (std::size_t p = 0; p < 3; ++p) {
            sample[p] = w.v[p][n];
            sample[3 + p] = w.i[p][n];
        }
        const auto ph = est.step(sample);
        if (!ph) continue;
        TerminalPhasors t;
        t.time = static_cast<double>(n) / w.rate;
        t.v = {(*ph)[0], (*ph)[1], (*ph)[2]};
        t.i = {(*ph)[3], (*ph)[4], (*ph)[5]};
        out.push_back(relay.step(t));
    }
    if (summary) *summary = relay.summary();
    return out;
}

namespace {

TerminalWaveforms to_terminal(const MeasuredWaveforms& m) {
    TerminalWaveforms w;
    w.rate = m.v[0].rate;
    for (std::size_t p = 0; p < 3; ++p) {
        w.v[p] = m.v[p].samples;
        w.i[p] = m.i[p].samples;
    }
    return w;
}

void add_noise(TerminalWaveforms& w, double stddev, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, stddev);
    for (auto* chans : {&w.v, &w.i}) {
        for (auto& ch : *chans) {
            for (auto& x : ch) x += dist(rng);
        }
    }
}

std::string safe_name(const std::string& s) {
    std::string out = s;
    for (auto& c : out) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')) c = '_';
    }
    return out;
}

}  // namespace

RunReport run_scenario(const Scenario& input, const RunOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    RunReport report;
    report.scenario = input.name;
    try {
        Scenario s = input;
        if (options.rate) {
            s.sample_rate = *options.rate;
            validate_scenario(s);
        }
        const EstimatorConfig config = s.estimator_config();
        if (options.out_dir) std::filesystem::create_directories(*options.out_dir);
        const SequenceNetwork net(s.network);
        const SolutionSet sol = apply_fault(net, s.fault);
        report.warnings = sol.warnings;
        report.ibdg_iterations = sol.faulted.iterations;

        for (std::size_t k = 0; k < s.relays.size(); ++k) {
            const auto& spec = s.relays[k];
            TerminalWaveforms w = to_terminal(measure(net, sol, spec.point, s.sample_rate, s.fault.t_on, s.duration));
            if (s.noise_std > 0.0) add_noise(w, s.noise_std, options.seed * 1000003ULL + k);

            RelayOutcome out;
            out.log = replay_waveforms(w, spec.settings, config, spec.id, &out.summary);
            if (out.summary.decision_time) {
                out.latency_cycles = (*out.summary.decision_time - s.fault.t_on) * config.f_nominal;
            }
            if (const auto it = s.expected.find(spec.id); it != s.expected.end()) {
                out.expected = it->second;
                out.matched = out.summary.decision == it->second && out.summary.final_decision == it->second;
            }
            if (options.out_dir && options.write_waveforms) {
                const auto path = *options.out_dir / (safe_name(s.name) + "_" + safe_name(spec.id) + "_waveforms.csv");
                std::ofstream os(path);
                write_waveform_csv(os, w);
                report.trace_files.push_back(path.string());
            }
            report.relays.push_back(std::move(out));
        }

        report.pass = std::all_of(report.relays.begin(), report.relays.end(),
                                  [](const RelayOutcome& r) { return r.matched; });

        if (options.out_dir) {
            const auto trace = *options.out_dir / (safe_name(s.name) + "_trace.csv");
            std::ofstream ts(trace);
            write_trace_csv(ts, report);
            report.trace_files.push_back(trace.string());
            for (const auto& r : report.relays) {
                const auto log = *options.out_dir / (safe_name(s.name) + "_" + safe_name(r.summary.relay_id) +
                                                     "_decisions.csv");
                std::ofstream ls(log);
                write_decision_log_csv(ls, r);
                report.trace_files.push_back(log.string());
            }
        }
    } catch (const std::exception& e) {
        report.pass = false;
        report.error = e.what();
    }
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (options.out_dir && std::filesystem::is_directory(*options.out_dir)) {
        const auto path = *options.out_dir / (safe_name(report.scenario) + "_report.json");
        std::ofstream os(path);
        os << to_json(report).dump(2) << "\n";
    }
    return report;
}

SuiteReport run_suite(const std::filesystem::path& dir, const RunOptions& options) {
    if (!std::filesystem::is_directory(dir)) throw ConfigError(dir.string() + ": not a directory");
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    if (files.empty()) throw ConfigError(dir.string() + ": no scenario files (*.json)");
    std::sort(files.begin(), files.end());
    if (options.out_dir) std::filesystem::create_directories(*options.out_dir);

    std::vector<std::future<RunReport>> tasks;
    tasks.reserve(files.size());
    for (const auto& file : files) {
        tasks.push_back(std::async(std::launch::async, [file, &options]() {
            try {
                return run_scenario(load_scenario(file), options);
            } catch (const std::exception& e) {
                RunReport r;
                r.scenario = file.stem().string();
                r.error = e.what();
                return r;
            }
        }));
    }
    SuiteReport suite;
    for (auto& t : tasks) {
        suite.runs.push_back(t.get());
        (suite.runs.back().pass ? suite.passed : suite.failed) += 1;
    }
    return suite;
}

json event_summary_json(const RelayEventSummary& s) {
    json j;
    j["relay_id"] = s.relay_id;
    j["first_start_time"] = s.first_start_time ? json(*s.first_start_time) : json(nullptr);
    j["decision"] = std::string(to_string(s.decision));
    j["decision_time"] = s.decision_time ? json(*s.decision_time) : json(nullptr);
    j["final_decision"] = std::string(to_string(s.final_decision));
    return j;
}

json to_json(const RunReport& r) {
    json j;
    j["scenario"] = r.scenario;
    j["pass"] = r.pass;
    if (!r.error.empty()) j["error"] = r.error;
    j["relays"] = json::array();
    for (const auto& o : r.relays) {
        json e = event_summary_json(o.summary);
        e["expected"] = o.expected ? json(std::string(to_string(*o.expected))) : json(nullptr);
        e["matched"] = o.matched;
        e["latency_cycles"] = o.latency_cycles ? json(*o.latency_cycles) : json(nullptr);
        j["relays"].push_back(e);
    }
    j["trace_files"] = r.trace_files;
    j["warnings"] = r.warnings;
    j["ibdg_iterations"] = r.ibdg_iterations;
    j["wall_seconds"] = r.wall_seconds;
    return j;
}

json to_json(const SuiteReport& s) {
    json j;
    j["pass"] = s.pass();
    j["passed"] = s.passed;
    j["failed"] = s.failed;
    j["runs"] = json::array();
    for (const auto& r : s.runs) j["runs"].push_back(to_json(r));
    return j;
}

void write_trace_csv(std::ostream& os, const RunReport& report) {
    os << "time_s,relay_id,v2_mag,v2_ang,i2_mag,i2_ang,dy2_mag,dy2_ang,start_ratio,state\n";
    std::size_t rows = 0;
    for (const auto& r : report.relays) rows = std::max(rows, r.log.size());
    for (std::size_t k = 0; k < rows; ++k) {
        for (const auto& r : report.relays) {
            if (k >= r.log.size()) continue;
            const auto& d = r.log[k];
            os << fmt_num(d.time) << ',' << r.summary.relay_id << ',' << fmt_num(d.v.negative.magnitude()) << ','
               << fmt_num(d.v.negative.angle_deg()) << ',' << fmt_num(d.i.negative.magnitude()) << ','
               << fmt_num(d.i.negative.angle_deg()) << ',';
            if (d.y2.valid) os << fmt_num(d.y2.value.magnitude()) << ',' << fmt_num(d.y2.value.angle_deg());
            else os << ',';
            os << ',' << fmt_num(d.start_ratio_value) << ',' << to_string(d.state) << '\n';
        }
    }
}

void write_decision_log_csv(std::ostream& os, const RelayOutcome& outcome) {
    os << "time_s,state,y2_mag,y2_angle_deg,start_ratio,valid\n";
    for (const auto& d : outcome.log) {
        os << fmt_num(d.time) << ',' << to_string(d.state) << ',';
        if (d.y2.valid) os << fmt_num(d.y2.value.magnitude()) << ',' << fmt_num(d.y2.value.angle_deg());
        else os << ',';
        os << ',' << fmt_num(d.start_ratio_value) << ',' << (d.y2.valid ? 1 : 0) << '\n';
    }
}

}  // namespace mgp
