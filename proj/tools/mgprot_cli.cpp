#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "mgprot/io.hpp"
#include "mgprot/netsim.hpp"
#include "mgprot/scenario.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

std::string cplx_str(mgp::Complex z) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f%+.6fj", z.real(), z.imag());
    return buf;
}

void print_run(const mgp::RunReport& r) {
    std::printf("%s: %s", r.scenario.c_str(), r.pass ? "PASS" : "FAIL");
    if (!r.error.empty()) std::printf("  (%s)", r.error.c_str());
    std::printf("\n");
    for (const auto& o : r.relays) {
        const auto& s = o.summary;
        std::printf("  relay %-6s decision %-8s final %-8s", s.relay_id.c_str(), std::string(to_string(s.decision)).c_str(),
                    std::string(to_string(s.final_decision)).c_str());
        if (o.expected) std::printf(" expected %-8s", std::string(to_string(*o.expected)).c_str());
        if (o.latency_cycles) std::printf(" latency %.2f cyc", *o.latency_cycles);
        std::printf("%s\n", o.matched ? "" : "  MISMATCH");
    }
    for (const auto& w : r.warnings) std::printf("  warning: %s\n", w.c_str());
}

mgp::RunOptions make_options(const std::string& out, double rate, std::uint64_t seed, bool waveforms) {
    mgp::RunOptions o;
    if (!out.empty()) o.out_dir = out;
    if (rate > 0.0) o.rate = rate;
    o.seed = seed;
    o.write_waveforms = waveforms;
    return o;
}

int dump_network(const std::string& path) {
    const mgp::SequenceNetwork net(mgp::load_network(path));
    std::printf("%-10s %-26s %-26s %-26s\n", "bus", "Z0", "Z1", "Z2");
    for (const auto& bus : net.model().buses) {
        const std::size_t k = net.model().bus_index(bus);
        const std::string z0 = net.has_ground_path(k) ? cplx_str(net.thevenin_at(bus, mgp::Sequence::Zero)) : "floating";
        std::printf("%-10s %-26s %-26s %-26s\n", bus.c_str(), z0.c_str(),
                    cplx_str(net.thevenin_at(bus, mgp::Sequence::Positive)).c_str(),
                    cplx_str(net.thevenin_at(bus, mgp::Sequence::Negative)).c_str());
    }
    return kExitPass;
}

int replay(const std::string& csv, const std::string& scenario_path, const std::string& relay_id, bool quiet) {
    const auto sc = mgp::load_scenario(scenario_path);
    const mgp::RelaySpec* spec = nullptr;
    for (const auto& r : sc.relays) {
        if (r.id == relay_id) spec = &r;
    }
    if (!spec) throw mgp::ConfigError(scenario_path + ": no relay '" + relay_id + "'");
    std::ifstream in(csv);
    if (!in) throw mgp::ConfigError(csv + ": cannot open file");
    const auto w = mgp::read_waveform_csv(in);
    mgp::EstimatorConfig config = sc.estimator_config();
    config.samples_per_cycle = mgp::checked_samples_per_cycle(w.rate, config.f_nominal);

    mgp::RelayOutcome out;
    out.log = mgp::replay_waveforms(w, spec->settings, config, relay_id, &out.summary);
    if (!quiet) mgp::write_decision_log_csv(std::cout, out);
    std::cerr << mgp::event_summary_json(out.summary).dump() << "\n";
    if (const auto it = sc.expected.find(relay_id); it != sc.expected.end()) {
        return out.summary.decision == it->second && out.summary.final_decision == it->second ? kExitPass : kExitFail;
    }
    return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Negative-sequence superimposed directional relay simulator"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string out_dir;
    double rate = 0.0;
    std::uint64_t seed = 0;
    bool quiet = false;
    app.add_option("--out", out_dir, "Directory for traces and reports");
    app.add_option("--rate", rate, "Override sample rate (samples/s)")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "Seed for measurement noise");
    app.add_flag("--quiet", quiet, "Print nothing on success");

    std::string target;
    bool waveforms = false;
    auto* run = app.add_subcommand("run", "Run one scenario");
    run->add_option("scenario", target, "Scenario file")->required();
    run->add_flag("--waveforms", waveforms, "Also write per-relay waveform CSVs");

    auto* suite = app.add_subcommand("suite", "Run every scenario in a directory");
    suite->add_option("dir", target, "Scenario directory")->required();

    auto* check = app.add_subcommand("check-settings", "Validate a scenario without running it");
    check->add_option("scenario", target, "Scenario file")->required();

    auto* dump = app.add_subcommand("dump-network", "Print Thevenin impedances at every bus");
    dump->add_option("network", target, "Network file")->required();

    std::string replay_scenario, replay_relay;
    auto* rep = app.add_subcommand("replay", "Run one relay over a recorded waveform CSV");
    rep->add_option("waveform", target, "Waveform CSV")->required();
    rep->add_option("--scenario", replay_scenario, "Scenario supplying the relay settings")->required();
    rep->add_option("--relay", replay_relay, "Relay id within the scenario")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*run) {
            const auto report = mgp::run_scenario(mgp::load_scenario(target), make_options(out_dir, rate, seed, waveforms));
            if (!quiet || !report.pass) print_run(report);
            return report.pass ? kExitPass : kExitFail;
        }
        if (*suite) {
            const auto report = mgp::run_suite(target, make_options(out_dir, rate, seed, false));
            for (const auto& r : report.runs) {
                if (!quiet || !r.pass) print_run(r);
            }
            if (!quiet) std::printf("%zu passed, %zu failed\n", report.passed, report.failed);
            if (!out_dir.empty()) {
                std::ofstream os(std::filesystem::path(out_dir) / "suite_report.json");
                os << mgp::to_json(report).dump(2) << "\n";
            }
            return report.pass() ? kExitPass : kExitFail;
        }
        if (*check) {
            auto sc = mgp::load_scenario(target);
            if (rate > 0.0) {
                sc.sample_rate = rate;
                mgp::validate_scenario(sc);
            }
            if (!quiet) std::printf("%s: ok (%zu relays)\n", sc.name.c_str(), sc.relays.size());
            return kExitPass;
        }
        if (*dump) return dump_network(target);
        if (*rep) return replay(target, replay_scenario, replay_relay, quiet);
    } catch (const mgp::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFail;
    }
    return kExitPass;
}
