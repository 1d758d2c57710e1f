#include "doctest.h"

#include <fstream>
#include <sstream>

#include "mgprot/io.hpp"
#include "mgprot/scenario.hpp"

using namespace mgp;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path data(const std::string& rel) { return fs::path(MGPROT_DATA_DIR) / rel; }

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "mgprot_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json case_b() { return read_json_file(data("scenarios/cases/case_B.json")); }

std::string config_error(const json& doc) {
    try {
        parse_scenario(doc, data("scenarios/cases"), "s");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("bundled case A loads") {
    const auto s = load_scenario(data("scenarios/cases/case_A.json"));
    CHECK(s.name == "case_A");
    CHECK(s.fault.bus == "G");
    CHECK(s.fault.kind == FaultKind::LLG);
    CHECK(s.fault.phases == "BC");
    CHECK(s.fault.t_on == doctest::Approx(0.2));
    CHECK(s.relays.size() == 3);
    CHECK(s.relays[0].settings.phi_deg == 30.0);
    CHECK(s.expected.at("A") == RelayState::Reverse);
    CHECK(s.estimator_config().samples_per_cycle == 32);
    CHECK(s.network.buses.size() == 7);
}

TEST_CASE("scenario errors name the offending field") {
    auto doc = case_b();
    doc.erase("sample_rate");
    CHECK(config_error(doc).find("sample_rate") != std::string::npos);

    doc = case_b();
    doc["fault"]["t_on"] = 0.0;
    CHECK(config_error(doc).find("fault.t_on") != std::string::npos);

    doc = case_b();
    doc["colour"] = "blue";
    CHECK(config_error(doc).find("colour: unknown key") != std::string::npos);

    doc = case_b();
    doc["relays"][1]["settings"]["phi"] = 120.0;
    CHECK(config_error(doc).find("relays.B.settings.phi") != std::string::npos);

    doc = case_b();
    doc["duration"] = 0.21;
    CHECK(config_error(doc).find("duration") != std::string::npos);

    doc = case_b();
    doc["fault"]["t_on"] = 0.20001;
    CHECK(config_error(doc).find("sample boundary") != std::string::npos);

    doc = case_b();
    doc["sample_rate"] = 1000.0;
    CHECK(config_error(doc).find("sample_rate") != std::string::npos);

    doc = case_b();
    doc["relays"][0]["branch"] = "L99";
    CHECK(config_error(doc).find("relays.A.branch") != std::string::npos);

    doc = case_b();
    doc["expected"]["Z"] = "Forward";
    CHECK(config_error(doc).find("Z") != std::string::npos);

    doc = case_b();
    doc["expected"]["A"] = "Started";
    CHECK(config_error(doc).find("expected.A") != std::string::npos);

    doc = case_b();
    doc["fault"]["kind"] = "LLLG";
    CHECK(config_error(doc).find("fault.kind") != std::string::npos);

    doc = case_b();
    doc["relays"][0]["settings"]["units"] = "siemens";
    CHECK(config_error(doc).find("units") != std::string::npos);

    // Several problems are reported together.
    doc = case_b();
    doc["duration"] = 0.21;
    doc["relays"][1]["settings"]["y_set"] = -1.0;
    const auto msg = config_error(doc);
    CHECK(msg.find("duration") != std::string::npos);
    CHECK(msg.find("y_set") != std::string::npos);
}

TEST_CASE("malformed files report context") {
    const auto dir = scratch("malformed");
    std::ofstream(dir / "bad.json") << "{\n  \"name\": \"x\",\n  oops\n}\n";
    try {
        load_scenario(dir / "bad.json");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    CHECK_THROWS_AS(load_scenario(dir / "missing.json"), ConfigError);
}

TEST_CASE("network parsing") {
    auto doc = read_json_file(data("networks/two_source.json"));
    const auto m = parse_network(doc);
    CHECK(m.buses.size() == 2);
    CHECK(m.grid_sources.size() == 2);

    auto bad = doc;
    bad["branches"][0]["z1"] = {0.1};
    CHECK_THROWS_WITH_AS(parse_network(bad), doctest::Contains("branches[0].z1"), ConfigError);
    bad = doc;
    bad["branches"][0]["length"] = 3;
    CHECK_THROWS_WITH_AS(parse_network(bad), doctest::Contains("length: unknown key"), ConfigError);
    bad = doc;
    bad.erase("buses");
    CHECK_THROWS_WITH_AS(parse_network(bad), doctest::Contains("buses: missing"), ConfigError);
    bad = doc;
    bad["grid_sources"] = json::array();
    CHECK_THROWS_WITH_AS(parse_network(bad), doctest::Contains("island"), ConfigError);

    const auto mg = load_network(data("networks/microgrid.json"));
    std::size_t single_phase = 0;
    for (const auto& l : mg.loads) single_phase += (!l.z[0] || !l.z[1] || !l.z[2]) ? 1 : 0;
    CHECK(single_phase == 6);
    CHECK(mg.base.kva == 300.0);
    CHECK(mg.base.kv == 0.48);
}

TEST_CASE("waveform CSV round trip and errors") {
    TerminalWaveforms w;
    w.rate = 1920.0;
    for (std::size_t p = 0; p < 3; ++p) {
        for (int n = 0; n < 40; ++n) {
            w.v[p].push_back(std::sin(0.1 * n + p) / 3.0);
            w.i[p].push_back(std::cos(0.2 * n - p) * 7.0);
        }
    }
    std::stringstream ss;
    write_waveform_csv(ss, w);
    CHECK(ss.str().rfind("# rate=1920\ntime_s,va,vb,vc,ia,ib,ic\n", 0) == 0);
    const auto back = read_waveform_csv(ss);
    CHECK(back.rate == 1920.0);
    REQUIRE(back.size() == 40);
    for (std::size_t p = 0; p < 3; ++p) {
        for (std::size_t n = 0; n < 40; ++n) {
            CHECK(back.v[p][n] == w.v[p][n]);
            CHECK(back.i[p][n] == w.i[p][n]);
        }
    }

    std::stringstream no_rate("time_s,va,vb,vc,ia,ib,ic\n0,1,2,3,4,5,6\n");
    CHECK_THROWS_WITH_AS(read_waveform_csv(no_rate), doctest::Contains("rate"), ConfigError);
    std::stringstream bad_header("# rate=1920\ntime,a,b\n");
    CHECK_THROWS_WITH_AS(read_waveform_csv(bad_header), doctest::Contains("header"), ConfigError);
    std::stringstream bad_cell("# rate=1920\ntime_s,va,vb,vc,ia,ib,ic\n0,1,2,x,4,5,6\n");
    CHECK_THROWS_WITH_AS(read_waveform_csv(bad_cell), doctest::Contains("line 3"), ConfigError);
    std::stringstream short_row("# rate=1920\ntime_s,va,vb,vc,ia,ib,ic\n0,1,2\n");
    CHECK_THROWS_AS(read_waveform_csv(short_row), ConfigError);
}

TEST_CASE("fmt_num is stable") {
    CHECK(fmt_num(-0.0) == "0");
    CHECK(fmt_num(0.1) == "0.1");
    CHECK(fmt_num(1.0 / 3.0) == "0.3333333333");
}

TEST_CASE("run_scenario writes deterministic artifacts") {
    const auto s = load_scenario(data("scenarios/cases/case_B.json"));
    const auto d1 = scratch("run1"), d2 = scratch("run2");
    RunOptions o1;
    o1.out_dir = d1;
    RunOptions o2 = o1;
    o2.out_dir = d2;
    o2.write_waveforms = true;
    const auto r1 = run_scenario(s, o1);
    const auto r2 = run_scenario(s, o2);
    CHECK(r1.pass);
    CHECK(r1.error.empty());
    CHECK(slurp(d1 / "case_B_trace.csv") == slurp(d2 / "case_B_trace.csv"));
    for (const char* id : {"A", "B", "C"}) {
        CHECK(slurp(d1 / ("case_B_" + std::string(id) + "_decisions.csv")) ==
              slurp(d2 / ("case_B_" + std::string(id) + "_decisions.csv")));
    }
    CHECK(fs::exists(d2 / "case_B_B_waveforms.csv"));
    CHECK_FALSE(fs::exists(d1 / "case_B_B_waveforms.csv"));

    const auto report = read_json_file(d1 / "case_B_report.json");
    CHECK(report["pass"] == true);
    CHECK(report["relays"].size() == 3);
    CHECK(report["relays"][0]["decision"] == "Forward");
    CHECK(report["relays"][0]["latency_cycles"].get<double>() > 0.0);
    CHECK(report["relays"][0]["latency_cycles"].get<double>() < 2.0);

    // Every window after warm-up appears once per relay.
    const std::size_t windows = static_cast<std::size_t>(0.4 * 1920) - 32 + 1;
    const auto trace = slurp(d1 / "case_B_trace.csv");
    CHECK(static_cast<std::size_t>(std::count(trace.begin(), trace.end(), '\n')) == 1 + 3 * windows);
    CHECK(trace.rfind("time_s,relay_id,v2_mag,v2_ang,i2_mag,i2_ang,dy2_mag,dy2_ang,start_ratio,state\n", 0) == 0);
    const auto log = slurp(d1 / "case_B_A_decisions.csv");
    CHECK(log.rfind("time_s,state,y2_mag,y2_angle_deg,start_ratio,valid\n", 0) == 0);

    // Replaying the recorded waveform reproduces the live decisions.
    std::ifstream wf(d2 / "case_B_B_waveforms.csv");
    RelayEventSummary sum;
    const auto replay = replay_waveforms(read_waveform_csv(wf), s.relays[1].settings, s.estimator_config(), "B", &sum);
    CHECK(replay.size() == r1.relays[1].log.size());
    CHECK(sum.decision == r1.relays[1].summary.decision);
    CHECK(sum.decision_time == r1.relays[1].summary.decision_time);
}

TEST_CASE("decisions hold across sample rates") {
    const auto s = load_scenario(data("scenarios/cases/case_D_F2.json"));
    for (double rate : {960.0, 3840.0, 7680.0}) {
        RunOptions o;
        o.rate = rate;
        const auto r = run_scenario(s, o);
        CHECK_MESSAGE(r.pass, "rate ", rate, ": ", r.error);
    }
    RunOptions bad;
    bad.rate = 1000.0;
    const auto r = run_scenario(s, bad);
    CHECK_FALSE(r.pass);
    CHECK(r.error.find("sample_rate") != std::string::npos);
}

TEST_CASE("noise knob is seeded and reproducible") {
    auto s = load_scenario(data("scenarios/cases/case_C.json"));
    s.noise_std = 1e-3;
    const auto d1 = scratch("noise1"), d2 = scratch("noise2"), d3 = scratch("noise3");
    RunOptions o;
    o.seed = 7;
    o.out_dir = d1;
    const auto r1 = run_scenario(s, o);
    o.out_dir = d2;
    run_scenario(s, o);
    o.seed = 8;
    o.out_dir = d3;
    run_scenario(s, o);
    CHECK(r1.pass);
    CHECK(slurp(d1 / "case_C_trace.csv") == slurp(d2 / "case_C_trace.csv"));
    CHECK(slurp(d1 / "case_C_trace.csv") != slurp(d3 / "case_C_trace.csv"));
}

TEST_CASE("mismatched expectation fails the report") {
    auto s = load_scenario(data("scenarios/cases/case_B.json"));
    s.expected["C"] = RelayState::Forward;
    const auto r = run_scenario(s);
    CHECK_FALSE(r.pass);
    CHECK(r.relays[2].matched == false);
    CHECK(r.relays[0].matched);
}

TEST_CASE("suite runs every file and isolates failures") {
    const auto cases = run_suite(data("scenarios/cases"));
    CHECK(cases.runs.size() == 6);
    CHECK(cases.passed == 6);
    CHECK(cases.pass());

    const auto dir = scratch("suite");
    fs::copy_file(data("scenarios/cases/case_A.json"), dir / "case_A.json");
    auto b = case_b();
    b["network"] = (data("networks") / "microgrid.json").string();
    std::ofstream(dir / "case_B.json") << b.dump(2);
    std::ofstream(dir / "broken.json") << "{ not json";
    std::ofstream(dir / "notes.txt") << "ignored";
    const auto mixed = run_suite(dir);
    CHECK(mixed.runs.size() == 3);
    CHECK(mixed.failed == 2);  // broken.json, and case_A whose relative network path no longer resolves
    CHECK(mixed.passed == 1);
    CHECK_FALSE(mixed.pass());
    const auto j = to_json(mixed);
    CHECK(j["failed"] == 2);
    CHECK(j["runs"].size() == 3);

    CHECK_THROWS_AS(run_suite(scratch("empty")), ConfigError);
    CHECK_THROWS_AS(run_suite(dir / "nope"), ConfigError);
}
