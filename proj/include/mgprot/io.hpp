#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mgprot/netsim.hpp"
#include "mgprot/sequence.hpp"

namespace mgp {

/// Malformed or invalid input file. The message names the file and field.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

nlohmann::json read_json_file(const std::filesystem::path& path);

NetworkModel parse_network(const nlohmann::json& doc, const std::string& origin = "network");
NetworkModel load_network(const std::filesystem::path& path);

/// Three-phase voltage and current samples of one terminal.
struct TerminalWaveforms {
    double rate = 0.0;
    std::array<std::vector<double>, 3> v;
    std::array<std::vector<double>, 3> i;
    std::size_t size() const { return v[0].size(); }
};

/// CSV with a `# rate=<samples_per_second>` comment line and columns
/// time_s, va, vb, vc, ia, ib, ic.
void write_waveform_csv(std::ostream& os, const TerminalWaveforms& w);
TerminalWaveforms read_waveform_csv(std::istream& is);

/// Fixed-precision number formatting for byte-stable CSV output.
std::string fmt_num(double x);

}  // namespace mgp
