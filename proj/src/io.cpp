#include "mgprot/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace mgp {

using nlohmann::json;

nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string() + ": cannot open file");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

namespace {

class Reader {
public:
    Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) fail("expected an object");
    }

    [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(path_ + ": " + msg); }

    void allow_only(std::initializer_list<const char*> keys) const {
        std::set<std::string> ok(keys.begin(), keys.end());
        for (const auto& [k, _] : node_.items()) {
            if (!ok.count(k)) throw ConfigError(path_ + "." + k + ": unknown key");
        }
    }

    bool has(const char* key) const { return node_.contains(key) && !node_.at(key).is_null(); }
    const json& raw(const char* key) const {
        if (!node_.contains(key)) throw ConfigError(path_ + "." + key + ": missing required field");
        return node_.at(key);
    }
    std::string field(const char* key) const { return path_ + "." + key; }

    std::string str(const char* key) const {
        const auto& v = raw(key);
        if (!v.is_string()) throw ConfigError(field(key) + ": expected a string");
        return v.get<std::string>();
    }
    double num(const char* key) const {
        const auto& v = raw(key);
        if (!v.is_number()) throw ConfigError(field(key) + ": expected a number");
        return v.get<double>();
    }
    double num_or(const char* key, double fallback) const { return has(key) ? num(key) : fallback; }
    bool boolean_or(const char* key, bool fallback) const {
        if (!has(key)) return fallback;
        const auto& v = raw(key);
        if (!v.is_boolean()) throw ConfigError(field(key) + ": expected true or false");
        return v.get<bool>();
    }
    Complex cplx(const char* key) const { return to_complex(raw(key), field(key)); }

    static Complex to_complex(const json& v, const std::string& where) {
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
            throw ConfigError(where + ": expected a complex value [re, im]");
        }
        return {v[0].get<double>(), v[1].get<double>()};
    }

    const json& node() const { return node_; }
    const std::string& path() const { return path_; }

private:
    const json& node_;
    std::string path_;
};

const json& array_at(const Reader& r, const char* key) {
    const auto& v = r.raw(key);
    if (!v.is_array()) throw ConfigError(r.field(key) + ": expected an array");
    return v;
}

std::string indexed(const std::string& base, std::size_t k) { return base + "[" + std::to_string(k) + "]"; }

}  // namespace

NetworkModel parse_network(const json& doc, const std::string& origin) {
    Reader top(doc, origin);
    top.allow_only({"base", "buses", "branches", "grid_sources", "ibdg_sources", "loads", "notes", "name"});
    NetworkModel m;

    if (top.has("base")) {
        Reader b(top.raw("base"), top.field("base"));
        b.allow_only({"kva", "kv", "hz"});
        m.base.kva = b.num_or("kva", m.base.kva);
        m.base.kv = b.num_or("kv", m.base.kv);
        m.base.hz = b.num_or("hz", m.base.hz);
        if (!(m.base.hz > 0.0)) b.fail("hz must be positive");
    }

    const auto& buses = array_at(top, "buses");
    for (std::size_t k = 0; k < buses.size(); ++k) {
        if (!buses[k].is_string()) throw ConfigError(indexed(top.field("buses"), k) + ": expected a bus id string");
        m.buses.push_back(buses[k].get<std::string>());
    }

    const auto& branches = array_at(top, "branches");
    for (std::size_t k = 0; k < branches.size(); ++k) {
        Reader r(branches[k], indexed(top.field("branches"), k));
        r.allow_only({"id", "from", "to", "z1", "z0", "zero_seq_connected", "z0_ground_bus", "notes"});
        Branch br;
        br.id = r.str("id");
        br.from = r.str("from");
        br.to = r.str("to");
        br.z1 = r.cplx("z1");
        br.zero_seq_connected = r.boolean_or("zero_seq_connected", true);
        if (r.has("z0")) br.z0 = r.cplx("z0");
        else if (br.zero_seq_connected) r.fail("z0 is required when zero_seq_connected is true");
        if (r.has("z0_ground_bus")) br.z0_ground_bus = r.str("z0_ground_bus");
        m.branches.push_back(br);
    }

    if (top.has("grid_sources")) {
        const auto& srcs = array_at(top, "grid_sources");
        for (std::size_t k = 0; k < srcs.size(); ++k) {
            Reader r(srcs[k], indexed(top.field("grid_sources"), k));
            r.allow_only({"id", "bus", "e", "z1", "z2", "z0", "notes"});
            GridSource s;
            s.id = r.str("id");
            s.bus = r.str("bus");
            if (r.has("e")) s.e = r.cplx("e");
            s.z1 = r.cplx("z1");
            s.z2 = r.has("z2") ? r.cplx("z2") : s.z1;
            if (r.has("z0")) s.z0 = r.cplx("z0");
            m.grid_sources.push_back(s);
        }
    }

    if (top.has("ibdg_sources")) {
        const auto& srcs = array_at(top, "ibdg_sources");
        for (std::size_t k = 0; k < srcs.size(); ++k) {
            Reader r(srcs[k], indexed(top.field("ibdg_sources"), k));
            r.allow_only({"id", "bus", "p_rating", "p_set", "i_limit", "k2", "notes"});
            IbdgSource s;
            s.id = r.str("id");
            s.bus = r.str("bus");
            s.p_rating = r.num("p_rating");
            if (r.has("p_set")) s.p_set = r.num("p_set");
            s.i_limit = r.num_or("i_limit", s.i_limit);
            s.k2 = r.num_or("k2", s.k2);
            m.ibdg_sources.push_back(s);
        }
    }

    if (top.has("loads")) {
        const auto& loads = array_at(top, "loads");
        for (std::size_t k = 0; k < loads.size(); ++k) {
            Reader r(loads[k], indexed(top.field("loads"), k));
            r.allow_only({"id", "bus", "z", "notes"});
            Load l;
            l.id = r.str("id");
            l.bus = r.str("bus");
            const auto& z = r.raw("z");
            // Either one complex value (balanced) or three entries, null = open phase.
            if (z.is_array() && z.size() == 3) {
                for (std::size_t p = 0; p < 3; ++p) {
                    if (!z[p].is_null()) l.z[p] = Reader::to_complex(z[p], indexed(r.field("z"), p));
                }
            } else {
                const Complex zz = Reader::to_complex(z, r.field("z"));
                l.z = {zz, zz, zz};
            }
            m.loads.push_back(l);
        }
    }

    try {
        build_network(m);
    } catch (const NetworkError& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    return m;
}

NetworkModel load_network(const std::filesystem::path& path) {
    return parse_network(read_json_file(path), path.string());
}

std::string fmt_num(double x) {
    if (x == 0.0) x = 0.0;  // drop negative zero
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

void write_waveform_csv(std::ostream& os, const TerminalWaveforms& w) {
    os << "# rate=" << fmt_num(w.rate) << "\n";
    os << "time_s,va,vb,vc,ia,ib,ic\n";
    char buf[256];
    for (std::size_t n = 0; n < w.size(); ++n) {
        std::snprintf(buf, sizeof buf, "%.9f,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", static_cast<double>(n) / w.rate,
                      w.v[0][n], w.v[1][n], w.v[2][n], w.i[0][n], w.i[1][n], w.i[2][n]);
        os << buf;
    }
}

TerminalWaveforms read_waveform_csv(std::istream& is) {
    TerminalWaveforms w;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto pos = line.find("rate=");
            if (pos != std::string::npos) {
                try {
                    w.rate = std::stod(line.substr(pos + 5));
                } catch (const std::exception&) {
                    throw ConfigError("waveform line " + std::to_string(line_no) + ": bad rate declaration");
                }
            }
            continue;
        }
        if (!header_seen) {
            if (line != "time_s,va,vb,vc,ia,ib,ic") {
                throw ConfigError("waveform line " + std::to_string(line_no) +
                                  ": expected header time_s,va,vb,vc,ia,ib,ic");
            }
            header_seen = true;
            continue;
        }
        std::stringstream ss(line);
        std::string cell;
        std::array<double, 7> vals{};
        std::size_t col = 0;
        while (std::getline(ss, cell, ',')) {
            if (col >= 7) throw ConfigError("waveform line " + std::to_string(line_no) + ": too many columns");
            try {
                std::size_t used = 0;
                vals[col] = std::stod(cell, &used);
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw ConfigError("waveform line " + std::to_string(line_no) + ": bad number '" + cell + "'");
            }
            ++col;
        }
        if (col != 7) throw ConfigError("waveform line " + std::to_string(line_no) + ": expected 7 columns");
        for (std::size_t p = 0; p < 3; ++p) {
            w.v[p].push_back(vals[1 + p]);
            w.i[p].push_back(vals[4 + p]);
        }
    }
    if (!(w.rate > 0.0)) throw ConfigError("waveform: missing '# rate=<samples_per_second>' line");
    if (!header_seen) throw ConfigError("waveform: missing header line");
    return w;
}

}  // namespace mgp
