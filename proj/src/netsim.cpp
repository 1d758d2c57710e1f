#include "mgprot/netsim.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

namespace mgp {

std::size_t NetworkModel::bus_index(const std::string& id) const {
    const auto it = std::find(buses.begin(), buses.end(), id);
    if (it == buses.end()) throw NetworkError("unknown bus '" + id + "'");
    return static_cast<std::size_t>(it - buses.begin());
}

std::size_t NetworkModel::branch_index(const std::string& id) const {
    for (std::size_t k = 0; k < branches.size(); ++k) {
        if (branches[k].id == id) return k;
    }
    throw NetworkError("unknown branch '" + id + "'");
}

const Eigen::MatrixXcd& SequenceAdmittance::operator[](Sequence s) const {
    switch (s) {
        case Sequence::Zero: return y0;
        case Sequence::Positive: return y1;
        case Sequence::Negative: return y2;
    }
    return y1;
}

std::string_view to_string(FaultKind k) {
    switch (k) {
        case FaultKind::SLG: return "SLG";
        case FaultKind::LL: return "LL";
        case FaultKind::LLG: return "LLG";
        case FaultKind::ThreePhase: return "ThreePhase";
    }
    return "SLG";
}

std::optional<FaultKind> parse_fault_kind(std::string_view s) {
    if (s == "SLG") return FaultKind::SLG;
    if (s == "LL") return FaultKind::LL;
    if (s == "LLG") return FaultKind::LLG;
    if (s == "ThreePhase" || s == "3PH") return FaultKind::ThreePhase;
    return std::nullopt;
}

namespace {

// Phase letters of a fault as sorted indices 0..2.
std::vector<std::size_t> phase_indices(const std::string& phases) {
    std::set<std::size_t> out;
    for (char ch : phases) {
        const char u = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
        if (u < 'A' || u > 'C') throw std::invalid_argument("invalid phase letter in '" + phases + "'");
        out.insert(static_cast<std::size_t>(u - 'A'));
    }
    return {out.begin(), out.end()};
}

struct DisjointSet {
    std::vector<std::size_t> parent;
    explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

Eigen::Matrix3cd fortescue() {
    Eigen::Matrix3cd a;
    a << 1.0, 1.0, 1.0,
         1.0, kA2, kA,
         1.0, kA, kA2;
    return a;
}

Eigen::Matrix3cd fortescue_inverse() {
    Eigen::Matrix3cd a;
    a << 1.0, 1.0, 1.0,
         1.0, kA, kA2,
         1.0, kA2, kA;
    return a / 3.0;
}

void stamp_series(Eigen::MatrixXcd& y, std::size_t i, std::size_t j, Complex adm) {
    y(i, i) += adm;
    y(j, j) += adm;
    y(i, j) -= adm;
    y(j, i) -= adm;
}

Complex ibdg_negative_shunt(const IbdgSource& s) { return Complex(0.0, -s.k2 * s.p_rating); }

void require_impedance(Complex z, const std::string& what) {
    if (!(std::abs(z) > 0.0) || !std::isfinite(z.real()) || !std::isfinite(z.imag())) {
        throw NetworkError(what + ": impedance magnitude must be > 0");
    }
}

void check_model(const NetworkModel& m) {
    if (m.buses.empty()) throw NetworkError("network has no buses");
    std::set<std::string> seen;
    for (const auto& b : m.buses) {
        if (!seen.insert(b).second) throw NetworkError("duplicate bus '" + b + "'");
    }
    for (const auto& br : m.branches) {
        m.bus_index(br.from);
        m.bus_index(br.to);
        if (br.from == br.to) throw NetworkError("branch " + br.id + " connects a bus to itself");
        require_impedance(br.z1, "branch " + br.id + " z1");
        if (br.zero_seq_connected || br.z0_ground_bus) require_impedance(br.z0, "branch " + br.id + " z0");
        if (br.zero_seq_connected && br.z0_ground_bus) {
            throw NetworkError("branch " + br.id + ": z0_ground_bus requires zero_seq_connected = false");
        }
        if (br.z0_ground_bus && *br.z0_ground_bus != br.from && *br.z0_ground_bus != br.to) {
            throw NetworkError("branch " + br.id + ": z0_ground_bus must be one of its ends");
        }
    }
    for (const auto& s : m.grid_sources) {
        m.bus_index(s.bus);
        require_impedance(s.z1, "source " + s.id + " z1");
        require_impedance(s.z2, "source " + s.id + " z2");
        if (s.z0) require_impedance(*s.z0, "source " + s.id + " z0");
    }
    for (const auto& s : m.ibdg_sources) {
        m.bus_index(s.bus);
        if (!(s.p_rating > 0.0)) throw NetworkError("ibdg " + s.id + ": p_rating must be > 0");
        if (!(s.i_limit >= 1.0)) throw NetworkError("ibdg " + s.id + ": i_limit must be >= 1.0");
        if (!(s.k2 >= 0.0)) throw NetworkError("ibdg " + s.id + ": k2 must be >= 0");
        if (s.p_set && !(*s.p_set >= 0.0)) throw NetworkError("ibdg " + s.id + ": p_set must be >= 0");
    }
    for (const auto& l : m.loads) {
        m.bus_index(l.bus);
        for (const auto& z : l.z) {
            if (z) require_impedance(*z, "load " + l.id);
        }
    }

    // Every positive-sequence island needs a grid source, otherwise Y1 is singular.
    const std::size_t n = m.buses.size();
    DisjointSet ds(n);
    for (const auto& br : m.branches) ds.unite(m.bus_index(br.from), m.bus_index(br.to));
    std::set<std::size_t> sourced;
    for (const auto& s : m.grid_sources) sourced.insert(ds.find(m.bus_index(s.bus)));
    std::map<std::size_t, std::vector<std::string>> islands;
    for (std::size_t b = 0; b < n; ++b) {
        if (!sourced.count(ds.find(b))) islands[ds.find(b)].push_back(m.buses[b]);
    }
    if (!islands.empty()) {
        const auto& buses = islands.begin()->second;
        std::string list;
        for (const auto& b : buses) list += (list.empty() ? "" : ", ") + b;
        throw SingularNetwork("island without a grid source: {" + list + "}", buses);
    }
}

}  // namespace

Eigen::Matrix3cd load_sequence_admittance(const Load& load) {
    Eigen::Matrix3cd yp = Eigen::Matrix3cd::Zero();
    for (std::size_t p = 0; p < 3; ++p) {
        if (load.z[p]) yp(p, p) = 1.0 / *load.z[p];
    }
    return fortescue_inverse() * yp * fortescue();
}

SequenceAdmittance build_network(const NetworkModel& model) {
    check_model(model);
    const auto n = static_cast<Eigen::Index>(model.buses.size());
    SequenceAdmittance y{Eigen::MatrixXcd::Zero(n, n), Eigen::MatrixXcd::Zero(n, n), Eigen::MatrixXcd::Zero(n, n)};

    for (const auto& br : model.branches) {
        const auto i = static_cast<Eigen::Index>(model.bus_index(br.from));
        const auto j = static_cast<Eigen::Index>(model.bus_index(br.to));
        stamp_series(y.y1, i, j, 1.0 / br.z1);
        stamp_series(y.y2, i, j, 1.0 / br.z1);
        if (br.zero_seq_connected) {
            stamp_series(y.y0, i, j, 1.0 / br.z0);
        } else if (br.z0_ground_bus) {
            const auto g = static_cast<Eigen::Index>(model.bus_index(*br.z0_ground_bus));
            y.y0(g, g) += 1.0 / br.z0;
        }
    }
    for (const auto& s : model.grid_sources) {
        const auto b = static_cast<Eigen::Index>(model.bus_index(s.bus));
        y.y1(b, b) += 1.0 / s.z1;
        y.y2(b, b) += 1.0 / s.z2;
        if (s.z0) y.y0(b, b) += 1.0 / *s.z0;
    }
    for (const auto& s : model.ibdg_sources) {
        const auto b = static_cast<Eigen::Index>(model.bus_index(s.bus));
        y.y2(b, b) += ibdg_negative_shunt(s);
    }
    for (const auto& l : model.loads) {
        const auto b = static_cast<Eigen::Index>(model.bus_index(l.bus));
        const Eigen::Matrix3cd ys = load_sequence_admittance(l);
        y.y0(b, b) += ys(0, 0);
        y.y1(b, b) += ys(1, 1);
        y.y2(b, b) += ys(2, 2);
    }
    return y;
}

SequenceNetwork::SequenceNetwork(NetworkModel model) : model_(std::move(model)) {
    admittance_ = build_network(model_);
    const std::size_t n = bus_count();

    DisjointSet ds(n);
    for (const auto& br : model_.branches) {
        if (br.zero_seq_connected) ds.unite(model_.bus_index(br.from), model_.bus_index(br.to));
    }
    std::set<std::size_t> grounded_roots;
    for (const auto& s : model_.grid_sources) {
        if (s.z0) grounded_roots.insert(ds.find(model_.bus_index(s.bus)));
    }
    for (const auto& br : model_.branches) {
        if (br.z0_ground_bus) grounded_roots.insert(ds.find(model_.bus_index(*br.z0_ground_bus)));
    }
    for (const auto& l : model_.loads) {
        if (l.z[0] || l.z[1] || l.z[2]) grounded_roots.insert(ds.find(model_.bus_index(l.bus)));
    }
    zero_grounded_.resize(n);
    for (std::size_t b = 0; b < n; ++b) zero_grounded_[b] = grounded_roots.count(ds.find(b)) > 0;

    const auto nn = static_cast<Eigen::Index>(n);
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(3 * nn, 3 * nn);
    m.block(0, 0, nn, nn) = admittance_.y0;
    m.block(nn, nn, nn, nn) = admittance_.y1;
    m.block(2 * nn, 2 * nn, nn, nn) = admittance_.y2;
    for (const auto& l : model_.loads) {
        const auto b = static_cast<Eigen::Index>(model_.bus_index(l.bus));
        const Eigen::Matrix3cd ys = load_sequence_admittance(l);
        for (Eigen::Index s = 0; s < 3; ++s) {
            for (Eigen::Index t = 0; t < 3; ++t) {
                if (s != t) m(s * nn + b, t * nn + b) += ys(s, t);
            }
        }
    }
    // Buses without any zero-sequence path to ground have an undetermined V0; pin it to zero.
    for (std::size_t b = 0; b < n; ++b) {
        if (zero_grounded_[b]) continue;
        const auto r = static_cast<Eigen::Index>(b);
        m.row(r).setZero();
        m.col(r).setZero();
        m(r, r) = 1.0;
    }
    lu_.compute(m);
    const double rcond = lu_.rcond();
    if (!(rcond > 1e-14)) {
        throw SingularNetwork("sequence network matrix is singular (rcond " + std::to_string(rcond) + ")",
                              model_.buses);
    }
}

Eigen::VectorXcd SequenceNetwork::source_vector() const {
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(3 * bus_count()));
    for (const auto& s : model_.grid_sources) {
        rhs(static_cast<Eigen::Index>(index(Sequence::Positive, model_.bus_index(s.bus)))) += s.e.value() / s.z1;
    }
    return rhs;
}

std::vector<SequenceSet> SequenceNetwork::solve(const std::vector<SequenceSet>& injections, bool with_sources) const {
    const std::size_t n = bus_count();
    if (injections.size() != n) throw std::invalid_argument("injection vector size mismatch");
    Eigen::VectorXcd rhs = with_sources ? source_vector() : Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(3 * n));
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t s = 0; s < 3; ++s) {
            rhs(static_cast<Eigen::Index>(s * n + b)) += injections[b][s].value();
        }
    }
    for (std::size_t b = 0; b < n; ++b) {
        if (!zero_grounded_[b]) rhs(static_cast<Eigen::Index>(b)) = 0.0;
    }
    const Eigen::VectorXcd v = lu_.solve(rhs);
    std::vector<SequenceSet> out(n);
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t s = 0; s < 3; ++s) out[b][s] = v(static_cast<Eigen::Index>(s * n + b));
    }
    return out;
}

bool SequenceNetwork::has_ground_path(std::size_t bus) const { return zero_grounded_.at(bus); }

Eigen::Matrix3cd SequenceNetwork::thevenin_matrix(std::size_t bus) const {
    Eigen::Matrix3cd z;
    std::vector<SequenceSet> inj(bus_count());
    for (std::size_t s = 0; s < 3; ++s) {
        inj[bus] = SequenceSet{};
        inj[bus][s] = Phasor(1.0, 0.0);
        const auto v = solve(inj, false);
        for (std::size_t t = 0; t < 3; ++t) {
            z(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(s)) = v[bus][t].value();
        }
    }
    return z;
}

Complex SequenceNetwork::thevenin_at(const std::string& bus, Sequence seq) const {
    const std::size_t b = model_.bus_index(bus);
    if (seq == Sequence::Zero && !zero_grounded_[b]) {
        throw SingularNetwork("no zero-sequence path to ground at bus '" + bus + "'", {bus});
    }
    const auto s = static_cast<Eigen::Index>(seq);
    return thevenin_matrix(b)(s, s);
}

std::vector<SequenceSet> SequenceNetwork::branch_currents(const std::vector<SequenceSet>& bus_v) const {
    std::vector<SequenceSet> out;
    out.reserve(model_.branches.size());
    for (const auto& br : model_.branches) {
        const auto& vf = bus_v[model_.bus_index(br.from)];
        const auto& vt = bus_v[model_.bus_index(br.to)];
        SequenceSet i;
        i.positive = (vf.positive - vt.positive).value() / br.z1;
        i.negative = (vf.negative - vt.negative).value() / br.z1;
        if (br.zero_seq_connected) i.zero = (vf.zero - vt.zero).value() / br.z0;
        out.push_back(i);
    }
    return out;
}

Phasor ibdg_injection(const IbdgSource& src, Phasor v1, double angle_rad) {
    const double vm = v1.magnitude();
    const double cap = src.current_cap();
    const double mag = vm < 1e-9 ? cap : std::min(src.scheduled_power() / vm, cap);
    return Phasor(std::polar(mag, angle_rad));
}

namespace {

std::vector<SequenceSet> ibdg_injection_vector(const SequenceNetwork& net, const std::vector<Phasor>& j) {
    std::vector<SequenceSet> inj(net.bus_count());
    const auto& srcs = net.model().ibdg_sources;
    for (std::size_t k = 0; k < srcs.size(); ++k) inj[net.model().bus_index(srcs[k].bus)].positive += j[k];
    return inj;
}

// angle_ref: per-source angle to inject at; empty means follow the terminal voltage.
double update_injections(const SequenceNetwork& net, const std::vector<SequenceSet>& v, std::vector<Phasor>& j,
                         const std::vector<double>& angle_ref) {
    const auto& srcs = net.model().ibdg_sources;
    double change = 0.0;
    for (std::size_t k = 0; k < srcs.size(); ++k) {
        const Phasor v1 = v[net.model().bus_index(srcs[k].bus)].positive;
        double angle = 0.0;
        if (!angle_ref.empty()) angle = angle_ref[k];
        else angle = v1.magnitude() > 1e-9 ? std::arg(v1.value()) : std::arg(j[k].value());
        const Phasor next = ibdg_injection(srcs[k], v1, angle);
        change = std::max(change, (next - j[k]).magnitude());
        j[k] = next;
    }
    return change;
}

NetworkState make_state(const SequenceNetwork& net, std::vector<SequenceSet> v, std::vector<Phasor> j,
                        std::size_t iterations) {
    NetworkState st;
    st.branch_i = net.branch_currents(v);
    st.bus_v = std::move(v);
    st.ibdg_i1 = std::move(j);
    st.iterations = iterations;
    return st;
}

}  // namespace

NetworkState solve_prefault(const SequenceNetwork& net) {
    const auto& srcs = net.model().ibdg_sources;
    std::vector<Phasor> j(srcs.size());
    for (std::size_t k = 0; k < srcs.size(); ++k) j[k] = Phasor(srcs[k].scheduled_power(), 0.0);

    double change = 0.0;
    for (std::size_t it = 1; it <= kIbdgMaxIterations; ++it) {
        const auto v = net.solve(ibdg_injection_vector(net, j), true);
        change = update_injections(net, v, j, {});
        if (change <= kIbdgTolerance) return make_state(net, net.solve(ibdg_injection_vector(net, j), true), j, it);
    }
    throw ConvergenceError("prefault inverter iteration did not converge (residual " + std::to_string(change) + ")",
                           change);
}

void FaultSpec::validate() const {
    if (!(rf >= 0.0) || !std::isfinite(rf)) throw std::invalid_argument("fault rf must be >= 0");
    const auto ph = phase_indices(phases);
    if (ph.size() != phases.size()) throw std::invalid_argument("repeated phase in '" + phases + "'");
    const std::size_t want = kind == FaultKind::SLG ? 1 : (kind == FaultKind::ThreePhase ? 3 : 2);
    if (ph.size() != want) {
        throw std::invalid_argument("fault kind " + std::string(to_string(kind)) + " needs " + std::to_string(want) +
                                    " phase(s), got '" + phases + "'");
    }
}

SequenceSet fault_currents(const SequenceSet& v_open, const Eigen::Matrix3cd& z_th, const FaultSpec& fault,
                           bool grounded, std::vector<std::string>* warnings) {
    fault.validate();
    FaultKind kind = fault.kind;
    if (!grounded && kind == FaultKind::SLG) {
        if (warnings) warnings->push_back("no zero-sequence path at fault bus: SLG fault draws no current");
        return {};
    }
    if (!grounded && kind == FaultKind::LLG) {
        if (warnings) warnings->push_back("no zero-sequence path at fault bus: LLG fault treated as LL");
        kind = FaultKind::LL;
    }

    const Eigen::Matrix3cd a = fortescue();
    Eigen::Vector3cd voc(v_open.zero.value(), v_open.positive.value(), v_open.negative.value());
    // Phase p: I_p = a_p x, V_p = a_p voc - a_p Z x.
    auto i_row = [&](std::size_t p) -> Eigen::RowVector3cd { return a.row(static_cast<Eigen::Index>(p)); };
    auto v_row = [&](std::size_t p) -> Eigen::RowVector3cd { return -a.row(static_cast<Eigen::Index>(p)) * z_th; };
    auto v_const = [&](std::size_t p) -> Complex { return (a.row(static_cast<Eigen::Index>(p)) * voc)(0); };

    const double rf = fault.rf;
    const auto ph = phase_indices(fault.phases);
    Eigen::Matrix3cd m;
    Eigen::Vector3cd rhs;
    auto others = [&](std::size_t p, std::size_t q) {
        for (std::size_t r = 0; r < 3; ++r) {
            if (r != p && r != q) return r;
        }
        return std::size_t{0};
    };

    switch (kind) {
        case FaultKind::SLG: {
            const std::size_t p = ph[0];
            const std::size_t q = (p + 1) % 3, r = (p + 2) % 3;
            m.row(0) = v_row(p) - rf * i_row(p);
            rhs(0) = -v_const(p);
            m.row(1) = i_row(q);
            rhs(1) = 0.0;
            m.row(2) = i_row(r);
            rhs(2) = 0.0;
            break;
        }
        case FaultKind::LL: {
            const std::size_t p = ph[0], q = ph.size() > 1 ? ph[1] : ph[0];
            const std::size_t r = others(p, q);
            m.row(0) = i_row(r);
            rhs(0) = 0.0;
            m.row(1) = i_row(p) + i_row(q);
            rhs(1) = 0.0;
            m.row(2) = v_row(p) - v_row(q) - rf * i_row(p);
            rhs(2) = v_const(q) - v_const(p);
            break;
        }
        case FaultKind::LLG: {
            const std::size_t p = ph[0], q = ph[1];
            const std::size_t r = others(p, q);
            m.row(0) = i_row(r);
            rhs(0) = 0.0;
            m.row(1) = v_row(p) - v_row(q);
            rhs(1) = v_const(q) - v_const(p);
            m.row(2) = v_row(p) - rf * (i_row(p) + i_row(q));
            rhs(2) = -v_const(p);
            break;
        }
        case FaultKind::ThreePhase: {
            m.row(0) = (v_row(0) - rf * i_row(0)) - (v_row(1) - rf * i_row(1));
            rhs(0) = v_const(1) - v_const(0);
            m.row(1) = (v_row(1) - rf * i_row(1)) - (v_row(2) - rf * i_row(2));
            rhs(1) = v_const(2) - v_const(1);
            m.row(2) = i_row(0) + i_row(1) + i_row(2);
            rhs(2) = 0.0;
            break;
        }
    }
    const Eigen::Vector3cd x = m.fullPivLu().solve(rhs);
    return {x(0), x(1), x(2)};
}

SolutionSet apply_fault(const SequenceNetwork& net, const FaultSpec& fault) {
    fault.validate();
    SolutionSet sol;
    sol.prefault = solve_prefault(net);
    const std::size_t f = net.model().bus_index(fault.bus);
    sol.fault_bus = f;
    const bool grounded = net.has_ground_path(f);
    const Eigen::Matrix3cd z_th = net.thevenin_matrix(f);

    // Response of every bus to unit fault-bus injections, one column per sequence.
    std::array<std::vector<SequenceSet>, 3> columns;
    for (std::size_t s = 0; s < 3; ++s) {
        std::vector<SequenceSet> inj(net.bus_count());
        inj[f][s] = Phasor(1.0, 0.0);
        columns[s] = net.solve(inj, false);
    }

    // The inverter PLL angle is held at its prefault value for the fault duration.
    const auto& srcs = net.model().ibdg_sources;
    std::vector<double> pll(srcs.size());
    for (std::size_t k = 0; k < srcs.size(); ++k) {
        pll[k] = std::arg(sol.prefault.bus_v[net.model().bus_index(srcs[k].bus)].positive.value());
    }
    std::vector<Phasor> j = sol.prefault.ibdg_i1;
    double change = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    while (iterations < kIbdgMaxIterations) {
        ++iterations;
        auto v = net.solve(ibdg_injection_vector(net, j), true);
        const SequenceSet i_f = fault_currents(v[f], z_th, fault, grounded);
        for (std::size_t b = 0; b < v.size(); ++b) {
            for (std::size_t s = 0; s < 3; ++s) {
                for (std::size_t t = 0; t < 3; ++t) v[b][t] -= columns[s][b][t] * i_f[s];
            }
        }
        change = update_injections(net, v, j, pll);
        if (change <= kIbdgTolerance) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        throw ConvergenceError("faulted inverter iteration did not converge after " +
                                   std::to_string(kIbdgMaxIterations) + " iterations (residual " +
                                   std::to_string(change) + ")",
                               change);
    }
    sol.ibdg_residual = change;

    const auto v_open = net.solve(ibdg_injection_vector(net, j), true);
    sol.fault_current = fault_currents(v_open[f], z_th, fault, grounded, &sol.warnings);

    auto faulted_inj = ibdg_injection_vector(net, j);
    faulted_inj[f] = faulted_inj[f] - sol.fault_current;
    sol.faulted = make_state(net, net.solve(faulted_inj, true), j, iterations);

    std::vector<Phasor> dj(j.size());
    for (std::size_t k = 0; k < j.size(); ++k) dj[k] = j[k] - sol.prefault.ibdg_i1[k];
    auto pure_inj = ibdg_injection_vector(net, dj);
    pure_inj[f] = pure_inj[f] - sol.fault_current;
    sol.purefault = make_state(net, net.solve(pure_inj, false), dj, iterations);
    return sol;
}

NetworkModel behind_network(const NetworkModel& model, const std::string& branch, const std::string& bus) {
    model.branch_index(branch);
    model.bus_index(bus);
    std::set<std::string> keep{bus};
    bool grew = true;
    while (grew) {
        grew = false;
        for (const auto& br : model.branches) {
            if (br.id == branch) continue;
            const bool f = keep.count(br.from) > 0, t = keep.count(br.to) > 0;
            if (f != t) {
                keep.insert(f ? br.to : br.from);
                grew = true;
            }
        }
    }
    NetworkModel out;
    out.base = model.base;
    for (const auto& b : model.buses) {
        if (keep.count(b)) out.buses.push_back(b);
    }
    for (const auto& br : model.branches) {
        if (br.id != branch && keep.count(br.from) && keep.count(br.to)) out.branches.push_back(br);
    }
    for (const auto& s : model.grid_sources) {
        if (keep.count(s.bus)) out.grid_sources.push_back(s);
    }
    for (const auto& s : model.ibdg_sources) {
        if (keep.count(s.bus)) out.ibdg_sources.push_back(s);
    }
    for (const auto& l : model.loads) {
        if (keep.count(l.bus)) out.loads.push_back(l);
    }
    return out;
}

std::vector<SequenceSet> kcl_residual(const SequenceNetwork& net, const NetworkState& state, bool with_sources,
                                      std::optional<std::size_t> fault_bus, const SequenceSet& fault_current) {
    const auto& m = net.model();
    const std::size_t n = net.bus_count();
    std::vector<SequenceSet> res(n);
    auto sub = [&](std::size_t b, const SequenceSet& out) { res[b] = res[b] - out; };

    for (std::size_t k = 0; k < m.branches.size(); ++k) {
        const auto& br = m.branches[k];
        const std::size_t i = m.bus_index(br.from), j = m.bus_index(br.to);
        sub(i, state.branch_i[k]);
        res[j] = res[j] + state.branch_i[k];
        if (br.z0_ground_bus) {
            const std::size_t g = m.bus_index(*br.z0_ground_bus);
            SequenceSet shunt;
            shunt.zero = state.bus_v[g].zero.value() / br.z0;
            sub(g, shunt);
        }
    }
    for (const auto& s : m.grid_sources) {
        const std::size_t b = m.bus_index(s.bus);
        const auto& v = state.bus_v[b];
        SequenceSet out;
        out.positive = (v.positive.value() - (with_sources ? s.e.value() : Complex{})) / s.z1;
        out.negative = v.negative.value() / s.z2;
        if (s.z0) out.zero = v.zero.value() / *s.z0;
        sub(b, out);
    }
    for (std::size_t k = 0; k < m.ibdg_sources.size(); ++k) {
        const auto& s = m.ibdg_sources[k];
        const std::size_t b = m.bus_index(s.bus);
        res[b].positive += state.ibdg_i1[k];
        SequenceSet out;
        out.negative = ibdg_negative_shunt(s) * state.bus_v[b].negative.value();
        sub(b, out);
    }
    for (const auto& l : m.loads) {
        const std::size_t b = m.bus_index(l.bus);
        const auto& v = state.bus_v[b];
        const Eigen::Vector3cd vs(v.zero.value(), v.positive.value(), v.negative.value());
        const Eigen::Vector3cd is = load_sequence_admittance(l) * vs;
        sub(b, SequenceSet{is(0), is(1), is(2)});
    }
    if (fault_bus) sub(*fault_bus, fault_current);
    return res;
}

TerminalPhasors terminal_phasors(const SequenceNetwork& net, const NetworkState& state, const MeasurementPoint& point) {
    const auto& m = net.model();
    const std::size_t k = m.branch_index(point.branch);
    const auto& br = m.branches[k];
    if (point.bus != br.from && point.bus != br.to) {
        throw NetworkError("relay " + point.relay_id + ": bus '" + point.bus + "' is not an end of branch " + br.id);
    }
    SequenceSet i = state.branch_i[k];
    double sign = point.bus == br.from ? 1.0 : -1.0;
    if (point.polarity == Polarity::OutOfBranch) sign = -sign;
    i = Complex(sign) * i;
    TerminalPhasors t;
    t.v = from_sequence(state.bus_v[m.bus_index(point.bus)]);
    t.i = from_sequence(i);
    return t;
}

MeasuredWaveforms measure(const SequenceNetwork& net, const SolutionSet& solution, const MeasurementPoint& point,
                          double rate, double t_on, double duration) {
    const double hz = net.model().base.hz;
    const std::size_t n_cycle = checked_samples_per_cycle(rate, hz);
    const double k_on_exact = t_on * rate;
    const double k_on = std::round(k_on_exact);
    if (std::abs(k_on_exact - k_on) > 1e-6 || k_on < 0.0) {
        throw std::invalid_argument("fault time " + std::to_string(t_on) + " s is not on a sample boundary");
    }
    const auto total = static_cast<std::size_t>(std::llround(duration * rate));
    const TerminalPhasors pre = terminal_phasors(net, solution.prefault, point);
    const TerminalPhasors post = terminal_phasors(net, solution.faulted, point);

    MeasuredWaveforms w;
    w.fault_sample = static_cast<std::size_t>(k_on);
    for (std::size_t p = 0; p < 3; ++p) {
        for (auto* ch : {&w.v[p], &w.i[p]}) {
            ch->rate = rate;
            ch->f_nominal = hz;
            ch->samples.resize(total);
        }
        for (std::size_t n = 0; n < total; ++n) {
            const TerminalPhasors& src = n < w.fault_sample ? pre : post;
            w.v[p].samples[n] = instantaneous(src.v[p], n, n_cycle);
            w.i[p].samples[n] = instantaneous(src.i[p], n, n_cycle);
        }
    }
    return w;
}

}  // namespace mgp
