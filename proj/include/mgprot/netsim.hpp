#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mgprot/estimator.hpp"
#include "mgprot/relay.hpp"
#include "mgprot/sequence.hpp"

namespace mgp {

struct Branch {
    std::string id;
    std::string from;
    std::string to;
    Complex z1;  // z2 = z1
    Complex z0;
    bool zero_seq_connected = true;
    /// Delta/wye-grounded transformer: z0 appears as a shunt at this bus instead of in series.
    std::optional<std::string> z0_ground_bus;
};

struct GridSource {
    std::string id;
    std::string bus;
    Phasor e{1.0, 0.0};
    Complex z1;
    Complex z2;
    std::optional<Complex> z0;  // nullopt: ungrounded source, no zero-sequence path
};

/// Grid-following inverter. Ratings and limits are per-unit of the system base.
struct IbdgSource {
    std::string id;
    std::string bus;
    double p_rating = 0.0;
    std::optional<double> p_set;  // scheduled output, defaults to p_rating
    double i_limit = 1.2;         // positive-sequence current cap, per-unit of p_rating
    double k2 = 2.0;              // negative-sequence reactive gain, per-unit of p_rating

    double scheduled_power() const { return p_set.value_or(p_rating); }
    double current_cap() const { return i_limit * p_rating; }
};

/// Wye-grounded constant-impedance load; nullopt marks an unconnected phase.
struct Load {
    std::string id;
    std::string bus;
    std::array<std::optional<Complex>, 3> z;
};

struct SystemBase {
    double kva = 300.0;
    double kv = 0.48;
    double hz = 60.0;
};

struct NetworkModel {
    std::vector<std::string> buses;
    std::vector<Branch> branches;
    std::vector<GridSource> grid_sources;
    std::vector<IbdgSource> ibdg_sources;
    std::vector<Load> loads;
    SystemBase base;

    std::size_t bus_index(const std::string& id) const;
    std::size_t branch_index(const std::string& id) const;
};

class NetworkError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SingularNetwork : public NetworkError {
public:
    SingularNetwork(const std::string& what, std::vector<std::string> buses)
        : NetworkError(what), buses_(std::move(buses)) {}
    const std::vector<std::string>& buses() const { return buses_; }

private:
    std::vector<std::string> buses_;
};

class ConvergenceError : public NetworkError {
public:
    ConvergenceError(const std::string& what, double residual) : NetworkError(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

/// Balanced per-sequence nodal admittance matrices. Loads contribute their
/// sequence-diagonal (mean) admittance; unbalance coupling is handled by SequenceNetwork.
struct SequenceAdmittance {
    Eigen::MatrixXcd y0;
    Eigen::MatrixXcd y1;
    Eigen::MatrixXcd y2;

    const Eigen::MatrixXcd& operator[](Sequence s) const;
};

/// Checks model invariants and assembles the per-sequence matrices.
SequenceAdmittance build_network(const NetworkModel& model);

/// 3x3 sequence-domain admittance of a wye-grounded load, order (0, 1, 2).
Eigen::Matrix3cd load_sequence_admittance(const Load& load);

/// Bus voltages, branch currents (from-end, flowing into the branch) and inverter
/// positive-sequence injections for one operating state.
struct NetworkState {
    std::vector<SequenceSet> bus_v;
    std::vector<SequenceSet> branch_i;
    std::vector<Phasor> ibdg_i1;
    std::size_t iterations = 0;
};

enum class FaultKind { SLG, LL, LLG, ThreePhase };

std::string_view to_string(FaultKind k);
std::optional<FaultKind> parse_fault_kind(std::string_view s);

struct FaultSpec {
    std::string bus;
    FaultKind kind = FaultKind::SLG;
    std::string phases = "A";  // "A", "BC", "ABC", ...
    double rf = 0.0;
    double t_on = 0.0;

    /// Throws std::invalid_argument when rf < 0 or phases disagree with kind.
    void validate() const;
};

struct SolutionSet {
    NetworkState prefault;
    NetworkState faulted;
    NetworkState purefault;
    std::size_t fault_bus = 0;
    SequenceSet fault_current;  // leaving the network into the fault
    double ibdg_residual = 0.0;  // last fixed-point update size
    std::vector<std::string> warnings;
};

/// Assembled and factorized sequence networks of one model. Immutable after construction.
class SequenceNetwork {
public:
    explicit SequenceNetwork(NetworkModel model);

    const NetworkModel& model() const { return model_; }
    const SequenceAdmittance& admittance() const { return admittance_; }
    std::size_t bus_count() const { return model_.buses.size(); }

    /// Bus voltages for given per-bus sequence current injections; grid EMFs are
    /// included only when with_sources is set.
    std::vector<SequenceSet> solve(const std::vector<SequenceSet>& injections, bool with_sources) const;

    /// Driving-point impedance of one sequence network at a bus.
    Complex thevenin_at(const std::string& bus, Sequence seq) const;
    /// 3x3 sequence-domain Thevenin matrix at a bus (off-diagonals from load unbalance).
    Eigen::Matrix3cd thevenin_matrix(std::size_t bus) const;
    /// Whether the zero-sequence network offers any path to ground from this bus.
    bool has_ground_path(std::size_t bus) const;

    std::vector<SequenceSet> branch_currents(const std::vector<SequenceSet>& bus_v) const;

private:
    std::size_t index(Sequence s, std::size_t bus) const { return static_cast<std::size_t>(s) * bus_count() + bus; }
    Eigen::VectorXcd source_vector() const;

    NetworkModel model_;
    SequenceAdmittance admittance_;
    std::vector<bool> zero_grounded_;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu_;
};

/// Inverter positive-sequence current for a terminal voltage: constant power, capped at
/// i_limit * p_rating, injected at the given angle. Prefault solves pass the terminal
/// voltage angle; faulted solves pass the prefault angle (PLL held through the fault).
Phasor ibdg_injection(const IbdgSource& src, Phasor v1, double angle_rad);

inline constexpr double kIbdgTolerance = 1e-8;
inline constexpr std::size_t kIbdgMaxIterations = 50;

NetworkState solve_prefault(const SequenceNetwork& net);

/// Sequence fault currents at a bus given its open-circuit sequence voltage and 3x3
/// Thevenin matrix. `grounded` = false forces zero-sequence current to zero.
SequenceSet fault_currents(const SequenceSet& v_open, const Eigen::Matrix3cd& z_th, const FaultSpec& fault,
                           bool grounded, std::vector<std::string>* warnings = nullptr);

SolutionSet apply_fault(const SequenceNetwork& net, const FaultSpec& fault);

/// Model with `branch` removed and everything no longer connected to `bus` dropped.
NetworkModel behind_network(const NetworkModel& model, const std::string& branch, const std::string& bus);

/// Sequence current residual (injections minus outflow) at each bus.
std::vector<SequenceSet> kcl_residual(const SequenceNetwork& net, const NetworkState& state, bool with_sources,
                                      std::optional<std::size_t> fault_bus = std::nullopt,
                                      const SequenceSet& fault_current = {});

struct MeasurementPoint {
    std::string relay_id;
    std::string branch;
    std::string bus;  // measured end of the branch
    Polarity polarity = Polarity::IntoBranch;
};

/// Phase voltage at the measured bus and forward-polarity branch current.
TerminalPhasors terminal_phasors(const SequenceNetwork& net, const NetworkState& state,
                                 const MeasurementPoint& point);

struct MeasuredWaveforms {
    std::array<WaveformChannel, 3> v;
    std::array<WaveformChannel, 3> i;
    std::size_t fault_sample = 0;
};

/// Samples the prefault state before t_on and the faulted state from t_on on.
MeasuredWaveforms measure(const SequenceNetwork& net, const SolutionSet& solution, const MeasurementPoint& point,
                          double rate, double t_on, double duration);

}  // namespace mgp
