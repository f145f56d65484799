#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "chiplink/common.hpp"

namespace chiplink::simcore {

// Node references: non-negative ids are solved nodes, negatives are fixed
// potentials or the driven stimulus node.
using NodeRef = int;
inline constexpr NodeRef kGround = -1;
inline constexpr NodeRef kVdd = -2;
inline constexpr NodeRef kStim = -3;
inline constexpr NodeRef kVterm = -4;

// Element tags drive the energy attribution in characterization: TX/RX device
// energy is supply draw minus charge delivered into non-device elements.
enum class Group : std::uint8_t { tx_device, rx_device, channel, eq, term, load, bias };

struct DeviceParams {
  double r_on_p_ohm = 0.0;
  double r_on_n_ohm = 0.0;
  double c_in_F = 0.0;
  double c_out_F = 0.0;
};

struct Edge {
  bool rising = true;
  double slew_20_80_s = 0.0;  // 20-80% transition of the driven ramp
};

class Network {
 public:
  NodeRef add_node(std::string label);
  void add_resistor(NodeRef a, NodeRef b, double ohms, Group g);
  void add_capacitor(NodeRef a, NodeRef b, double farads, Group g);
  // Inverter stage: threshold-switched pull-up/pull-down on the output node,
  // c_in at the input, c_out at the output. Even counts keep polarity.
  void add_inverter(NodeRef input, NodeRef output, const DeviceParams& p, Group g);

  void set_vdd(double v) { vdd_ = v; }
  void set_vterm(double v) { vterm_ = v; }
  double vdd() const { return vdd_; }
  double vterm() const { return vterm_; }

  int node_count() const { return static_cast<int>(labels_.size()); }
  const std::string& label(int node) const { return labels_[node]; }

  struct Resistor {
    NodeRef a, b;
    double g;  // 1/ohms
    Group group;
  };
  struct Capacitor {
    NodeRef a, b;
    double c;
    Group group;
  };
  struct Inverter {
    NodeRef input, output;
    DeviceParams p;
    Group group;
  };

  std::vector<Resistor> resistors;
  std::vector<Capacitor> capacitors;
  std::vector<Inverter> inverters;

 private:
  std::vector<std::string> labels_;
  double vdd_ = 0.0;
  double vterm_ = 0.0;
};

struct Probe {
  int node = -1;
  // Filled by the solver.
  double v_start = 0.0;
  double v_end = 0.0;
  double t_50_s = -1.0;  // crossing of the transition midpoint; <0 = never crossed
  double slew_20_80_s = -1.0;
  bool crossed = false;
};

struct SolveOptions {
  double t_end_s = 0.0;  // 0 = auto from settling estimate
  double time_step_scale = 1.0;
  double settle_tau_factor = 12.0;
  int max_steps = 400000;
  std::string dump_waveforms_path;  // empty = no dump
};

struct TransientResult {
  std::vector<Probe> probes;
  double stim_t50_s = 0.0;

  double e_supply_J = 0.0;        // total vdd-rail draw
  // Zero in the switched-resistor device model; the analytic short-circuit
  // fraction is applied to the attributed energy during characterization.
  double e_shortcircuit_J = 0.0;
  double e_supply_tx_J = 0.0;     // draw through tx-tagged pull-ups
  double e_supply_rx_J = 0.0;
  // Positive charge delivered into non-device elements, split by who drives
  // it: channel/eq caps hang off the TX, the core-load cap off the RX (or the
  // TX when no RX stages are present). Used to separate device-internal
  // energy from charge passed onward.
  double q_ext_channel_C = 0.0;
  double q_ext_load_C = 0.0;
  double q_term_C = 0.0;

  int steps = 0;
  double dt_s = 0.0;

  double delay_50_s(size_t probe_idx = 0) const {
    return probes[probe_idx].t_50_s - stim_t50_s;
  }
};

// Trapezoidal integration of the switched-resistor RC network. Two-phase
// fixed step (fine across the stimulus ramp, then dominant-tau resolution),
// with device toggles handled by step splitting at the crossing.
TransientResult solve_transient(const Network& net, const Edge& stimulus,
                                std::vector<int> probe_nodes, const SolveOptions& opt = {});

struct CharTable {
  std::vector<double> slews_s;   // axis 1, ascending
  std::vector<double> loads_F;   // axis 2, ascending (RX tables: single entry)
  // Row-major [slew][load].
  std::vector<double> delay_rise_s;
  std::vector<double> delay_fall_s;
  std::vector<double> slew_rise_s;
  std::vector<double> slew_fall_s;
  std::vector<double> energy_per_transition_J;
  double c_in_F = 0.0;

  size_t cells() const { return slews_s.size() * loads_F.size(); }
  double at(const std::vector<double>& grid, size_t si, size_t li) const {
    return grid[si * loads_F.size() + li];
  }
};

struct InterpResult {
  double delay_s = 0.0;
  double slew_out_s = 0.0;
  double energy_J = 0.0;
  bool clamped = false;  // query was outside the axis hull
};

InterpResult interpolate(const CharTable& table, double slew_s, double load_F,
                         bool rising);

// One characterization campaign: a full slew x load grid of transient solves
// over the given stage chain, with the downstream network supplied by a
// builder (TX: embedded ladder + adaptation elements; RX: fixed load only).
struct CharRequest {
  std::vector<DeviceParams> stages;
  Group device_group = Group::tx_device;
  std::vector<double> slews_s;
  std::vector<double> loads_F;
  double vdd_V = 0.0;
  double sc_fraction = 0.0;
  int workers = 1;
  SolveOptions solve;
};

struct DownstreamPorts {
  int probe = -1;   // where delay/slew are measured
  int load = -1;    // where the load-axis capacitor hangs
  int tx_pad = -1;  // chain-side pad node (termination energy probes it)
};

class DownstreamBuilder {
 public:
  virtual ~DownstreamBuilder() = default;
  // Wires everything past the chain output.
  virtual DownstreamPorts build(Network& net, int chain_out) const = 0;
};

// Direct fixed-topology downstream: probe and load at the chain output.
class DirectDownstream : public DownstreamBuilder {
 public:
  DownstreamPorts build(Network&, int chain_out) const override {
    return {chain_out, chain_out, chain_out};
  }
};

CharTable characterize(const CharRequest& req, const DownstreamBuilder& down);

// Running count of characterization campaigns (one per characterize() call),
// exposed for the invocation-count bookkeeping checks.
std::uint64_t char_campaign_count();
void reset_char_campaign_count();

}  // namespace chiplink::simcore
