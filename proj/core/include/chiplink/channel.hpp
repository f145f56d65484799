#pragma once

#include <string>
#include <vector>

#include "chiplink/config.hpp"

namespace chiplink::channel {

enum class RcLabel { chip_pad, bump, int_pad, trace_seg, esd };

struct ComponentRC {
  double r_ohm = 0.0;
  double c_F = 0.0;
  RcLabel label = RcLabel::trace_seg;
};

// One node of the assembled ladder. `c_shunt_F` is the plain shunt at the
// node; `c_esd_F` is the ESD shunt sitting at chiplet-side pads (kept
// separate so netlist emission and C_eff bookkeeping stay per-component).
struct LadderNode {
  std::string name;
  double c_shunt_F = 0.0;
  double c_esd_F = 0.0;
};

struct LadderEdge {
  int from = 0;  // node indices
  int to = 0;
  double r_ohm = 0.0;
};

struct CouplingElement {
  int node = 0;
  double c_F = 0.0;
};

// TX chip pad -> bump -> interposer pad -> 5-node trace (half cell, three
// internal segments, half cell) -> interposer pad -> bump -> RX chip pad.
struct PiLadder {
  std::vector<LadderNode> nodes;
  std::vector<LadderEdge> edges;
  std::vector<CouplingElement> coupling;

  // Per-component values the ladder was assembled from.
  ComponentRC chip_pad;
  ComponentRC bump;
  ComponentRC int_pad;
  ComponentRC trace;  // full-trace totals
  ComponentRC esd;

  bool ucie_mode = false;
  bool ucie_rate_clamped = false;

  int tx_pad_index() const { return 0; }
  int rx_pad_index() const { return static_cast<int>(nodes.size()) - 1; }

  double total_series_r_ohm() const;
  double total_shunt_c_F() const;  // coupling excluded
  // Sum of R_edge * downstream C, node by node toward the RX pad. This is the
  // ladder-internal part only (drive resistance excluded), which is what the
  // analytic slew-target sizing needs.
  double distributed_elmore_s() const;
  // Shunt C beyond the TX chip pad (EQ latency cap uses this).
  double downstream_c_F() const;
};

struct ChannelSummary {
  double r_ch_ohm = 0.0;
  double c_ch_F = 0.0;
  double c_eff_F = 0.0;
  double tau_elmore_s = 0.0;
  double e_ch_J_per_bit = 0.0;
  double f_3db_Hz = 0.0;
  double loss_nyquist_dB = 0.0;
  double f_ny_Hz = 0.0;
};

// Parallel-plate pad capacitance with pad width 0.8 * pitch.
double pad_cap(double pitch_um, double eps_r, double t_ox_um);

// Spec-budget pad capacitance: 300 fF at <=8, 200 fF at <=16, 125 fF at
// <=32 GT/s. Rates above 32 clamp to 125 fF; *clamped reports it.
double ucie_pad_cap(double data_rate_Gbps, bool* clamped = nullptr);

// Two-wire cylindrical bump model with DC + skin-effect resistance at f_ny.
ComponentRC bump_rc(double pitch_um, double diameter_um, double height_um,
                    double eps_r_underfill, double resistivity_ohm_m, double f_ny_Hz);

ComponentRC trace_rc(config::PkgType pkg, const config::TraceBase& base, double reach_mm,
                     double width_um, double eps_ratio);

// Graduated ESD table lookup; returns 0 when pad_cap_mode=ucie.
double esd_cap(const config::LinkConfig& cfg);
double esd_table_lookup(double pitch_um, config::PkgType pkg,
                        const std::vector<config::EsdRow>& table);

double pad_resistance(double pitch_um, double r_ref_ohm, double ref_width_um);

PiLadder build_ladder(const config::LinkConfig& cfg);

ChannelSummary summarize(const PiLadder& ladder, double vdd_V, double data_rate_Gbps);

// SPICE-syntax subcircuit, 6 significant digits, byte-deterministic.
std::string emit_netlist(const PiLadder& ladder);

}  // namespace chiplink::channel
