#pragma once

#include <vector>

#include "chiplink/adaptation.hpp"
#include "chiplink/channel.hpp"
#include "chiplink/config.hpp"
#include "chiplink/simcore.hpp"

namespace chiplink::xcvr {

struct TxDesign {
  std::vector<double> stage_widths_um;  // geometric, unit to final; even count
  double fanout = 0.0;
  bool width_clamped = false;  // analytic final width hit a PDK bound
  bool search_budget_hit = false;

  int n_stages() const { return static_cast<int>(stage_widths_um.size()); }
};

struct RxDesign {
  double preamp_width_um = 0.0;
  double buffer_width_um = 0.0;
  double c_in_F = 0.0;  // measured during characterization
  bool infeasible = false;
};

struct AreaReport {
  double active_um2 = 0.0;
  double eq_passives_um2 = 0.0;
  double term_um2 = 0.0;
  double esd_um2 = 0.0;
  double bump_ubm_um2 = 0.0;
  double per_lane_um2 = 0.0;
  // Bump-map mode only.
  double macro_w_um = 0.0;
  double macro_h_um = 0.0;
};

// Parasitic-adjusted geometric-progression fanout.
double effective_fanout(const config::PdkDescriptor& pdk);

// Nearest fin count, ties round up. Identity on planar PDKs.
double quantize_fin(double width_um, const config::PdkDescriptor& pdk);

double c_in_per_um(const config::PdkDescriptor& pdk);
double r_drive_ohm(double width_um, const config::PdkDescriptor& pdk);  // mean of p/n

simcore::DeviceParams stage_params(double width_um, const config::PdkDescriptor& pdk);
std::vector<simcore::DeviceParams> chain_params(const std::vector<double>& widths_um,
                                                const config::PdkDescriptor& pdk);

// Geometric chain sized for c_load with the given per-stage fanout; stage
// count is even-ceil and never below 2.
TxDesign size_tx_chain(double c_load_F, const config::PdkDescriptor& pdk, double fanout);

// Final-stage width that analytically meets the far-end slew target
// through the assembled ladder: ln4 * (R_drv * C_ch + tau_internal) = target.
// Clamps (and flags) at the PDK width bounds.
double analytic_tx_width_um(const config::LinkConfig& cfg, const channel::PiLadder& ladder,
                            bool* clamped_flag = nullptr);

TxDesign tx_design_for_final_width(double w_final_um, const config::PdkDescriptor& pdk,
                                   double fanout);

RxDesign analytic_rx_design(const config::LinkConfig& cfg);
RxDesign rx_design_for_buffer_width(double w_buf_um, const config::LinkConfig& cfg);

// Wires the assembled ladder plus the selected EQ/termination elements onto a
// characterization chain. Probe at the far end (rx_slew_source=channel) or at
// the TX pad; the load-axis capacitor always hangs at the far end.
class LadderDownstream : public simcore::DownstreamBuilder {
 public:
  LadderDownstream(const channel::PiLadder& ladder, const adaptation::TerminationPlan& term,
                   const adaptation::EqPlan& eq, bool probe_at_tx_pad);
  simcore::DownstreamPorts build(simcore::Network& net, int chain_out) const override;

 private:
  const channel::PiLadder& ladder_;
  const adaptation::TerminationPlan& term_;
  const adaptation::EqPlan& eq_;
  bool probe_at_tx_pad_;
};

// Golden-section search on a final-stage width multiplier in [0.25, 8],
// objective |far-end slew - rise_fall_pct_ui * UI|, bounded by a solve budget.
struct TxSearchResult {
  TxDesign design;
  double achieved_slew_s = 0.0;
  int solves = 0;
  bool budget_exhausted = false;
};
TxSearchResult tx_sizing_search(const config::LinkConfig& cfg, const channel::PiLadder& ladder,
                                const adaptation::TerminationPlan& term,
                                const adaptation::EqPlan& eq, int solve_budget = 24);

// Doubles the buffer width until RX delay <= max_rx_delay_frac_ui * UI, then
// binary-refines; marks infeasible when w_max cannot meet the target.
struct RxSearchResult {
  RxDesign design;
  double achieved_delay_s = 0.0;
  int solves = 0;
};
RxSearchResult rx_sizing_search(const config::LinkConfig& cfg, double tx_slew_s);

AreaReport area(const TxDesign& tx, const RxDesign& rx, const adaptation::TerminationPlan& term,
                const adaptation::EqPlan& eq, const config::LinkConfig& cfg);

}  // namespace chiplink::xcvr
