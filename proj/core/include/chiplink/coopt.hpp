#pragma once

#include <vector>

#include "chiplink/adaptation.hpp"
#include "chiplink/channel.hpp"
#include "chiplink/config.hpp"
#include "chiplink/simcore.hpp"
#include "chiplink/xcvr.hpp"

namespace chiplink::coopt {

struct DesignPoint {
  int tx_index = -1;
  int rx_index = -1;
  double e_tx_J = 0.0;    // per transition, device-internal
  double e_rx_J = 0.0;
  double e_ch_J = 0.0;    // per bit
  double e_term_J = 0.0;  // per bit
  double e_total_J_per_bit = 0.0;
  double tau_rr_s = 0.0;
  double tau_ff_s = 0.0;
  double tau_wc_s = 0.0;
  // Worst-case split between the TX+channel and RX portions, for collateral.
  double tau_tx_s = 0.0;
  double tau_rx_s = 0.0;
  double slew_far_s = 0.0;  // worst-case far-end transition
  double slew_pad_s = 0.0;  // worst-case TX-pad transition (refined only)
  bool feasible = false;
  bool clamped_interp = false;
  double area_um2 = 0.0;
  bool refined = false;
  double refine_energy_shift = 0.0;  // relative shift vs the LUT estimate
};

struct ParetoFront {
  // Ascending energy, descending delay; no member dominates another.
  std::vector<DesignPoint> points;
  int selected_balanced = -1;
  int selected_best_power = -1;
  int selected_best_delay = -1;
};

struct Grid {
  std::vector<xcvr::TxDesign> tx_designs;
  std::vector<xcvr::RxDesign> rx_designs;
  std::vector<simcore::CharTable> tx_tables;
  std::vector<simcore::CharTable> rx_tables;
  WarningList warnings;
};

// N_TX + N_RX characterization campaigns, never N_TX x N_RX. Widths are
// log-spaced over [0.25, 4] x the analytic warm start on each side.
Grid build_grid(const config::LinkConfig& cfg, const channel::PiLadder& ladder,
                const adaptation::TerminationPlan& term, const adaptation::EqPlan& eq,
                int workers);

// Characterizes explicit design lists (manual / single-sided sizing modes).
Grid grid_for_designs(const config::LinkConfig& cfg, const channel::PiLadder& ladder,
                      const adaptation::TerminationPlan& term, const adaptation::EqPlan& eq,
                      std::vector<xcvr::TxDesign> tx_designs,
                      std::vector<xcvr::RxDesign> rx_designs, int workers);

// The four-step table-matching procedure for one (TX, RX) pair.
DesignPoint match_pair(const simcore::CharTable& tx_table, const simcore::CharTable& rx_table,
                       const channel::ChannelSummary& summary,
                       const adaptation::TerminationPlan& term, const config::LinkConfig& cfg);

ParetoFront pareto_front(const std::vector<DesignPoint>& points);

// best_power = min energy; best_delay = min delay; balanced = min Euclidean
// distance to the ideal point after per-axis min-max normalization over the
// front. Ties break toward lower energy.
const DesignPoint& select(const ParetoFront& front, config::ParetoSelection strategy);
int select_index(const ParetoFront& front, config::ParetoSelection strategy);

// Full-path co-simulation of each frontier pair with exact loading; refined
// metrics replace the LUT estimates and the front is re-sorted.
ParetoFront refine(const ParetoFront& front, const Grid& grid, const config::LinkConfig& cfg,
                   const channel::PiLadder& ladder, const channel::ChannelSummary& summary,
                   const adaptation::TerminationPlan& term, const adaptation::EqPlan& eq);

}  // namespace chiplink::coopt
