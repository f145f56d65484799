#include "chiplink/coopt.hpp"

#include <algorithm>
#include <cmath>

namespace chiplink::coopt {

using config::LinkConfig;
using simcore::CharTable;

namespace {

std::vector<double> logspace(double lo, double hi, int n) {
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = std::sqrt(lo * hi);
    return v;
  }
  double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i < n; ++i) v[i] = std::exp(llo + (lhi - llo) * i / (n - 1));
  return v;
}

std::vector<double> char_slews(const LinkConfig& cfg) {
  if (!cfg.user.input_slews_ns_override.empty()) {
    std::vector<double> v;
    for (double ns : cfg.user.input_slews_ns_override) v.push_back(ns * 1e-9);
    return v;
  }
  return logspace(0.05 * cfg.ui_s(), 1.0 * cfg.ui_s(), cfg.hidden.char_slew_count);
}

simcore::SolveOptions solve_options(const LinkConfig& cfg) {
  simcore::SolveOptions so;
  so.time_step_scale = cfg.hidden.time_step_scale;
  so.settle_tau_factor = cfg.hidden.settle_tau_factor;
  so.max_steps = cfg.hidden.max_steps;
  return so;
}

}  // namespace

Grid build_grid(const LinkConfig& cfg, const channel::PiLadder& ladder,
                const adaptation::TerminationPlan& term, const adaptation::EqPlan& eq,
                int workers) {
  double f = xcvr::effective_fanout(cfg.pdk);

  bool tx_clamped = false;
  double w_tx_warm = xcvr::analytic_tx_width_um(cfg, ladder, &tx_clamped);

  std::vector<xcvr::TxDesign> tx_designs;
  bool trimmed = false;
  std::vector<double> tx_mults = logspace(0.25, 4.0, cfg.user.n_tx_configs);
  for (double m : tx_mults) {
    xcvr::TxDesign d = xcvr::tx_design_for_final_width(m * w_tx_warm, cfg.pdk, f);
    trimmed |= d.width_clamped;
    tx_designs.push_back(std::move(d));
  }

  std::vector<xcvr::RxDesign> rx_designs;
  xcvr::RxDesign rx_warm = xcvr::analytic_rx_design(cfg);
  std::vector<double> rx_mults = logspace(0.25, 4.0, cfg.user.n_rx_configs);
  for (double m : rx_mults)
    rx_designs.push_back(xcvr::rx_design_for_buffer_width(m * rx_warm.buffer_width_um, cfg));

  Grid grid = grid_for_designs(cfg, ladder, term, eq, std::move(tx_designs),
                               std::move(rx_designs), workers);
  if (tx_clamped)
    grid.warnings.push_back({"tx_warm_clamped",
                             "analytic TX width clamped at the PDK bound; the transition target "
                             "is unreachable through this channel"});
  if (trimmed)
    grid.warnings.push_back({"tx_width_trimmed", "TX grid width trimmed to the PDK range"});
  return grid;
}

Grid grid_for_designs(const LinkConfig& cfg, const channel::PiLadder& ladder,
                      const adaptation::TerminationPlan& term, const adaptation::EqPlan& eq,
                      std::vector<xcvr::TxDesign> tx_designs,
                      std::vector<xcvr::RxDesign> rx_designs, int workers) {
  Grid grid;
  grid.tx_designs = std::move(tx_designs);
  grid.rx_designs = std::move(rx_designs);

  // TX load axis covers the full RX input-capacitance range.
  double c_rx_lo = HUGE_VAL, c_rx_hi = 0.0;
  for (const auto& rx : grid.rx_designs) {
    c_rx_lo = std::min(c_rx_lo, rx.c_in_F);
    c_rx_hi = std::max(c_rx_hi, rx.c_in_F);
  }
  std::vector<double> loads =
      logspace(0.5 * c_rx_lo, 4.0 * c_rx_hi, cfg.hidden.char_load_count);
  std::vector<double> slews = char_slews(cfg);

  bool probe_at_pad = cfg.user.rx_slew_source == config::RxSlewSource::tx_pad;
  xcvr::LadderDownstream down(ladder, term, eq, probe_at_pad);

  for (const auto& tx : grid.tx_designs) {
    simcore::CharRequest req;
    req.stages = xcvr::chain_params(tx.stage_widths_um, cfg.pdk);
    req.device_group = simcore::Group::tx_device;
    req.slews_s = slews;
    req.loads_F = loads;
    req.vdd_V = cfg.pdk.vdd_V;
    req.sc_fraction = cfg.hidden.sc_fraction;
    req.workers = workers;
    req.solve = solve_options(cfg);
    grid.tx_tables.push_back(simcore::characterize(req, down));
  }

  // RX input slews cover the observed TX output slew range.
  double s_lo = HUGE_VAL, s_hi = 0.0;
  for (const auto& t : grid.tx_tables) {
    for (double s : t.slew_rise_s) {
      s_lo = std::min(s_lo, s);
      s_hi = std::max(s_hi, s);
    }
    for (double s : t.slew_fall_s) {
      s_lo = std::min(s_lo, s);
      s_hi = std::max(s_hi, s);
    }
  }
  if (!(s_lo < s_hi)) {
    s_lo = 0.05 * cfg.ui_s();
    s_hi = cfg.ui_s();
  }
  std::vector<double> rx_slews = logspace(s_lo, s_hi * 1.0000001, cfg.hidden.char_slew_count);

  simcore::DirectDownstream direct;
  for (const auto& rx : grid.rx_designs) {
    simcore::CharRequest req;
    req.stages = {xcvr::stage_params(rx.preamp_width_um, cfg.pdk),
                  xcvr::stage_params(rx.buffer_width_um, cfg.pdk)};
    req.device_group = simcore::Group::rx_device;
    req.slews_s = rx_slews;
    req.loads_F = {fF_to_F(cfg.hidden.rx_core_load_fF)};
    req.vdd_V = cfg.pdk.vdd_V;
    req.sc_fraction = cfg.hidden.sc_fraction;
    req.workers = workers;
    req.solve = solve_options(cfg);
    grid.rx_tables.push_back(simcore::characterize(req, direct));
  }
  return grid;
}

DesignPoint match_pair(const CharTable& tx_table, const CharTable& rx_table,
                       const channel::ChannelSummary& summary,
                       const adaptation::TerminationPlan& term, const LinkConfig& cfg) {
  DesignPoint p;
  double c_rx = rx_table.c_in_F;                        // step 1: RX input capacitance
  double tx_slew = cfg.hidden.tx_input_slew_ui * cfg.ui_s();  // core-driven TX input edge

  auto tx_r = simcore::interpolate(tx_table, tx_slew, c_rx, true);   // step 2
  auto tx_f = simcore::interpolate(tx_table, tx_slew, c_rx, false);
  double rx_load = rx_table.loads_F.front();
  auto rx_r = simcore::interpolate(rx_table, tx_r.slew_out_s, rx_load, true);  // step 3
  auto rx_f = simcore::interpolate(rx_table, tx_f.slew_out_s, rx_load, false);

  p.clamped_interp = tx_r.clamped || tx_f.clamped || rx_r.clamped || rx_f.clamped;
  p.tau_rr_s = tx_r.delay_s + rx_r.delay_s;  // step 4
  p.tau_ff_s = tx_f.delay_s + rx_f.delay_s;
  p.tau_wc_s = std::max(p.tau_rr_s, p.tau_ff_s);
  if (p.tau_rr_s >= p.tau_ff_s) {
    p.tau_tx_s = tx_r.delay_s;
    p.tau_rx_s = rx_r.delay_s;
  } else {
    p.tau_tx_s = tx_f.delay_s;
    p.tau_rx_s = rx_f.delay_s;
  }
  p.slew_far_s = std::max(tx_r.slew_out_s, tx_f.slew_out_s);

  p.e_tx_J = 0.5 * (tx_r.energy_J + tx_f.energy_J);
  p.e_rx_J = 0.5 * (rx_r.energy_J + rx_f.energy_J);
  p.e_ch_J = summary.e_ch_J_per_bit;
  p.e_term_J = term.e_term_J_per_bit;

  double alpha = cfg.hidden.activity_factor;
  p.e_total_J_per_bit = alpha * (p.e_tx_J + p.e_rx_J) + p.e_ch_J + p.e_term_J;
  p.feasible = p.tau_wc_s <= cfg.hidden.latency_budget_ui * cfg.ui_s();
  return p;
}

ParetoFront pareto_front(const std::vector<DesignPoint>& points) {
  ParetoFront front;
  std::vector<const DesignPoint*> feas;
  for (const auto& p : points)
    if (p.feasible) feas.push_back(&p);
  if (feas.empty()) return front;

  // Stable order: ascending energy, then delay, then indices; a sweep keeps
  // the non-dominated prefix-minimum in delay. Duplicate-coordinate points
  // keep the lowest (tx, rx) index.
  std::sort(feas.begin(), feas.end(), [](const DesignPoint* a, const DesignPoint* b) {
    if (a->e_total_J_per_bit != b->e_total_J_per_bit)
      return a->e_total_J_per_bit < b->e_total_J_per_bit;
    if (a->tau_wc_s != b->tau_wc_s) return a->tau_wc_s < b->tau_wc_s;
    if (a->tx_index != b->tx_index) return a->tx_index < b->tx_index;
    return a->rx_index < b->rx_index;
  });
  double best_tau = HUGE_VAL;
  for (const auto* p : feas) {
    if (p->tau_wc_s < best_tau) {
      front.points.push_back(*p);
      best_tau = p->tau_wc_s;
    }
  }
  front.selected_best_power = select_index(front, config::ParetoSelection::best_power);
  front.selected_best_delay = select_index(front, config::ParetoSelection::best_delay);
  front.selected_balanced = select_index(front, config::ParetoSelection::balanced);
  return front;
}

int select_index(const ParetoFront& front, config::ParetoSelection strategy) {
  const auto& pts = front.points;
  if (pts.empty()) throw std::invalid_argument("select: empty Pareto front");
  switch (strategy) {
    case config::ParetoSelection::best_power: {
      int best = 0;
      for (size_t i = 1; i < pts.size(); ++i)
        if (pts[i].e_total_J_per_bit < pts[best].e_total_J_per_bit) best = static_cast<int>(i);
      return best;
    }
    case config::ParetoSelection::best_delay: {
      int best = 0;
      for (size_t i = 1; i < pts.size(); ++i)
        if (pts[i].tau_wc_s < pts[best].tau_wc_s) best = static_cast<int>(i);
      return best;
    }
    case config::ParetoSelection::all:
    case config::ParetoSelection::balanced: {
      double e_min = HUGE_VAL, e_max = -HUGE_VAL, t_min = HUGE_VAL, t_max = -HUGE_VAL;
      for (const auto& p : pts) {
        e_min = std::min(e_min, p.e_total_J_per_bit);
        e_max = std::max(e_max, p.e_total_J_per_bit);
        t_min = std::min(t_min, p.tau_wc_s);
        t_max = std::max(t_max, p.tau_wc_s);
      }
      double e_span = e_max > e_min ? e_max - e_min : 1.0;
      double t_span = t_max > t_min ? t_max - t_min : 1.0;
      int best = 0;
      double best_d = HUGE_VAL;
      for (size_t i = 0; i < pts.size(); ++i) {
        double en = (pts[i].e_total_J_per_bit - e_min) / e_span;
        double tn = (pts[i].tau_wc_s - t_min) / t_span;
        double d = std::sqrt(en * en + tn * tn);
        bool better = d < best_d - 1e-15;
        bool tie = std::abs(d - best_d) <= 1e-15 &&
                   pts[i].e_total_J_per_bit < pts[best].e_total_J_per_bit;
        if (better || tie) {
          best_d = d;
          best = static_cast<int>(i);
        }
      }
      return best;
    }
  }
  return 0;
}

const DesignPoint& select(const ParetoFront& front, config::ParetoSelection strategy) {
  return front.points[select_index(front, strategy)];
}

namespace {

// One full-path co-simulation: TX chain + EQ + ladder + termination + RX.
DesignPoint cosim_pair(const DesignPoint& lut, const Grid& grid, const LinkConfig& cfg,
                       const channel::PiLadder& ladder, const channel::ChannelSummary& summary,
                       const adaptation::TerminationPlan& term, const adaptation::EqPlan& eq) {
  const auto& tx = grid.tx_designs[lut.tx_index];
  const auto& rx = grid.rx_designs[lut.rx_index];

  DesignPoint p = lut;
  double e_tx_sum = 0.0, e_rx_sum = 0.0;
  double tau_by_polarity[2] = {0.0, 0.0};
  double tau_tx_by_polarity[2] = {0.0, 0.0};
  double slew_far = 0.0;

  for (bool rising : {true, false}) {
    simcore::Network net;
    net.set_vdd(cfg.pdk.vdd_V);
    simcore::NodeRef in = simcore::kStim;
    auto stages = xcvr::chain_params(tx.stage_widths_um, cfg.pdk);
    for (size_t s = 0; s < stages.size(); ++s) {
      simcore::NodeRef out = net.add_node("s" + std::to_string(s));
      net.add_inverter(in, out, stages[s], simcore::Group::tx_device);
      in = out;
    }
    xcvr::LadderDownstream down(ladder, term, eq, false);
    auto ports = down.build(net, in);
    int rx_pad = ports.load;
    simcore::NodeRef pre_out = net.add_node("rx_pre");
    simcore::NodeRef buf_out = net.add_node("rx_buf");
    net.add_inverter(rx_pad, pre_out, xcvr::stage_params(rx.preamp_width_um, cfg.pdk),
                     simcore::Group::rx_device);
    net.add_inverter(pre_out, buf_out, xcvr::stage_params(rx.buffer_width_um, cfg.pdk),
                     simcore::Group::rx_device);
    net.add_capacitor(buf_out, simcore::kGround, fF_to_F(cfg.hidden.rx_core_load_fF),
                      simcore::Group::load);

    simcore::Edge edge{rising, cfg.hidden.tx_input_slew_ui * cfg.ui_s()};
    simcore::SolveOptions so = solve_options(cfg);
    auto res = simcore::solve_transient(net, edge, {rx_pad, buf_out, ports.tx_pad}, so);
    if (!res.probes[1].crossed)
      throw SolverError("refine: RX output never completed its transition");

    tau_by_polarity[rising ? 0 : 1] = res.delay_50_s(1);
    tau_tx_by_polarity[rising ? 0 : 1] = res.delay_50_s(0);
    slew_far = std::max(slew_far, res.probes[0].slew_20_80_s);
    if (res.probes[2].crossed) p.slew_pad_s = std::max(p.slew_pad_s, res.probes[2].slew_20_80_s);
    double e_int_tx = std::max(
        res.e_supply_tx_J -
            cfg.pdk.vdd_V * (res.q_ext_channel_C + std::max(res.q_term_C, 0.0)),
        0.0);
    double e_int_rx =
        std::max(res.e_supply_rx_J - cfg.pdk.vdd_V * res.q_ext_load_C, 0.0);
    e_tx_sum += e_int_tx;
    e_rx_sum += e_int_rx;
  }

  double sc = 1.0 + cfg.hidden.sc_fraction;
  p.e_tx_J = 0.5 * e_tx_sum * sc;
  p.e_rx_J = 0.5 * e_rx_sum * sc;
  p.tau_rr_s = tau_by_polarity[0];
  p.tau_ff_s = tau_by_polarity[1];
  p.tau_wc_s = std::max(p.tau_rr_s, p.tau_ff_s);
  int wc = p.tau_rr_s >= p.tau_ff_s ? 0 : 1;
  p.tau_tx_s = tau_tx_by_polarity[wc];
  p.tau_rx_s = tau_by_polarity[wc] - tau_tx_by_polarity[wc];
  p.slew_far_s = slew_far;
  p.e_ch_J = summary.e_ch_J_per_bit;
  p.e_term_J = term.e_term_J_per_bit;
  double alpha = cfg.hidden.activity_factor;
  double e_total = alpha * (p.e_tx_J + p.e_rx_J) + p.e_ch_J + p.e_term_J;
  p.refine_energy_shift = lut.e_total_J_per_bit > 0.0
                              ? (e_total - lut.e_total_J_per_bit) / lut.e_total_J_per_bit
                              : 0.0;
  p.e_total_J_per_bit = e_total;
  p.feasible = p.tau_wc_s <= cfg.hidden.latency_budget_ui * cfg.ui_s();
  p.refined = true;
  return p;
}

}  // namespace

ParetoFront refine(const ParetoFront& front, const Grid& grid, const LinkConfig& cfg,
                   const channel::PiLadder& ladder, const channel::ChannelSummary& summary,
                   const adaptation::TerminationPlan& term, const adaptation::EqPlan& eq) {
  std::vector<DesignPoint> refined;
  refined.reserve(front.points.size());
  for (const auto& p : front.points) {
    try {
      refined.push_back(cosim_pair(p, grid, cfg, ladder, summary, term, eq));
    } catch (const SolverError&) {
      // Demote the point; refinement failures drop it from the frontier.
    }
  }
  return pareto_front(refined);
}

}  // namespace chiplink::coopt
