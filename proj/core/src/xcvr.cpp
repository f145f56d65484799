#include "chiplink/xcvr.hpp"

#include <algorithm>
#include <cmath>

namespace chiplink::xcvr {

using config::DeviceType;
using config::LinkConfig;
using config::PdkDescriptor;
using simcore::Group;
using simcore::Network;
using simcore::NodeRef;

double effective_fanout(const PdkDescriptor& pdk) {
  return M_E * std::sqrt(1.0 + pdk.unit_inv.c_out_fF / pdk.unit_inv.c_in_fF);
}

double quantize_fin(double width_um, const PdkDescriptor& pdk) {
  if (pdk.device_type != DeviceType::finfet) return width_um;
  double w0 = pdk.fin_w0_um, dw = pdk.fin_pitch_contrib_um;
  double n_real = (width_um - w0) / dw + 1.0;
  long n_lo = std::max(1l, static_cast<long>(std::floor(n_real)));
  long n_hi = n_lo + 1;
  double w_lo = w0 + dw * (n_lo - 1);
  double w_hi = w0 + dw * (n_hi - 1);
  if (width_um <= w_lo) return w_lo;
  // Nearest fin count; ties round up (more drive). The epsilon keeps exact
  // midpoints from flipping on representation noise.
  return (width_um - w_lo) < (w_hi - width_um) - 1e-9 * dw ? w_lo : w_hi;
}

double c_in_per_um(const PdkDescriptor& pdk) {
  return fF_to_F(pdk.unit_inv.c_in_fF) / pdk.w_min_um;
}

double r_drive_ohm(double width_um, const PdkDescriptor& pdk) {
  double r_unit = 0.5 * (pdk.unit_inv.r_on_n_ohm + pdk.unit_inv.r_on_p_ohm);
  return r_unit * pdk.w_min_um / width_um;
}

simcore::DeviceParams stage_params(double width_um, const PdkDescriptor& pdk) {
  double ratio = width_um / pdk.w_min_um;
  simcore::DeviceParams p;
  p.r_on_p_ohm = pdk.unit_inv.r_on_p_ohm / ratio;
  p.r_on_n_ohm = pdk.unit_inv.r_on_n_ohm / ratio;
  p.c_in_F = fF_to_F(pdk.unit_inv.c_in_fF) * ratio;
  p.c_out_F = fF_to_F(pdk.unit_inv.c_out_fF) * ratio;
  return p;
}

std::vector<simcore::DeviceParams> chain_params(const std::vector<double>& widths_um,
                                                const PdkDescriptor& pdk) {
  std::vector<simcore::DeviceParams> out;
  out.reserve(widths_um.size());
  for (double w : widths_um) out.push_back(stage_params(w, pdk));
  return out;
}

namespace {

int even_ceil(double x) {
  int n = static_cast<int>(std::ceil(x - 1e-12));
  if (n % 2 != 0) ++n;
  return std::max(2, n);
}

std::vector<double> geometric_widths(double w_final_um, int n, const PdkDescriptor& pdk) {
  std::vector<double> w(n);
  double ratio = w_final_um / pdk.w_min_um;
  for (int i = 0; i < n; ++i) {
    double f = n == 1 ? 1.0 : static_cast<double>(i) / (n - 1);
    w[i] = quantize_fin(pdk.w_min_um * std::pow(ratio, f), pdk);
  }
  return w;
}

}  // namespace

TxDesign size_tx_chain(double c_load_F, const PdkDescriptor& pdk, double fanout) {
  double c_in_unit = fF_to_F(pdk.unit_inv.c_in_fF);
  if (c_load_F < c_in_unit) c_load_F = c_in_unit;
  double n_raw = std::log(c_load_F / c_in_unit) / std::log(fanout);
  int n = even_ceil(n_raw);
  double w_final = c_load_F / (fanout * c_in_per_um(pdk));
  w_final = std::max(w_final, pdk.w_min_um);
  if (w_final > pdk.w_max_um)
    throw std::invalid_argument(
        "size_tx_chain: final stage width " + std::to_string(w_final) + " um exceeds PDK w_max (" +
        std::to_string(pdk.w_max_um) + " um); split the lane or relax the drive target");
  TxDesign d;
  d.fanout = fanout;
  d.stage_widths_um = geometric_widths(w_final, n, pdk);
  return d;
}

TxDesign tx_design_for_final_width(double w_final_um, const PdkDescriptor& pdk, double fanout) {
  TxDesign d;
  d.fanout = fanout;
  if (w_final_um < pdk.w_min_um) {
    w_final_um = pdk.w_min_um;
    d.width_clamped = true;
  }
  if (w_final_um > pdk.w_max_um) {
    w_final_um = pdk.w_max_um;
    d.width_clamped = true;
  }
  int n = even_ceil(1.0 + std::log(w_final_um / pdk.w_min_um) / std::log(fanout));
  d.stage_widths_um = geometric_widths(w_final_um, n, pdk);
  return d;
}

double analytic_tx_width_um(const LinkConfig& cfg, const channel::PiLadder& ladder,
                            bool* clamped_flag) {
  const PdkDescriptor& pdk = cfg.pdk;
  double target_s = cfg.user.rise_fall_pct_ui * cfg.ui_s();
  double tau_int = ladder.distributed_elmore_s();
  double c_total = ladder.total_shunt_c_F();
  double budget = target_s / std::log(4.0) - tau_int;
  bool clamped = false;
  double w;
  if (budget <= 0.0) {
    // The ladder's own RC already exceeds the transition target; strongest
    // drive available.
    w = pdk.w_max_um;
    clamped = true;
  } else {
    double r_drv = budget / c_total;
    double r_unit = 0.5 * (pdk.unit_inv.r_on_n_ohm + pdk.unit_inv.r_on_p_ohm);
    w = r_unit * pdk.w_min_um / r_drv;
    if (w > pdk.w_max_um) {
      w = pdk.w_max_um;
      clamped = true;
    }
    if (w < pdk.w_min_um) w = pdk.w_min_um;
  }
  if (clamped_flag) *clamped_flag = clamped;
  return w;
}

RxDesign rx_design_for_buffer_width(double w_buf_um, const LinkConfig& cfg) {
  const PdkDescriptor& pdk = cfg.pdk;
  double f = effective_fanout(pdk);
  RxDesign d;
  d.buffer_width_um = quantize_fin(std::clamp(w_buf_um, pdk.w_min_um, pdk.w_max_um), pdk);
  // Pre-amplifier at minimum drive keeping buffer fanout <= f.
  d.preamp_width_um = quantize_fin(std::max(pdk.w_min_um, d.buffer_width_um / f), pdk);
  if (d.preamp_width_um > d.buffer_width_um) d.preamp_width_um = d.buffer_width_um;
  d.c_in_F = fF_to_F(pdk.unit_inv.c_in_fF) * d.preamp_width_um / pdk.w_min_um;
  return d;
}

RxDesign analytic_rx_design(const LinkConfig& cfg) {
  double f = effective_fanout(cfg.pdk);
  double c_core = fF_to_F(cfg.hidden.rx_core_load_fF);
  double w_buf = c_core / (f * c_in_per_um(cfg.pdk));
  return rx_design_for_buffer_width(w_buf, cfg);
}

// ---------------------------------------------------------------------------
// Ladder network assembly shared by characterization, searches, and refine.

LadderDownstream::LadderDownstream(const channel::PiLadder& ladder,
                                   const adaptation::TerminationPlan& term,
                                   const adaptation::EqPlan& eq, bool probe_at_tx_pad)
    : ladder_(ladder), term_(term), eq_(eq), probe_at_tx_pad_(probe_at_tx_pad) {}

simcore::DownstreamPorts LadderDownstream::build(Network& net, int chain_out) const {
  const auto& nodes = ladder_.nodes;
  std::vector<int> ports(nodes.size());

  int first;
  if (eq_.enabled()) {
    first = net.add_node(nodes[0].name);
    net.add_resistor(chain_out, first, eq_.r_eq_ohm, Group::eq);
    net.add_capacitor(chain_out, first, eq_.c_eq_F, Group::eq);
  } else {
    first = chain_out;
  }
  ports[0] = first;
  for (size_t i = 1; i < nodes.size(); ++i) ports[i] = net.add_node(nodes[i].name);

  for (size_t i = 0; i < nodes.size(); ++i) {
    net.add_capacitor(ports[i], simcore::kGround, nodes[i].c_shunt_F, Group::channel);
    net.add_capacitor(ports[i], simcore::kGround, nodes[i].c_esd_F, Group::channel);
  }
  for (const auto& e : ladder_.edges)
    net.add_resistor(ports[e.from], ports[e.to], e.r_ohm, Group::channel);
  // Coupling caps see a quiet adjacent lane, i.e. AC ground.
  for (const auto& cc : ladder_.coupling)
    net.add_capacitor(ports[cc.node], simcore::kGround, cc.c_F, Group::channel);

  int rx_pad = ports[nodes.size() - 1];
  if (term_.terminated()) {
    if (term_.ac_coupled) {
      NodeRef vt = net.add_node("vterm");
      net.add_resistor(rx_pad, vt, term_.r_term_ohm, Group::term);
      net.add_capacitor(vt, simcore::kGround, term_.c_ac_F, Group::term);
      net.add_resistor(vt, simcore::kVdd, term_.r_bias_ohm, Group::bias);
      net.add_resistor(vt, simcore::kGround, term_.r_bias_ohm, Group::bias);
    } else {
      net.set_vterm(term_.v_term_V);
      net.add_resistor(rx_pad, simcore::kVterm, term_.r_term_ohm, Group::term);
    }
  }

  simcore::DownstreamPorts out;
  out.load = rx_pad;
  out.probe = probe_at_tx_pad_ ? first : rx_pad;
  out.tx_pad = first;
  return out;
}

// ---------------------------------------------------------------------------
// Sizing searches.

namespace {

double measure_far_slew(const LinkConfig& cfg, const channel::PiLadder& ladder,
                        const adaptation::TerminationPlan& term, const adaptation::EqPlan& eq,
                        const TxDesign& tx) {
  Network net;
  net.set_vdd(cfg.pdk.vdd_V);
  NodeRef in = simcore::kStim;
  auto stages = chain_params(tx.stage_widths_um, cfg.pdk);
  for (size_t s = 0; s < stages.size(); ++s) {
    NodeRef out = net.add_node("s" + std::to_string(s));
    net.add_inverter(in, out, stages[s], Group::tx_device);
    in = out;
  }
  LadderDownstream down(ladder, term, eq, false);
  auto ports = down.build(net, in);
  simcore::Edge edge{true, cfg.hidden.tx_input_slew_ui * cfg.ui_s()};
  simcore::SolveOptions so;
  so.time_step_scale = cfg.hidden.time_step_scale;
  so.settle_tau_factor = cfg.hidden.settle_tau_factor;
  so.max_steps = cfg.hidden.max_steps;
  auto res = simcore::solve_transient(net, edge, {ports.probe}, so);
  if (!res.probes[0].crossed) return -1.0;
  return res.probes[0].slew_20_80_s;
}

}  // namespace

TxSearchResult tx_sizing_search(const LinkConfig& cfg, const channel::PiLadder& ladder,
                                const adaptation::TerminationPlan& term,
                                const adaptation::EqPlan& eq, int solve_budget) {
  double f = effective_fanout(cfg.pdk);
  double w_warm = analytic_tx_width_um(cfg, ladder);
  double target = cfg.user.rise_fall_pct_ui * cfg.ui_s();

  TxSearchResult best;
  best.design = tx_design_for_final_width(w_warm, cfg.pdk, f);
  double best_err = HUGE_VAL;

  auto evaluate = [&](double mult) {
    TxDesign d = tx_design_for_final_width(mult * w_warm, cfg.pdk, f);
    double slew = measure_far_slew(cfg, ladder, term, eq, d);
    ++best.solves;
    double err = slew < 0.0 ? HUGE_VAL : std::abs(slew - target);
    if (err < best_err) {
      best_err = err;
      best.design = d;
      best.achieved_slew_s = slew;
    }
    return err;
  };

  if (solve_budget < 1) {
    best.budget_exhausted = true;
    return best;
  }

  // Warm start often already meets the target.
  double err1 = evaluate(1.0);
  if (err1 <= 0.05 * target) return best;

  double lo = std::log(0.25), hi = std::log(8.0);
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - gr * (hi - lo);
  double x2 = lo + gr * (hi - lo);
  double f1 = best.solves < solve_budget ? evaluate(std::exp(x1)) : HUGE_VAL;
  double f2 = best.solves < solve_budget ? evaluate(std::exp(x2)) : HUGE_VAL;
  while (best.solves < solve_budget && (hi - lo) > std::log(1.02)) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = evaluate(std::exp(x1));
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = evaluate(std::exp(x2));
    }
  }
  if (best.solves >= solve_budget && (hi - lo) > std::log(1.02)) best.budget_exhausted = true;
  best.design.search_budget_hit = best.budget_exhausted;
  return best;
}

namespace {

double measure_rx_delay(const LinkConfig& cfg, const RxDesign& rx, double tx_slew_s) {
  Network net;
  net.set_vdd(cfg.pdk.vdd_V);
  NodeRef pre_out = net.add_node("pre_out");
  NodeRef buf_out = net.add_node("buf_out");
  net.add_inverter(simcore::kStim, pre_out, stage_params(rx.preamp_width_um, cfg.pdk),
                   Group::rx_device);
  net.add_inverter(pre_out, buf_out, stage_params(rx.buffer_width_um, cfg.pdk), Group::rx_device);
  net.add_capacitor(buf_out, simcore::kGround, fF_to_F(cfg.hidden.rx_core_load_fF), Group::load);
  simcore::Edge edge{true, tx_slew_s};
  simcore::SolveOptions so;
  so.time_step_scale = cfg.hidden.time_step_scale;
  so.settle_tau_factor = cfg.hidden.settle_tau_factor;
  so.max_steps = cfg.hidden.max_steps;
  auto res = simcore::solve_transient(net, edge, {buf_out}, so);
  if (!res.probes[0].crossed) return HUGE_VAL;
  return res.delay_50_s(0);
}

}  // namespace

RxSearchResult rx_sizing_search(const LinkConfig& cfg, double tx_slew_s) {
  double target = cfg.user.max_rx_delay_frac_ui * cfg.ui_s();
  RxSearchResult out;

  double w = cfg.pdk.w_min_um;
  out.design = rx_design_for_buffer_width(w, cfg);
  out.achieved_delay_s = measure_rx_delay(cfg, out.design, tx_slew_s);
  ++out.solves;
  if (out.achieved_delay_s <= target) return out;  // minimum widths accepted

  double w_lo = w;
  while (w < cfg.pdk.w_max_um) {
    w = std::min(w * 2.0, cfg.pdk.w_max_um);
    RxDesign d = rx_design_for_buffer_width(w, cfg);
    double delay = measure_rx_delay(cfg, d, tx_slew_s);
    ++out.solves;
    if (delay <= target) {
      out.design = d;
      out.achieved_delay_s = delay;
      // Binary refinement between the failing and passing widths.
      double hi = w;
      for (int i = 0; i < 6; ++i) {
        double mid = std::sqrt(w_lo * hi);
        RxDesign dm = rx_design_for_buffer_width(mid, cfg);
        double dmid = measure_rx_delay(cfg, dm, tx_slew_s);
        ++out.solves;
        if (dmid <= target) {
          hi = mid;
          out.design = dm;
          out.achieved_delay_s = dmid;
        } else {
          w_lo = mid;
        }
      }
      return out;
    }
    w_lo = w;
  }
  out.design.infeasible = true;  // constraint unreachable at w_max
  return out;
}

AreaReport area(const TxDesign& tx, const RxDesign& rx, const adaptation::TerminationPlan& term,
                const adaptation::EqPlan& eq, const LinkConfig& cfg) {
  const auto& h = cfg.hidden;
  AreaReport rep;

  double w_total = rx.preamp_width_um + rx.buffer_width_um;
  for (double w : tx.stage_widths_um) w_total += w;
  rep.active_um2 = w_total * cfg.pdk.l_gate_um * h.layout_margin;

  if (eq.enabled()) {
    double squares = eq.r_eq_ohm / h.r_sheet_poly_ohm_sq;
    rep.eq_passives_um2 = squares * h.strip_width_um * h.strip_width_um +
                          (eq.c_eq_F / fF_to_F(1.0)) / h.mim_fF_per_um2;
  }
  if (term.terminated()) {
    double sq_term = term.r_term_ohm / h.r_sheet_poly_ohm_sq;
    double sq_bias = 2.0 * term.r_bias_ohm / h.r_sheet_hires_ohm_sq;
    rep.term_um2 = (sq_term + sq_bias) * h.strip_width_um * h.strip_width_um;
  }

  double c_esd_fF = channel::esd_cap(cfg) / fF_to_F(1.0);
  rep.esd_um2 = c_esd_fF / h.esd_fF_per_um2;

  double d_ubm = h.bump_diameter_um;
  if (cfg.user.bump_pitch_um >= 10.0) d_ubm += h.ubm_overhang_um;  // Cu pillar / C4
  rep.bump_ubm_um2 = M_PI * (d_ubm / 2.0) * (d_ubm / 2.0);

  rep.per_lane_um2 =
      rep.active_um2 + rep.eq_passives_um2 + rep.term_um2 + rep.esd_um2 + rep.bump_ubm_um2;
  return rep;
}

}  // namespace chiplink::xcvr
