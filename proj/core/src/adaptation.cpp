#include "chiplink/adaptation.hpp"

#include <cmath>

namespace chiplink::adaptation {

using config::LinkConfig;

const char* to_string(TermLevel v) {
  switch (v) {
    case TermLevel::none: return "none";
    case TermLevel::light: return "light";
    case TermLevel::standard: return "standard";
    case TermLevel::strong: return "strong";
  }
  return "?";
}

const char* to_string(EqLevel v) {
  switch (v) {
    case EqLevel::none: return "none";
    case EqLevel::l1: return "l1";
    case EqLevel::l2: return "l2";
    case EqLevel::l3: return "l3";
    case EqLevel::aggressive: return "aggressive";
  }
  return "?";
}

double unterminated_reach_mm(const LinkConfig& cfg) {
  const auto& tbl = cfg.hidden.unterm_boundary;
  double rate = cfg.user.data_rate_Gbps;
  if (rate <= tbl.front().data_rate_Gbps) return tbl.front().l_unterm_mm;
  if (rate >= tbl.back().data_rate_Gbps) return tbl.back().l_unterm_mm;
  for (size_t i = 1; i < tbl.size(); ++i) {
    if (rate <= tbl[i].data_rate_Gbps) {
      double t = (rate - tbl[i - 1].data_rate_Gbps) /
                 (tbl[i].data_rate_Gbps - tbl[i - 1].data_rate_Gbps);
      return tbl[i - 1].l_unterm_mm + t * (tbl[i].l_unterm_mm - tbl[i - 1].l_unterm_mm);
    }
  }
  return tbl.back().l_unterm_mm;
}

TerminationPlan select_termination(const LinkConfig& cfg, const channel::ChannelSummary&) {
  const auto& h = cfg.hidden;
  TerminationPlan plan;
  plan.l_unterm_mm = unterminated_reach_mm(cfg);
  plan.rho = cfg.user.reach_mm / plan.l_unterm_mm;
  plan.v_term_V = cfg.pdk.vdd_V / 2.0;
  plan.r_bias_ohm = h.r_bias_ohm;
  plan.ac_coupled = cfg.user.ac_coupled;

  // Graduated levels; ties at a boundary resolve to the lower level.
  if (plan.rho <= 1.0) {
    plan.level = TermLevel::none;
    return plan;
  }
  if (plan.rho <= 1.25) {
    plan.level = TermLevel::light;
    plan.r_term_ohm = 2.0 * h.r_rx_ohm;
    plan.c_ac_F = cfg.user.ac_coupled ? 0.5 * h.c_base_ac_F : 0.0;
  } else if (plan.rho <= 1.5) {
    plan.level = TermLevel::standard;
    plan.r_term_ohm = h.r_rx_ohm;
    plan.c_ac_F = cfg.user.ac_coupled ? h.c_base_ac_F : 0.0;
  } else {
    plan.level = TermLevel::strong;
    plan.r_term_ohm = 0.5 * h.r_rx_ohm;
    plan.c_ac_F = cfg.user.ac_coupled ? 2.0 * h.c_base_ac_F : 0.0;
  }

  // Static bias dissipation of the mid-rail divider, spread over one bit.
  double vdd = cfg.pdk.vdd_V;
  plan.e_term_static_J_per_bit = vdd * vdd / (2.0 * h.r_bias_ohm) / gbps_to_bps(cfg.user.data_rate_Gbps);
  plan.e_term_J_per_bit = plan.e_term_static_J_per_bit;
  return plan;
}

EqPlan select_eq(const LinkConfig& cfg, const channel::ChannelSummary& summary,
                 const channel::PiLadder& ladder) {
  static constexpr double kAlpha[] = {0.0, 0.05, 0.10, 0.15, 0.20};
  EqPlan plan;
  if (!cfg.user.passive_eq_en) return plan;

  int level = 0;
  for (double th : cfg.hidden.eq_loss_thresholds_dB)
    if (summary.loss_nyquist_dB > th) ++level;  // ties resolve low
  plan.level = static_cast<EqLevel>(level);
  plan.alpha = kAlpha[level];
  if (level == 0) return plan;

  plan.c_eq_F = plan.alpha * summary.c_ch_F;
  plan.r_eq_ohm = summary.r_ch_ohm / plan.alpha;  // zero at the channel -3 dB corner

  double c_down = ladder.downstream_c_F();
  double cap = cfg.hidden.eq_latency_cap_ui * cfg.ui_s();
  if (plan.r_eq_ohm * c_down > cap) {
    plan.r_eq_ohm = cap / c_down;
    plan.capped = true;
  }
  return plan;
}

double fold_dynamic_term_energy(TerminationPlan& plan, double t_tr_s, double activity_factor,
                                double vdd_V) {
  if (!plan.terminated()) return plan.e_term_J_per_bit;
  double v_half = vdd_V / 2.0;
  double e_dyn = activity_factor * v_half * v_half / plan.r_term_ohm * t_tr_s;
  plan.e_term_J_per_bit = plan.e_term_static_J_per_bit + e_dyn;
  return plan.e_term_J_per_bit;
}

}  // namespace chiplink::adaptation
