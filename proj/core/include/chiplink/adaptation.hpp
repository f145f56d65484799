#pragma once

#include "chiplink/channel.hpp"
#include "chiplink/config.hpp"

namespace chiplink::adaptation {

enum class TermLevel { none, light, standard, strong };
enum class EqLevel { none, l1, l2, l3, aggressive };

const char* to_string(TermLevel v);
const char* to_string(EqLevel v);

struct TerminationPlan {
  TermLevel level = TermLevel::none;
  double r_term_ohm = 0.0;  // valid iff level != none
  double c_ac_F = 0.0;      // valid iff level != none and ac_coupled
  bool ac_coupled = false;
  double v_term_V = 0.0;
  double r_bias_ohm = 0.0;
  double e_term_J_per_bit = 0.0;  // static part; fold_dynamic adds the rest
  double e_term_static_J_per_bit = 0.0;
  double rho = 0.0;
  double l_unterm_mm = 0.0;

  bool terminated() const { return level != TermLevel::none; }
};

struct EqPlan {
  EqLevel level = EqLevel::none;
  double alpha = 0.0;
  double c_eq_F = 0.0;
  double r_eq_ohm = 0.0;
  bool capped = false;

  bool enabled() const { return level != EqLevel::none; }
};

// Maximum unterminated reach for full-swing NRZ at this data rate, linearly
// interpolated in rate and clamped at the table ends.
double unterminated_reach_mm(const config::LinkConfig& cfg);

TerminationPlan select_termination(const config::LinkConfig& cfg,
                                   const channel::ChannelSummary& summary);

EqPlan select_eq(const config::LinkConfig& cfg, const channel::ChannelSummary& summary,
                 const channel::PiLadder& ladder);

// Dynamic switching component through R_term; t_tr is the measured TX 20-80%
// transition at the pad. Returns the updated total e_term.
double fold_dynamic_term_energy(TerminationPlan& plan, double t_tr_s, double activity_factor,
                                double vdd_V);

}  // namespace chiplink::adaptation
