#include <cmath>
#include <random>

#include "chiplink/xcvr.hpp"
#include "doctest.h"

using namespace chiplink;
using namespace chiplink::xcvr;

namespace {

config::LinkConfig make_cfg(const std::string& extra = "") {
  std::string text = R"({"pkg_type":"org","reach_mm":30,"bump_pitch_um":112.64,
    "data_rate_Gbps":8,"lane_count":16)" +
                     extra + "}";
  return config::load_config_text(text).cfg;
}

}  // namespace

TEST_CASE("fin quantization follows w = 0.01 + 0.048 (n_fin - 1)") {
  auto pdk = config::builtin_pdk("generic16");
  CHECK(quantize_fin(0.106, pdk) == doctest::Approx(0.106));  // n_fin = 3 exact
  CHECK(quantize_fin(0.005, pdk) == doctest::Approx(0.010));  // floor at one fin
  CHECK(quantize_fin(0.13, pdk) == doctest::Approx(0.154));   // equidistant tie rounds up
  CHECK(quantize_fin(0.12, pdk) == doctest::Approx(0.106));   // plain nearest

  SUBCASE("idempotent for random widths") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> w(0.005, 50.0);
    for (int i = 0; i < 200; ++i) {
      double q = quantize_fin(w(rng), pdk);
      CHECK(quantize_fin(q, pdk) == doctest::Approx(q));
    }
  }
  SUBCASE("planar descriptors pass widths through") {
    auto planar = config::builtin_pdk("generic65");
    CHECK(quantize_fin(0.1234, planar) == doctest::Approx(0.1234));
  }
}

TEST_CASE("chain stage count is even-ceil of the logarithmic depth") {
  auto pdk = config::builtin_pdk("generic65");
  double c_in = fF_to_F(pdk.unit_inv.c_in_fF);

  TxDesign d1 = size_tx_chain(c_in * std::exp(4.0), pdk, M_E);
  CHECK(d1.n_stages() == 4);
  TxDesign d2 = size_tx_chain(c_in * std::exp(4.0) * 1.01, pdk, M_E);
  CHECK(d2.n_stages() == 6);
  TxDesign d3 = size_tx_chain(c_in, pdk, M_E);
  CHECK(d3.n_stages() == 2);

  SUBCASE("always even and at least 2 across random loads") {
    auto roomy = pdk;
    roomy.w_max_um = 1e9;  // exercise the 1..1e6 c_in range without the bound
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> mag(0.0, 6.0);
    for (int i = 0; i < 100; ++i) {
      double c_load = c_in * std::pow(10.0, mag(rng));
      TxDesign d = size_tx_chain(c_load, roomy, M_E);
      CHECK(d.n_stages() >= 2);
      CHECK(d.n_stages() % 2 == 0);
      for (size_t s = 1; s < d.stage_widths_um.size(); ++s)
        CHECK(d.stage_widths_um[s] >= d.stage_widths_um[s - 1] * (1.0 - 1e-12));
    }
  }
  SUBCASE("oversized load is rejected with sizing advice") {
    CHECK_THROWS_WITH_AS(size_tx_chain(1.0, pdk, M_E),
                         doctest::Contains("split the lane"), std::invalid_argument);
  }
  SUBCASE("finfet chains carry quantized widths") {
    auto fin = config::builtin_pdk("generic16");
    TxDesign d = size_tx_chain(fF_to_F(fin.unit_inv.c_in_fF) * 500.0, fin, M_E);
    for (double w : d.stage_widths_um) {
      double q = quantize_fin(w, fin);
      CHECK(w == doctest::Approx(q));
    }
  }
}

TEST_CASE("analytic slew-target width responds to the channel") {
  auto cfg = make_cfg();
  auto ladder = channel::build_ladder(cfg);
  bool clamped = true;
  double w = analytic_tx_width_um(cfg, ladder, &clamped);
  CHECK(!clamped);
  CHECK(w > cfg.pdk.w_min_um);
  CHECK(w < cfg.pdk.w_max_um);

  SUBCASE("unreachable targets clamp at the PDK maximum") {
    auto hard = make_cfg();
    hard.user.pkg_type = config::PkgType::si;
    hard.user.reach_mm = 20.0;
    hard.user.data_rate_Gbps = 48.0;
    hard.hidden.trace_base = {185.0, 1.04, 3.0};
    hard.hidden.trace_width_um = 3.0;
    hard.hidden.t_ox_um = 0.99;
    hard.hidden.bump_height_um = 15.0;
    hard.user.bump_pitch_um = 25.0;
    hard.hidden.bump_diameter_um = 15.0;
    auto lad2 = channel::build_ladder(hard);
    bool c2 = false;
    double w2 = analytic_tx_width_um(hard, lad2, &c2);
    CHECK(c2);
    CHECK(w2 == doctest::Approx(hard.pdk.w_max_um));
  }
}

TEST_CASE("tx sizing search meets the far-end transition target") {
  auto cfg = make_cfg(R"(,"sizing_mode":"tx_sizing")");
  auto ladder = channel::build_ladder(cfg);
  auto summary = channel::summarize(ladder, cfg.pdk.vdd_V, cfg.user.data_rate_Gbps);
  auto term = adaptation::select_termination(cfg, summary);
  auto eq = adaptation::select_eq(cfg, summary, ladder);

  auto res = tx_sizing_search(cfg, ladder, term, eq);
  double target = cfg.user.rise_fall_pct_ui * cfg.ui_s();
  CHECK(res.achieved_slew_s == doctest::Approx(target).epsilon(0.05));
  CHECK(res.solves <= 24);

  SUBCASE("budget of one keeps the best-so-far with a warning") {
    auto tight = tx_sizing_search(cfg, ladder, term, eq, 1);
    CHECK(tight.solves == 1);
    CHECK(tight.budget_exhausted);
    CHECK(!tight.design.stage_widths_um.empty());
  }
  SUBCASE("search never returns worse than the analytic warm start") {
    // The warm start is evaluated first, so best-so-far can only improve.
    auto one = tx_sizing_search(cfg, ladder, term, eq, 1);
    CHECK(res.achieved_slew_s - target <= std::abs(one.achieved_slew_s - target) + 1e-15);
  }
}

TEST_CASE("rx sizing search satisfies the delay fraction") {
  auto cfg = make_cfg(R"(,"sizing_mode":"rx_sizing")");

  SUBCASE("slack target accepts minimum widths") {
    cfg.user.max_rx_delay_frac_ui = 0.9;
    auto res = rx_sizing_search(cfg, 0.2 * cfg.ui_s());
    CHECK(!res.design.infeasible);
    CHECK(res.design.buffer_width_um == doctest::Approx(cfg.pdk.w_min_um));
    CHECK(res.solves == 1);
  }
  SUBCASE("reference target met and verified by re-simulation") {
    cfg.user.max_rx_delay_frac_ui = 0.25;
    cfg.user.data_rate_Gbps = 48.0;
    auto res = rx_sizing_search(cfg, 0.2 * cfg.ui_s());
    CHECK(!res.design.infeasible);
    CHECK(res.achieved_delay_s <= 0.25 * cfg.ui_s());
    CHECK(res.design.preamp_width_um <= res.design.buffer_width_um);
  }
  SUBCASE("unreachable target marks infeasible instead of crashing") {
    cfg.user.data_rate_Gbps = 48.0;
    cfg.pdk.w_max_um = 0.02;  // nothing stronger than ~2 fins available
    cfg.user.max_rx_delay_frac_ui = 0.001;
    auto res = rx_sizing_search(cfg, 0.2 * cfg.ui_s());
    CHECK(res.design.infeasible);
  }
}

TEST_CASE("channel-probed slew is never faster than the pad-probed slew") {
  auto cfg = make_cfg();
  auto ladder = channel::build_ladder(cfg);
  auto summary = channel::summarize(ladder, cfg.pdk.vdd_V, cfg.user.data_rate_Gbps);
  auto term = adaptation::select_termination(cfg, summary);
  auto eq = adaptation::select_eq(cfg, summary, ladder);

  double w = analytic_tx_width_um(cfg, ladder);
  TxDesign tx = tx_design_for_final_width(w, cfg.pdk, effective_fanout(cfg.pdk));

  simcore::Network net;
  net.set_vdd(cfg.pdk.vdd_V);
  simcore::NodeRef in = simcore::kStim;
  auto stages = chain_params(tx.stage_widths_um, cfg.pdk);
  for (size_t s = 0; s < stages.size(); ++s) {
    simcore::NodeRef out = net.add_node("s" + std::to_string(s));
    net.add_inverter(in, out, stages[s], simcore::Group::tx_device);
    in = out;
  }
  LadderDownstream down(ladder, term, eq, false);
  auto ports = down.build(net, in);
  auto res = simcore::solve_transient(net, simcore::Edge{true, 10e-12},
                                      {ports.tx_pad, ports.load});
  REQUIRE(res.probes[0].crossed);
  REQUIRE(res.probes[1].crossed);
  // low-pass broadening through the ladder
  CHECK(res.probes[1].slew_20_80_s >= res.probes[0].slew_20_80_s);
}

TEST_CASE("reference-chain delay converges under step halving") {
  auto cfg = make_cfg();
  auto ladder = channel::build_ladder(cfg);
  auto summary = channel::summarize(ladder, cfg.pdk.vdd_V, cfg.user.data_rate_Gbps);
  auto term = adaptation::select_termination(cfg, summary);
  auto eq = adaptation::select_eq(cfg, summary, ladder);
  double w = analytic_tx_width_um(cfg, ladder);
  TxDesign tx = tx_design_for_final_width(w, cfg.pdk, effective_fanout(cfg.pdk));
  auto stages = chain_params(tx.stage_widths_um, cfg.pdk);

  auto run = [&](double scale) {
    simcore::Network net;
    net.set_vdd(cfg.pdk.vdd_V);
    simcore::NodeRef in = simcore::kStim;
    for (size_t s = 0; s < stages.size(); ++s) {
      simcore::NodeRef out = net.add_node("s" + std::to_string(s));
      net.add_inverter(in, out, stages[s], simcore::Group::tx_device);
      in = out;
    }
    LadderDownstream down(ladder, term, eq, false);
    auto ports = down.build(net, in);
    simcore::SolveOptions opt;
    opt.time_step_scale = scale;
    auto res = simcore::solve_transient(net, simcore::Edge{true, 10e-12}, {ports.probe}, opt);
    REQUIRE(res.probes[0].crossed);
    return res.delay_50_s(0);
  };
  double d1 = run(1.0);
  double d2 = run(0.5);
  CHECK(std::abs(d2 - d1) / d1 < 0.001);
}

TEST_CASE("area model sums its components") {
  auto cfg = make_cfg();
  auto ladder = channel::build_ladder(cfg);
  auto summary = channel::summarize(ladder, cfg.pdk.vdd_V, cfg.user.data_rate_Gbps);
  auto term = adaptation::select_termination(cfg, summary);
  auto eq = adaptation::select_eq(cfg, summary, ladder);

  TxDesign tx = tx_design_for_final_width(10.0, cfg.pdk, effective_fanout(cfg.pdk));
  RxDesign rx = analytic_rx_design(cfg);
  AreaReport rep = area(tx, rx, term, eq, cfg);

  CHECK(rep.active_um2 > 0.0);
  CHECK(rep.per_lane_um2 == doctest::Approx(rep.active_um2 + rep.eq_passives_um2 + rep.term_um2 +
                                            rep.esd_um2 + rep.bump_ubm_um2));
  for (double v : {rep.active_um2, rep.eq_passives_um2, rep.term_um2, rep.esd_um2,
                   rep.bump_ubm_um2})
    CHECK(v >= 0.0);

  SUBCASE("active area is total width times gate length times margin") {
    config::LinkConfig c2 = cfg;
    c2.pdk.l_gate_um = 0.06;
    c2.hidden.layout_margin = 3.0;
    TxDesign fixed;
    fixed.stage_widths_um = {4.0, 5.0};
    RxDesign rx0;
    rx0.preamp_width_um = 0.4;
    rx0.buffer_width_um = 0.6;
    adaptation::TerminationPlan no_term;
    adaptation::EqPlan no_eq;
    AreaReport r2 = area(fixed, rx0, no_term, no_eq, c2);
    CHECK(r2.active_um2 == doctest::Approx(10.0 * 0.06 * 3.0));  // 1.8 um^2
    CHECK(r2.eq_passives_um2 == 0.0);
    CHECK(r2.term_um2 == 0.0);
  }
  SUBCASE("no UBM overhang below 10 um pitch") {
    config::LinkConfig fine = cfg;
    fine.user.bump_pitch_um = 9.0;
    fine.hidden.bump_diameter_um = 5.4;
    AreaReport rf = area(tx, rx, term, eq, fine);
    CHECK(rf.bump_ubm_um2 == doctest::Approx(M_PI * 2.7 * 2.7));
    config::LinkConfig coarse = cfg;
    coarse.user.bump_pitch_um = 10.0;
    coarse.hidden.bump_diameter_um = 6.0;
    AreaReport rc = area(tx, rx, term, eq, coarse);
    CHECK(rc.bump_ubm_um2 == doctest::Approx(M_PI * 13.0 * 13.0));
  }
}
