#include <cmath>
#include <random>
#include <sstream>

#include "chiplink/channel.hpp"
#include "chiplink/simcore.hpp"
#include "chiplink/xcvr.hpp"
#include "doctest.h"

using namespace chiplink;
using namespace chiplink::channel;

namespace {

config::LinkConfig make_cfg(const std::string& extra = "") {
  std::string text = R"({"pkg_type":"org","reach_mm":30,"bump_pitch_um":112.64,
    "data_rate_Gbps":8,"lane_count":16)" +
                     extra + "}";
  return config::load_config_text(text).cfg;
}

}  // namespace

TEST_CASE("pad cap matches hand-evaluated parallel-plate values") {
  // w_p = 0.8 * 112.64 um = 90.112 um
  CHECK(pad_cap(112.64, 3.9, 1.42) == doctest::Approx(197.4e-15).epsilon(0.0026));
  CHECK(pad_cap(25.0, 3.9, 0.99) == doctest::Approx(13.96e-15).epsilon(0.0036));
  // quadratic vanishing for small pitch
  CHECK(pad_cap(1e-6, 3.9, 1.42) < 1e-25);
  CHECK_THROWS(pad_cap(-1.0, 3.9, 1.42));
}

TEST_CASE("ucie pad cap lookup") {
  bool clamped = false;
  CHECK(ucie_pad_cap(8.0, &clamped) == doctest::Approx(300e-15));
  CHECK(!clamped);
  CHECK(ucie_pad_cap(16.0) == doctest::Approx(200e-15));
  CHECK(ucie_pad_cap(32.0) == doctest::Approx(125e-15));
  CHECK(ucie_pad_cap(48.0, &clamped) == doctest::Approx(125e-15));
  CHECK(clamped);
  CHECK(ucie_pad_cap(12.0) == doctest::Approx(200e-15));
}

TEST_CASE("bump RC against a straight-line formula oracle") {
  const double p = 112.64, d = 67.6, h = 50.0, eps = 3.5, rho = 1.68e-8, f = 4e9;
  ComponentRC b = bump_rc(p, d, h, eps, rho, f);

  // Independent re-evaluation of the cylindrical two-wire + skin model.
  double c_oracle = M_PI * 8.8541878128e-12 * eps * (h * 1e-6) / std::acosh(p / d);
  double r_dc = rho * (h * 1e-6) / (M_PI * std::pow(d * 1e-6 / 2.0, 2.0));
  double delta = std::sqrt(rho / (M_PI * f * 1.25663706212e-6));
  double r_half = d * 1e-6 / 2.0;
  double area = M_PI * (r_half * r_half - (r_half - delta) * (r_half - delta));
  double r_ac = rho * (h * 1e-6) / area;
  double r_oracle = std::sqrt(r_dc * r_dc + r_ac * r_ac);

  CHECK(nearly_equal(b.c_F, c_oracle, 1e-9));
  CHECK(nearly_equal(b.r_ohm, r_oracle, 1e-9));

  SUBCASE("zero frequency leaves only the DC term") {
    ComponentRC dc = bump_rc(p, d, h, eps, rho, 0.0);
    CHECK(nearly_equal(dc.r_ohm, r_dc, 1e-12));
  }
  SUBCASE("full conduction when the skin depth covers the radius") {
    // At low enough frequency delta >= d/2, so no AC term remains.
    ComponentRC low = bump_rc(p, d, h, eps, rho, 1.0);
    CHECK(nearly_equal(low.r_ohm, r_dc, 1e-12));
  }
  SUBCASE("acosh domain") { CHECK_THROWS(bump_rc(50.0, 50.0, h, eps, rho, f)); }
}

TEST_CASE("trace RC base-value scaling") {
  config::TraceBase si_base{185.0, 1.04, 3.0};
  ComponentRC t = trace_rc(config::PkgType::si, si_base, 10.0, 3.0, 1.0);
  CHECK(t.c_F == doctest::Approx(1.85e-12));
  CHECK(t.r_ohm == doctest::Approx(10.4));

  config::TraceBase org_base{138.0, 0.036, 30.0};
  ComponentRC o = trace_rc(config::PkgType::org, org_base, 25.0, 30.0, 1.0);
  CHECK(o.c_F == doctest::Approx(3.45e-12));
  CHECK(o.r_ohm == doctest::Approx(0.9));

  SUBCASE("double width halves R and doubles C") {
    ComponentRC w2 = trace_rc(config::PkgType::si, si_base, 10.0, 6.0, 1.0);
    CHECK(w2.r_ohm == doctest::Approx(t.r_ohm / 2.0));
    CHECK(w2.c_F == doctest::Approx(t.c_F * 2.0));
  }
}

TEST_CASE("esd graduated table lookup") {
  std::vector<config::EsdRow> table = {{25.0, "si", 40.0}, {55.0, "any", 80.0}, {130.0, "org", 150.0}};
  CHECK(esd_table_lookup(112.64, config::PkgType::org, table) == doctest::Approx(150e-15));
  CHECK(esd_table_lookup(25.0, config::PkgType::si, table) == doctest::Approx(40e-15));
  CHECK(esd_table_lookup(40.0, config::PkgType::si, table) == doctest::Approx(80e-15));
  // above the last matching row, the last row's value applies
  CHECK(esd_table_lookup(500.0, config::PkgType::org, table) == doctest::Approx(150e-15));
  CHECK(esd_table_lookup(500.0, config::PkgType::si, table) == doctest::Approx(80e-15));

  SUBCASE("ucie mode zeroes the esd component") {
    auto cfg = make_cfg(R"(,"pad_cap_mode":"ucie")");
    CHECK(esd_cap(cfg) == 0.0);
  }
}

TEST_CASE("ladder assembly conserves component totals") {
  auto cfg = make_cfg();
  PiLadder lad = build_ladder(cfg);
  REQUIRE(lad.nodes.size() == 11);
  REQUIRE(lad.edges.size() == 10);

  double r_expected = 2.0 * lad.bump.r_ohm + 4.0 * lad.chip_pad.r_ohm + lad.trace.r_ohm;
  CHECK(lad.total_series_r_ohm() == doctest::Approx(r_expected));

  double c_expected = 2.0 * (lad.chip_pad.c_F + lad.bump.c_F + lad.int_pad.c_F + lad.esd.c_F) +
                      lad.trace.c_F;
  CHECK(lad.total_shunt_c_F() == doctest::Approx(c_expected));

  SUBCASE("coupling disabled leaves the element list empty") {
    CHECK(lad.coupling.empty());
  }
  SUBCASE("coupling elements follow the configured ratios") {
    auto ccfg = make_cfg(R"(,"coupling_enabled":true,"cc_ratio_trace":0.4,
      "cc_ratio_pad":0.15,"cc_rx_pad_fF":5.0)");
    PiLadder cl = build_ladder(ccfg);
    REQUIRE(cl.coupling.size() == 8);
    // trace node with C/4 shunt gets 0.4 of it
    CHECK(cl.coupling[0].node == 3);
    CHECK(cl.coupling[0].c_F == doctest::Approx(0.4 * cl.trace.c_F / 8.0));
    CHECK(cl.coupling[1].c_F == doctest::Approx(0.4 * cl.trace.c_F / 4.0));
    CHECK(cl.coupling[5].c_F == doctest::Approx(0.15 * cl.int_pad.c_F));
    CHECK(cl.coupling[7].c_F == doctest::Approx(5e-15));
    // coupling excluded from the shunt total
    CHECK(cl.total_shunt_c_F() == doctest::Approx(lad.total_shunt_c_F()));
  }
}

TEST_CASE("channel summary reductions") {
  auto cfg = make_cfg();
  PiLadder lad = build_ladder(cfg);
  ChannelSummary s = summarize(lad, 0.8, 8.0);

  CHECK(s.tau_elmore_s == doctest::Approx(s.r_ch_ohm * s.c_ch_F));
  CHECK(s.f_3db_Hz == doctest::Approx(1.0 / (2.0 * M_PI * s.r_ch_ohm * s.c_ch_F)));
  CHECK(s.f_ny_Hz == doctest::Approx(4e9));

  SUBCASE("hand-evaluated lumped elmore") {
    // tau = R_ch * C_ch with the silicon 10 mm trace example values
    CHECK(10.4 * 1.85e-12 == doctest::Approx(19.24e-12).epsilon(1e-6));
  }
  SUBCASE("loss is 3.0103 dB at f_ny == f_3db") {
    PiLadder l2 = lad;
    double rate_gbps = 2.0 * s.f_3db_Hz / 1e9;
    ChannelSummary s2 = summarize(l2, 0.8, rate_gbps);
    CHECK(s2.loss_nyquist_dB == doctest::Approx(10.0 * std::log10(2.0)).epsilon(1e-9));
  }
  SUBCASE("organic pad term at 0.8 V lands near 63 fJ per side") {
    double per_side = 0.5 * lad.chip_pad.c_F * 0.8 * 0.8;
    CHECK(per_side > 50e-15);
    CHECK(per_side < 80e-15);
  }
  SUBCASE("C_eff double-counts pads and bumps, single-counts trace and esd") {
    double expect = 2.0 * (lad.chip_pad.c_F + lad.bump.c_F + lad.int_pad.c_F) + lad.trace.c_F +
                    lad.esd.c_F;
    CHECK(s.c_eff_F == doctest::Approx(expect));
  }
}

TEST_CASE("tau and channel energy strictly increase with reach") {
  double prev_tau = 0.0, prev_e = 0.0;
  for (double reach : {2.0, 5.0, 10.0, 20.0, 40.0}) {
    auto cfg = make_cfg();
    cfg.user.reach_mm = reach;
    PiLadder lad = build_ladder(cfg);
    ChannelSummary s = summarize(lad, 0.8, 8.0);
    CHECK(s.tau_elmore_s > prev_tau);
    CHECK(s.e_ch_J_per_bit > prev_e);
    prev_tau = s.tau_elmore_s;
    prev_e = s.e_ch_J_per_bit;
  }
}

TEST_CASE("loss vanishes only at zero nyquist and grows with rate") {
  auto cfg = make_cfg();
  PiLadder lad = build_ladder(cfg);
  CHECK(summarize(lad, 0.8, 1e-12).loss_nyquist_dB == doctest::Approx(0.0).epsilon(1e-9));
  double prev = -1.0;
  for (double rate : {1.0, 4.0, 16.0, 48.0}) {
    double loss = summarize(lad, 0.8, rate).loss_nyquist_dB;
    CHECK(loss > prev);
    prev = loss;
  }
}

TEST_CASE("ucie mode C_eff is independent of t_ox and eps_r_ild") {
  auto a = make_cfg(R"(,"pad_cap_mode":"ucie","channel_hidden":{"t_ox_um":0.5,"eps_r_ild":2.0})");
  auto b = make_cfg(R"(,"pad_cap_mode":"ucie","channel_hidden":{"t_ox_um":3.0,"eps_r_ild":7.0})");
  ChannelSummary sa = summarize(build_ladder(a), 0.8, 8.0);
  ChannelSummary sb = summarize(build_ladder(b), 0.8, 8.0);
  CHECK(sa.c_eff_F == doctest::Approx(sb.c_eff_F).epsilon(1e-12));
}

TEST_CASE("distributed elmore brackets the solver step delay") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> reach(2.0, 40.0);
  std::uniform_real_distribution<double> pitch(20.0, 120.0);

  for (int trial = 0; trial < 6; ++trial) {
    auto cfg = make_cfg();
    cfg.user.pkg_type = trial % 2 ? config::PkgType::si : config::PkgType::org;
    cfg.user.reach_mm = reach(rng);
    cfg.user.bump_pitch_um = pitch(rng);
    cfg.hidden.bump_diameter_um = 0.6 * cfg.user.bump_pitch_um;
    if (cfg.user.pkg_type == config::PkgType::si) {
      cfg.hidden.t_ox_um = 0.99;
      cfg.hidden.trace_base = {185.0, 1.04, 3.0};
      cfg.hidden.bump_height_um = 15.0;
      cfg.hidden.trace_width_um = 3.0;
    }
    PiLadder lad = build_ladder(cfg);

    // Brute-force node-by-node oracle, independent of the member function.
    double oracle = 0.0;
    for (size_t e = 0; e < lad.edges.size(); ++e) {
      double downstream = 0.0;
      for (size_t n = e + 1; n < lad.nodes.size(); ++n)
        downstream += lad.nodes[n].c_shunt_F + lad.nodes[n].c_esd_F;
      oracle += lad.edges[e].r_ohm * downstream;
    }
    CHECK(nearly_equal(oracle, lad.distributed_elmore_s(), 1e-12));

    // Solver 50% step delay through a negligible source resistance.
    simcore::Network net;
    net.set_vdd(1.0);
    int drive = net.add_node("drive");
    net.add_resistor(simcore::kStim, drive, 1e-4, simcore::Group::channel);
    adaptation::TerminationPlan no_term;
    adaptation::EqPlan no_eq;
    xcvr::LadderDownstream down(lad, no_term, no_eq, false);
    auto ports = down.build(net, drive);
    auto res = simcore::solve_transient(net, simcore::Edge{true, oracle * 1e-3}, {ports.probe});
    REQUIRE(res.probes[0].crossed);
    double d50 = res.delay_50_s(0);
    CHECK(d50 >= 0.35 * oracle * 0.999);
    CHECK(d50 <= 1.05 * oracle * 1.001);
  }
}

TEST_CASE("netlist emission is deterministic with per-element statements") {
  auto cfg = make_cfg(R"(,"coupling_enabled":true)");
  PiLadder lad = build_ladder(cfg);
  std::string a = emit_netlist(lad);
  std::string b = emit_netlist(lad);
  CHECK(a == b);

  int n_r = 0, n_c = 0, n_k = 0;
  std::istringstream iss(a);
  std::string line;
  while (std::getline(iss, line)) {
    if (line.rfind("CK", 0) == 0) ++n_k;
    else if (line.rfind("C", 0) == 0) ++n_c;
    else if (line.rfind("R", 0) == 0) ++n_r;
  }
  CHECK(n_r == 10);
  CHECK(n_c == 13);  // 11 node shunts + 2 esd shunts
  CHECK(n_k == 8);
  CHECK(a.find(".subckt channel") != std::string::npos);
  CHECK(a.find("tx_pad") != std::string::npos);
  CHECK(a.find("rx_pad") != std::string::npos);
}
