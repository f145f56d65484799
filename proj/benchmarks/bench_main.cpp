#include <benchmark/benchmark.h>

#include <random>

#include "chiplink/channel.hpp"
#include "chiplink/config.hpp"
#include "chiplink/coopt.hpp"
#include "chiplink/simcore.hpp"
#include "chiplink/xcvr.hpp"

namespace {

using namespace chiplink;

config::LinkConfig reference_cfg() {
  return config::load_config_text(R"({"pkg_type":"org","reach_mm":30,
    "bump_pitch_um":112.64,"data_rate_Gbps":8,"lane_count":16})").cfg;
}

void BM_LoadConfig(benchmark::State& state) {
  const std::string text = R"({"pkg_type":"org","reach_mm":30,"bump_pitch_um":112.64,
    "data_rate_Gbps":8,"lane_count":16,"channel_hidden":{"eps_r_ild":3.5}})";
  for (auto _ : state) {
    auto res = config::load_config_text(text);
    benchmark::DoNotOptimize(res.cfg.hidden.eps_r_ild);
  }
}
BENCHMARK(BM_LoadConfig);

void BM_BuildLadder(benchmark::State& state) {
  auto cfg = reference_cfg();
  for (auto _ : state) {
    auto lad = channel::build_ladder(cfg);
    benchmark::DoNotOptimize(lad.total_shunt_c_F());
  }
}
BENCHMARK(BM_BuildLadder);

void BM_SolveTransient(benchmark::State& state) {
  auto cfg = reference_cfg();
  auto ladder = channel::build_ladder(cfg);
  auto summary = channel::summarize(ladder, cfg.pdk.vdd_V, cfg.user.data_rate_Gbps);
  auto term = adaptation::select_termination(cfg, summary);
  auto eq = adaptation::select_eq(cfg, summary, ladder);
  double w = xcvr::analytic_tx_width_um(cfg, ladder);
  auto tx = xcvr::tx_design_for_final_width(w, cfg.pdk, xcvr::effective_fanout(cfg.pdk));
  auto stages = xcvr::chain_params(tx.stage_widths_um, cfg.pdk);

  for (auto _ : state) {
    simcore::Network net;
    net.set_vdd(cfg.pdk.vdd_V);
    simcore::NodeRef in = simcore::kStim;
    for (size_t s = 0; s < stages.size(); ++s) {
      simcore::NodeRef out = net.add_node("s" + std::to_string(s));
      net.add_inverter(in, out, stages[s], simcore::Group::tx_device);
      in = out;
    }
    xcvr::LadderDownstream down(ladder, term, eq, false);
    auto ports = down.build(net, in);
    auto res = simcore::solve_transient(net, simcore::Edge{true, 10e-12}, {ports.probe});
    benchmark::DoNotOptimize(res.probes[0].t_50_s);
  }
}
BENCHMARK(BM_SolveTransient)->Unit(benchmark::kMillisecond);

void BM_Interpolate(benchmark::State& state) {
  simcore::CharTable t;
  t.slews_s = {1e-12, 2e-12, 4e-12, 8e-12, 16e-12};
  t.loads_F = {1e-15, 2e-15, 4e-15, 8e-15, 16e-15};
  size_t n = t.cells();
  t.delay_rise_s.resize(n);
  t.delay_fall_s.resize(n);
  t.slew_rise_s.resize(n);
  t.slew_fall_s.resize(n);
  t.energy_per_transition_J.resize(n);
  for (size_t i = 0; i < n; ++i) t.delay_rise_s[i] = 1e-12 * (i + 1);
  t.delay_fall_s = t.delay_rise_s;
  t.slew_rise_s = t.delay_rise_s;
  t.slew_fall_s = t.delay_rise_s;
  t.energy_per_transition_J = t.delay_rise_s;

  double q = 0.9e-12;
  for (auto _ : state) {
    auto r = simcore::interpolate(t, q, 3.3e-15, true);
    benchmark::DoNotOptimize(r.delay_s);
    q = q < 15e-12 ? q * 1.01 : 0.9e-12;
  }
}
BENCHMARK(BM_Interpolate);

void BM_ParetoFront(benchmark::State& state) {
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> e(0.1, 10.0), tau(10.0, 400.0);
  std::vector<coopt::DesignPoint> pts(state.range(0));
  for (auto& p : pts) {
    p.e_total_J_per_bit = e(rng) * 1e-12;
    p.tau_wc_s = tau(rng) * 1e-12;
    p.feasible = true;
  }
  for (auto _ : state) {
    auto front = coopt::pareto_front(pts);
    benchmark::DoNotOptimize(front.points.size());
  }
}
BENCHMARK(BM_ParetoFront)->Arg(64)->Arg(1024);

}  // namespace

BENCHMARK_MAIN();
