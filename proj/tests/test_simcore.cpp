#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "chiplink/simcore.hpp"
#include "doctest.h"
#include "support/expm.hpp"

using namespace chiplink;
using namespace chiplink::simcore;

namespace {

struct Waveform {
  std::vector<double> t;
  std::vector<std::vector<double>> v;  // per probe block
};

Waveform read_dump(const std::string& path) {
  Waveform w;
  std::ifstream in(path);
  std::string line;
  int block = -1;
  while (std::getline(in, line)) {
    if (line.rfind("# node", 0) == 0) {
      ++block;
      w.v.emplace_back();
      continue;
    }
    if (line.empty()) continue;
    double t, v;
    if (std::sscanf(line.c_str(), "%lf %lf", &t, &v) == 2) {
      if (block == 0) w.t.push_back(t);
      w.v[block].push_back(v);
    }
  }
  return w;
}

std::string tmp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("single-pole step response matches ln2 and ln4 analytics") {
  Network net;
  net.set_vdd(1.0);
  int n = net.add_node("c");
  net.add_resistor(kStim, n, 1000.0, Group::channel);
  net.add_capacitor(n, kGround, 1e-12, Group::channel);

  auto res = solve_transient(net, Edge{true, 1e-13}, {n});
  REQUIRE(res.probes[0].crossed);
  const double tau = 1e-9;
  CHECK(res.delay_50_s(0) == doctest::Approx(std::log(2.0) * tau).epsilon(0.005));
  CHECK(res.probes[0].slew_20_80_s == doctest::Approx(std::log(4.0) * tau).epsilon(0.005));

  SUBCASE("falling edge mirrors the rising one") {
    auto fall = solve_transient(net, Edge{false, 1e-13}, {n});
    REQUIRE(fall.probes[0].crossed);
    CHECK(fall.delay_50_s(0) == doctest::Approx(std::log(2.0) * tau).epsilon(0.005));
  }
}

TEST_CASE("supply draw for one full rail-to-rail charge equals C*vdd^2") {
  const double vdd = 0.8;
  Network net;
  net.set_vdd(vdd);
  int out = net.add_node("out");
  DeviceParams inv{2000.0, 1500.0, 0.2e-15, 0.0};
  net.add_inverter(kStim, out, inv, Group::tx_device);
  const double c_load = 2e-12;
  net.add_capacitor(out, kGround, c_load, Group::load);

  // Falling input turns the pull-up on and charges the load from the rail.
  auto res = solve_transient(net, Edge{false, 1e-12}, {out});
  REQUIRE(res.probes[0].crossed);
  CHECK(res.e_supply_J == doctest::Approx(c_load * vdd * vdd).epsilon(0.01));

  SUBCASE("energy is at least the stored half") {
    CHECK(res.e_supply_J >= 0.5 * c_load * vdd * vdd);
  }
  SUBCASE("external-delivery split sees the full load charge") {
    CHECK(res.q_ext_load_C == doctest::Approx(c_load * vdd).epsilon(0.01));
  }
}

TEST_CASE("device energy scales as vdd^2 with resistances held") {
  auto run = [](double vdd) {
    Network net;
    net.set_vdd(vdd);
    int out = net.add_node("out");
    net.add_inverter(kStim, out, DeviceParams{2000.0, 1500.0, 0.2e-15, 0.5e-15},
                     Group::tx_device);
    net.add_capacitor(out, kGround, 1e-13, Group::load);
    auto res = solve_transient(net, Edge{false, 1e-12}, {out});
    return res.e_supply_J;
  };
  double e1 = run(0.8);
  double e2 = run(1.6);
  CHECK(e2 / e1 == doctest::Approx(4.0).epsilon(0.01));
}

TEST_CASE("three-node ladder tracks the matrix-exponential oracle") {
  // stim -R1- n0 -R2- n1 -R3- n2, shunt caps at each node.
  const double r[3] = {250.0, 400.0, 600.0};
  const double c[3] = {0.8e-12, 1.2e-12, 0.5e-12};
  const double vdd = 1.0;
  const double slew = 120e-12;

  Network net;
  net.set_vdd(vdd);
  int n0 = net.add_node("n0");
  int n1 = net.add_node("n1");
  int n2 = net.add_node("n2");
  net.add_resistor(kStim, n0, r[0], Group::channel);
  net.add_resistor(n0, n1, r[1], Group::channel);
  net.add_resistor(n1, n2, r[2], Group::channel);
  net.add_capacitor(n0, kGround, c[0], Group::channel);
  net.add_capacitor(n1, kGround, c[1], Group::channel);
  net.add_capacitor(n2, kGround, c[2], Group::channel);

  std::string dump = tmp_path("chiplink_ladder_dump.txt");
  SolveOptions opt;
  opt.dump_waveforms_path = dump;
  auto res = solve_transient(net, Edge{true, slew}, {n0, n1, n2}, opt);
  REQUIRE(res.probes[2].crossed);
  Waveform w = read_dump(dump);
  REQUIRE(w.v.size() == 3);
  REQUIRE(w.t.size() > 100);

  // Oracle: v' = A v + B u(t), integrated exactly per linear-ramp segment via
  // an augmented matrix exponential, stepped sample-to-sample.
  testsupport::Mat A(3, 3), B(3, 1);
  // KCL: C0 v0' = (u - v0)/R1 - (v0 - v1)/R2, etc.
  A(0, 0) = -(1.0 / r[0] + 1.0 / r[1]) / c[0];
  A(0, 1) = (1.0 / r[1]) / c[0];
  A(1, 0) = (1.0 / r[1]) / c[1];
  A(1, 1) = -(1.0 / r[1] + 1.0 / r[2]) / c[1];
  A(1, 2) = (1.0 / r[2]) / c[1];
  A(2, 1) = (1.0 / r[2]) / c[2];
  A(2, 2) = -(1.0 / r[2]) / c[2];
  B(0, 0) = 1.0 / (r[0] * c[0]);

  const double t_ramp = slew / 0.6;
  const double du_dt = vdd / t_ramp;

  // z = [v; u; u'], with u' constant inside a segment.
  auto segment_matrix = [&](double h, double updot) {
    testsupport::Mat M(5, 5);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) M(i, j) = A(i, j);
    for (int i = 0; i < 3; ++i) M(i, 3) = B(i, 0);
    M(3, 4) = 1.0;
    (void)updot;
    return testsupport::expm(M.scaled(h));
  };

  std::map<long long, testsupport::Mat> cache_ramp, cache_flat;
  std::vector<double> v = {0.0, 0.0, 0.0};
  double u = 0.0;
  double worst = 0.0;
  for (size_t k = 1; k < w.t.size(); ++k) {
    double h = w.t[k] - w.t[k - 1];
    bool in_ramp = w.t[k] <= t_ramp * (1.0 + 1e-12);
    double updot = in_ramp ? du_dt : 0.0;
    long long key = static_cast<long long>(h * 1e24);
    auto& cache = in_ramp ? cache_ramp : cache_flat;
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, segment_matrix(h, updot)).first;
    const testsupport::Mat& E = it->second;
    double z[5] = {v[0], v[1], v[2], u, updot};
    double zn[5] = {0, 0, 0, 0, 0};
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) zn[i] += E(i, j) * z[j];
    v = {zn[0], zn[1], zn[2]};
    u = std::min(zn[3], vdd);
    for (int p = 0; p < 3; ++p) worst = std::max(worst, std::abs(v[p] - w.v[p][k]));
  }
  CHECK(worst < 0.002 * vdd);
  std::filesystem::remove(dump);
}

TEST_CASE("halving the time step moves measured delay by less than 0.1%") {
  auto run = [](double scale) {
    Network net;
    net.set_vdd(0.8);
    int a = net.add_node("a");
    int b = net.add_node("b");
    net.add_inverter(kStim, a, DeviceParams{5e3, 4e3, 0.2e-15, 0.15e-15}, Group::tx_device);
    net.add_inverter(a, b, DeviceParams{2e3, 1.6e3, 0.5e-15, 0.4e-15}, Group::tx_device);
    net.add_capacitor(b, kGround, 50e-15, Group::load);
    SolveOptions opt;
    opt.time_step_scale = scale;
    auto res = solve_transient(net, Edge{true, 20e-12}, {b}, opt);
    REQUIRE(res.probes[0].crossed);
    return res.delay_50_s(0);
  };
  double d1 = run(1.0);
  double d2 = run(0.5);
  CHECK(std::abs(d2 - d1) / d1 < 0.001);
}

TEST_CASE("monotone input keeps every RC node monotone") {
  Network net;
  net.set_vdd(1.0);
  int prev = net.add_node("n0");
  net.add_resistor(kStim, prev, 100.0, Group::channel);
  net.add_capacitor(prev, kGround, 0.3e-12, Group::channel);
  for (int i = 1; i < 6; ++i) {
    int n = net.add_node("n" + std::to_string(i));
    net.add_resistor(prev, n, 150.0 + 40.0 * i, Group::channel);
    net.add_capacitor(n, kGround, (0.2 + 0.1 * i) * 1e-12, Group::channel);
    prev = n;
  }
  std::string dump = tmp_path("chiplink_monotone_dump.txt");
  SolveOptions opt;
  opt.dump_waveforms_path = dump;
  solve_transient(net, Edge{true, 80e-12}, {0, 1, 2, 3, 4, 5}, opt);
  Waveform w = read_dump(dump);
  for (const auto& trace : w.v) {
    for (size_t k = 1; k < trace.size(); ++k) {
      CHECK(trace[k] >= trace[k - 1] - 1e-9);
      // bounded by the rails within solver tolerance
      CHECK(trace[k] >= -1e-6);
      CHECK(trace[k] <= 1.0 + 1e-6);
    }
  }
  std::filesystem::remove(dump);
}

TEST_CASE("floating node reports a diagnostic naming it") {
  Network net;
  net.set_vdd(1.0);
  int a = net.add_node("driven");
  int orphan = net.add_node("orphan");
  net.add_resistor(kStim, a, 100.0, Group::channel);
  net.add_capacitor(a, kGround, 1e-12, Group::channel);
  net.add_capacitor(orphan, kGround, 1e-12, Group::channel);
  try {
    solve_transient(net, Edge{true, 1e-12}, {a});
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(std::string(e.what()).find("orphan") != std::string::npos);
  }
}

TEST_CASE("characterization grid shapes and probes") {
  DeviceParams st{3e3, 2.4e3, 0.3e-15, 0.2e-15};
  CharRequest req;
  req.stages = {st, st};
  req.device_group = Group::tx_device;
  req.slews_s = {5e-12, 10e-12, 20e-12, 40e-12};
  req.loads_F = {1e-15, 2e-15, 4e-15, 8e-15, 16e-15};
  req.vdd_V = 0.8;
  req.sc_fraction = 0.1;
  DirectDownstream direct;
  CharTable t = characterize(req, direct);

  CHECK(t.cells() == 20);
  CHECK(t.delay_rise_s.size() == 20);
  CHECK(t.c_in_F == doctest::Approx(0.3e-15));
  for (double d : t.delay_rise_s) CHECK(d > 0.0);
  for (double d : t.delay_fall_s) CHECK(d > 0.0);

  SUBCASE("delay monotone non-decreasing in load at fixed slew") {
    for (size_t si = 0; si < t.slews_s.size(); ++si)
      for (size_t li = 1; li < t.loads_F.size(); ++li)
        CHECK(t.at(t.delay_rise_s, si, li) >=
              t.at(t.delay_rise_s, si, li - 1) * (1.0 - 1e-6));
  }
  SUBCASE("campaign counter increments once per characterize call") {
    reset_char_campaign_count();
    characterize(req, direct);
    characterize(req, direct);
    CHECK(char_campaign_count() == 2);
  }
  SUBCASE("parallel workers produce identical tables") {
    CharRequest par = req;
    par.workers = 4;
    CharTable t4 = characterize(par, direct);
    for (size_t i = 0; i < t.delay_rise_s.size(); ++i) {
      CHECK(t4.delay_rise_s[i] == t.delay_rise_s[i]);
      CHECK(t4.energy_per_transition_J[i] == t.energy_per_transition_J[i]);
    }
  }
  SUBCASE("energy at least the switched-cap floor") {
    // Final stage c_out plus the load must be paid for at each transition.
    for (size_t li = 0; li < t.loads_F.size(); ++li) {
      double floor = 0.5 * (st.c_out_F) * 0.8 * 0.8;
      CHECK(t.at(t.energy_per_transition_J, 0, li) > 0.5 * floor);
    }
  }
}

TEST_CASE("bilinear interpolation identities") {
  CharTable t;
  t.slews_s = {1e-12, 2e-12};
  t.loads_F = {1e-15, 3e-15};
  t.delay_rise_s = {10e-12, 20e-12, 30e-12, 40e-12};
  t.delay_fall_s = t.delay_rise_s;
  t.slew_rise_s = {1e-12, 2e-12, 3e-12, 4e-12};
  t.slew_fall_s = t.slew_rise_s;
  t.energy_per_transition_J = {1e-15, 2e-15, 3e-15, 4e-15};
  t.c_in_F = 1e-15;

  SUBCASE("grid nodes are exact") {
    auto r = interpolate(t, 2e-12, 3e-15, true);
    CHECK(r.delay_s == doctest::Approx(40e-12).epsilon(1e-12));
    CHECK(!r.clamped);
  }
  SUBCASE("patch midpoint is the mean of four corners") {
    auto r = interpolate(t, 1.5e-12, 2e-15, true);
    CHECK(r.delay_s == doctest::Approx(25e-12).epsilon(1e-12));
    CHECK(r.energy_J == doctest::Approx(2.5e-15).epsilon(1e-12));
  }
  SUBCASE("outside the hull clamps and flags") {
    auto r = interpolate(t, 5e-12, 10e-15, true);
    CHECK(r.delay_s == doctest::Approx(40e-12).epsilon(1e-12));
    CHECK(r.clamped);
    auto lo = interpolate(t, 1e-13, 1e-16, true);
    CHECK(lo.delay_s == doctest::Approx(10e-12).epsilon(1e-12));
    CHECK(lo.clamped);
  }
  SUBCASE("single-entry load axis degenerates cleanly") {
    CharTable one;
    one.slews_s = {1e-12, 2e-12};
    one.loads_F = {5e-15};
    one.delay_rise_s = {7e-12, 9e-12};
    one.delay_fall_s = one.delay_rise_s;
    one.slew_rise_s = one.delay_rise_s;
    one.slew_fall_s = one.delay_rise_s;
    one.energy_per_transition_J = one.delay_rise_s;
    auto r = interpolate(one, 1.5e-12, 123e-15, true);
    CHECK(r.delay_s == doctest::Approx(8e-12).epsilon(1e-12));
  }
  SUBCASE("empty table throws") {
    CharTable empty;
    CHECK_THROWS_AS(interpolate(empty, 1e-12, 1e-15, true), SolverError);
  }
}
