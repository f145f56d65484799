#include <cmath>
#include <random>

#include "chiplink/adaptation.hpp"
#include "doctest.h"

using namespace chiplink;
using namespace chiplink::adaptation;

namespace {

config::LinkConfig cfg_at(double reach_mm, double rate_gbps = 8.0, const std::string& extra = "") {
  std::string text = R"({"pkg_type":"org","reach_mm":)" + std::to_string(reach_mm) +
                     R"(,"bump_pitch_um":112.64,"data_rate_Gbps":)" + std::to_string(rate_gbps) +
                     R"(,"lane_count":1)" + extra + "}";
  return config::load_config_text(text).cfg;
}

channel::ChannelSummary summary_of(const config::LinkConfig& cfg) {
  return channel::summarize(channel::build_ladder(cfg), cfg.pdk.vdd_V, cfg.user.data_rate_Gbps);
}

}  // namespace

TEST_CASE("unterminated boundary interpolates in data rate") {
  CHECK(unterminated_reach_mm(cfg_at(1, 8)) == doctest::Approx(25.0));
  CHECK(unterminated_reach_mm(cfg_at(1, 16)) == doctest::Approx(18.0));
  CHECK(unterminated_reach_mm(cfg_at(1, 48)) == doctest::Approx(9.0));
  CHECK(unterminated_reach_mm(cfg_at(1, 12)) == doctest::Approx(21.5));   // midpoint 25..18
  CHECK(unterminated_reach_mm(cfg_at(1, 4)) == doctest::Approx(25.0));    // clamped low
  CHECK(unterminated_reach_mm(cfg_at(1, 64)) == doctest::Approx(9.0));    // clamped high
}

TEST_CASE("graduated termination levels with ties resolving low") {
  struct Row {
    double rho;
    TermLevel level;
    double r_mult;   // r_term = mult * r_rx
    double c_mult;   // c_ac = mult * c_base
  };
  // L_unterm = 25 mm at 8 Gb/s, so reach = rho * 25.
  const Row rows[] = {
      {0.5, TermLevel::none, 0.0, 0.0},     {1.0, TermLevel::none, 0.0, 0.0},
      {1.1, TermLevel::light, 2.0, 0.5},    {1.25, TermLevel::light, 2.0, 0.5},
      {1.4, TermLevel::standard, 1.0, 1.0}, {1.5, TermLevel::standard, 1.0, 1.0},
      {2.0, TermLevel::strong, 0.5, 2.0},
  };
  for (const Row& row : rows) {
    auto cfg = cfg_at(row.rho * 25.0);
    auto plan = select_termination(cfg, summary_of(cfg));
    CAPTURE(row.rho);
    CHECK(plan.rho == doctest::Approx(row.rho));
    CHECK(plan.level == row.level);
    if (row.level == TermLevel::none) {
      CHECK(plan.r_term_ohm == 0.0);
      CHECK(plan.e_term_J_per_bit == 0.0);
    } else {
      CHECK(plan.r_term_ohm == doctest::Approx(row.r_mult * cfg.hidden.r_rx_ohm));
      CHECK(plan.c_ac_F == doctest::Approx(row.c_mult * cfg.hidden.c_base_ac_F));
      CHECK(plan.v_term_V == doctest::Approx(cfg.pdk.vdd_V / 2.0));
      CHECK(plan.e_term_J_per_bit > 0.0);
    }
  }
}

TEST_CASE("termination level is a non-decreasing step function of reach") {
  int prev = -1;
  for (double reach = 1.0; reach <= 60.0; reach += 0.5) {
    auto cfg = cfg_at(reach);
    auto plan = select_termination(cfg, summary_of(cfg));
    int level = static_cast<int>(plan.level);
    CHECK(level >= prev);
    prev = level;
  }
}

TEST_CASE("c_ac is only emitted when ac coupling is enabled") {
  auto cfg = cfg_at(50.0, 8.0, R"(,"ac_coupled":false)");
  auto plan = select_termination(cfg, summary_of(cfg));
  CHECK(plan.level == TermLevel::strong);
  CHECK(plan.c_ac_F == 0.0);
  CHECK(!plan.ac_coupled);
}

TEST_CASE("termination energy increases with level once the pad slew is folded") {
  double prev = 0.0;
  for (double rho : {1.1, 1.4, 2.0}) {
    auto cfg = cfg_at(rho * 25.0);
    auto plan = select_termination(cfg, summary_of(cfg));
    fold_dynamic_term_energy(plan, 20e-12, cfg.hidden.activity_factor, cfg.pdk.vdd_V);
    CHECK(plan.e_term_J_per_bit > prev);
    prev = plan.e_term_J_per_bit;
  }
  auto none_cfg = cfg_at(5.0);
  auto none_plan = select_termination(none_cfg, summary_of(none_cfg));
  fold_dynamic_term_energy(none_plan, 20e-12, 0.5, 0.8);
  CHECK(none_plan.e_term_J_per_bit == 0.0);
}

TEST_CASE("eq level selection from nyquist loss, ties low") {
  auto cfg = cfg_at(10.0);
  auto ladder = channel::build_ladder(cfg);
  channel::ChannelSummary s = summary_of(cfg);

  auto level_for = [&](double loss_db) {
    channel::ChannelSummary fake = s;
    fake.loss_nyquist_dB = loss_db;
    return select_eq(cfg, fake, ladder).level;
  };
  CHECK(level_for(0.5) == EqLevel::none);
  CHECK(level_for(1.0) == EqLevel::none);   // tie resolves low
  CHECK(level_for(1.5) == EqLevel::l1);
  CHECK(level_for(2.0) == EqLevel::l1);
  CHECK(level_for(3.0) == EqLevel::l2);
  CHECK(level_for(3.5) == EqLevel::l2);
  CHECK(level_for(4.0) == EqLevel::l3);
  CHECK(level_for(5.0) == EqLevel::l3);
  CHECK(level_for(5.1) == EqLevel::aggressive);

  SUBCASE("alpha ladder") {
    CHECK(select_eq(cfg, s, ladder).alpha == doctest::Approx(0.0));
    channel::ChannelSummary fake = s;
    fake.loss_nyquist_dB = 10.0;
    CHECK(select_eq(cfg, fake, ladder).alpha == doctest::Approx(0.20));
  }
  SUBCASE("disabled flag forces the none plan") {
    auto off = cfg_at(10.0, 8.0, R"(,"passive_eq_en":false)");
    channel::ChannelSummary fake = s;
    fake.loss_nyquist_dB = 10.0;
    auto plan = select_eq(off, fake, channel::build_ladder(off));
    CHECK(plan.level == EqLevel::none);
    CHECK(plan.alpha == 0.0);
    CHECK(plan.c_eq_F == 0.0);
  }
}

TEST_CASE("eq component sizing places the zero at the channel corner") {
  auto cfg = cfg_at(10.0);
  // Keep the latency cap out of the way for the identity check.
  cfg.hidden.eq_latency_cap_ui = 1e9;
  auto ladder = channel::build_ladder(cfg);

  channel::ChannelSummary fake{};
  fake.r_ch_ohm = 20.0;
  fake.c_ch_F = 2e-12;
  fake.f_3db_Hz = 1.0 / (2.0 * M_PI * fake.r_ch_ohm * fake.c_ch_F);
  fake.loss_nyquist_dB = 2.5;  // level l2, alpha 0.10

  auto plan = select_eq(cfg, fake, ladder);
  CHECK(plan.level == EqLevel::l2);
  CHECK(plan.c_eq_F == doctest::Approx(0.2e-12));
  CHECK(plan.r_eq_ohm == doctest::Approx(200.0));
  CHECK(!plan.capped);
  double f_zero = 1.0 / (2.0 * M_PI * plan.r_eq_ohm * plan.c_eq_F);
  CHECK(f_zero == doctest::Approx(3.9789e9).epsilon(1e-3));
}

TEST_CASE("zero-placement identity holds to 1e-12 for every alpha, uncapped") {
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> r_dist(0.5, 50.0);
  std::uniform_real_distribution<double> c_dist(0.2e-12, 8e-12);
  auto cfg = cfg_at(10.0);
  cfg.hidden.eq_latency_cap_ui = 1e9;
  auto ladder = channel::build_ladder(cfg);

  const double losses[] = {1.5, 2.5, 4.0, 6.0};  // l1..aggressive
  for (int trial = 0; trial < 50; ++trial) {
    channel::ChannelSummary fake{};
    fake.r_ch_ohm = r_dist(rng);
    fake.c_ch_F = c_dist(rng);
    fake.f_3db_Hz = 1.0 / (2.0 * M_PI * fake.r_ch_ohm * fake.c_ch_F);
    fake.loss_nyquist_dB = losses[trial % 4];
    auto plan = select_eq(cfg, fake, ladder);
    REQUIRE(plan.alpha > 0.0);
    REQUIRE(!plan.capped);
    double f_zero = 1.0 / (2.0 * M_PI * plan.r_eq_ohm * plan.c_eq_F);
    CHECK(nearly_equal(f_zero, fake.f_3db_Hz, 1e-12));
  }
}

TEST_CASE("latency cap binds R_eq") {
  auto cfg = cfg_at(10.0, 48.0);
  cfg.hidden.eq_latency_cap_ui = 0.25;
  auto ladder = channel::build_ladder(cfg);

  channel::ChannelSummary fake{};
  fake.r_ch_ohm = 20.0;
  fake.c_ch_F = 2e-12;
  fake.loss_nyquist_dB = 10.0;  // aggressive, alpha 0.2 -> R_eq formula = 100 ohm
  auto plan = select_eq(cfg, fake, ladder);
  double cap = 0.25 * cfg.ui_s() / ladder.downstream_c_F();
  CHECK(plan.capped);
  CHECK(plan.r_eq_ohm == doctest::Approx(cap));
  CHECK(plan.r_eq_ohm < 100.0);

  SUBCASE("cap arithmetic from the worked example") {
    // 0.25 UI at 48 Gb/s over 2 pF downstream: 2.604 ohm
    double ui = 1.0 / 48e9;
    CHECK(0.25 * ui / 2e-12 == doctest::Approx(2.604).epsilon(1e-3));
  }
}
