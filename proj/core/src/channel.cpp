#include "chiplink/channel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace chiplink::channel {

using config::LinkConfig;
using config::PadCapMode;
using config::PkgType;

double pad_cap(double pitch_um, double eps_r, double t_ox_um) {
  if (pitch_um <= 0.0 || eps_r <= 0.0 || t_ox_um <= 0.0)
    throw std::invalid_argument("pad_cap: inputs must be > 0");
  double w_p = um_to_m(0.8 * pitch_um);
  return phys::eps0_F_per_m * eps_r * w_p * w_p / um_to_m(t_ox_um);
}

double ucie_pad_cap(double data_rate_Gbps, bool* clamped) {
  if (data_rate_Gbps <= 0.0) throw std::invalid_argument("ucie_pad_cap: rate must be > 0");
  if (clamped) *clamped = false;
  if (data_rate_Gbps <= 8.0) return 300e-15;
  if (data_rate_Gbps <= 16.0) return 200e-15;
  if (data_rate_Gbps <= 32.0) return 125e-15;
  if (clamped) *clamped = true;  // beyond the spec table; hold the last entry
  return 125e-15;
}

ComponentRC bump_rc(double pitch_um, double diameter_um, double height_um,
                    double eps_r_underfill, double resistivity_ohm_m, double f_ny_Hz) {
  if (pitch_um <= 0.0 || diameter_um <= 0.0 || height_um <= 0.0 || eps_r_underfill <= 0.0 ||
      resistivity_ohm_m <= 0.0 || f_ny_Hz < 0.0)
    throw std::invalid_argument("bump_rc: inputs must be > 0");
  if (diameter_um >= pitch_um)
    throw std::invalid_argument("bump_rc: diameter must be < pitch (acosh domain)");

  double d = um_to_m(diameter_um);
  double h = um_to_m(height_um);
  double p = um_to_m(pitch_um);
  double r = d / 2.0;

  ComponentRC out;
  out.label = RcLabel::bump;
  out.c_F = M_PI * phys::eps0_F_per_m * eps_r_underfill * h / std::acosh(p / d);

  double r_dc = resistivity_ohm_m * h / (M_PI * r * r);
  double r_ac = 0.0;
  if (f_ny_Hz > 0.0) {
    double delta = std::sqrt(resistivity_ohm_m / (M_PI * f_ny_Hz * phys::mu0_H_per_m));
    if (delta < r) {
      double annulus = M_PI * (r * r - (r - delta) * (r - delta));
      r_ac = resistivity_ohm_m * h / annulus;
    }
  }
  out.r_ohm = std::sqrt(r_dc * r_dc + r_ac * r_ac);
  return out;
}

ComponentRC trace_rc(PkgType /*pkg*/, const config::TraceBase& base, double reach_mm,
                     double width_um, double eps_ratio) {
  if (reach_mm <= 0.0 || width_um <= 0.0)
    throw std::invalid_argument("trace_rc: reach and width must be > 0");
  ComponentRC out;
  out.label = RcLabel::trace_seg;
  out.c_F = fF_to_F(base.c_fF_per_mm) * reach_mm * (width_um / base.ref_width_um) * eps_ratio;
  out.r_ohm = base.r_ohm_per_mm * reach_mm * (base.ref_width_um / width_um);
  return out;
}

double esd_table_lookup(double pitch_um, PkgType pkg, const std::vector<config::EsdRow>& table) {
  if (table.empty()) throw std::invalid_argument("esd_table_lookup: empty table");
  const char* want = pkg == PkgType::si ? "si" : "org";
  const config::EsdRow* last_match = nullptr;
  for (const auto& row : table) {
    if (row.pkg != "any" && row.pkg != want) continue;
    last_match = &row;
    if (row.max_pitch_um >= pitch_um) return fF_to_F(row.c_esd_fF);
  }
  // Above the last matching row the last row's value applies.
  if (last_match) return fF_to_F(last_match->c_esd_fF);
  return 0.0;
}

double esd_cap(const LinkConfig& cfg) {
  if (cfg.user.pad_cap_mode == PadCapMode::ucie) return 0.0;
  return esd_table_lookup(cfg.user.bump_pitch_um, cfg.user.pkg_type, cfg.hidden.esd_table);
}

double pad_resistance(double pitch_um, double r_ref_ohm, double ref_width_um) {
  double w_p = 0.8 * pitch_um;
  return r_ref_ohm * (ref_width_um / w_p);
}

double PiLadder::total_series_r_ohm() const {
  double r = 0.0;
  for (const auto& e : edges) r += e.r_ohm;
  return r;
}

double PiLadder::total_shunt_c_F() const {
  double c = 0.0;
  for (const auto& n : nodes) c += n.c_shunt_F + n.c_esd_F;
  return c;
}

double PiLadder::distributed_elmore_s() const {
  // Edges are ordered TX -> RX, so downstream C of edge i is the shunt sum
  // over nodes i+1 .. end.
  double tau = 0.0;
  double downstream = 0.0;
  for (size_t i = nodes.size(); i-- > 1;) {
    downstream += nodes[i].c_shunt_F + nodes[i].c_esd_F;
    tau += edges[i - 1].r_ohm * downstream;
  }
  return tau;
}

double PiLadder::downstream_c_F() const {
  double c = 0.0;
  for (size_t i = 1; i < nodes.size(); ++i) c += nodes[i].c_shunt_F + nodes[i].c_esd_F;
  return c;
}

PiLadder build_ladder(const LinkConfig& cfg) {
  const auto& u = cfg.user;
  const auto& h = cfg.hidden;

  PiLadder lad;
  lad.ucie_mode = u.pad_cap_mode == PadCapMode::ucie;

  double c_pad;
  if (lad.ucie_mode) {
    bool clamped = false;
    c_pad = ucie_pad_cap(u.data_rate_Gbps, &clamped);
    lad.ucie_rate_clamped = clamped;
  } else {
    c_pad = pad_cap(u.bump_pitch_um, h.eps_r_ild, h.t_ox_um);
  }
  double r_pad = pad_resistance(u.bump_pitch_um, h.pad_r_ref_ohm, h.pad_r_ref_width_um);

  lad.chip_pad = {r_pad, c_pad, RcLabel::chip_pad};
  lad.int_pad = {r_pad, c_pad, RcLabel::int_pad};
  lad.bump = bump_rc(u.bump_pitch_um, h.bump_diameter_um, h.bump_height_um, h.eps_r_underfill,
                     h.bump_resistivity_ohm_m, cfg.f_nyquist_Hz());
  lad.trace = trace_rc(u.pkg_type, h.trace_base, u.reach_mm, h.trace_width_um, h.trace_eps_ratio);
  lad.esd = {0.0, esd_cap(cfg), RcLabel::esd};

  double ctr = lad.trace.c_F;
  double rtr4 = lad.trace.r_ohm / 4.0;

  // Node order fixed by the Fig. 2 topology; trace C split: half cells C/8,
  // three internal nodes C/4 each.
  lad.nodes = {
      {"tx_pad", lad.chip_pad.c_F, lad.esd.c_F},
      {"tx_bump", lad.bump.c_F, 0.0},
      {"tx_ipad", lad.int_pad.c_F, 0.0},
      {"tr0", ctr / 8.0, 0.0},
      {"tr1", ctr / 4.0, 0.0},
      {"tr2", ctr / 4.0, 0.0},
      {"tr3", ctr / 4.0, 0.0},
      {"tr4", ctr / 8.0, 0.0},
      {"rx_ipad", lad.int_pad.c_F, 0.0},
      {"rx_bump", lad.bump.c_F, 0.0},
      {"rx_pad", lad.chip_pad.c_F, lad.esd.c_F},
  };
  lad.edges = {
      {0, 1, lad.chip_pad.r_ohm}, {1, 2, lad.bump.r_ohm},  {2, 3, lad.int_pad.r_ohm},
      {3, 4, rtr4},               {4, 5, rtr4},            {5, 6, rtr4},
      {6, 7, rtr4},               {7, 8, lad.int_pad.r_ohm}, {8, 9, lad.bump.r_ohm},
      {9, 10, lad.chip_pad.r_ohm},
  };

  if (u.coupling_enabled) {
    for (int i = 3; i <= 7; ++i)
      lad.coupling.push_back({i, u.cc_ratio_trace * lad.nodes[i].c_shunt_F});
    lad.coupling.push_back({2, u.cc_ratio_pad * lad.nodes[2].c_shunt_F});
    lad.coupling.push_back({8, u.cc_ratio_pad * lad.nodes[8].c_shunt_F});
    lad.coupling.push_back({10, fF_to_F(u.cc_rx_pad_fF)});
  }
  return lad;
}

ChannelSummary summarize(const PiLadder& ladder, double vdd_V, double data_rate_Gbps) {
  ChannelSummary s;
  s.r_ch_ohm = ladder.total_series_r_ohm();
  s.c_ch_F = ladder.total_shunt_c_F();
  s.tau_elmore_s = s.r_ch_ohm * s.c_ch_F;
  // Chiplet pad, bump, and interposer pad count twice (charged and discharged
  // per bit); trace and ESD count once.
  s.c_eff_F = 2.0 * (ladder.chip_pad.c_F + ladder.bump.c_F + ladder.int_pad.c_F) +
              ladder.trace.c_F + ladder.esd.c_F;
  s.e_ch_J_per_bit = 0.5 * s.c_eff_F * vdd_V * vdd_V;
  s.f_3db_Hz = 1.0 / (2.0 * M_PI * s.r_ch_ohm * s.c_ch_F);
  s.f_ny_Hz = gbps_to_bps(data_rate_Gbps) / 2.0;
  double ratio = s.f_ny_Hz / s.f_3db_Hz;
  s.loss_nyquist_dB = 10.0 * std::log10(1.0 + ratio * ratio);
  return s;
}

namespace {
std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6e", v);
  return buf;
}
}  // namespace

std::string emit_netlist(const PiLadder& lad) {
  std::ostringstream os;
  os << "* d2d channel pi-ladder subcircuit\n";
  os << "* series R total " << fmt6(lad.total_series_r_ohm()) << " ohm, shunt C total "
     << fmt6(lad.total_shunt_c_F()) << " F\n";
  os << ".subckt channel tx_pad rx_pad vss\n";
  int r_idx = 1;
  for (const auto& e : lad.edges) {
    os << "R" << r_idx++ << " " << lad.nodes[e.from].name << " " << lad.nodes[e.to].name << " "
       << fmt6(e.r_ohm) << "\n";
  }
  int c_idx = 1;
  for (const auto& n : lad.nodes) {
    os << "C" << c_idx++ << " " << n.name << " vss " << fmt6(n.c_shunt_F) << "\n";
    if (n.c_esd_F > 0.0)
      os << "C" << c_idx++ << " " << n.name << " vss " << fmt6(n.c_esd_F) << " $ esd\n";
  }
  int k_idx = 1;
  for (const auto& cc : lad.coupling) {
    os << "CK" << k_idx++ << " " << lad.nodes[cc.node].name << " " << lad.nodes[cc.node].name
       << "_adj " << fmt6(cc.c_F) << " $ coupling\n";
  }
  os << ".ends channel\n";
  return os.str();
}

}  // namespace chiplink::channel
