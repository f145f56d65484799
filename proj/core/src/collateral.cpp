#include "chiplink/collateral.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace chiplink::collateral {

namespace {

std::string fmtf(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

int BumpMap::count(BumpRole role) const {
  int n = 0;
  for (BumpRole r : sites)
    if (r == role) ++n;
  return n;
}

BumpMap parse_bump_map_text(const std::string& text, int lane_count, double pitch_um,
                            const std::string& origin) {
  BumpMap map;
  map.pitch_um = pitch_um;
  std::istringstream iss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(iss, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<BumpRole> row;
    std::string tok;
    while (ls >> tok) {
      BumpRole role;
      if (tok == "tx") role = BumpRole::tx;
      else if (tok == "rx") role = BumpRole::rx;
      else if (tok == "vdd") role = BumpRole::vdd;
      else if (tok == "vss") role = BumpRole::vss;
      else if (tok == "other") role = BumpRole::other;
      else if (tok == ".") role = BumpRole::empty;
      else
        throw ConfigError(origin + ":" + std::to_string(lineno),
                          "unknown bump map token \"" + tok + "\"");
      row.push_back(role);
    }
    if (row.empty()) continue;
    if (map.cols == 0) map.cols = static_cast<int>(row.size());
    if (static_cast<int>(row.size()) != map.cols)
      throw ConfigError(origin + ":" + std::to_string(lineno),
                        "ragged bump map row: expected " + std::to_string(map.cols) +
                            " columns, got " + std::to_string(row.size()));
    map.sites.insert(map.sites.end(), row.begin(), row.end());
    ++map.rows;
  }
  if (map.rows == 0) throw ConfigError(origin, "empty bump map");
  int tx = map.count(BumpRole::tx);
  int rx = map.count(BumpRole::rx);
  if (tx != lane_count)
    throw ConfigError(origin, "bump map tx=" + std::to_string(tx) +
                                  " != lane_count=" + std::to_string(lane_count));
  if (rx != lane_count)
    throw ConfigError(origin, "bump map rx=" + std::to_string(rx) +
                                  " != lane_count=" + std::to_string(lane_count));
  return map;
}

BumpMap parse_bump_map(const std::string& path, int lane_count, double pitch_um) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open bump map file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_bump_map_text(ss.str(), lane_count, pitch_um, path);
}

// ---------------------------------------------------------------------------

std::string write_verilog(const VerilogInput& in) {
  int msb = in.lane_count - 1;
  auto delay_ns = [](double s) {
    double ps = std::round(s * 1e12);  // inertial delays rounded to 1 ps
    return fmtf("%.3f", ps / 1000.0);
  };
  std::ostringstream os;
  os << "`timescale 1ns/1ps\n";
  os << "// behavioral d2d link model, fingerprint " << in.config_fingerprint << "\n";
  os << "\n";
  os << "module txip (\n";
  os << "  input  wire [" << msb << ":0] din,\n";
  os << "  output wire [" << msb << ":0] pad\n";
  os << ");\n";
  for (int i = 0; i < in.lane_count; ++i)
    os << "  assign #(" << delay_ns(in.tx_delay_s) << ") pad[" << i << "] = din[" << i << "];\n";
  os << "endmodule\n";
  os << "\n";
  os << "module rxip (\n";
  os << "  input  wire [" << msb << ":0] pad,\n";
  os << "  output wire [" << msb << ":0] dout\n";
  os << ");\n";
  for (int i = 0; i < in.lane_count; ++i)
    os << "  assign #(" << delay_ns(in.rx_delay_s) << ") dout[" << i << "] = pad[" << i << "];\n";
  os << "endmodule\n";
  return os.str();
}

bool verilog_parses(const std::string& text, std::string* diag) {
  auto fail = [&](const std::string& msg) {
    if (diag) *diag = msg;
    return false;
  };
  int modules = 0, endmodules = 0;
  int parens = 0;
  std::istringstream iss(text);
  std::string line;
  bool in_module = false;
  while (std::getline(iss, line)) {
    size_t c = line.find("//");
    if (c != std::string::npos) line.erase(c);
    for (char ch : line) {
      if (ch == '(') ++parens;
      if (ch == ')') --parens;
      if (parens < 0) return fail("unbalanced parentheses");
    }
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) {
      if (tok == "module") {
        if (in_module) return fail("nested module");
        in_module = true;
        ++modules;
      } else if (tok == "endmodule") {
        if (!in_module) return fail("endmodule without module");
        in_module = false;
        ++endmodules;
      } else if (tok == "assign" && !in_module) {
        return fail("assign outside module");
      }
    }
  }
  if (parens != 0) return fail("unbalanced parentheses");
  if (modules == 0) return fail("no modules");
  if (modules != endmodules) return fail("module/endmodule mismatch");
  return true;
}

// ---------------------------------------------------------------------------

std::string write_lef(const LefInput& in) {
  std::ostringstream os;
  os << "VERSION 5.8 ;\n";
  os << "BUSBITCHARS \"[]\" ;\n";
  os << "DIVIDERCHAR \"/\" ;\n";
  os << "UNITS\n  DATABASE MICRONS 1000 ;\nEND UNITS\n";
  os << "MACRO " << in.macro_name << "\n";
  os << "  CLASS BLOCK ;\n";
  os << "  ORIGIN 0 0 ;\n";
  os << "  FOREIGN " << in.macro_name << " 0 0 ;\n";

  auto pin = [&](const std::string& name, const std::string& dir, const std::string& use,
                 double cx, double cy, double half) {
    os << "  PIN " << name << "\n";
    os << "    DIRECTION " << dir << " ;\n";
    os << "    USE " << use << " ;\n";
    os << "    PORT\n";
    os << "      LAYER " << in.layer_name << " ;\n";
    os << "      RECT " << fmtf("%.3f", cx - half) << " " << fmtf("%.3f", cy - half) << " "
       << fmtf("%.3f", cx + half) << " " << fmtf("%.3f", cy + half) << " ;\n";
    os << "    END\n";
    os << "  END " << name << "\n";
  };

  double half = 0.4 * in.pitch_um;  // square pad geometry, side 0.8 * pitch

  if (in.bump_map) {
    const BumpMap& m = *in.bump_map;
    double w = m.cols * in.pitch_um;
    double h = m.rows * in.pitch_um;
    os << "  SIZE " << fmtf("%.3f", w) << " BY " << fmtf("%.3f", h) << " ;\n";
    os << "  SYMMETRY X Y ;\n";
    int n_tx = 0, n_rx = 0, n_vdd = 0, n_vss = 0, n_other = 0;
    for (int r = 0; r < m.rows; ++r) {
      for (int c = 0; c < m.cols; ++c) {
        BumpRole role = m.at(r, c);
        if (role == BumpRole::empty) continue;
        // First text row sits at the top of the macro.
        double cx = (c + 0.5) * in.pitch_um;
        double cy = (m.rows - 1 - r + 0.5) * in.pitch_um;
        switch (role) {
          case BumpRole::tx:
            pin("TX_" + std::to_string(n_tx++), "OUTPUT", "SIGNAL", cx, cy, half);
            break;
          case BumpRole::rx:
            pin("RX_" + std::to_string(n_rx++), "INPUT", "SIGNAL", cx, cy, half);
            break;
          case BumpRole::vdd:
            pin("VDD_" + std::to_string(n_vdd++), "INOUT", "POWER", cx, cy, half);
            break;
          case BumpRole::vss:
            pin("VSS_" + std::to_string(n_vss++), "INOUT", "GROUND", cx, cy, half);
            break;
          case BumpRole::other:
            pin("OTHER_" + std::to_string(n_other++), "INOUT", "SIGNAL", cx, cy, half);
            break;
          default:
            break;
        }
      }
    }
  } else {
    // Per-lane abstract: one row of TX then RX pins at pitch spacing.
    double w = 2.0 * in.lane_count * in.pitch_um;
    double h = in.pitch_um;
    os << "  SIZE " << fmtf("%.3f", w) << " BY " << fmtf("%.3f", h) << " ;\n";
    os << "  SYMMETRY X Y ;\n";
    for (int i = 0; i < in.lane_count; ++i)
      pin("TX_" + std::to_string(i), "OUTPUT", "SIGNAL", (i + 0.5) * in.pitch_um, 0.5 * h, half);
    for (int i = 0; i < in.lane_count; ++i)
      pin("RX_" + std::to_string(i), "INPUT", "SIGNAL", (in.lane_count + i + 0.5) * in.pitch_um,
          0.5 * h, half);
  }
  os << "END " << in.macro_name << "\n";
  os << "END LIBRARY\n";
  return os.str();
}

LefMacroInfo parse_lef_macro(const std::string& text) {
  LefMacroInfo info;
  std::istringstream iss(text);
  std::string line;
  std::string pending_pin;
  while (std::getline(iss, line)) {
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "SIZE") {
      std::string by;
      ls >> info.w_um >> by >> info.h_um;
    } else if (tok == "PIN") {
      ls >> pending_pin;
    } else if (tok == "RECT" && !pending_pin.empty()) {
      LefPin p;
      p.name = pending_pin;
      ls >> p.x1 >> p.y1 >> p.x2 >> p.y2;
      info.pins.push_back(p);
      pending_pin.clear();
    }
  }
  return info;
}

// ---------------------------------------------------------------------------

std::string write_sdc(const SdcInput& in) {
  std::ostringstream os;
  os << "set_units -time ns -capacitance pF\n";
  os << "# txip: din -> pad, budget = latency budget over the full link\n";
  for (int i = 0; i < in.lane_count; ++i)
    os << "set_max_delay " << fmtf("%.4f", in.budget_s * 1e9) << " -from [get_ports {din[" << i
       << "]}] -to [get_ports {pad[" << i << "]}]\n";
  for (int i = 0; i < in.lane_count; ++i)
    os << "set_load " << fmtf("%.6f", in.pad_load_F * 1e12) << " [get_ports {pad[" << i << "]}]\n";
  os << "# rxip: pad -> dout\n";
  for (int i = 0; i < in.lane_count; ++i)
    os << "set_max_delay " << fmtf("%.4f", in.budget_s * 1e9) << " -from [get_ports {pad[" << i
       << "]}] -to [get_ports {dout[" << i << "]}]\n";
  for (int i = 0; i < in.lane_count; ++i)
    os << "set_input_transition " << fmtf("%.6f", in.rx_input_slew_s * 1e9) << " [get_ports {pad["
       << i << "]}]\n";
  return os.str();
}

// ---------------------------------------------------------------------------

namespace {

bool overridden(const config::LinkConfig& cfg, const std::string& key) {
  for (const auto& k : cfg.overrides)
    if (k == key) return true;
  return false;
}

void kv(std::ostringstream& os, const std::string& key, const std::string& value,
        bool is_override = false) {
  os << "  " << key;
  for (size_t i = key.size(); i < 26; ++i) os << ' ';
  os << value;
  if (is_override) os << "  [override]";
  os << "\n";
}

}  // namespace

std::string write_datasheet(const DatasheetInput& in) {
  const auto& cfg = *in.cfg;
  const auto& u = cfg.user;
  const auto& h = cfg.hidden;
  std::ostringstream os;
  os << "d2d link datasheet\n";
  os << "==================\n";
  os << "fingerprint " << in.fingerprint << "\n";
  os << "\n";
  os << "configuration\n";
  kv(os, "pkg_type", config::to_string(u.pkg_type));
  kv(os, "reach_mm", fmtf("%.3f", u.reach_mm));
  kv(os, "bump_pitch_um", fmtf("%.3f", u.bump_pitch_um));
  kv(os, "data_rate_Gbps", fmtf("%.3f", u.data_rate_Gbps));
  kv(os, "lane_count", std::to_string(u.lane_count));
  kv(os, "pad_cap_mode", config::to_string(u.pad_cap_mode));
  kv(os, "sizing_mode", config::to_string(u.sizing_mode));
  kv(os, "pdk", cfg.pdk.name + " (" + fmtf("%.2f", cfg.pdk.vdd_V) + " V, " + cfg.pdk.corner + ")");
  kv(os, "eps_r_ild", fmtf("%.3f", h.eps_r_ild), overridden(cfg, "channel_hidden/eps_r_ild"));
  kv(os, "t_ox_um", fmtf("%.3f", h.t_ox_um), overridden(cfg, "channel_hidden/t_ox_um"));
  kv(os, "bump_diameter_um", fmtf("%.3f", h.bump_diameter_um),
     overridden(cfg, "channel_hidden/bump_diameter_um"));
  kv(os, "bump_height_um", fmtf("%.3f", h.bump_height_um),
     overridden(cfg, "channel_hidden/bump_height_um"));
  kv(os, "activity_factor", fmtf("%.3f", h.activity_factor),
     overridden(cfg, "power_hidden/activity_factor"));
  if (!cfg.overrides.empty()) {
    os << "  overridden keys:";
    for (const auto& k : cfg.overrides) os << " " << k;
    os << "\n";
  }
  os << "\n";
  os << "channel\n";
  kv(os, "r_ch_ohm", fmtf("%.4f", in.summary->r_ch_ohm));
  kv(os, "c_ch_fF", fmtf("%.2f", in.summary->c_ch_F * 1e15));
  kv(os, "c_eff_fF", fmtf("%.2f", in.summary->c_eff_F * 1e15));
  kv(os, "tau_elmore_ps", fmtf("%.3f", in.summary->tau_elmore_s * 1e12));
  kv(os, "f_3db_GHz", fmtf("%.3f", in.summary->f_3db_Hz * 1e-9));
  kv(os, "loss_nyquist_dB", fmtf("%.3f", in.summary->loss_nyquist_dB));
  kv(os, "e_ch_fJ_per_bit", fmtf("%.2f", in.summary->e_ch_J_per_bit * 1e15));
  os << "\n";
  os << "adaptation\n";
  kv(os, "termination", std::string(adaptation::to_string(in.term->level)) + " (rho " +
                            fmtf("%.3f", in.term->rho) + ", L_unterm " +
                            fmtf("%.1f", in.term->l_unterm_mm) + " mm)");
  if (in.term->terminated()) {
    kv(os, "r_term_ohm", fmtf("%.2f", in.term->r_term_ohm));
    kv(os, "v_term_V", fmtf("%.3f", in.term->v_term_V));
    if (in.term->ac_coupled) kv(os, "c_ac_pF", fmtf("%.3f", in.term->c_ac_F * 1e12));
  }
  kv(os, "eq_level", adaptation::to_string(in.eq->level));
  if (in.eq->enabled()) {
    kv(os, "eq_alpha", fmtf("%.2f", in.eq->alpha));
    kv(os, "c_eq_fF", fmtf("%.2f", in.eq->c_eq_F * 1e15));
    kv(os, "r_eq_ohm", fmtf("%.3f", in.eq->r_eq_ohm) + (in.eq->capped ? "  (latency-capped)" : ""));
  }
  os << "\n";
  os << "selected design (" << in.selection_name << ")\n";
  kv(os, "tx_stages", std::to_string(in.tx->n_stages()));
  {
    std::string w;
    for (size_t i = 0; i < in.tx->stage_widths_um.size(); ++i) {
      if (i) w += " ";
      w += fmtf("%.3f", in.tx->stage_widths_um[i]);
    }
    kv(os, "tx_widths_um", w);
  }
  kv(os, "rx_preamp_um", fmtf("%.3f", in.rx->preamp_width_um));
  kv(os, "rx_buffer_um", fmtf("%.3f", in.rx->buffer_width_um));
  kv(os, "rx_c_in_fF", fmtf("%.3f", in.selected->refined ? in.rx->c_in_F * 1e15
                                                         : in.rx->c_in_F * 1e15));
  kv(os, "tau_rr_ps", fmtf("%.2f", in.selected->tau_rr_s * 1e12));
  kv(os, "tau_ff_ps", fmtf("%.2f", in.selected->tau_ff_s * 1e12));
  kv(os, "tau_wc_ps", fmtf("%.2f", in.selected->tau_wc_s * 1e12));
  kv(os, "feasible", in.selected->feasible ? "yes" : "no");
  kv(os, "refined", in.selected->refined ? "yes" : "no");
  if (in.selected->refined)
    kv(os, "refine_shift_pct", fmtf("%.2f", in.selected->refine_energy_shift * 100.0));
  os << "\n";
  os << "energy per bit\n";
  kv(os, "e_tx_fJ", fmtf("%.3f", in.selected->e_tx_J * 1e15));
  kv(os, "e_rx_fJ", fmtf("%.3f", in.selected->e_rx_J * 1e15));
  kv(os, "e_ch_fJ", fmtf("%.3f", in.selected->e_ch_J * 1e15));
  kv(os, "e_term_fJ", fmtf("%.3f", in.selected->e_term_J * 1e15));
  kv(os, "e_total_pJ", fmtf("%.6f", in.selected->e_total_J_per_bit * 1e12));
  kv(os, "aggregate_mW",
     fmtf("%.4f", in.selected->e_total_J_per_bit * gbps_to_bps(u.data_rate_Gbps) *
                      u.lane_count * 1e3));
  os << "\n";
  os << "area\n";
  kv(os, "active_um2", fmtf("%.3f", in.area->active_um2));
  kv(os, "eq_passives_um2", fmtf("%.3f", in.area->eq_passives_um2));
  kv(os, "term_um2", fmtf("%.3f", in.area->term_um2));
  kv(os, "esd_um2", fmtf("%.3f", in.area->esd_um2));
  kv(os, "bump_ubm_um2", fmtf("%.3f", in.area->bump_ubm_um2));
  kv(os, "per_lane_um2", fmtf("%.3f", in.area->per_lane_um2));
  if (in.area->macro_w_um > 0.0) {
    kv(os, "macro_w_um", fmtf("%.2f", in.area->macro_w_um));
    kv(os, "macro_h_um", fmtf("%.2f", in.area->macro_h_um));
  }
  if (!in.warnings.empty()) {
    os << "\n";
    os << "warnings\n";
    for (const auto& w : in.warnings) os << "  [" << w.code << "] " << w.message << "\n";
  }
  return os.str();
}

std::string metrics_csv_header() {
  return "pkg,reach_mm,pitch_um,rate_Gbps,lanes,term_level,eq_level,alpha,e_tx_fJ,e_rx_fJ,"
         "e_ch_fJ,e_term_fJ,e_total_pJ_per_bit,tau_wc_ps,feasible,n_stages,area_um2_per_lane,"
         "macro_w_um,macro_h_um,selection\n";
}

std::string metrics_csv_row(const DatasheetInput& in) {
  const auto& u = in.cfg->user;
  std::ostringstream os;
  os << config::to_string(u.pkg_type) << ',' << fmtf("%.3f", u.reach_mm) << ','
     << fmtf("%.3f", u.bump_pitch_um) << ',' << fmtf("%.3f", u.data_rate_Gbps) << ','
     << u.lane_count << ',' << adaptation::to_string(in.term->level) << ','
     << adaptation::to_string(in.eq->level) << ',' << fmtf("%.2f", in.eq->alpha) << ','
     << fmtf("%.4f", in.selected->e_tx_J * 1e15) << ',' << fmtf("%.4f", in.selected->e_rx_J * 1e15)
     << ',' << fmtf("%.4f", in.selected->e_ch_J * 1e15) << ','
     << fmtf("%.4f", in.selected->e_term_J * 1e15) << ','
     << fmtf("%.6f", in.selected->e_total_J_per_bit * 1e12) << ','
     << fmtf("%.3f", in.selected->tau_wc_s * 1e12) << ',' << (in.selected->feasible ? 1 : 0) << ','
     << in.tx->n_stages() << ',' << fmtf("%.3f", in.area->per_lane_um2) << ','
     << fmtf("%.2f", in.area->macro_w_um) << ',' << fmtf("%.2f", in.area->macro_h_um) << ','
     << in.selection_name << '\n';
  return os.str();
}

std::string frontier_csv(const coopt::ParetoFront& front, const coopt::Grid& grid) {
  std::ostringstream os;
  os << "tx_idx,rx_idx,e_total_pJ,tau_wc_ps,feasible,refined,stage_count,widths\n";
  for (const auto& p : front.points) {
    const auto& tx = grid.tx_designs[p.tx_index];
    std::string widths;
    for (size_t i = 0; i < tx.stage_widths_um.size(); ++i) {
      if (i) widths += ";";
      widths += fmtf("%.3f", tx.stage_widths_um[i]);
    }
    os << p.tx_index << ',' << p.rx_index << ',' << fmtf("%.6f", p.e_total_J_per_bit * 1e12) << ','
       << fmtf("%.3f", p.tau_wc_s * 1e12) << ',' << (p.feasible ? 1 : 0) << ','
       << (p.refined ? 1 : 0) << ',' << tx.n_stages() << ',' << widths << '\n';
  }
  return os.str();
}

}  // namespace chiplink::collateral
