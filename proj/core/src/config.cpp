#include "chiplink/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace chiplink::config {

using nlohmann::json;

const char* to_string(PkgType v) { return v == PkgType::si ? "si" : "org"; }
const char* to_string(PadCapMode v) { return v == PadCapMode::phys ? "phys" : "ucie"; }
const char* to_string(SizingMode v) {
  switch (v) {
    case SizingMode::manual: return "manual";
    case SizingMode::tx_sizing: return "tx_sizing";
    case SizingMode::rx_sizing: return "rx_sizing";
    case SizingMode::co_opt: return "co_opt";
  }
  return "?";
}
const char* to_string(ParetoSelection v) {
  switch (v) {
    case ParetoSelection::balanced: return "balanced";
    case ParetoSelection::best_power: return "best_power";
    case ParetoSelection::best_delay: return "best_delay";
    case ParetoSelection::all: return "all";
  }
  return "?";
}
const char* to_string(RxSlewSource v) { return v == RxSlewSource::tx_pad ? "tx_pad" : "channel"; }

namespace {

[[noreturn]] void fail(const std::string& pointer, const std::string& msg) {
  throw ConfigError(pointer, msg);
}

double get_num(const json& j, const std::string& ptr) {
  if (!j.is_number()) fail(ptr, "expected a number");
  return j.get<double>();
}

double get_pos(const json& j, const std::string& ptr) {
  double v = get_num(j, ptr);
  if (!(v > 0.0)) fail(ptr, "must be > 0");
  return v;
}

double get_nonneg(const json& j, const std::string& ptr) {
  double v = get_num(j, ptr);
  if (!(v >= 0.0)) fail(ptr, "must be >= 0");
  return v;
}

double get_unit_interval(const json& j, const std::string& ptr, bool zero_ok) {
  double v = get_num(j, ptr);
  if (zero_ok ? (v < 0.0 || v > 1.0) : (v <= 0.0 || v > 1.0))
    fail(ptr, zero_ok ? "must be in [0,1]" : "must be in (0,1]");
  return v;
}

int get_pos_int(const json& j, const std::string& ptr) {
  if (!j.is_number_integer()) fail(ptr, "expected a positive integer");
  auto v = j.get<long long>();
  if (v <= 0) fail(ptr, "must be a positive integer");
  return static_cast<int>(v);
}

bool get_bool(const json& j, const std::string& ptr) {
  if (!j.is_boolean()) fail(ptr, "expected a boolean");
  return j.get<bool>();
}

std::string get_str(const json& j, const std::string& ptr) {
  if (!j.is_string()) fail(ptr, "expected a string");
  return j.get<std::string>();
}

template <typename Enum>
Enum get_enum(const json& j, const std::string& ptr,
              const std::vector<std::pair<std::string, Enum>>& values) {
  std::string s = get_str(j, ptr);
  for (const auto& [name, v] : values)
    if (s == name) return v;
  std::string allowed;
  for (const auto& [name, v] : values) allowed += (allowed.empty() ? "" : "|") + name;
  fail(ptr, "must be one of {" + allowed + "}, got \"" + s + "\"");
}

void reject_unknown(const json& obj, const std::string& prefix, const std::set<std::string>& known) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!known.count(it.key())) fail(prefix + "/" + it.key(), "unknown key");
  }
}

const std::set<std::string> kUserKeys = {
    "pkg_type", "reach_mm", "bump_pitch_um", "data_rate_Gbps", "lane_count",
    "passive_eq_en", "ac_coupled", "pad_cap_mode", "sizing_mode", "pareto_selection",
    "coupling_enabled", "cc_ratio_trace", "cc_ratio_pad", "cc_rx_pad_fF",
    "bump_map_path", "save_netlists", "save_lib", "save_metrics_csv",
    "generate_verilog", "generate_lef", "n_tx_configs", "n_rx_configs",
    "max_parallel", "rise_fall_pct_ui", "max_rx_delay_frac_ui",
    "input_slews_ns_override", "rx_slew_source", "tx_stage_widths_um",
    "rx_preamp_width_um", "rx_buffer_width_um",
    "pdk", "pdk_path", "sweep",
    "channel_hidden", "adaptation_hidden", "power_hidden", "area_hidden", "sim_hidden"};

const std::set<std::string> kChannelHiddenKeys = {
    "eps_r_ild", "t_ox_um", "eps_r_underfill", "bump_resistivity_ohm_m",
    "bump_diameter_um", "bump_height_um", "trace_base", "trace_width_um",
    "trace_eps_ratio", "esd_table", "pad_r_ref_ohm", "pad_r_ref_width_um"};

const std::set<std::string> kAdaptHiddenKeys = {
    "unterm_boundary", "c_base_ac_F", "eq_loss_thresholds_dB", "eq_latency_cap_ui",
    "r_bias_ohm", "r_rx_ohm"};

const std::set<std::string> kPowerHiddenKeys = {
    "activity_factor", "sc_fraction", "latency_budget_ui", "tx_input_slew_ui"};

const std::set<std::string> kAreaHiddenKeys = {
    "layout_margin", "r_sheet_poly_ohm_sq", "r_sheet_hires_ohm_sq", "strip_width_um",
    "mim_fF_per_um2", "esd_fF_per_um2", "ubm_overhang_um"};

const std::set<std::string> kSimHiddenKeys = {
    "time_step_scale", "rx_core_load_fF", "settle_tau_factor", "max_steps",
    "char_slew_count", "char_load_count"};

const std::set<std::string> kPdkKeys = {
    "name", "vdd_V", "device_type", "l_gate_um", "w_min_um", "w_max_um",
    "fin_w0_um", "fin_pitch_contrib_um", "unit_inv", "corner"};

const std::set<std::string> kUnitInvKeys = {"c_in_fF", "r_on_n_ohm", "r_on_p_ohm", "c_out_fF"};

const std::set<std::string> kSweepKeys = {
    "pkg_types", "reaches_mm", "bump_pitches_um", "data_rates_Gbps"};

// Package-dependent hidden defaults. Trace bases follow published per-mm
// parasitics; t_ox values are calibrated against the shipped pad-energy
// targets (see tests/acceptance.cpp).
void apply_pkg_defaults(HiddenConfig& h, PkgType pkg) {
  h.eps_r_ild = 3.9;
  if (pkg == PkgType::org) {
    h.t_ox_um = 1.42;
    h.bump_height_um = 50.0;
    h.trace_base = {138.0, 0.036, 30.0};
  } else {
    h.t_ox_um = 0.99;
    h.bump_height_um = 15.0;
    h.trace_base = {185.0, 1.04, 3.0};
  }
  h.esd_table = {{25.0, "si", 40.0}, {55.0, "any", 80.0}, {130.0, "org", 150.0}};
  h.unterm_boundary = {{8.0, 25.0}, {16.0, 18.0}, {32.0, 12.0}, {48.0, 9.0}};
}

void parse_unit_inv(const json& j, const std::string& ptr, UnitInverter& u) {
  if (!j.is_object()) fail(ptr, "expected an object");
  reject_unknown(j, ptr, kUnitInvKeys);
  for (const auto& key : kUnitInvKeys)
    if (!j.contains(key)) fail(ptr + "/" + key, "missing required key");
  u.c_in_fF = get_pos(j.at("c_in_fF"), ptr + "/c_in_fF");
  u.r_on_n_ohm = get_pos(j.at("r_on_n_ohm"), ptr + "/r_on_n_ohm");
  u.r_on_p_ohm = get_pos(j.at("r_on_p_ohm"), ptr + "/r_on_p_ohm");
  u.c_out_fF = get_pos(j.at("c_out_fF"), ptr + "/c_out_fF");
}

PdkDescriptor parse_pdk(const json& j, const std::string& ptr) {
  if (!j.is_object()) fail(ptr, "expected an object or builtin name");
  reject_unknown(j, ptr, kPdkKeys);
  PdkDescriptor p;
  p.name = j.contains("name") ? get_str(j.at("name"), ptr + "/name") : "custom";
  if (!j.contains("vdd_V")) fail(ptr + "/vdd_V", "missing required key");
  p.vdd_V = get_pos(j.at("vdd_V"), ptr + "/vdd_V");
  if (!j.contains("device_type")) fail(ptr + "/device_type", "missing required key");
  p.device_type = get_enum<DeviceType>(j.at("device_type"), ptr + "/device_type",
                                       {{"planar", DeviceType::planar}, {"finfet", DeviceType::finfet}});
  if (!j.contains("l_gate_um")) fail(ptr + "/l_gate_um", "missing required key");
  p.l_gate_um = get_pos(j.at("l_gate_um"), ptr + "/l_gate_um");
  if (!j.contains("w_min_um")) fail(ptr + "/w_min_um", "missing required key");
  p.w_min_um = get_pos(j.at("w_min_um"), ptr + "/w_min_um");
  if (!j.contains("w_max_um")) fail(ptr + "/w_max_um", "missing required key");
  p.w_max_um = get_pos(j.at("w_max_um"), ptr + "/w_max_um");
  if (p.w_min_um > p.w_max_um) fail(ptr + "/w_min_um", "w_min_um must be <= w_max_um");
  if (p.device_type == DeviceType::finfet) {
    if (!j.contains("fin_w0_um")) fail(ptr + "/fin_w0_um", "finfet descriptor must define fin constants");
    if (!j.contains("fin_pitch_contrib_um"))
      fail(ptr + "/fin_pitch_contrib_um", "finfet descriptor must define fin constants");
    p.fin_w0_um = get_pos(j.at("fin_w0_um"), ptr + "/fin_w0_um");
    p.fin_pitch_contrib_um = get_pos(j.at("fin_pitch_contrib_um"), ptr + "/fin_pitch_contrib_um");
  } else {
    if (j.contains("fin_w0_um") || j.contains("fin_pitch_contrib_um"))
      fail(ptr, "planar descriptor must omit fin constants");
  }
  if (!j.contains("unit_inv")) fail(ptr + "/unit_inv", "missing required key");
  parse_unit_inv(j.at("unit_inv"), ptr + "/unit_inv", p.unit_inv);
  p.corner = j.contains("corner") ? get_str(j.at("corner"), ptr + "/corner") : "tt";
  return p;
}

void parse_channel_hidden(const json& j, LinkConfig& cfg) {
  const std::string pre = "/channel_hidden";
  reject_unknown(j, pre, kChannelHiddenKeys);
  HiddenConfig& h = cfg.hidden;
  auto mark = [&](const char* k) { cfg.overrides.push_back("channel_hidden/" + std::string(k)); };
  if (j.contains("eps_r_ild")) {
    h.eps_r_ild = get_num(j.at("eps_r_ild"), pre + "/eps_r_ild");
    if (h.eps_r_ild < 1.0) fail(pre + "/eps_r_ild", "permittivity must be >= 1");
    mark("eps_r_ild");
  }
  if (j.contains("t_ox_um")) { h.t_ox_um = get_pos(j.at("t_ox_um"), pre + "/t_ox_um"); mark("t_ox_um"); }
  if (j.contains("eps_r_underfill")) {
    h.eps_r_underfill = get_num(j.at("eps_r_underfill"), pre + "/eps_r_underfill");
    if (h.eps_r_underfill < 1.0) fail(pre + "/eps_r_underfill", "permittivity must be >= 1");
    mark("eps_r_underfill");
  }
  if (j.contains("bump_resistivity_ohm_m")) {
    h.bump_resistivity_ohm_m = get_pos(j.at("bump_resistivity_ohm_m"), pre + "/bump_resistivity_ohm_m");
    mark("bump_resistivity_ohm_m");
  }
  if (j.contains("bump_diameter_um")) {
    h.bump_diameter_um = get_pos(j.at("bump_diameter_um"), pre + "/bump_diameter_um");
    mark("bump_diameter_um");
  }
  if (j.contains("bump_height_um")) {
    h.bump_height_um = get_pos(j.at("bump_height_um"), pre + "/bump_height_um");
    mark("bump_height_um");
  }
  if (j.contains("trace_base")) {
    const json& tb = j.at("trace_base");
    if (!tb.is_object()) fail(pre + "/trace_base", "expected an object");
    reject_unknown(tb, pre + "/trace_base", {"c_fF_per_mm", "r_ohm_per_mm", "ref_width_um"});
    if (tb.contains("c_fF_per_mm"))
      h.trace_base.c_fF_per_mm = get_pos(tb.at("c_fF_per_mm"), pre + "/trace_base/c_fF_per_mm");
    if (tb.contains("r_ohm_per_mm"))
      h.trace_base.r_ohm_per_mm = get_pos(tb.at("r_ohm_per_mm"), pre + "/trace_base/r_ohm_per_mm");
    if (tb.contains("ref_width_um"))
      h.trace_base.ref_width_um = get_pos(tb.at("ref_width_um"), pre + "/trace_base/ref_width_um");
    mark("trace_base");
  }
  if (j.contains("trace_width_um")) {
    h.trace_width_um = get_pos(j.at("trace_width_um"), pre + "/trace_width_um");
    mark("trace_width_um");
  }
  if (j.contains("trace_eps_ratio")) {
    h.trace_eps_ratio = get_pos(j.at("trace_eps_ratio"), pre + "/trace_eps_ratio");
    mark("trace_eps_ratio");
  }
  if (j.contains("esd_table")) {
    const json& t = j.at("esd_table");
    if (!t.is_array() || t.empty()) fail(pre + "/esd_table", "expected a non-empty array");
    std::vector<EsdRow> rows;
    for (size_t i = 0; i < t.size(); ++i) {
      const std::string rp = pre + "/esd_table/" + std::to_string(i);
      const json& r = t.at(i);
      if (!r.is_array() || r.size() != 3) fail(rp, "expected [max_pitch_um, pkg, c_esd_fF]");
      EsdRow row;
      row.max_pitch_um = get_pos(r.at(0), rp + "/0");
      row.pkg = get_str(r.at(1), rp + "/1");
      if (row.pkg != "si" && row.pkg != "org" && row.pkg != "any")
        fail(rp + "/1", "pkg must be si|org|any");
      row.c_esd_fF = get_nonneg(r.at(2), rp + "/2");
      rows.push_back(row);
    }
    for (size_t i = 1; i < rows.size(); ++i)
      if (rows[i].max_pitch_um < rows[i - 1].max_pitch_um)
        fail(pre + "/esd_table", "rows must be sorted ascending by max_pitch_um");
    h.esd_table = rows;
    mark("esd_table");
  }
  if (j.contains("pad_r_ref_ohm")) {
    h.pad_r_ref_ohm = get_pos(j.at("pad_r_ref_ohm"), pre + "/pad_r_ref_ohm");
    mark("pad_r_ref_ohm");
  }
  if (j.contains("pad_r_ref_width_um")) {
    h.pad_r_ref_width_um = get_pos(j.at("pad_r_ref_width_um"), pre + "/pad_r_ref_width_um");
    mark("pad_r_ref_width_um");
  }
}

void parse_adaptation_hidden(const json& j, LinkConfig& cfg) {
  const std::string pre = "/adaptation_hidden";
  reject_unknown(j, pre, kAdaptHiddenKeys);
  HiddenConfig& h = cfg.hidden;
  auto mark = [&](const char* k) { cfg.overrides.push_back("adaptation_hidden/" + std::string(k)); };
  if (j.contains("unterm_boundary")) {
    const json& t = j.at("unterm_boundary");
    if (!t.is_array() || t.empty()) fail(pre + "/unterm_boundary", "expected a non-empty array");
    std::vector<UntermRow> rows;
    for (size_t i = 0; i < t.size(); ++i) {
      const std::string rp = pre + "/unterm_boundary/" + std::to_string(i);
      const json& r = t.at(i);
      if (!r.is_array() || r.size() != 2) fail(rp, "expected [data_rate_Gbps, l_unterm_mm]");
      rows.push_back({get_pos(r.at(0), rp + "/0"), get_pos(r.at(1), rp + "/1")});
    }
    for (size_t i = 1; i < rows.size(); ++i)
      if (rows[i].data_rate_Gbps <= rows[i - 1].data_rate_Gbps)
        fail(pre + "/unterm_boundary", "rows must be sorted ascending by data rate");
    h.unterm_boundary = rows;
    mark("unterm_boundary");
  }
  if (j.contains("c_base_ac_F")) { h.c_base_ac_F = get_pos(j.at("c_base_ac_F"), pre + "/c_base_ac_F"); mark("c_base_ac_F"); }
  if (j.contains("eq_loss_thresholds_dB")) {
    const json& t = j.at("eq_loss_thresholds_dB");
    if (!t.is_array() || t.size() != 4) fail(pre + "/eq_loss_thresholds_dB", "expected 4 ascending thresholds");
    std::vector<double> v;
    for (size_t i = 0; i < 4; ++i)
      v.push_back(get_pos(t.at(i), pre + "/eq_loss_thresholds_dB/" + std::to_string(i)));
    if (!std::is_sorted(v.begin(), v.end()))
      fail(pre + "/eq_loss_thresholds_dB", "thresholds must ascend");
    h.eq_loss_thresholds_dB = v;
    mark("eq_loss_thresholds_dB");
  }
  if (j.contains("eq_latency_cap_ui")) { h.eq_latency_cap_ui = get_pos(j.at("eq_latency_cap_ui"), pre + "/eq_latency_cap_ui"); mark("eq_latency_cap_ui"); }
  if (j.contains("r_bias_ohm")) { h.r_bias_ohm = get_pos(j.at("r_bias_ohm"), pre + "/r_bias_ohm"); mark("r_bias_ohm"); }
  if (j.contains("r_rx_ohm")) { h.r_rx_ohm = get_pos(j.at("r_rx_ohm"), pre + "/r_rx_ohm"); mark("r_rx_ohm"); }
}

void parse_power_hidden(const json& j, LinkConfig& cfg) {
  const std::string pre = "/power_hidden";
  reject_unknown(j, pre, kPowerHiddenKeys);
  HiddenConfig& h = cfg.hidden;
  auto mark = [&](const char* k) { cfg.overrides.push_back("power_hidden/" + std::string(k)); };
  if (j.contains("activity_factor")) {
    h.activity_factor = get_unit_interval(j.at("activity_factor"), pre + "/activity_factor", false);
    mark("activity_factor");
  }
  if (j.contains("sc_fraction")) { h.sc_fraction = get_nonneg(j.at("sc_fraction"), pre + "/sc_fraction"); mark("sc_fraction"); }
  if (j.contains("latency_budget_ui")) { h.latency_budget_ui = get_pos(j.at("latency_budget_ui"), pre + "/latency_budget_ui"); mark("latency_budget_ui"); }
  if (j.contains("tx_input_slew_ui")) { h.tx_input_slew_ui = get_pos(j.at("tx_input_slew_ui"), pre + "/tx_input_slew_ui"); mark("tx_input_slew_ui"); }
}

void parse_area_hidden(const json& j, LinkConfig& cfg) {
  const std::string pre = "/area_hidden";
  reject_unknown(j, pre, kAreaHiddenKeys);
  HiddenConfig& h = cfg.hidden;
  auto mark = [&](const char* k) { cfg.overrides.push_back("area_hidden/" + std::string(k)); };
  if (j.contains("layout_margin")) { h.layout_margin = get_pos(j.at("layout_margin"), pre + "/layout_margin"); mark("layout_margin"); }
  if (j.contains("r_sheet_poly_ohm_sq")) { h.r_sheet_poly_ohm_sq = get_pos(j.at("r_sheet_poly_ohm_sq"), pre + "/r_sheet_poly_ohm_sq"); mark("r_sheet_poly_ohm_sq"); }
  if (j.contains("r_sheet_hires_ohm_sq")) { h.r_sheet_hires_ohm_sq = get_pos(j.at("r_sheet_hires_ohm_sq"), pre + "/r_sheet_hires_ohm_sq"); mark("r_sheet_hires_ohm_sq"); }
  if (j.contains("strip_width_um")) { h.strip_width_um = get_pos(j.at("strip_width_um"), pre + "/strip_width_um"); mark("strip_width_um"); }
  if (j.contains("mim_fF_per_um2")) { h.mim_fF_per_um2 = get_pos(j.at("mim_fF_per_um2"), pre + "/mim_fF_per_um2"); mark("mim_fF_per_um2"); }
  if (j.contains("esd_fF_per_um2")) { h.esd_fF_per_um2 = get_pos(j.at("esd_fF_per_um2"), pre + "/esd_fF_per_um2"); mark("esd_fF_per_um2"); }
  if (j.contains("ubm_overhang_um")) { h.ubm_overhang_um = get_nonneg(j.at("ubm_overhang_um"), pre + "/ubm_overhang_um"); mark("ubm_overhang_um"); }
}

void parse_sim_hidden(const json& j, LinkConfig& cfg) {
  const std::string pre = "/sim_hidden";
  reject_unknown(j, pre, kSimHiddenKeys);
  HiddenConfig& h = cfg.hidden;
  auto mark = [&](const char* k) { cfg.overrides.push_back("sim_hidden/" + std::string(k)); };
  if (j.contains("time_step_scale")) { h.time_step_scale = get_pos(j.at("time_step_scale"), pre + "/time_step_scale"); mark("time_step_scale"); }
  if (j.contains("rx_core_load_fF")) { h.rx_core_load_fF = get_pos(j.at("rx_core_load_fF"), pre + "/rx_core_load_fF"); mark("rx_core_load_fF"); }
  if (j.contains("settle_tau_factor")) { h.settle_tau_factor = get_pos(j.at("settle_tau_factor"), pre + "/settle_tau_factor"); mark("settle_tau_factor"); }
  if (j.contains("max_steps")) { h.max_steps = get_pos_int(j.at("max_steps"), pre + "/max_steps"); mark("max_steps"); }
  if (j.contains("char_slew_count")) { h.char_slew_count = get_pos_int(j.at("char_slew_count"), pre + "/char_slew_count"); mark("char_slew_count"); }
  if (j.contains("char_load_count")) { h.char_load_count = get_pos_int(j.at("char_load_count"), pre + "/char_load_count"); mark("char_load_count"); }
}

LinkConfig parse_link(const json& root, const std::string& origin) {
  if (!root.is_object()) fail("", "top level must be a JSON object (" + origin + ")");
  reject_unknown(root, "", kUserKeys);

  LinkConfig cfg;
  UserConfig& u = cfg.user;

  for (const char* req : {"pkg_type", "reach_mm", "bump_pitch_um", "data_rate_Gbps", "lane_count"})
    if (!root.contains(req)) fail(std::string("/") + req, "missing required key");

  u.pkg_type = get_enum<PkgType>(root.at("pkg_type"), "/pkg_type",
                                 {{"si", PkgType::si}, {"org", PkgType::org}});
  u.reach_mm = get_pos(root.at("reach_mm"), "/reach_mm");
  u.bump_pitch_um = get_pos(root.at("bump_pitch_um"), "/bump_pitch_um");
  u.data_rate_Gbps = get_pos(root.at("data_rate_Gbps"), "/data_rate_Gbps");
  u.lane_count = get_pos_int(root.at("lane_count"), "/lane_count");

  if (root.contains("passive_eq_en")) u.passive_eq_en = get_bool(root.at("passive_eq_en"), "/passive_eq_en");
  if (root.contains("ac_coupled")) u.ac_coupled = get_bool(root.at("ac_coupled"), "/ac_coupled");
  if (root.contains("pad_cap_mode"))
    u.pad_cap_mode = get_enum<PadCapMode>(root.at("pad_cap_mode"), "/pad_cap_mode",
                                          {{"phys", PadCapMode::phys}, {"ucie", PadCapMode::ucie}});
  if (root.contains("sizing_mode"))
    u.sizing_mode = get_enum<SizingMode>(root.at("sizing_mode"), "/sizing_mode",
                                         {{"manual", SizingMode::manual},
                                          {"tx_sizing", SizingMode::tx_sizing},
                                          {"rx_sizing", SizingMode::rx_sizing},
                                          {"co_opt", SizingMode::co_opt}});
  if (root.contains("pareto_selection"))
    u.pareto_selection = get_enum<ParetoSelection>(root.at("pareto_selection"), "/pareto_selection",
                                                   {{"balanced", ParetoSelection::balanced},
                                                    {"best_power", ParetoSelection::best_power},
                                                    {"best_delay", ParetoSelection::best_delay},
                                                    {"all", ParetoSelection::all}});
  if (root.contains("coupling_enabled")) u.coupling_enabled = get_bool(root.at("coupling_enabled"), "/coupling_enabled");
  if (root.contains("cc_ratio_trace")) u.cc_ratio_trace = get_unit_interval(root.at("cc_ratio_trace"), "/cc_ratio_trace", true);
  if (root.contains("cc_ratio_pad")) u.cc_ratio_pad = get_unit_interval(root.at("cc_ratio_pad"), "/cc_ratio_pad", true);
  if (root.contains("cc_rx_pad_fF")) u.cc_rx_pad_fF = get_nonneg(root.at("cc_rx_pad_fF"), "/cc_rx_pad_fF");
  if (root.contains("bump_map_path")) u.bump_map_path = get_str(root.at("bump_map_path"), "/bump_map_path");
  if (root.contains("save_netlists")) u.save_netlists = get_bool(root.at("save_netlists"), "/save_netlists");
  if (root.contains("save_lib")) u.save_lib = get_bool(root.at("save_lib"), "/save_lib");
  if (root.contains("save_metrics_csv")) u.save_metrics_csv = get_bool(root.at("save_metrics_csv"), "/save_metrics_csv");
  if (root.contains("generate_verilog")) u.generate_verilog = get_bool(root.at("generate_verilog"), "/generate_verilog");
  if (root.contains("generate_lef")) u.generate_lef = get_bool(root.at("generate_lef"), "/generate_lef");
  if (root.contains("n_tx_configs")) u.n_tx_configs = get_pos_int(root.at("n_tx_configs"), "/n_tx_configs");
  if (root.contains("n_rx_configs")) u.n_rx_configs = get_pos_int(root.at("n_rx_configs"), "/n_rx_configs");
  if (root.contains("max_parallel")) u.max_parallel = get_pos_int(root.at("max_parallel"), "/max_parallel");
  if (root.contains("rise_fall_pct_ui")) u.rise_fall_pct_ui = get_unit_interval(root.at("rise_fall_pct_ui"), "/rise_fall_pct_ui", false);
  if (root.contains("max_rx_delay_frac_ui")) u.max_rx_delay_frac_ui = get_unit_interval(root.at("max_rx_delay_frac_ui"), "/max_rx_delay_frac_ui", false);
  if (root.contains("input_slews_ns_override")) {
    const json& t = root.at("input_slews_ns_override");
    if (!t.is_array() || t.empty()) fail("/input_slews_ns_override", "expected a non-empty array");
    for (size_t i = 0; i < t.size(); ++i)
      u.input_slews_ns_override.push_back(get_pos(t.at(i), "/input_slews_ns_override/" + std::to_string(i)));
    if (!std::is_sorted(u.input_slews_ns_override.begin(), u.input_slews_ns_override.end()))
      fail("/input_slews_ns_override", "slews must ascend");
  }
  if (root.contains("rx_slew_source"))
    u.rx_slew_source = get_enum<RxSlewSource>(root.at("rx_slew_source"), "/rx_slew_source",
                                              {{"tx_pad", RxSlewSource::tx_pad}, {"channel", RxSlewSource::channel}});
  if (root.contains("tx_stage_widths_um")) {
    const json& t = root.at("tx_stage_widths_um");
    if (!t.is_array()) fail("/tx_stage_widths_um", "expected an array");
    for (size_t i = 0; i < t.size(); ++i)
      u.tx_stage_widths_um.push_back(get_pos(t.at(i), "/tx_stage_widths_um/" + std::to_string(i)));
  }
  if (root.contains("rx_preamp_width_um")) u.rx_preamp_width_um = get_pos(root.at("rx_preamp_width_um"), "/rx_preamp_width_um");
  if (root.contains("rx_buffer_width_um")) u.rx_buffer_width_um = get_pos(root.at("rx_buffer_width_um"), "/rx_buffer_width_um");

  if (u.sizing_mode == SizingMode::manual) {
    if (u.tx_stage_widths_um.empty())
      fail("/tx_stage_widths_um", "sizing_mode=manual requires explicit TX stage widths");
    if (u.rx_preamp_width_um <= 0.0 || u.rx_buffer_width_um <= 0.0)
      fail("/rx_buffer_width_um", "sizing_mode=manual requires explicit RX widths");
  }

  // PDK: builtin name, inline object, or external file.
  if (root.contains("pdk") && root.contains("pdk_path"))
    fail("/pdk_path", "give either pdk or pdk_path, not both");
  if (root.contains("pdk_path")) {
    std::string path = get_str(root.at("pdk_path"), "/pdk_path");
    std::ifstream in(path);
    if (!in) fail("/pdk_path", "cannot open \"" + path + "\"");
    json pj;
    try {
      pj = json::parse(in);
    } catch (const json::exception& e) {
      fail("/pdk_path", std::string("invalid JSON: ") + e.what());
    }
    cfg.pdk = parse_pdk(pj, "/pdk_path");
  } else if (root.contains("pdk")) {
    const json& pj = root.at("pdk");
    if (pj.is_string()) {
      cfg.pdk = builtin_pdk(pj.get<std::string>());
    } else {
      cfg.pdk = parse_pdk(pj, "/pdk");
    }
  } else {
    cfg.pdk = builtin_pdk("generic16");
  }

  // Hidden defaults depend on pkg_type, then user overrides apply on top.
  apply_pkg_defaults(cfg.hidden, u.pkg_type);
  if (root.contains("channel_hidden")) parse_channel_hidden(root.at("channel_hidden"), cfg);
  if (root.contains("adaptation_hidden")) parse_adaptation_hidden(root.at("adaptation_hidden"), cfg);
  if (root.contains("power_hidden")) parse_power_hidden(root.at("power_hidden"), cfg);
  if (root.contains("area_hidden")) parse_area_hidden(root.at("area_hidden"), cfg);
  if (root.contains("sim_hidden")) parse_sim_hidden(root.at("sim_hidden"), cfg);

  if (cfg.hidden.bump_diameter_um == 0.0) cfg.hidden.bump_diameter_um = 0.6 * u.bump_pitch_um;
  if (cfg.hidden.trace_width_um == 0.0) cfg.hidden.trace_width_um = cfg.hidden.trace_base.ref_width_um;
  if (cfg.hidden.bump_diameter_um >= u.bump_pitch_um)
    fail("/channel_hidden/bump_diameter_um", "bump diameter must be < bump pitch");

  std::sort(cfg.overrides.begin(), cfg.overrides.end());
  return cfg;
}

SweepSpec parse_sweep(const json& j, const LinkConfig& base) {
  reject_unknown(j, "/sweep", kSweepKeys);
  SweepSpec s;
  s.base = base;
  if (j.contains("pkg_types")) {
    const json& t = j.at("pkg_types");
    if (!t.is_array() || t.empty()) fail("/sweep/pkg_types", "axis list must be non-empty");
    for (size_t i = 0; i < t.size(); ++i)
      s.pkg_types.push_back(get_enum<PkgType>(t.at(i), "/sweep/pkg_types/" + std::to_string(i),
                                              {{"si", PkgType::si}, {"org", PkgType::org}}));
  } else {
    s.pkg_types = {base.user.pkg_type};
  }
  auto axis = [&](const char* key, double fallback) {
    std::vector<double> v;
    if (j.contains(key)) {
      const json& t = j.at(key);
      if (!t.is_array() || t.empty()) fail(std::string("/sweep/") + key, "axis list must be non-empty");
      for (size_t i = 0; i < t.size(); ++i)
        v.push_back(get_pos(t.at(i), std::string("/sweep/") + key + "/" + std::to_string(i)));
    } else {
      v = {fallback};
    }
    return v;
  };
  s.reaches_mm = axis("reaches_mm", base.user.reach_mm);
  s.bump_pitches_um = axis("bump_pitches_um", base.user.bump_pitch_um);
  s.data_rates_Gbps = axis("data_rates_Gbps", base.user.data_rate_Gbps);
  return s;
}

json unit_inv_json(const UnitInverter& u) {
  return json{{"c_in_fF", u.c_in_fF}, {"r_on_n_ohm", u.r_on_n_ohm},
              {"r_on_p_ohm", u.r_on_p_ohm}, {"c_out_fF", u.c_out_fF}};
}

json pdk_json(const PdkDescriptor& p) {
  json j{{"name", p.name},
         {"vdd_V", p.vdd_V},
         {"device_type", p.device_type == DeviceType::finfet ? "finfet" : "planar"},
         {"l_gate_um", p.l_gate_um},
         {"w_min_um", p.w_min_um},
         {"w_max_um", p.w_max_um},
         {"unit_inv", unit_inv_json(p.unit_inv)},
         {"corner", p.corner}};
  if (p.device_type == DeviceType::finfet) {
    j["fin_w0_um"] = p.fin_w0_um;
    j["fin_pitch_contrib_um"] = p.fin_pitch_contrib_um;
  }
  return j;
}

}  // namespace

PdkDescriptor builtin_pdk(const std::string& name) {
  PdkDescriptor p;
  p.name = name;
  if (name == "generic16") {
    p.vdd_V = 0.8;
    p.device_type = DeviceType::finfet;
    p.l_gate_um = 0.016;
    p.w_min_um = 0.01;
    p.w_max_um = 2000.0;
    p.fin_w0_um = 0.01;
    p.fin_pitch_contrib_um = 0.048;
    p.unit_inv = {0.15, 9000.0, 11000.0, 0.10};
    p.corner = "tt_0p8v_25c";
  } else if (name == "generic65") {
    p.vdd_V = 1.0;
    p.device_type = DeviceType::planar;
    p.l_gate_um = 0.06;
    p.w_min_um = 0.12;
    p.w_max_um = 2000.0;
    p.unit_inv = {1.2, 4000.0, 6500.0, 0.9};
    p.corner = "tt_1p0v_25c";
  } else if (name == "generic45") {
    p.vdd_V = 1.0;
    p.device_type = DeviceType::planar;
    p.l_gate_um = 0.045;
    p.w_min_um = 0.12;
    p.w_max_um = 2000.0;
    p.unit_inv = {0.8, 2800.0, 4200.0, 0.5};
    p.corner = "tt_1p0v_25c";
  } else {
    fail("/pdk", "unknown builtin pdk \"" + name + "\" (have generic16, generic65, generic45)");
  }
  return p;
}

std::vector<std::string> builtin_pdk_names() { return {"generic16", "generic65", "generic45"}; }

LoadResult load_config_text(const std::string& json_text, const std::string& origin) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    fail("", "invalid JSON in " + origin + ": " + e.what());
  }
  LoadResult out;
  out.cfg = parse_link(root, origin);
  if (root.contains("sweep")) out.sweep = parse_sweep(root.at("sweep"), out.cfg);
  return out;
}

LoadResult load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("", "cannot open config file \"" + path + "\"");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_config_text(ss.str(), path);
}

std::string dump_merged(const LinkConfig& cfg) {
  const UserConfig& u = cfg.user;
  const HiddenConfig& h = cfg.hidden;
  json root;
  root["pkg_type"] = to_string(u.pkg_type);
  root["reach_mm"] = u.reach_mm;
  root["bump_pitch_um"] = u.bump_pitch_um;
  root["data_rate_Gbps"] = u.data_rate_Gbps;
  root["lane_count"] = u.lane_count;
  root["passive_eq_en"] = u.passive_eq_en;
  root["ac_coupled"] = u.ac_coupled;
  root["pad_cap_mode"] = to_string(u.pad_cap_mode);
  root["sizing_mode"] = to_string(u.sizing_mode);
  root["pareto_selection"] = to_string(u.pareto_selection);
  root["coupling_enabled"] = u.coupling_enabled;
  root["cc_ratio_trace"] = u.cc_ratio_trace;
  root["cc_ratio_pad"] = u.cc_ratio_pad;
  root["cc_rx_pad_fF"] = u.cc_rx_pad_fF;
  if (!u.bump_map_path.empty()) root["bump_map_path"] = u.bump_map_path;
  root["save_netlists"] = u.save_netlists;
  root["save_lib"] = u.save_lib;
  root["save_metrics_csv"] = u.save_metrics_csv;
  root["generate_verilog"] = u.generate_verilog;
  root["generate_lef"] = u.generate_lef;
  root["n_tx_configs"] = u.n_tx_configs;
  root["n_rx_configs"] = u.n_rx_configs;
  root["max_parallel"] = u.max_parallel;
  root["rise_fall_pct_ui"] = u.rise_fall_pct_ui;
  root["max_rx_delay_frac_ui"] = u.max_rx_delay_frac_ui;
  if (!u.input_slews_ns_override.empty()) root["input_slews_ns_override"] = u.input_slews_ns_override;
  root["rx_slew_source"] = to_string(u.rx_slew_source);
  if (!u.tx_stage_widths_um.empty()) root["tx_stage_widths_um"] = u.tx_stage_widths_um;
  if (u.rx_preamp_width_um > 0.0) root["rx_preamp_width_um"] = u.rx_preamp_width_um;
  if (u.rx_buffer_width_um > 0.0) root["rx_buffer_width_um"] = u.rx_buffer_width_um;

  root["pdk"] = pdk_json(cfg.pdk);

  json esd = json::array();
  for (const auto& r : h.esd_table) esd.push_back(json::array({r.max_pitch_um, r.pkg, r.c_esd_fF}));
  json unterm = json::array();
  for (const auto& r : h.unterm_boundary) unterm.push_back(json::array({r.data_rate_Gbps, r.l_unterm_mm}));

  root["channel_hidden"] = json{
      {"eps_r_ild", h.eps_r_ild},
      {"t_ox_um", h.t_ox_um},
      {"eps_r_underfill", h.eps_r_underfill},
      {"bump_resistivity_ohm_m", h.bump_resistivity_ohm_m},
      {"bump_diameter_um", h.bump_diameter_um},
      {"bump_height_um", h.bump_height_um},
      {"trace_base", json{{"c_fF_per_mm", h.trace_base.c_fF_per_mm},
                          {"r_ohm_per_mm", h.trace_base.r_ohm_per_mm},
                          {"ref_width_um", h.trace_base.ref_width_um}}},
      {"trace_width_um", h.trace_width_um},
      {"trace_eps_ratio", h.trace_eps_ratio},
      {"esd_table", esd},
      {"pad_r_ref_ohm", h.pad_r_ref_ohm},
      {"pad_r_ref_width_um", h.pad_r_ref_width_um}};
  root["adaptation_hidden"] = json{
      {"unterm_boundary", unterm},
      {"c_base_ac_F", h.c_base_ac_F},
      {"eq_loss_thresholds_dB", h.eq_loss_thresholds_dB},
      {"eq_latency_cap_ui", h.eq_latency_cap_ui},
      {"r_bias_ohm", h.r_bias_ohm},
      {"r_rx_ohm", h.r_rx_ohm}};
  root["power_hidden"] = json{
      {"activity_factor", h.activity_factor},
      {"sc_fraction", h.sc_fraction},
      {"latency_budget_ui", h.latency_budget_ui},
      {"tx_input_slew_ui", h.tx_input_slew_ui}};
  root["area_hidden"] = json{
      {"layout_margin", h.layout_margin},
      {"r_sheet_poly_ohm_sq", h.r_sheet_poly_ohm_sq},
      {"r_sheet_hires_ohm_sq", h.r_sheet_hires_ohm_sq},
      {"strip_width_um", h.strip_width_um},
      {"mim_fF_per_um2", h.mim_fF_per_um2},
      {"esd_fF_per_um2", h.esd_fF_per_um2},
      {"ubm_overhang_um", h.ubm_overhang_um}};
  root["sim_hidden"] = json{
      {"time_step_scale", h.time_step_scale},
      {"rx_core_load_fF", h.rx_core_load_fF},
      {"settle_tau_factor", h.settle_tau_factor},
      {"max_steps", h.max_steps},
      {"char_slew_count", h.char_slew_count},
      {"char_load_count", h.char_load_count}};
  return root.dump(2) + "\n";
}

std::uint64_t fingerprint(const LinkConfig& cfg) { return fnv1a64(dump_merged(cfg)); }

std::vector<LinkConfig> expand_sweep(const SweepSpec& spec) {
  if (spec.pkg_types.empty() || spec.reaches_mm.empty() || spec.bump_pitches_um.empty() ||
      spec.data_rates_Gbps.empty())
    fail("/sweep", "every sweep axis must be non-empty");
  std::vector<LinkConfig> out;
  out.reserve(spec.pkg_types.size() * spec.reaches_mm.size() * spec.bump_pitches_um.size() *
              spec.data_rates_Gbps.size());
  for (PkgType pkg : spec.pkg_types)
    for (double reach : spec.reaches_mm)
      for (double pitch : spec.bump_pitches_um)
        for (double rate : spec.data_rates_Gbps) {
          LinkConfig c = spec.base;
          c.user.pkg_type = pkg;
          c.user.reach_mm = reach;
          c.user.bump_pitch_um = pitch;
          c.user.data_rate_Gbps = rate;
          // Package-dependent hidden defaults track the axis value unless the
          // user overrode them explicitly.
          HiddenConfig fresh;
          apply_pkg_defaults(fresh, pkg);
          auto overridden = [&](const char* key) {
            std::string k = std::string("channel_hidden/") + key;
            return std::find(c.overrides.begin(), c.overrides.end(), k) != c.overrides.end();
          };
          if (!overridden("eps_r_ild")) c.hidden.eps_r_ild = fresh.eps_r_ild;
          if (!overridden("t_ox_um")) c.hidden.t_ox_um = fresh.t_ox_um;
          if (!overridden("bump_height_um")) c.hidden.bump_height_um = fresh.bump_height_um;
          if (!overridden("trace_base")) c.hidden.trace_base = fresh.trace_base;
          if (!overridden("esd_table")) c.hidden.esd_table = fresh.esd_table;
          if (!overridden("bump_diameter_um")) c.hidden.bump_diameter_um = 0.6 * pitch;
          if (!overridden("trace_width_um")) c.hidden.trace_width_um = c.hidden.trace_base.ref_width_um;
          if (c.hidden.bump_diameter_um >= pitch)
            fail("/sweep/bump_pitches_um", "bump diameter must be < bump pitch at pitch " +
                                               std::to_string(pitch));
          out.push_back(std::move(c));
        }
  return out;
}

std::string point_dir_name(const LinkConfig& cfg) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s_r%.1f_p%.2f_d%.1f", to_string(cfg.user.pkg_type),
                cfg.user.reach_mm, cfg.user.bump_pitch_um, cfg.user.data_rate_Gbps);
  return buf;
}

std::string schema_text() {
  std::ostringstream os;
  os << "chiplink JSON config schema (all units in field names)\n"
     << "\n"
     << "required top-level fields:\n"
     << "  pkg_type            si|org        package / interposer technology\n"
     << "  reach_mm            float > 0     die-to-die interconnect length\n"
     << "  bump_pitch_um       float > 0     bump-to-bump pitch\n"
     << "  data_rate_Gbps      float > 0     per-lane NRZ data rate\n"
     << "  lane_count          int > 0       number of lanes\n"
     << "\n"
     << "optional top-level fields (default):\n"
     << "  passive_eq_en       bool (true)   enable passive TX pre-emphasis\n"
     << "  ac_coupled          bool (true)   AC-coupled RX termination\n"
     << "  pad_cap_mode        phys|ucie (phys)\n"
     << "  sizing_mode         manual|tx_sizing|rx_sizing|co_opt (co_opt)\n"
     << "  pareto_selection    balanced|best_power|best_delay|all (balanced)\n"
     << "  coupling_enabled    bool (false)\n"
     << "  cc_ratio_trace      float [0,1] (0.4)   coupling fraction at trace nodes\n"
     << "  cc_ratio_pad        float [0,1] (0.15)  coupling fraction at interposer pads\n"
     << "  cc_rx_pad_fF        float >= 0 (2.0)    absolute RX pad coupling cap\n"
     << "  bump_map_path       path (none)\n"
     << "  save_netlists / save_lib / save_metrics_csv / generate_verilog / generate_lef\n"
     << "                      bool (all true)\n"
     << "  n_tx_configs / n_rx_configs   int > 0 (8 / 8)\n"
     << "  max_parallel        int > 0 (4)\n"
     << "  rise_fall_pct_ui    float (0,1] (0.6)   far-end transition target\n"
     << "  max_rx_delay_frac_ui float (0,1] (0.5)\n"
     << "  input_slews_ns_override  ascending floats (auto)\n"
     << "  rx_slew_source      tx_pad|channel (channel)\n"
     << "  tx_stage_widths_um / rx_preamp_width_um / rx_buffer_width_um\n"
     << "                      required when sizing_mode=manual\n"
     << "  pdk                 builtin name or inline object (generic16)\n"
     << "                      builtins: generic16 (0.8 V finfet), generic65 (1.0 V planar),\n"
     << "                      generic45 (1.0 V planar, faster unit inverter)\n"
     << "  pdk_path            path to a descriptor JSON (alternative to pdk)\n"
     << "  sweep               {pkg_types, reaches_mm, bump_pitches_um, data_rates_Gbps}\n"
     << "\n"
     << "hidden sections (expert overrides; defaults depend on pkg_type):\n"
     << "  channel_hidden:\n"
     << "    eps_r_ild (3.9), t_ox_um (org 1.42 / si 0.99), eps_r_underfill (3.5),\n"
     << "    bump_resistivity_ohm_m (1.68e-8), bump_diameter_um (0.6*pitch),\n"
     << "    bump_height_um (org 50 / si 15),\n"
     << "    trace_base {c_fF_per_mm, r_ohm_per_mm, ref_width_um}\n"
     << "      (org {138, 0.036, 30} / si {185, 1.04, 3}),\n"
     << "    trace_width_um (ref width), trace_eps_ratio (1.0),\n"
     << "    esd_table [[max_pitch_um, si|org|any, c_esd_fF]]\n"
     << "      ([[25,si,40],[55,any,80],[130,org,150]]),\n"
     << "    pad_r_ref_ohm (0.5), pad_r_ref_width_um (50)\n"
     << "  adaptation_hidden:\n"
     << "    unterm_boundary [[Gbps, mm]] ([[8,25],[16,18],[32,12],[48,9]]),\n"
     << "    c_base_ac_F (1e-12), eq_loss_thresholds_dB ([1,2,3.5,5]),\n"
     << "    eq_latency_cap_ui (0.25), r_bias_ohm (1e6), r_rx_ohm (50)\n"
     << "  power_hidden:\n"
     << "    activity_factor (0.5), sc_fraction (0.1), latency_budget_ui (16),\n"
     << "    tx_input_slew_ui (0.2)\n"
     << "  area_hidden:\n"
     << "    layout_margin (3), r_sheet_poly_ohm_sq (50), r_sheet_hires_ohm_sq (2000),\n"
     << "    strip_width_um (0.4), mim_fF_per_um2 (2), esd_fF_per_um2 (1),\n"
     << "    ubm_overhang_um (20)\n"
     << "  sim_hidden:\n"
     << "    time_step_scale (1.0), rx_core_load_fF (3), settle_tau_factor (12),\n"
     << "    max_steps (400000), char_slew_count (5), char_load_count (5)\n"
     << "\n"
     << "unknown keys are rejected with their JSON pointer.\n";
  return os.str();
}

}  // namespace chiplink::config
