#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chiplink/common.hpp"

namespace chiplink::config {

enum class PkgType { si, org };
enum class PadCapMode { phys, ucie };
enum class SizingMode { manual, tx_sizing, rx_sizing, co_opt };
enum class ParetoSelection { balanced, best_power, best_delay, all };
enum class RxSlewSource { tx_pad, channel };

const char* to_string(PkgType v);
const char* to_string(PadCapMode v);
const char* to_string(SizingMode v);
const char* to_string(ParetoSelection v);
const char* to_string(RxSlewSource v);

struct UserConfig {
  PkgType pkg_type = PkgType::org;
  double reach_mm = 0.0;
  double bump_pitch_um = 0.0;
  double data_rate_Gbps = 0.0;
  int lane_count = 0;

  bool passive_eq_en = true;
  bool ac_coupled = true;
  PadCapMode pad_cap_mode = PadCapMode::phys;
  SizingMode sizing_mode = SizingMode::co_opt;
  ParetoSelection pareto_selection = ParetoSelection::balanced;

  bool coupling_enabled = false;
  double cc_ratio_trace = 0.4;
  double cc_ratio_pad = 0.15;
  double cc_rx_pad_fF = 2.0;

  std::string bump_map_path;  // empty = no bump map

  bool save_netlists = true;
  bool save_lib = true;
  bool save_metrics_csv = true;
  bool generate_verilog = true;
  bool generate_lef = true;

  int n_tx_configs = 8;
  int n_rx_configs = 8;
  int max_parallel = 4;

  double rise_fall_pct_ui = 0.6;
  double max_rx_delay_frac_ui = 0.5;
  std::vector<double> input_slews_ns_override;  // empty = auto
  RxSlewSource rx_slew_source = RxSlewSource::channel;

  // Required when sizing_mode == manual.
  std::vector<double> tx_stage_widths_um;
  double rx_preamp_width_um = 0.0;
  double rx_buffer_width_um = 0.0;
};

struct TraceBase {
  double c_fF_per_mm = 0.0;
  double r_ohm_per_mm = 0.0;
  double ref_width_um = 0.0;
};

struct EsdRow {
  double max_pitch_um = 0.0;
  std::string pkg;  // "si" | "org" | "any"
  double c_esd_fF = 0.0;
};

struct UntermRow {
  double data_rate_Gbps = 0.0;
  double l_unterm_mm = 0.0;
};

// Literature-sourced physical constants plus model internals. Everything here
// is overridable from the "*_hidden" config sections.
struct HiddenConfig {
  // channel_hidden
  double eps_r_ild = 3.9;
  double t_ox_um = 1.42;
  double eps_r_underfill = 3.5;
  double bump_resistivity_ohm_m = 1.68e-8;
  double bump_diameter_um = 0.0;  // 0 = derive as 0.6 * pitch
  double bump_height_um = 50.0;
  TraceBase trace_base;
  double trace_width_um = 0.0;  // 0 = trace_base.ref_width_um
  double trace_eps_ratio = 1.0;
  std::vector<EsdRow> esd_table;
  double pad_r_ref_ohm = 0.5;
  double pad_r_ref_width_um = 50.0;

  // adaptation_hidden
  std::vector<UntermRow> unterm_boundary;
  double c_base_ac_F = 1e-12;
  std::vector<double> eq_loss_thresholds_dB = {1.0, 2.0, 3.5, 5.0};
  double eq_latency_cap_ui = 0.25;
  double r_bias_ohm = 1e6;
  double r_rx_ohm = 50.0;

  // power_hidden
  double activity_factor = 0.5;
  double sc_fraction = 0.10;
  double latency_budget_ui = 16.0;
  double tx_input_slew_ui = 0.2;

  // area_hidden
  double layout_margin = 3.0;
  double r_sheet_poly_ohm_sq = 50.0;
  double r_sheet_hires_ohm_sq = 2000.0;
  double strip_width_um = 0.4;
  double mim_fF_per_um2 = 2.0;
  double esd_fF_per_um2 = 1.0;
  double ubm_overhang_um = 20.0;

  // sim_hidden
  double time_step_scale = 1.0;
  double rx_core_load_fF = 3.0;
  double settle_tau_factor = 12.0;
  int max_steps = 400000;
  int char_slew_count = 5;
  int char_load_count = 5;
};

enum class DeviceType { planar, finfet };

struct UnitInverter {
  double c_in_fF = 0.0;
  double r_on_n_ohm = 0.0;
  double r_on_p_ohm = 0.0;
  double c_out_fF = 0.0;
};

struct PdkDescriptor {
  std::string name;
  double vdd_V = 0.0;
  DeviceType device_type = DeviceType::planar;
  double l_gate_um = 0.0;
  double w_min_um = 0.0;
  double w_max_um = 0.0;
  double fin_w0_um = 0.0;            // finfet only
  double fin_pitch_contrib_um = 0.0; // finfet only
  UnitInverter unit_inv;
  std::string corner;
};

// One fully merged link instance: the only thing the pipeline stages consume.
struct LinkConfig {
  UserConfig user;
  HiddenConfig hidden;
  PdkDescriptor pdk;

  // Key paths (e.g. "channel_hidden/eps_r_ild") that the user overrode,
  // echoed with "[override]" provenance in the datasheet.
  std::vector<std::string> overrides;
  WarningList warnings;

  double ui_s() const { return 1.0 / gbps_to_bps(user.data_rate_Gbps); }
  double f_nyquist_Hz() const { return gbps_to_bps(user.data_rate_Gbps) / 2.0; }
};

struct SweepSpec {
  std::vector<PkgType> pkg_types;
  std::vector<double> reaches_mm;
  std::vector<double> bump_pitches_um;
  std::vector<double> data_rates_Gbps;
  LinkConfig base;
};

struct LoadResult {
  LinkConfig cfg;
  std::optional<SweepSpec> sweep;  // present when the config has a "sweep" section
};

// Shipped process descriptors. Calibrations are literature-plausible and
// representative, not foundry data.
PdkDescriptor builtin_pdk(const std::string& name);
std::vector<std::string> builtin_pdk_names();

LoadResult load_config(const std::string& path);
LoadResult load_config_text(const std::string& json_text, const std::string& origin = "<string>");

// Re-emit a merged config as loadable JSON (merge is idempotent).
std::string dump_merged(const LinkConfig& cfg);

std::uint64_t fingerprint(const LinkConfig& cfg);

std::vector<LinkConfig> expand_sweep(const SweepSpec& spec);

// Output subdirectory name encoding a sweep point's coordinates.
std::string point_dir_name(const LinkConfig& cfg);

// Full schema (names, types, bounds, defaults) as human-readable text for the
// --print-schema CLI flag.
std::string schema_text();

}  // namespace chiplink::config
