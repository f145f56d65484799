#include "chiplink/driver.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

namespace chiplink::driver {

namespace fs = std::filesystem;
using config::LinkConfig;
using config::ParetoSelection;
using config::SizingMode;

bool RunManifest::all_ok() const {
  for (const auto& p : points)
    if (p.status != PointStatus::ok) return false;
  return true;
}

std::string RunManifest::to_json() const {
  nlohmann::json j;
  j["mode"] = mode;
  j["fingerprint"] = fingerprint;
  j["started_unix_s"] = started_unix_s;
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : points) {
    const char* st = p.status == PointStatus::ok ? "ok"
                     : p.status == PointStatus::infeasible ? "infeasible"
                                                           : "error";
    pts.push_back({{"name", p.name},
                   {"status", st},
                   {"message", p.message},
                   {"wall_ms", p.wall_ms},
                   {"outputs", p.outputs}});
  }
  j["points"] = pts;
  return j.dump(2) + "\n";
}

namespace {

const char* selection_name(ParetoSelection s) { return config::to_string(s); }

xcvr::TxDesign manual_tx_design(const LinkConfig& cfg) {
  const auto& widths = cfg.user.tx_stage_widths_um;
  if (widths.size() < 2 || widths.size() % 2 != 0)
    throw ConfigError("/tx_stage_widths_um", "manual TX chain needs an even stage count >= 2");
  xcvr::TxDesign d;
  d.fanout = xcvr::effective_fanout(cfg.pdk);
  for (double w : widths) d.stage_widths_um.push_back(xcvr::quantize_fin(w, cfg.pdk));
  return d;
}

}  // namespace

PointResult evaluate_point(const LinkConfig& cfg_in, int char_workers, const RunOptions& opt) {
  PointResult res;
  res.cfg = cfg_in;
  LinkConfig& cfg = res.cfg;
  if (opt.select_override) cfg.user.pareto_selection = *opt.select_override;

  res.ladder = channel::build_ladder(cfg);
  if (res.ladder.ucie_rate_clamped)
    res.warnings.push_back({"ucie_rate_clamped",
                            "data rate above the 32 GT/s table entry; pad cap clamped to 125 fF"});
  res.summary = channel::summarize(res.ladder, cfg.pdk.vdd_V, cfg.user.data_rate_Gbps);
  res.term = adaptation::select_termination(cfg, res.summary);
  res.eq = adaptation::select_eq(cfg, res.summary, res.ladder);

  // Matching-stage termination energy uses the design transition target; the
  // refined points re-fold with the measured pad slew.
  adaptation::fold_dynamic_term_energy(res.term, cfg.user.rise_fall_pct_ui * cfg.ui_s(),
                                       cfg.hidden.activity_factor, cfg.pdk.vdd_V);

  if (!cfg.user.bump_map_path.empty()) {
    res.bump_map = collateral::parse_bump_map(cfg.user.bump_map_path, cfg.user.lane_count,
                                              cfg.user.bump_pitch_um);
  }

  switch (cfg.user.sizing_mode) {
    case SizingMode::co_opt: {
      res.grid = coopt::build_grid(cfg, res.ladder, res.term, res.eq, char_workers);
      res.selection_name = selection_name(cfg.user.pareto_selection);
      break;
    }
    case SizingMode::manual: {
      xcvr::TxDesign tx = manual_tx_design(cfg);
      xcvr::RxDesign rx = xcvr::rx_design_for_buffer_width(cfg.user.rx_buffer_width_um, cfg);
      rx.preamp_width_um = xcvr::quantize_fin(cfg.user.rx_preamp_width_um, cfg.pdk);
      rx.c_in_F = fF_to_F(cfg.pdk.unit_inv.c_in_fF) * rx.preamp_width_um / cfg.pdk.w_min_um;
      res.grid = coopt::grid_for_designs(cfg, res.ladder, res.term, res.eq, {tx}, {rx},
                                         char_workers);
      res.selection_name = "manual";
      break;
    }
    case SizingMode::tx_sizing: {
      auto search = xcvr::tx_sizing_search(cfg, res.ladder, res.term, res.eq);
      if (search.budget_exhausted)
        res.warnings.push_back({"tx_search_budget",
                                "tx sizing search budget exhausted; best design so far kept"});
      xcvr::RxDesign rx = xcvr::analytic_rx_design(cfg);
      res.grid = coopt::grid_for_designs(cfg, res.ladder, res.term, res.eq, {search.design}, {rx},
                                         char_workers);
      res.selection_name = "tx_sizing";
      break;
    }
    case SizingMode::rx_sizing: {
      bool clamped = false;
      double w_tx = xcvr::analytic_tx_width_um(cfg, res.ladder, &clamped);
      xcvr::TxDesign tx =
          xcvr::tx_design_for_final_width(w_tx, cfg.pdk, xcvr::effective_fanout(cfg.pdk));
      auto search = xcvr::rx_sizing_search(cfg, cfg.user.rise_fall_pct_ui * cfg.ui_s());
      if (search.design.infeasible)
        res.warnings.push_back({"rx_infeasible",
                                "RX delay target unreachable at the PDK maximum width"});
      res.grid = coopt::grid_for_designs(cfg, res.ladder, res.term, res.eq, {tx}, {search.design},
                                         char_workers);
      res.selection_name = "rx_sizing";
      break;
    }
  }
  for (const auto& w : res.grid.warnings) res.warnings.push_back(w);

  // LUT matching over every pair, then the frontier.
  std::vector<coopt::DesignPoint> points;
  points.reserve(res.grid.tx_tables.size() * res.grid.rx_tables.size());
  for (size_t ti = 0; ti < res.grid.tx_tables.size(); ++ti) {
    for (size_t ri = 0; ri < res.grid.rx_tables.size(); ++ri) {
      coopt::DesignPoint p =
          coopt::match_pair(res.grid.tx_tables[ti], res.grid.rx_tables[ri], res.summary, res.term,
                            cfg);
      p.tx_index = static_cast<int>(ti);
      p.rx_index = static_cast<int>(ri);
      points.push_back(p);
    }
  }
  coopt::ParetoFront lut_front = coopt::pareto_front(points);
  if (lut_front.points.empty()) {
    res.status = PointStatus::infeasible;
    res.message = "no feasible (TX, RX) pairing under the latency budget";
    return res;
  }

  res.front = coopt::refine(lut_front, res.grid, cfg, res.ladder, res.summary, res.term, res.eq);

  // Re-fold the termination energy with each refined point's measured pad
  // transition, then restore frontier ordering.
  for (auto& p : res.front.points) {
    if (p.slew_pad_s > 0.0 && res.term.terminated()) {
      adaptation::TerminationPlan plan = res.term;
      adaptation::fold_dynamic_term_energy(plan, p.slew_pad_s, cfg.hidden.activity_factor,
                                           cfg.pdk.vdd_V);
      p.e_term_J = plan.e_term_J_per_bit;
      p.e_total_J_per_bit =
          cfg.hidden.activity_factor * (p.e_tx_J + p.e_rx_J) + p.e_ch_J + p.e_term_J;
    }
  }
  res.front = coopt::pareto_front(res.front.points);
  if (res.front.points.empty()) {
    res.status = PointStatus::infeasible;
    res.message = "refinement demoted every frontier point";
    return res;
  }

  ParetoSelection sel = cfg.user.pareto_selection;
  if (sel == ParetoSelection::all) sel = ParetoSelection::balanced;  // representative point
  res.selected_index = coopt::select_index(res.front, sel);
  res.selected = res.front.points[res.selected_index];
  res.tx = res.grid.tx_designs[res.selected.tx_index];
  res.rx = res.grid.rx_designs[res.selected.rx_index];
  res.rx.c_in_F = res.grid.rx_tables[res.selected.rx_index].c_in_F;
  adaptation::fold_dynamic_term_energy(res.term,
                                       res.selected.slew_pad_s > 0.0
                                           ? res.selected.slew_pad_s
                                           : cfg.user.rise_fall_pct_ui * cfg.ui_s(),
                                       cfg.hidden.activity_factor, cfg.pdk.vdd_V);

  res.area = xcvr::area(res.tx, res.rx, res.term, res.eq, cfg);
  if (res.bump_map) {
    res.area.macro_w_um = res.bump_map->cols * cfg.user.bump_pitch_um;
    res.area.macro_h_um = res.bump_map->rows * cfg.user.bump_pitch_um;
  }
  return res;
}

namespace {

std::string adaptation_netlist(const adaptation::TerminationPlan& term,
                               const adaptation::EqPlan& eq) {
  std::ostringstream os;
  auto f6 = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6e", v);
    return std::string(buf);
  };
  if (eq.enabled()) {
    os << ".subckt txeq tx_drv tx_pad\n";
    os << "REQ tx_drv tx_pad " << f6(eq.r_eq_ohm) << "\n";
    os << "CEQ tx_drv tx_pad " << f6(eq.c_eq_F) << "\n";
    os << ".ends txeq\n";
  }
  if (term.terminated()) {
    os << ".subckt rxterm rx_pad vdd vss\n";
    os << "RT rx_pad vt " << f6(term.r_term_ohm) << "\n";
    if (term.ac_coupled) os << "CAC vt vss " << f6(term.c_ac_F) << "\n";
    os << "RB1 vt vdd " << f6(term.r_bias_ohm) << "\n";
    os << "RB2 vt vss " << f6(term.r_bias_ohm) << "\n";
    os << ".ends rxterm\n";
  }
  return os.str();
}

void write_file(const fs::path& path, const std::string& text, PointRecord& rec) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  rec.outputs.push_back(path.filename().string());
}

// One full-path solve per polarity for the selected design, waveforms kept.
void dump_selected_waveforms(const PointResult& res, const fs::path& dir) {
  const auto& cfg = res.cfg;
  for (bool rising : {true, false}) {
    simcore::Network net;
    net.set_vdd(cfg.pdk.vdd_V);
    simcore::NodeRef in = simcore::kStim;
    auto stages = xcvr::chain_params(res.tx.stage_widths_um, cfg.pdk);
    for (size_t s = 0; s < stages.size(); ++s) {
      simcore::NodeRef out = net.add_node("s" + std::to_string(s));
      net.add_inverter(in, out, stages[s], simcore::Group::tx_device);
      in = out;
    }
    xcvr::LadderDownstream down(res.ladder, res.term, res.eq, false);
    auto ports = down.build(net, in);
    simcore::NodeRef pre_out = net.add_node("rx_pre");
    simcore::NodeRef buf_out = net.add_node("rx_buf");
    net.add_inverter(ports.load, pre_out, xcvr::stage_params(res.rx.preamp_width_um, cfg.pdk),
                     simcore::Group::rx_device);
    net.add_inverter(pre_out, buf_out, xcvr::stage_params(res.rx.buffer_width_um, cfg.pdk),
                     simcore::Group::rx_device);
    net.add_capacitor(buf_out, simcore::kGround, fF_to_F(cfg.hidden.rx_core_load_fF),
                      simcore::Group::load);

    simcore::SolveOptions so;
    so.time_step_scale = cfg.hidden.time_step_scale;
    so.settle_tau_factor = cfg.hidden.settle_tau_factor;
    so.max_steps = cfg.hidden.max_steps;
    so.dump_waveforms_path = (dir / (rising ? "selected_rise.txt" : "selected_fall.txt")).string();
    simcore::solve_transient(net, simcore::Edge{rising, cfg.hidden.tx_input_slew_ui * cfg.ui_s()},
                             {ports.tx_pad, ports.load, buf_out}, so);
  }
}

PointRecord emit_point(const PointResult& res, const fs::path& dir, const RunOptions& opt) {
  PointRecord rec;
  rec.name = config::point_dir_name(res.cfg);
  fs::create_directories(dir);

  const LinkConfig& cfg = res.cfg;
  std::uint64_t fp = config::fingerprint(cfg);

  write_file(dir / "merged_config.json", config::dump_merged(cfg), rec);

  if (res.status != PointStatus::ok) {
    rec.status = res.status;
    rec.message = res.message;
    if (cfg.user.save_metrics_csv)
      write_file(dir / "frontier.csv",
                 "tx_idx,rx_idx,e_total_pJ,tau_wc_ps,feasible,refined,stage_count,widths\n", rec);
    return rec;
  }

  collateral::DatasheetInput ds;
  ds.cfg = &cfg;
  ds.summary = &res.summary;
  ds.term = &res.term;
  ds.eq = &res.eq;
  ds.selected = &res.selected;
  ds.tx = &res.tx;
  ds.rx = &res.rx;
  ds.area = &res.area;
  ds.selection_name = res.selection_name;
  ds.fingerprint = fp;
  ds.warnings = res.warnings;

  write_file(dir / "datasheet.txt", collateral::write_datasheet(ds), rec);

  if (cfg.user.save_metrics_csv) {
    write_file(dir / "metrics.csv",
               collateral::metrics_csv_header() + collateral::metrics_csv_row(ds), rec);
    write_file(dir / "frontier.csv", collateral::frontier_csv(res.front, res.grid), rec);
  }
  if (cfg.user.save_netlists) {
    write_file(dir / "txip.scs",
               channel::emit_netlist(res.ladder) + adaptation_netlist(res.term, res.eq), rec);
  }
  if (cfg.user.save_lib) {
    collateral::LibertyInput li;
    li.tx = res.grid.tx_tables[res.selected.tx_index];
    li.rx = res.grid.rx_tables[res.selected.rx_index];
    li.vdd_V = cfg.pdk.vdd_V;
    li.config_fingerprint = fp;
    write_file(dir / "link.lib", collateral::write_liberty(li), rec);
  }
  if (cfg.user.generate_verilog) {
    collateral::VerilogInput vi;
    vi.lane_count = cfg.user.lane_count;
    vi.tx_delay_s = res.selected.tau_tx_s;
    vi.rx_delay_s = res.selected.tau_rx_s;
    vi.config_fingerprint = fp;
    write_file(dir / "link.v", collateral::write_verilog(vi), rec);
  }
  if (cfg.user.generate_lef) {
    collateral::LefInput lf;
    lf.bump_map = res.bump_map;
    lf.lane_count = cfg.user.lane_count;
    lf.pitch_um = cfg.user.bump_pitch_um;
    write_file(dir / "link.lef", collateral::write_lef(lf), rec);
  }
  {
    collateral::SdcInput si;
    si.lane_count = cfg.user.lane_count;
    si.budget_s = cfg.hidden.latency_budget_ui * cfg.ui_s();
    si.pad_load_F = res.ladder.chip_pad.c_F;
    si.rx_input_slew_s = res.selected.slew_far_s;
    write_file(dir / "link.sdc", collateral::write_sdc(si), rec);
  }
  if (opt.debug_waveforms) {
    fs::create_directories(dir / "waveforms");
    dump_selected_waveforms(res, dir / "waveforms");
    rec.outputs.push_back("waveforms/");
  }
  rec.status = PointStatus::ok;
  return rec;
}

}  // namespace

RunManifest run_single(const LinkConfig& cfg, const std::string& out_dir, const RunOptions& opt) {
  RunManifest man;
  man.mode = "single";
  man.fingerprint = config::fingerprint(cfg);
  man.started_unix_s =
      std::chrono::duration_cast<std::chrono::seconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count();

  auto t0 = std::chrono::steady_clock::now();
  PointRecord rec;
  try {
    int workers = opt.workers_override.value_or(cfg.user.max_parallel);
    PointResult res = evaluate_point(cfg, workers, opt);
    rec = emit_point(res, out_dir, opt);
  } catch (const std::exception& e) {
    rec.name = config::point_dir_name(cfg);
    rec.status = PointStatus::error;
    rec.message = e.what();
  }
  rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                    .count();
  man.points.push_back(rec);

  fs::create_directories(out_dir);
  std::ofstream(fs::path(out_dir) / "manifest.json", std::ios::binary) << man.to_json();
  return man;
}

RunManifest run_sweep(const config::SweepSpec& spec, const std::string& out_dir,
                      const RunOptions& opt) {
  RunManifest man;
  man.mode = "sweep";
  man.fingerprint = config::fingerprint(spec.base);
  man.started_unix_s =
      std::chrono::duration_cast<std::chrono::seconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count();

  std::vector<LinkConfig> points = config::expand_sweep(spec);
  std::cerr << "sweep: " << points.size() << " points ("
            << spec.pkg_types.size() << " pkg x " << spec.reaches_mm.size() << " reach x "
            << spec.bump_pitches_um.size() << " pitch x " << spec.data_rates_Gbps.size()
            << " rate)\n";

  int pool = opt.workers_override.value_or(spec.base.user.max_parallel);
  pool = std::max(1, std::min<int>(pool, static_cast<int>(points.size())));

  std::vector<PointRecord> recs(points.size());
  std::vector<std::string> rows(points.size());
  std::atomic<size_t> next{0};

  auto worker = [&] {
    for (size_t i = next.fetch_add(1); i < points.size(); i = next.fetch_add(1)) {
      auto t0 = std::chrono::steady_clock::now();
      const LinkConfig& pc = points[i];
      fs::path dir = fs::path(out_dir) / config::point_dir_name(pc);
      PointRecord rec;
      try {
        // Point-level parallelism only: each point characterizes serially so
        // the concurrent-solve budget stays at the pool size.
        PointResult res = evaluate_point(pc, 1, opt);
        rec = emit_point(res, dir, opt);
        if (res.status == PointStatus::ok) {
          collateral::DatasheetInput ds;
          ds.cfg = &res.cfg;
          ds.summary = &res.summary;
          ds.term = &res.term;
          ds.eq = &res.eq;
          ds.selected = &res.selected;
          ds.tx = &res.tx;
          ds.rx = &res.rx;
          ds.area = &res.area;
          ds.selection_name = res.selection_name;
          ds.fingerprint = config::fingerprint(pc);
          rows[i] = collateral::metrics_csv_row(ds);
        }
      } catch (const std::exception& e) {
        rec.name = config::point_dir_name(pc);
        rec.status = PointStatus::error;
        rec.message = e.what();
      }
      rec.wall_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      recs[i] = rec;
    }
  };

  if (pool == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(pool);
    for (int w = 0; w < pool; ++w) threads.emplace_back(worker);
    for (auto& th : threads) th.join();
  }
  man.points = recs;

  // Aggregate CSV in expansion order, written atomically.
  fs::create_directories(out_dir);
  fs::path agg = fs::path(out_dir) / "metrics.csv";
  fs::path tmp = fs::path(out_dir) / ".metrics.csv.tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    out << collateral::metrics_csv_header();
    for (const auto& r : rows) out << r;
  }
  fs::rename(tmp, agg);

  std::ofstream(fs::path(out_dir) / "manifest.json", std::ios::binary) << man.to_json();
  return man;
}

int cli(int argc, const char* const* argv) {
  CLI::App app{"d2d chiplet link PPA modeling and collateral generation"};
  app.require_subcommand(0, 1);

  std::string config_path;
  std::string out_dir = "out";
  std::string select;
  int workers = 0;
  bool debug_waveforms = false;
  bool version = false;

  app.add_flag("--version", version, "print the tool and config-schema version");

  auto add_common = [&](CLI::App* sub, bool needs_out) {
    sub->add_option("--config", config_path, "JSON configuration file")->required();
    if (needs_out) sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--select", select, "pareto selection override")
        ->check(CLI::IsMember({"balanced", "best_power", "best_delay", "all"}));
    sub->add_option("--workers", workers, "concurrent solver workers");
    sub->add_flag("--debug-waveforms", debug_waveforms, "dump solver waveforms");
  };

  CLI::App* run_cmd = app.add_subcommand("run", "single-point generation");
  add_common(run_cmd, true);
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Cartesian parameter sweep");
  add_common(sweep_cmd, true);
  CLI::App* validate_cmd = app.add_subcommand("validate", "config check only");
  validate_cmd->add_option("--config", config_path, "JSON configuration file")->required();
  CLI::App* schema_cmd = app.add_subcommand("print-schema", "dump the config schema");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (version) {
    std::cout << "chiplink 0.1.0 (config schema 1)\n";
    return 0;
  }
  if (schema_cmd->parsed()) {
    std::cout << config::schema_text();
    return 0;
  }
  if (!run_cmd->parsed() && !sweep_cmd->parsed() && !validate_cmd->parsed()) {
    std::cerr << app.help();
    return 2;
  }

  RunOptions opt;
  opt.debug_waveforms = debug_waveforms;
  if (workers > 0) opt.workers_override = workers;
  if (!select.empty()) {
    if (select == "balanced") opt.select_override = ParetoSelection::balanced;
    if (select == "best_power") opt.select_override = ParetoSelection::best_power;
    if (select == "best_delay") opt.select_override = ParetoSelection::best_delay;
    if (select == "all") opt.select_override = ParetoSelection::all;
  }

  try {
    config::LoadResult loaded = config::load_config(config_path);

    if (validate_cmd->parsed()) {
      std::cout << "config ok: " << config_path << "\n";
      return 0;
    }
    if (run_cmd->parsed()) {
      RunManifest man = run_single(loaded.cfg, out_dir, opt);
      for (const auto& p : man.points)
        if (p.status == PointStatus::error) {
          std::cerr << "error: " << p.message << "\n";
          return 3;
        }
      return man.all_ok() ? 0 : 1;
    }
    // sweep
    config::SweepSpec spec;
    if (loaded.sweep) {
      spec = *loaded.sweep;
    } else {
      spec.base = loaded.cfg;
      spec.pkg_types = {loaded.cfg.user.pkg_type};
      spec.reaches_mm = {loaded.cfg.user.reach_mm};
      spec.bump_pitches_um = {loaded.cfg.user.bump_pitch_um};
      spec.data_rates_Gbps = {loaded.cfg.user.data_rate_Gbps};
    }
    RunManifest man = run_sweep(spec, out_dir, opt);
    return man.all_ok() ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace chiplink::driver
