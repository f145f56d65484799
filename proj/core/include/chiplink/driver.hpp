#pragma once

#include <optional>
#include <string>
#include <vector>

#include "chiplink/collateral.hpp"
#include "chiplink/config.hpp"
#include "chiplink/coopt.hpp"

namespace chiplink::driver {

enum class PointStatus { ok, infeasible, error };

struct PointRecord {
  std::string name;
  PointStatus status = PointStatus::ok;
  std::string message;
  double wall_ms = 0.0;
  std::vector<std::string> outputs;
};

struct RunManifest {
  std::string mode;  // "single" | "sweep"
  std::uint64_t fingerprint = 0;
  std::int64_t started_unix_s = 0;  // the only timestamp in any output
  std::vector<PointRecord> points;

  bool all_ok() const;
  std::string to_json() const;
};

struct RunOptions {
  std::optional<config::ParetoSelection> select_override;
  std::optional<int> workers_override;
  bool debug_waveforms = false;
};

// Full pipeline for one configuration, no file I/O.
struct PointResult {
  config::LinkConfig cfg;
  channel::PiLadder ladder;
  channel::ChannelSummary summary;
  adaptation::TerminationPlan term;
  adaptation::EqPlan eq;
  coopt::Grid grid;
  coopt::ParetoFront front;  // refined
  int selected_index = -1;
  coopt::DesignPoint selected;
  xcvr::TxDesign tx;
  xcvr::RxDesign rx;
  xcvr::AreaReport area;
  std::optional<collateral::BumpMap> bump_map;
  std::string selection_name;
  PointStatus status = PointStatus::ok;
  std::string message;
  WarningList warnings;
};

PointResult evaluate_point(const config::LinkConfig& cfg, int char_workers,
                           const RunOptions& opt = {});

// Pipeline + artifact emission into out_dir.
RunManifest run_single(const config::LinkConfig& cfg, const std::string& out_dir,
                       const RunOptions& opt = {});

// Cartesian sweep over <= max_parallel workers; per-point subdirectories plus
// an aggregate CSV in deterministic expansion order.
RunManifest run_sweep(const config::SweepSpec& spec, const std::string& out_dir,
                      const RunOptions& opt = {});

// CLI entry point (subcommands: run, sweep, validate, print-schema).
// Exit codes: 0 ok, 1 validation/infeasible, 2 usage, 3 internal error.
int cli(int argc, const char* const* argv);

}  // namespace chiplink::driver
