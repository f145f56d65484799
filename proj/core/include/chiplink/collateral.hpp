#pragma once

#include <optional>
#include <string>
#include <vector>

#include "chiplink/adaptation.hpp"
#include "chiplink/channel.hpp"
#include "chiplink/config.hpp"
#include "chiplink/coopt.hpp"
#include "chiplink/simcore.hpp"
#include "chiplink/xcvr.hpp"

namespace chiplink::collateral {

enum class BumpRole { tx, rx, vdd, vss, other, empty };

struct BumpMap {
  int rows = 0;
  int cols = 0;
  std::vector<BumpRole> sites;  // row-major, first text line = top row
  double pitch_um = 0.0;

  BumpRole at(int r, int c) const { return sites[r * cols + c]; }
  int count(BumpRole role) const;
};

BumpMap parse_bump_map(const std::string& path, int lane_count, double pitch_um);
BumpMap parse_bump_map_text(const std::string& text, int lane_count, double pitch_um,
                            const std::string& origin = "<string>");

// ---------------------------------------------------------------------------
// Liberty (NLDM subset): one library, cells txip and rxip, units ns/pF/mW.

struct LibertyInput {
  simcore::CharTable tx;
  simcore::CharTable rx;
  std::string library_name = "chiplink_d2d";
  double vdd_V = 0.0;
  std::uint64_t config_fingerprint = 0;
};

std::string write_liberty(const LibertyInput& in);

// Generic group tree, enough to re-serialize what write_liberty emits.
struct LibertyGroup {
  std::string type;                 // e.g. "library", "cell", "pin"
  std::string name;                 // first argument
  std::vector<std::pair<std::string, std::string>> attrs;          // key : value;
  std::vector<std::pair<std::string, std::vector<std::string>>> complex_attrs;  // key(args);
  std::vector<LibertyGroup> children;
};

LibertyGroup parse_liberty(const std::string& text);
std::string serialize_liberty(const LibertyGroup& root);

// Recovers both cell tables (SI units) from a parsed library.
struct LibertyTables {
  simcore::CharTable tx;
  simcore::CharTable rx;
};
LibertyTables extract_liberty_tables(const LibertyGroup& root);

// ---------------------------------------------------------------------------

struct VerilogInput {
  int lane_count = 0;
  double tx_delay_s = 0.0;  // per-lane, rounded to 1 ps in the output
  double rx_delay_s = 0.0;
  std::uint64_t config_fingerprint = 0;
};

std::string write_verilog(const VerilogInput& in);

// Structural sanity check used by the test suite (module/endmodule balance,
// port declarations, delay syntax).
bool verilog_parses(const std::string& text, std::string* diag = nullptr);

struct LefInput {
  std::optional<BumpMap> bump_map;
  int lane_count = 0;
  double pitch_um = 0.0;
  std::string layer_name = "PAD";
  std::string macro_name = "d2dphy";
};

std::string write_lef(const LefInput& in);

struct LefPin {
  std::string name;
  double x1, y1, x2, y2;
};
struct LefMacroInfo {
  double w_um = 0.0, h_um = 0.0;
  std::vector<LefPin> pins;
};
LefMacroInfo parse_lef_macro(const std::string& text);

struct SdcInput {
  int lane_count = 0;
  double budget_s = 0.0;       // latency_budget_ui * UI
  double pad_load_F = 0.0;     // TX output load
  double rx_input_slew_s = 0.0;
};

std::string write_sdc(const SdcInput& in);

// ---------------------------------------------------------------------------

struct DatasheetInput {
  const config::LinkConfig* cfg = nullptr;
  const channel::ChannelSummary* summary = nullptr;
  const adaptation::TerminationPlan* term = nullptr;
  const adaptation::EqPlan* eq = nullptr;
  const coopt::DesignPoint* selected = nullptr;
  const xcvr::TxDesign* tx = nullptr;
  const xcvr::RxDesign* rx = nullptr;
  const xcvr::AreaReport* area = nullptr;
  std::string selection_name;
  std::uint64_t fingerprint = 0;
  WarningList warnings;
};

std::string write_datasheet(const DatasheetInput& in);

std::string metrics_csv_header();
std::string metrics_csv_row(const DatasheetInput& in);

std::string frontier_csv(const coopt::ParetoFront& front, const coopt::Grid& grid);

}  // namespace chiplink::collateral
