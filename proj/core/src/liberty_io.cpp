#include <charconv>
#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>

#include "chiplink/collateral.hpp"

namespace chiplink::collateral {

using simcore::CharTable;

namespace {

// Shortest round-trip representation; keeps the library byte-deterministic
// and lossless through the reader.
std::string fmt(double v) {
  char buf[40];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, p);
}

std::string quoted_axis(const std::vector<double>& axis, double scale) {
  std::string s = "\"";
  for (size_t i = 0; i < axis.size(); ++i) {
    if (i) s += ", ";
    s += fmt(axis[i] * scale);
  }
  s += "\"";
  return s;
}

std::vector<std::string> quoted_rows(const CharTable& t, const std::vector<double>& grid,
                                     double scale) {
  std::vector<std::string> rows;
  for (size_t si = 0; si < t.slews_s.size(); ++si) {
    std::string s = "\"";
    for (size_t li = 0; li < t.loads_F.size(); ++li) {
      if (li) s += ", ";
      s += fmt(t.at(grid, si, li) * scale);
    }
    s += "\"";
    rows.push_back(std::move(s));
  }
  return rows;
}

LibertyGroup table_group(const std::string& type, const std::string& tmpl, const CharTable& t,
                         const std::vector<double>& grid, double scale, bool two_d) {
  LibertyGroup g;
  g.type = type;
  g.name = tmpl;
  g.complex_attrs.push_back({"index_1", {quoted_axis(t.slews_s, 1e9)}});
  if (two_d) g.complex_attrs.push_back({"index_2", {quoted_axis(t.loads_F, 1e12)}});
  g.complex_attrs.push_back({"values", quoted_rows(t, grid, scale)});
  return g;
}

LibertyGroup cell_group(const std::string& cell_name, const CharTable& t, bool two_d,
                        const std::string& in_pin, const std::string& out_pin,
                        const std::string& lu_tmpl, const std::string& pw_tmpl) {
  LibertyGroup cell;
  cell.type = "cell";
  cell.name = cell_name;

  LibertyGroup pin_in;
  pin_in.type = "pin";
  pin_in.name = in_pin;
  pin_in.attrs.push_back({"direction", "input"});
  pin_in.attrs.push_back({"capacitance", fmt(t.c_in_F * 1e12)});
  cell.children.push_back(pin_in);

  LibertyGroup pin_out;
  pin_out.type = "pin";
  pin_out.name = out_pin;
  pin_out.attrs.push_back({"direction", "output"});

  LibertyGroup timing;
  timing.type = "timing";
  timing.attrs.push_back({"related_pin", "\"" + in_pin + "\""});
  timing.attrs.push_back({"timing_sense", "positive_unate"});
  timing.children.push_back(table_group("cell_rise", lu_tmpl, t, t.delay_rise_s, 1e9, two_d));
  timing.children.push_back(table_group("rise_transition", lu_tmpl, t, t.slew_rise_s, 1e9, two_d));
  timing.children.push_back(table_group("cell_fall", lu_tmpl, t, t.delay_fall_s, 1e9, two_d));
  timing.children.push_back(table_group("fall_transition", lu_tmpl, t, t.slew_fall_s, 1e9, two_d));
  pin_out.children.push_back(timing);

  LibertyGroup power;
  power.type = "internal_power";
  power.attrs.push_back({"related_pin", "\"" + in_pin + "\""});
  // Energy per transition in mW x ns = pJ.
  power.children.push_back(
      table_group("rise_power", pw_tmpl, t, t.energy_per_transition_J, 1e12, two_d));
  power.children.push_back(
      table_group("fall_power", pw_tmpl, t, t.energy_per_transition_J, 1e12, two_d));
  pin_out.children.push_back(power);

  cell.children.push_back(pin_out);
  return cell;
}

LibertyGroup template_group(const std::string& type, const std::string& name, const CharTable& t,
                            bool two_d) {
  LibertyGroup g;
  g.type = type;
  g.name = name;
  g.attrs.push_back({"variable_1", "input_net_transition"});
  if (two_d) g.attrs.push_back({"variable_2", "total_output_net_capacitance"});
  g.complex_attrs.push_back({"index_1", {quoted_axis(t.slews_s, 1e9)}});
  if (two_d) g.complex_attrs.push_back({"index_2", {quoted_axis(t.loads_F, 1e12)}});
  return g;
}

void indent(std::string& out, int depth) { out.append(depth * 2, ' '); }

void serialize_group(const LibertyGroup& g, std::string& out, int depth) {
  indent(out, depth);
  out += g.type + " (" + g.name + ") {\n";
  for (const auto& [k, v] : g.attrs) {
    indent(out, depth + 1);
    out += k + " : " + v + ";\n";
  }
  for (const auto& [k, args] : g.complex_attrs) {
    if (k == "values") {
      indent(out, depth + 1);
      out += k + " ( \\\n";
      for (size_t i = 0; i < args.size(); ++i) {
        indent(out, depth + 2);
        out += args[i];
        out += i + 1 < args.size() ? ", \\\n" : " \\\n";
      }
      indent(out, depth + 1);
      out += ");\n";
    } else {
      indent(out, depth + 1);
      out += k + " (";
      for (size_t i = 0; i < args.size(); ++i) {
        if (i) out += ", ";
        out += args[i];
      }
      out += ");\n";
    }
  }
  for (const auto& child : g.children) serialize_group(child, out, depth + 1);
  indent(out, depth);
  out += "}\n";
}

}  // namespace

std::string serialize_liberty(const LibertyGroup& root) {
  std::string out;
  serialize_group(root, out, 0);
  return out;
}

std::string write_liberty(const LibertyInput& in) {
  bool tx_2d = true;
  bool rx_2d = in.rx.loads_F.size() > 1;

  LibertyGroup lib;
  lib.type = "library";
  lib.name = in.library_name;
  lib.attrs.push_back({"comment", "\"generated d2d link library, fingerprint " +
                                      std::to_string(in.config_fingerprint) + "\""});
  lib.attrs.push_back({"delay_model", "table_lookup"});
  lib.attrs.push_back({"time_unit", "\"1ns\""});
  lib.attrs.push_back({"voltage_unit", "\"1V\""});
  lib.attrs.push_back({"current_unit", "\"1mA\""});
  lib.attrs.push_back({"pulling_resistance_unit", "\"1kohm\""});
  lib.attrs.push_back({"leakage_power_unit", "\"1mW\""});
  lib.attrs.push_back({"nom_voltage", fmt(in.vdd_V)});
  lib.complex_attrs.push_back({"capacitive_load_unit", {"1", "pf"}});

  lib.children.push_back(template_group("lu_table_template", "tx_lu", in.tx, tx_2d));
  lib.children.push_back(template_group("power_lut_template", "tx_pw", in.tx, tx_2d));
  lib.children.push_back(template_group("lu_table_template", "rx_lu", in.rx, rx_2d));
  lib.children.push_back(template_group("power_lut_template", "rx_pw", in.rx, rx_2d));
  lib.children.push_back(cell_group("txip", in.tx, tx_2d, "din", "pad", "tx_lu", "tx_pw"));
  lib.children.push_back(cell_group("rxip", in.rx, rx_2d, "pad", "dout", "rx_lu", "rx_pw"));

  return serialize_liberty(lib);
}

// ---------------------------------------------------------------------------
// Reader.

namespace {

struct Lexer {
  const std::string& s;
  size_t pos = 0;

  void skip_ws() {
    while (pos < s.size()) {
      char c = s[pos];
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        ++pos;
      } else if (c == '\\' && pos + 1 < s.size() && (s[pos + 1] == '\n' || s[pos + 1] == '\r')) {
        pos += 2;  // line continuation
      } else if (c == '/' && pos + 1 < s.size() && s[pos + 1] == '*') {
        size_t end = s.find("*/", pos + 2);
        if (end == std::string::npos) throw std::runtime_error("liberty: unterminated comment");
        pos = end + 2;
      } else {
        break;
      }
    }
  }

  bool eof() {
    skip_ws();
    return pos >= s.size();
  }

  char peek() {
    skip_ws();
    return s[pos];
  }

  char take() {
    skip_ws();
    return s[pos++];
  }

  std::string token() {
    skip_ws();
    if (s[pos] == '"') {
      size_t end = s.find('"', pos + 1);
      if (end == std::string::npos) throw std::runtime_error("liberty: unterminated string");
      std::string out = s.substr(pos, end - pos + 1);
      pos = end + 1;
      return out;
    }
    size_t start = pos;
    while (pos < s.size() && !strchr(" \t\n\r(){}:;,\\", s[pos])) ++pos;
    if (pos == start) throw std::runtime_error("liberty: unexpected character");
    return s.substr(start, pos - start);
  }
};

LibertyGroup parse_group(Lexer& lex, const std::string& type) {
  LibertyGroup g;
  g.type = type;
  if (lex.take() != '(') throw std::runtime_error("liberty: expected (");
  if (lex.peek() != ')') g.name = lex.token();
  if (lex.take() != ')') throw std::runtime_error("liberty: expected )");
  if (lex.take() != '{') throw std::runtime_error("liberty: expected {");

  while (lex.peek() != '}') {
    std::string key = lex.token();
    char c = lex.peek();
    if (c == ':') {
      lex.take();
      std::string value = lex.token();
      if (lex.take() != ';') throw std::runtime_error("liberty: expected ; after attribute");
      g.attrs.push_back({key, value});
    } else if (c == '(') {
      // group or complex attribute; decided by what follows the ')'
      size_t save = lex.pos;
      lex.take();
      std::vector<std::string> args;
      while (lex.peek() != ')') {
        args.push_back(lex.token());
        if (lex.peek() == ',') lex.take();
      }
      lex.take();  // ')'
      if (lex.peek() == '{') {
        lex.pos = save;
        g.children.push_back(parse_group(lex, key));
      } else {
        if (lex.take() != ';') throw std::runtime_error("liberty: expected ; after complex attr");
        g.complex_attrs.push_back({key, std::move(args)});
      }
    } else {
      throw std::runtime_error("liberty: unexpected token after " + key);
    }
  }
  lex.take();  // '}'
  return g;
}

std::vector<double> parse_numbers(const std::string& quoted) {
  std::string body = quoted;
  if (body.size() >= 2 && body.front() == '"' && body.back() == '"')
    body = body.substr(1, body.size() - 2);
  std::vector<double> out;
  std::istringstream iss(body);
  std::string tok;
  while (std::getline(iss, tok, ',')) {
    size_t a = tok.find_first_not_of(" \t");
    size_t b = tok.find_last_not_of(" \t");
    if (a == std::string::npos) continue;
    out.push_back(std::strtod(tok.substr(a, b - a + 1).c_str(), nullptr));
  }
  return out;
}

const LibertyGroup* find_child(const LibertyGroup& g, const std::string& type,
                               const std::string& name = "") {
  for (const auto& ch : g.children)
    if (ch.type == type && (name.empty() || ch.name == name)) return &ch;
  return nullptr;
}

const std::vector<std::string>* find_complex(const LibertyGroup& g, const std::string& key) {
  for (const auto& [k, v] : g.complex_attrs)
    if (k == key) return &v;
  return nullptr;
}

void read_table(const LibertyGroup& tbl, std::vector<double>& slews, std::vector<double>& loads,
                std::vector<double>& grid, double scale) {
  const auto* i1 = find_complex(tbl, "index_1");
  if (i1 && !i1->empty()) {
    slews.clear();
    for (double v : parse_numbers(i1->front())) slews.push_back(v * 1e-9);
  }
  const auto* i2 = find_complex(tbl, "index_2");
  if (i2 && !i2->empty()) {
    loads.clear();
    for (double v : parse_numbers(i2->front())) loads.push_back(v * 1e-12);
  }
  const auto* vals = find_complex(tbl, "values");
  if (!vals) throw std::runtime_error("liberty: table without values");
  grid.clear();
  for (const auto& row : *vals)
    for (double v : parse_numbers(row)) grid.push_back(v * scale);
}

CharTable extract_cell(const LibertyGroup& cell, const std::string& in_pin,
                       const std::string& out_pin) {
  CharTable t;
  const auto* pi = find_child(cell, "pin", in_pin);
  if (!pi) throw std::runtime_error("liberty: missing input pin");
  for (const auto& [k, v] : pi->attrs)
    if (k == "capacitance") t.c_in_F = std::strtod(v.c_str(), nullptr) * 1e-12;

  const auto* po = find_child(cell, "pin", out_pin);
  if (!po) throw std::runtime_error("liberty: missing output pin");
  const auto* timing = find_child(*po, "timing");
  if (!timing) throw std::runtime_error("liberty: missing timing group");

  t.loads_F = {0.0};  // replaced when index_2 is present
  if (const auto* g = find_child(*timing, "cell_rise"))
    read_table(*g, t.slews_s, t.loads_F, t.delay_rise_s, 1e-9);
  if (const auto* g = find_child(*timing, "rise_transition"))
    read_table(*g, t.slews_s, t.loads_F, t.slew_rise_s, 1e-9);
  if (const auto* g = find_child(*timing, "cell_fall"))
    read_table(*g, t.slews_s, t.loads_F, t.delay_fall_s, 1e-9);
  if (const auto* g = find_child(*timing, "fall_transition"))
    read_table(*g, t.slews_s, t.loads_F, t.slew_fall_s, 1e-9);

  const auto* power = find_child(*po, "internal_power");
  if (power) {
    if (const auto* g = find_child(*power, "rise_power"))
      read_table(*g, t.slews_s, t.loads_F, t.energy_per_transition_J, 1e-12);
  }
  return t;
}

}  // namespace

LibertyGroup parse_liberty(const std::string& text) {
  Lexer lex{text};
  std::string type = lex.token();
  LibertyGroup root = parse_group(lex, type);
  if (!lex.eof()) throw std::runtime_error("liberty: trailing content after library group");
  return root;
}

LibertyTables extract_liberty_tables(const LibertyGroup& root) {
  LibertyTables out;
  const auto* tx = find_child(root, "cell", "txip");
  const auto* rx = find_child(root, "cell", "rxip");
  if (!tx || !rx) throw std::runtime_error("liberty: expected cells txip and rxip");
  out.tx = extract_cell(*tx, "din", "pad");
  out.rx = extract_cell(*rx, "pad", "dout");
  return out;
}

}  // namespace chiplink::collateral
