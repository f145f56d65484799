#include "chiplink/simcore.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

namespace chiplink::simcore {

namespace {

std::atomic<std::uint64_t> g_char_campaigns{0};

// Dense LU with partial pivoting; networks stay small (tens of nodes).
class DenseLU {
 public:
  void factor(const std::vector<double>& a, int n, const Network* net_for_diag) {
    n_ = n;
    lu_ = a;
    piv_.resize(n);
    for (int k = 0; k < n; ++k) {
      int p = k;
      double best = std::abs(lu_[k * n + k]);
      for (int i = k + 1; i < n; ++i) {
        double v = std::abs(lu_[i * n + k]);
        if (v > best) {
          best = v;
          p = i;
        }
      }
      if (best < 1e-300) {
        std::string label = net_for_diag ? net_for_diag->label(k) : std::to_string(k);
        throw SolverError("singular conductance matrix at node '" + label +
                          "' (no path to a fixed potential?)");
      }
      piv_[k] = p;
      if (p != k)
        for (int j = 0; j < n; ++j) std::swap(lu_[k * n + j], lu_[p * n + j]);
      double inv = 1.0 / lu_[k * n + k];
      for (int i = k + 1; i < n; ++i) {
        double f = lu_[i * n + k] * inv;
        lu_[i * n + k] = f;
        for (int j = k + 1; j < n; ++j) lu_[i * n + j] -= f * lu_[k * n + j];
      }
    }
  }

  void solve(std::vector<double>& b) const {
    for (int k = 0; k < n_; ++k) {
      if (piv_[k] != k) std::swap(b[k], b[piv_[k]]);
      for (int i = k + 1; i < n_; ++i) b[i] -= lu_[i * n_ + k] * b[k];
    }
    for (int i = n_ - 1; i >= 0; --i) {
      for (int j = i + 1; j < n_; ++j) b[i] -= lu_[i * n_ + j] * b[j];
      b[i] /= lu_[i * n_ + i];
    }
  }

 private:
  int n_ = 0;
  std::vector<double> lu_;
  std::vector<int> piv_;
};

struct Stimulus {
  bool rising = true;
  double t_ramp = 0.0;  // full 0-100% ramp duration
  double vdd = 0.0;

  double at(double t) const {
    double x = t_ramp <= 0.0 ? (t > 0.0 ? 1.0 : 0.0) : std::clamp(t / t_ramp, 0.0, 1.0);
    return rising ? x * vdd : (1.0 - x) * vdd;
  }
};

struct Assembled {
  int n = 0;
  std::vector<double> cmat;       // n*n, fixed
  std::vector<double> cmat_sig;   // term-group caps excluded (tau estimate)
  std::vector<double> stim_ccol;  // per node: cap coupling to the stimulus
};

double rail_voltage(NodeRef r, double vdd, double vterm) {
  switch (r) {
    case kGround: return 0.0;
    case kVdd: return vdd;
    case kVterm: return vterm;
    default: return 0.0;
  }
}

void assemble_caps(const Network& net, Assembled& as) {
  int n = net.node_count();
  as.n = n;
  as.cmat.assign(n * n, 0.0);
  as.cmat_sig.assign(n * n, 0.0);
  as.stim_ccol.assign(n, 0.0);
  for (const auto& c : net.capacitors) {
    bool a_solved = c.a >= 0, b_solved = c.b >= 0;
    auto stamp = [&](std::vector<double>& m) {
      if (a_solved) m[c.a * n + c.a] += c.c;
      if (b_solved) m[c.b * n + c.b] += c.c;
      if (a_solved && b_solved) {
        m[c.a * n + c.b] -= c.c;
        m[c.b * n + c.a] -= c.c;
      }
    };
    stamp(as.cmat);
    if (c.group != Group::term) stamp(as.cmat_sig);
    if (a_solved && c.b == kStim) as.stim_ccol[c.a] += c.c;
    if (b_solved && c.a == kStim) as.stim_ccol[c.b] += c.c;
  }
  for (const auto& inv : net.inverters) {
    if (inv.input >= 0) {
      as.cmat[inv.input * n + inv.input] += inv.p.c_in_F;
      as.cmat_sig[inv.input * n + inv.input] += inv.p.c_in_F;
    } else if (inv.input == kStim) {
      // gate cap on the driven node; no dynamics to solve
    }
    as.cmat[inv.output * n + inv.output] += inv.p.c_out_F;
    as.cmat_sig[inv.output * n + inv.output] += inv.p.c_out_F;
  }
}

// G and the constant part of the source vector for one device-state vector.
// states[i] = true means the inverter output is pulled down (input high).
void assemble_g(const Network& net, const std::vector<bool>& states, std::vector<double>& g,
                std::vector<double>& u_const, std::vector<double>& u_stim_coeff) {
  int n = net.node_count();
  g.assign(n * n, 0.0);
  u_const.assign(n, 0.0);
  u_stim_coeff.assign(n, 0.0);
  double vdd = net.vdd(), vterm = net.vterm();
  for (const auto& r : net.resistors) {
    bool a_solved = r.a >= 0, b_solved = r.b >= 0;
    if (a_solved) g[r.a * n + r.a] += r.g;
    if (b_solved) g[r.b * n + r.b] += r.g;
    if (a_solved && b_solved) {
      g[r.a * n + r.b] -= r.g;
      g[r.b * n + r.a] -= r.g;
    } else if (a_solved) {
      if (r.b == kStim)
        u_stim_coeff[r.a] += r.g;
      else
        u_const[r.a] += r.g * rail_voltage(r.b, vdd, vterm);
    } else if (b_solved) {
      if (r.a == kStim)
        u_stim_coeff[r.b] += r.g;
      else
        u_const[r.b] += r.g * rail_voltage(r.a, vdd, vterm);
    }
  }
  for (size_t i = 0; i < net.inverters.size(); ++i) {
    const auto& inv = net.inverters[i];
    int o = inv.output;
    if (states[i]) {
      g[o * n + o] += 1.0 / inv.p.r_on_n_ohm;  // pull-down to ground
    } else {
      double gp = 1.0 / inv.p.r_on_p_ohm;
      g[o * n + o] += gp;
      u_const[o] += gp * vdd;
    }
  }
}

double input_voltage(const Network& net, const Network::Inverter& inv,
                     const std::vector<double>& v, const Stimulus& stim, double t) {
  if (inv.input >= 0) return v[inv.input];
  if (inv.input == kStim) return stim.at(t);
  return rail_voltage(inv.input, net.vdd(), net.vterm());
}

// Largest time constant of (G^-1 C_sig) by power iteration. Rails are treated
// as AC ground; the termination-hold caps are excluded so a megaohm bias pole
// cannot dominate the estimate.
double dominant_tau(const Network& net, const Assembled& as, const std::vector<double>& gmat) {
  int n = as.n;
  double csum = 0.0;
  for (int i = 0; i < n; ++i) csum += as.cmat_sig[i * n + i];
  if (csum <= 0.0 || n == 0) return 0.0;
  DenseLU lu;
  lu.factor(gmat, n, &net);
  std::vector<double> x(n, 1.0), y(n);
  double tau = 0.0;
  for (int it = 0; it < 12; ++it) {
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += as.cmat_sig[i * n + j] * x[j];
      y[i] = s;
    }
    lu.solve(y);
    double norm = 0.0;
    for (double v : y) norm = std::max(norm, std::abs(v));
    if (norm <= 0.0) return 0.0;
    tau = norm;
    for (int i = 0; i < n; ++i) x[i] = y[i] / norm;
  }
  return tau;
}

struct WaveStore {
  std::vector<int> nodes;
  std::vector<double> t;
  std::vector<std::vector<double>> v;  // per node

  void push(double time, const std::vector<double>& sol) {
    t.push_back(time);
    for (size_t k = 0; k < nodes.size(); ++k) v[k].push_back(sol[nodes[k]]);
  }
};

double interp_crossing(const std::vector<double>& t, const std::vector<double>& v, double level,
                       bool upward) {
  for (size_t i = 1; i < t.size(); ++i) {
    bool hit = upward ? (v[i - 1] < level && v[i] >= level) : (v[i - 1] > level && v[i] <= level);
    if (hit) {
      double f = (level - v[i - 1]) / (v[i] - v[i - 1]);
      return t[i - 1] + f * (t[i] - t[i - 1]);
    }
  }
  return -1.0;
}

}  // namespace

NodeRef Network::add_node(std::string label) {
  labels_.push_back(std::move(label));
  return static_cast<NodeRef>(labels_.size() - 1);
}

void Network::add_resistor(NodeRef a, NodeRef b, double ohms, Group g) {
  if (ohms <= 0.0) throw SolverError("resistor must have positive resistance");
  resistors.push_back({a, b, 1.0 / ohms, g});
}

void Network::add_capacitor(NodeRef a, NodeRef b, double farads, Group g) {
  if (farads < 0.0) throw SolverError("capacitor must be non-negative");
  if (farads > 0.0) capacitors.push_back({a, b, farads, g});
}

void Network::add_inverter(NodeRef input, NodeRef output, const DeviceParams& p, Group g) {
  if (output < 0) throw SolverError("inverter output must be a solved node");
  inverters.push_back({input, output, p, g});
}

TransientResult solve_transient(const Network& net, const Edge& stimulus,
                                std::vector<int> probe_nodes, const SolveOptions& opt) {
  const int n = net.node_count();
  const double vdd = net.vdd();
  const double vth = vdd / 2.0;
  const double hysteresis = 1e-9 * std::max(vdd, 1.0);

  Stimulus stim;
  stim.rising = stimulus.rising;
  stim.t_ramp = stimulus.slew_20_80_s / 0.6;
  stim.vdd = vdd;

  Assembled as;
  assemble_caps(net, as);

  // Initial device states from the pre-edge DC: forward propagation then a
  // consistency iteration against the linear DC solution.
  std::vector<bool> states(net.inverters.size(), false);
  {
    std::vector<double> level(n, 0.0);
    for (size_t i = 0; i < net.inverters.size(); ++i) {
      const auto& inv = net.inverters[i];
      double vin = inv.input >= 0 ? level[inv.input]
                                  : (inv.input == kStim ? stim.at(0.0)
                                                        : rail_voltage(inv.input, vdd, net.vterm()));
      states[i] = vin > vth;
      level[inv.output] = states[i] ? 0.0 : vdd;
    }
    std::vector<double> g, u0, us;
    std::vector<double> v(n, 0.0);
    for (int pass = 0; pass < 6; ++pass) {
      assemble_g(net, states, g, u0, us);
      std::vector<double> rhs(n);
      for (int i = 0; i < n; ++i) rhs[i] = u0[i] + us[i] * stim.at(0.0);
      DenseLU lu;
      lu.factor(g, n, &net);
      lu.solve(rhs);
      v = rhs;
      bool changed = false;
      for (size_t i = 0; i < net.inverters.size(); ++i) {
        double vin = input_voltage(net, net.inverters[i], v, stim, 0.0);
        bool want = vin > vth;
        if (want != states[i]) {
          states[i] = want;
          changed = true;
        }
      }
      if (!changed) break;
    }
  }

  std::vector<double> gmat, u_const, u_stim;
  assemble_g(net, states, gmat, u_const, u_stim);
  double tau = dominant_tau(net, as, gmat);

  double settle = opt.t_end_s;
  if (settle <= 0.0)
    settle = stim.t_ramp + opt.settle_tau_factor * std::max(tau, stim.t_ramp * 0.05 + 1e-15);
  const double t_end = settle;

  double h_fine = stim.t_ramp > 0.0 ? stim.t_ramp / 40.0 : t_end;
  double h_coarse = tau > 0.0 ? tau / 150.0 : t_end / 400.0;
  h_fine = std::min(h_fine, h_coarse);
  h_fine *= opt.time_step_scale;
  h_coarse *= opt.time_step_scale;
  // Keep at least a few hundred samples and respect the step budget.
  h_coarse = std::min(h_coarse, t_end / 400.0);
  double min_h = t_end / std::max(opt.max_steps, 1000);
  h_fine = std::max(h_fine, min_h);
  h_coarse = std::max(h_coarse, min_h);

  // DC initial condition.
  std::vector<double> v(n, 0.0);
  {
    std::vector<double> rhs(n);
    for (int i = 0; i < n; ++i) rhs[i] = u_const[i] + u_stim[i] * stim.at(0.0);
    DenseLU lu;
    lu.factor(gmat, n, &net);
    lu.solve(rhs);
    v = rhs;
  }
  const std::vector<double> v_init = v;

  WaveStore waves;
  waves.nodes = probe_nodes;
  waves.v.resize(probe_nodes.size());
  waves.push(0.0, v);

  TransientResult res;
  res.stim_t50_s = stim.t_ramp / 2.0;
  res.dt_s = h_coarse;

  DenseLU lu_step;
  double lu_h = -1.0;
  bool lu_valid = false;
  std::vector<double> amat(n * n);

  auto refactor = [&](double h) {
    for (int i = 0; i < n * n; ++i) amat[i] = as.cmat[i] / h + 0.5 * gmat[i];
    lu_step.factor(amat, n, &net);
    lu_h = h;
    lu_valid = true;
  };

  auto meter_energy = [&](const std::vector<double>& v0, const std::vector<double>& v1, double t0,
                          double t1) {
    double h = t1 - t0;
    for (size_t i = 0; i < net.inverters.size(); ++i) {
      if (states[i]) continue;  // pull-down: no supply draw
      const auto& inv = net.inverters[i];
      double gp = 1.0 / inv.p.r_on_p_ohm;
      double i0 = gp * (vdd - v0[inv.output]);
      double i1 = gp * (vdd - v1[inv.output]);
      double e = vdd * 0.5 * (i0 + i1) * h;
      res.e_supply_J += e;
      if (inv.group == Group::tx_device)
        res.e_supply_tx_J += e;
      else
        res.e_supply_rx_J += e;
    }
    for (const auto& r : net.resistors) {
      // vdd-rail draw through passive resistors (bias dividers).
      NodeRef other = kGround;
      if (r.a == kVdd)
        other = r.b;
      else if (r.b == kVdd)
        other = r.a;
      else
        continue;
      double vo0 = other >= 0 ? v0[other] : rail_voltage(other, vdd, net.vterm());
      double vo1 = other >= 0 ? v1[other] : rail_voltage(other, vdd, net.vterm());
      res.e_supply_J += vdd * 0.5 * (r.g * (vdd - vo0) + r.g * (vdd - vo1)) * h;
    }
    for (const auto& r : net.resistors) {
      if (r.group != Group::term) continue;
      auto volt = [&](NodeRef nref, const std::vector<double>& sol, double t) {
        if (nref >= 0) return sol[nref];
        if (nref == kStim) return stim.at(t);
        return rail_voltage(nref, vdd, net.vterm());
      };
      double i0 = r.g * (volt(r.a, v0, t0) - volt(r.b, v0, t0));
      double i1 = r.g * (volt(r.a, v1, t1) - volt(r.b, v1, t1));
      res.q_term_C += 0.5 * (i0 + i1) * h;
    }
  };

  std::vector<double> rhs(n), v_next(n);
  auto advance = [&](const double t0, const double h) {
    if (!lu_valid || lu_h != h) refactor(h);
    double t1 = t0 + h;
    double vs0 = stim.at(t0), vs1 = stim.at(t1);
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += (as.cmat[i * n + j] / h - 0.5 * gmat[i * n + j]) * v[j];
      acc += u_const[i] + 0.5 * u_stim[i] * (vs0 + vs1);
      acc += as.stim_ccol[i] * (vs1 - vs0) / h;
      rhs[i] = acc;
    }
    lu_step.solve(rhs);
    v_next = rhs;
  };

  double t = 0.0;
  int guard = 0;
  const double fine_until = stim.t_ramp;
  while (t < t_end - 1e-24 && res.steps < opt.max_steps) {
    double h = (t < fine_until ? h_fine : h_coarse);
    h = std::min(h, t_end - t);
    if (t < fine_until) h = std::min(h, fine_until - t + h_fine * 1e-9);

    advance(t, h);

    // Earliest device toggle within the step, if any.
    double theta_min = 2.0;
    int toggled = -1;
    for (size_t i = 0; i < net.inverters.size(); ++i) {
      const auto& inv = net.inverters[i];
      double vin0 = input_voltage(net, inv, v, stim, t);
      double vin1 = input_voltage(net, inv, v_next, stim, t + h);
      bool want1 = vin1 > vth;
      if (want1 == states[i]) continue;
      if (std::abs(vin1 - vin0) < hysteresis) continue;
      double theta = (vth - vin0) / (vin1 - vin0);
      theta = std::clamp(theta, 0.0, 1.0);
      if (theta < theta_min) {
        theta_min = theta;
        toggled = static_cast<int>(i);
      }
    }

    if (toggled >= 0 && guard < 64) {
      ++guard;
      double h1 = theta_min * h;
      if (h1 > min_h * 0.01) {
        advance(t, h1);
        meter_energy(v, v_next, t, t + h1);
        v = v_next;
        t += h1;
        waves.push(t, v);
        ++res.steps;
      }
      states[toggled] = !states[toggled];
      assemble_g(net, states, gmat, u_const, u_stim);
      lu_valid = false;
      continue;
    }
    guard = 0;

    meter_energy(v, v_next, t, t + h);
    v = v_next;
    t += h;
    waves.push(t, v);
    ++res.steps;
  }

  // Positive charge delivered into non-device elements.
  for (const auto& c : net.capacitors) {
    if (c.group != Group::channel && c.group != Group::eq && c.group != Group::load) continue;
    auto volt = [&](NodeRef nref, const std::vector<double>& sol, double tt) {
      if (nref >= 0) return sol[nref];
      if (nref == kStim) return stim.at(tt);
      return rail_voltage(nref, vdd, net.vterm());
    };
    double d0 = volt(c.a, v_init, 0.0) - volt(c.b, v_init, 0.0);
    double d1 = volt(c.a, v, t) - volt(c.b, v, t);
    double dq = c.c * (d1 - d0);
    if (dq > 0.0) {
      if (c.group == Group::load)
        res.q_ext_load_C += dq;
      else
        res.q_ext_channel_C += dq;
    }
  }

  // Probe measurements against each waveform's own transition window.
  for (size_t k = 0; k < probe_nodes.size(); ++k) {
    Probe p;
    p.node = probe_nodes[k];
    const auto& w = waves.v[k];
    p.v_start = w.front();
    p.v_end = w.back();
    double window = p.v_end - p.v_start;
    if (std::abs(window) > 1e-6 * std::max(vdd, 1.0)) {
      bool up = window > 0.0;
      double l20 = p.v_start + 0.2 * window;
      double l50 = p.v_start + 0.5 * window;
      double l80 = p.v_start + 0.8 * window;
      double t20 = interp_crossing(waves.t, w, l20, up);
      double t50 = interp_crossing(waves.t, w, l50, up);
      double t80 = interp_crossing(waves.t, w, l80, up);
      if (t20 >= 0.0 && t50 >= 0.0 && t80 >= 0.0) {
        p.crossed = true;
        p.t_50_s = t50;
        p.slew_20_80_s = std::abs(t80 - t20);
      }
    }
    res.probes.push_back(p);
  }

  if (!opt.dump_waveforms_path.empty()) {
    std::ofstream out(opt.dump_waveforms_path);
    for (size_t k = 0; k < probe_nodes.size(); ++k) {
      out << "# node " << net.label(probe_nodes[k]) << "\n";
      for (size_t i = 0; i < waves.t.size(); ++i) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.9e %.9e\n", waves.t[i], waves.v[k][i]);
        out << buf;
      }
      out << "\n";
    }
  }

  return res;
}

InterpResult interpolate(const CharTable& t, double slew_s, double load_F, bool rising) {
  if (t.slews_s.empty() || t.loads_F.empty()) throw SolverError("interpolate: empty table");
  InterpResult out;

  auto bracket = [](const std::vector<double>& axis, double q, bool& clamped) {
    struct B {
      size_t lo, hi;
      double f;
    };
    if (axis.size() == 1) return B{0, 0, 0.0};
    if (q <= axis.front()) {
      if (q < axis.front()) clamped = true;
      return B{0, 1, 0.0};
    }
    if (q >= axis.back()) {
      if (q > axis.back()) clamped = true;
      return B{axis.size() - 2, axis.size() - 1, 1.0};
    }
    size_t hi = std::upper_bound(axis.begin(), axis.end(), q) - axis.begin();
    size_t lo = hi - 1;
    double f = (q - axis[lo]) / (axis[hi] - axis[lo]);
    return B{lo, hi, f};
  };

  bool clamped = false;
  auto bs = bracket(t.slews_s, slew_s, clamped);
  auto bl = bracket(t.loads_F, load_F, clamped);

  auto bilinear = [&](const std::vector<double>& grid) {
    double v00 = t.at(grid, bs.lo, bl.lo);
    double v01 = t.at(grid, bs.lo, bl.hi);
    double v10 = t.at(grid, bs.hi, bl.lo);
    double v11 = t.at(grid, bs.hi, bl.hi);
    double a = v00 + (v01 - v00) * bl.f;
    double b = v10 + (v11 - v10) * bl.f;
    return a + (b - a) * bs.f;
  };

  out.delay_s = bilinear(rising ? t.delay_rise_s : t.delay_fall_s);
  out.slew_out_s = bilinear(rising ? t.slew_rise_s : t.slew_fall_s);
  out.energy_J = bilinear(t.energy_per_transition_J);
  out.clamped = clamped;
  return out;
}

CharTable characterize(const CharRequest& req, const DownstreamBuilder& down) {
  if (req.slews_s.empty() || req.loads_F.empty())
    throw SolverError("characterize: slew and load axes must be non-empty");
  if (!std::is_sorted(req.slews_s.begin(), req.slews_s.end()) ||
      !std::is_sorted(req.loads_F.begin(), req.loads_F.end()))
    throw SolverError("characterize: axes must ascend");
  if (req.stages.empty()) throw SolverError("characterize: empty stage chain");

  g_char_campaigns.fetch_add(1, std::memory_order_relaxed);

  CharTable table;
  table.slews_s = req.slews_s;
  table.loads_F = req.loads_F;
  size_t cells = table.cells();
  table.delay_rise_s.assign(cells, 0.0);
  table.delay_fall_s.assign(cells, 0.0);
  table.slew_rise_s.assign(cells, 0.0);
  table.slew_fall_s.assign(cells, 0.0);
  table.energy_per_transition_J.assign(cells, 0.0);
  // Q/V of the driven input: with threshold-switched stages the integral of
  // the input charge over a full swing reduces to the attached gate cap.
  table.c_in_F = req.stages.front().c_in_F;

  std::vector<std::string> errors(cells);
  std::atomic<size_t> next{0};

  auto run_cell = [&](size_t cell) {
    size_t si = cell / table.loads_F.size();
    size_t li = cell % table.loads_F.size();
    try {
      double e_int_sum = 0.0;
      for (bool rising : {true, false}) {
        Network net;
        net.set_vdd(req.vdd_V);
        NodeRef in = kStim;
        for (size_t s = 0; s < req.stages.size(); ++s) {
          NodeRef out = net.add_node("s" + std::to_string(s));
          net.add_inverter(in, out, req.stages[s], req.device_group);
          in = out;
        }
        DownstreamPorts ports = down.build(net, in);
        net.add_capacitor(ports.load, kGround, table.loads_F[li], Group::load);

        Edge edge{rising, table.slews_s[si]};
        SolveOptions so = req.solve;
        TransientResult r = solve_transient(net, edge, {ports.probe}, so);
        const Probe& p = r.probes[0];
        if (!p.crossed)
          throw SolverError("probe never completed its transition");
        // Even stage counts keep polarity: rising stimulus = rising probe.
        double delay = r.delay_50_s(0);
        double e_sup = req.device_group == Group::tx_device ? r.e_supply_tx_J : r.e_supply_rx_J;
        // Everything downstream is charged through the characterized chain.
        double q_out = r.q_ext_channel_C + r.q_ext_load_C + std::max(r.q_term_C, 0.0);
        double e_int = std::max(e_sup - req.vdd_V * q_out, 0.0);
        e_int_sum += e_int;
        size_t idx = si * table.loads_F.size() + li;
        if (rising) {
          table.delay_rise_s[idx] = delay;
          table.slew_rise_s[idx] = p.slew_20_80_s;
        } else {
          table.delay_fall_s[idx] = delay;
          table.slew_fall_s[idx] = p.slew_20_80_s;
        }
      }
      size_t idx = si * table.loads_F.size() + li;
      table.energy_per_transition_J[idx] = 0.5 * e_int_sum * (1.0 + req.sc_fraction);
    } catch (const std::exception& e) {
      errors[cell] = std::string(e.what()) + " (slew index " + std::to_string(si) +
                     ", load index " + std::to_string(li) + ")";
    }
  };

  int workers = std::max(1, std::min<int>(req.workers, static_cast<int>(cells)));
  if (workers == 1) {
    for (size_t c = 0; c < cells; ++c) run_cell(c);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (size_t c = next.fetch_add(1); c < cells; c = next.fetch_add(1)) run_cell(c);
      });
    for (auto& th : pool) th.join();
  }

  for (size_t c = 0; c < cells; ++c)
    if (!errors[c].empty()) throw SolverError("characterize: " + errors[c]);
  return table;
}

std::uint64_t char_campaign_count() { return g_char_campaigns.load(std::memory_order_relaxed); }
void reset_char_campaign_count() { g_char_campaigns.store(0, std::memory_order_relaxed); }

}  // namespace chiplink::simcore
