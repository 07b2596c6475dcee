// Copyright 2026 The cqi-sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// cqi-sim: runs the experiment pipelines from JSON configs and writes CSV / JSON
// tables with a header block (resolved config, tool version, timestamp).
//
// Exit codes: 0 ok, 1 config error, 2 numerical validation failure,
// 3 invariant violation.

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "cqi/chain.hpp"
#include "cqi/epr.hpp"
#include "cqi/parallel.hpp"
#include "cqi/postulates.hpp"
#include "cqi/random.hpp"
#include "cqi/realism.hpp"
#include "cqi/version.hpp"
#include "cqi/zeno.hpp"

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;
using cqi::Complex;
using cqi::ConfigError;
using cqi::Matrix;
using cqi::Vector;

// ---------------------------------------------------------------------------
// Config access. Every key read is copied (with its default filled in) into the
// resolved config; keys that are never read are rejected.

class Node {
 public:
  Node(const json& j, std::string path, json& out) : j_(j), path_(std::move(path)), out_(out) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "(document)" : path_, "must be an object");
    out_ = json::object();
  }

  bool has(const std::string& k) const { return j_.contains(k); }

  double number(const std::string& k, std::optional<double> def = std::nullopt) {
    const json* v = lookup(k, def.has_value());
    const double x = v ? as_number(*v, field(k)) : *def;
    if (!std::isfinite(x)) throw ConfigError(field(k), "must be finite");
    out_[k] = x;
    return x;
  }

  long long integer(const std::string& k, std::optional<long long> def = std::nullopt) {
    const json* v = lookup(k, def.has_value());
    long long x = def.value_or(0);
    if (v) {
      if (!v->is_number_integer()) throw ConfigError(field(k), "must be an integer");
      x = v->get<long long>();
    }
    out_[k] = x;
    return x;
  }

  std::string string(const std::string& k, std::optional<std::string> def = std::nullopt) {
    const json* v = lookup(k, def.has_value());
    std::string s = def.value_or("");
    if (v) {
      if (!v->is_string()) throw ConfigError(field(k), "must be a string");
      s = v->get<std::string>();
    }
    out_[k] = s;
    return s;
  }

  Complex complex(const std::string& k, std::optional<Complex> def = std::nullopt) {
    const json* v = lookup(k, def.has_value());
    const Complex z = v ? as_complex(*v, field(k)) : *def;
    out_[k] = json::array({z.real(), z.imag()});
    return z;
  }

  std::vector<double> numbers(const std::string& k, std::optional<std::vector<double>> def = std::nullopt) {
    const json* v = lookup(k, def.has_value());
    std::vector<double> xs = def.value_or(std::vector<double>{});
    if (v) {
      if (!v->is_array() || v->empty()) throw ConfigError(field(k), "must be a nonempty array of numbers");
      xs.clear();
      for (std::size_t i = 0; i < v->size(); ++i) xs.push_back(as_number((*v)[i], field(k) + "[" + std::to_string(i) + "]"));
    }
    out_[k] = xs;
    return xs;
  }

  Vector complex_vector(const std::string& k) {
    const json& v = *lookup(k, false);
    if (!v.is_array() || v.empty()) throw ConfigError(field(k), "must be a nonempty array");
    Vector out(static_cast<Eigen::Index>(v.size()));
    json res = json::array();
    for (std::size_t i = 0; i < v.size(); ++i) {
      out(static_cast<Eigen::Index>(i)) = as_complex(v[i], field(k) + "[" + std::to_string(i) + "]");
      res.push_back(json::array({out(static_cast<Eigen::Index>(i)).real(), out(static_cast<Eigen::Index>(i)).imag()}));
    }
    out_[k] = res;
    return out;
  }

  Matrix complex_matrix(const json& v, const std::string& f, json& res) {
    if (!v.is_array() || v.empty() || !v[0].is_array()) throw ConfigError(f, "must be an array of rows");
    const std::size_t n = v.size(), m = v[0].size();
    Matrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    res = json::array();
    for (std::size_t i = 0; i < n; ++i) {
      if (!v[i].is_array() || v[i].size() != m) throw ConfigError(f, "rows must have equal length");
      json row = json::array();
      for (std::size_t j = 0; j < m; ++j) {
        const Complex z = as_complex(v[i][j], f + "[" + std::to_string(i) + "][" + std::to_string(j) + "]");
        out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = z;
        row.push_back(json::array({z.real(), z.imag()}));
      }
      res.push_back(row);
    }
    return out;
  }

  Matrix matrix(const std::string& k) { return complex_matrix(*lookup(k, false), field(k), out_[k]); }

  std::vector<Matrix> matrices(const std::string& k) {
    const json& v = *lookup(k, false);
    if (!v.is_array()) throw ConfigError(field(k), "must be an array of matrices");
    std::vector<Matrix> out;
    out_[k] = json::array();
    for (std::size_t i = 0; i < v.size(); ++i) {
      json res;
      out.push_back(complex_matrix(v[i], field(k) + "[" + std::to_string(i) + "]", res));
      out_[k].push_back(res);
    }
    return out;
  }

  // Child object; missing children read as empty objects so defaults apply.
  Node child(const std::string& k) {
    seen_.insert(k);
    static const json empty = json::object();
    return Node(j_.contains(k) ? j_.at(k) : empty, field(k), out_[k]);
  }

  const json& raw(const std::string& k) {
    seen_.insert(k);
    return j_.at(k);
  }
  json& resolved(const std::string& k) { return out_[k]; }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError(field(k), "unknown key");
  }

  std::string field(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

 private:
  const json* lookup(const std::string& k, bool optional) {
    seen_.insert(k);
    if (j_.contains(k)) return &j_.at(k);
    if (!optional) throw ConfigError(field(k), "missing required key");
    return nullptr;
  }

  static double as_number(const json& v, const std::string& f) {
    if (!v.is_number()) throw ConfigError(f, "must be a number");
    return v.get<double>();
  }

  static Complex as_complex(const json& v, const std::string& f) {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
      return {v[0].get<double>(), v[1].get<double>()};
    throw ConfigError(f, "must be a number or a [re, im] pair");
  }

  const json& j_;
  std::string path_;
  json& out_;
  std::set<std::string> seen_;
};

// ---------------------------------------------------------------------------
// Tables

using Cell = std::variant<std::monostate, double, long long, std::string, bool>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

struct Result {
  Table table;
  std::map<std::string, Table> extra;
  json diagnostics = json::object();
  std::vector<std::string> summary;
};

std::string format_double(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::string cell_text(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) return "";
        else if constexpr (std::is_same_v<T, double>) return format_double(v);
        else if constexpr (std::is_same_v<T, long long>) return std::to_string(v);
        else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
        else return v;
      },
      c);
}

json cell_json(const Cell& c) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) return nullptr;
        else return v;
      },
      c);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

json table_json(const Table& t) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    json o = json::object();
    for (std::size_t i = 0; i < t.columns.size(); ++i) o[t.columns[i]] = cell_json(r[i]);
    rows.push_back(o);
  }
  return {{"columns", t.columns}, {"rows", rows}};
}

std::string timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Header {
  json config;
  std::string generated;
};

void write_csv(const fs::path& path, const Table& t, const Header& h) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "# tool: cqi-sim " << cqi::kVersion << "\r\n";
  out << "# generated: " << h.generated << "\r\n";
  out << "# config: " << h.config.dump() << "\r\n";
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << csv_field(t.columns[i]);
  out << "\r\n";
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << csv_field(cell_text(r[i]));
    out << "\r\n";
  }
}

void write_json(const fs::path& path, const json& body, const Header& h) {
  json doc = {{"header", {{"tool", "cqi-sim"}, {"version", cqi::kVersion}, {"generated", h.generated},
                          {"config", h.config}}}};
  for (const auto& [k, v] : body.items()) doc[k] = v;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Experiment kinds

struct Context {
  unsigned refine = 0;
  std::uint64_t seed = 1;
  cqi::contspace::Grid grid;
};

struct Kind {
  const char* name;
  const char* summary;
  // Parses params; when `run` is false only validates.
  Result (*handler)(Node& params, const Context& ctx, bool run);
};

cqi::contspace::PropagatorKernel read_kernel(Node& p) {
  cqi::contspace::PropagatorKernel k;
  k.mass = p.number("mass", 1.0);
  k.hbar = p.number("hbar", 1.0);
  if (!(k.mass > 0.0)) throw ConfigError(p.field("mass"), "must be positive");
  if (!(k.hbar > 0.0)) throw ConfigError(p.field("hbar"), "must be positive");
  return k;
}

cqi::postulates::Tolerances read_tolerances(Node& p) {
  Node t = p.child("tolerances");
  cqi::postulates::Tolerances tol;
  tol.pert_tol = t.number("pert_tol", tol.pert_tol);
  tol.xcheck_tol = t.number("xcheck_tol", tol.xcheck_tol);
  tol.offdiag_tol = t.number("offdiag_tol", tol.offdiag_tol);
  tol.norm_tol = t.number("norm_tol", tol.norm_tol);
  tol.tail_tol = t.number("tail_tol", tol.tail_tol);
  tol.w_tol = t.number("w_tol", tol.w_tol);
  for (const char* k : {"pert_tol", "xcheck_tol", "offdiag_tol", "norm_tol", "tail_tol", "w_tol"})
    if (!(t.resolved(k).get<double>() > 0.0)) throw ConfigError(t.field(k), "must be positive");
  t.finish();
  return tol;
}

struct Packet {
  double center, width, momentum;
};

Packet read_packet(Node& p, double center) {
  Node g = p.child("psi0");
  Packet pk{g.number("center", center), g.number("width", 1.0), g.number("momentum", 0.0)};
  if (!(pk.width > 0.0)) throw ConfigError(g.field("width"), "must be positive");
  g.finish();
  return pk;
}

cqi::postulates::ReadoutRegion read_readout(Node& p, double t_default) {
  Node r = p.child("readout");
  cqi::postulates::ReadoutRegion s;
  s.t_min = r.number("t_min", t_default);
  s.t_max = r.number("t_max", s.t_min);
  const long long nt = r.integer("nt", 1);
  if (nt < 1) throw ConfigError(r.field("nt"), "must be at least 1");
  s.nt = static_cast<std::size_t>(nt);
  r.finish();
  return s;
}

Vector sample_packet(const cqi::contspace::Grid& g, const Packet& pk, const cqi::contspace::PropagatorKernel& k) {
  Vector v(static_cast<Eigen::Index>(g.nx));
  for (std::size_t i = 0; i < g.nx; ++i)
    v(static_cast<Eigen::Index>(i)) = cqi::contspace::gaussian_packet(g.x(i), 0.0, pk.center, pk.width, pk.momentum, k);
  return v;
}

// Relative change against the previous refinement level.
Cell convergence(const std::vector<double>& v, std::size_t i) {
  if (i == 0) return std::monostate{};
  return std::abs(v[i] - v[i - 1]) / std::abs(v[i]);
}

struct DetectorSetup {
  cqi::contspace::PropagatorKernel kernel;
  Packet packet;
  double t0;
  std::vector<cqi::postulates::Rect> region;
  double alpha, potential;
  cqi::postulates::ReadoutRegion readout;
  cqi::postulates::Tolerances tol;

  cqi::postulates::DetectorExperiment at(const cqi::contspace::Grid& g) const {
    cqi::postulates::DetectorExperiment e;
    e.grid = g;
    e.kernel = kernel;
    e.psi0 = sample_packet(g, packet, kernel);
    e.t0 = t0;
    e.region = region;
    e.alpha = alpha;
    e.potential = potential;
    e.readout = readout;
    e.tol = tol;
    return e;
  }
};

std::vector<cqi::contspace::Grid> levels(const Context& ctx) {
  std::vector<cqi::contspace::Grid> out;
  for (unsigned k = 0; k <= ctx.refine; ++k) out.push_back(ctx.grid.refined(k));
  return out;
}

Result run_detector_compare(Node& p, const Context& ctx, bool run) {
  DetectorSetup s;
  s.kernel = read_kernel(p);
  s.packet = read_packet(p, -5.0);
  s.t0 = p.number("t0", 0.0);
  {
    const json& raw = p.has("region") ? p.raw("region") : json::array({json::array({-0.5, 0.5, 2.0, 2.2})});
    if (!raw.is_array() || raw.empty()) throw ConfigError(p.field("region"), "must be a nonempty array of [x_min, x_max, t_min, t_max]");
    json& res = p.resolved("region");
    res = json::array();
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const json& r = raw[i];
      if (!r.is_array() || r.size() != 4 || !std::all_of(r.begin(), r.end(), [](const json& x) { return x.is_number(); }))
        throw ConfigError(p.field("region") + "[" + std::to_string(i) + "]", "must be [x_min, x_max, t_min, t_max]");
      s.region.push_back({r[0].get<double>(), r[1].get<double>(), r[2].get<double>(), r[3].get<double>()});
      res.push_back(r);
    }
  }
  s.alpha = p.number("alpha", 0.1);
  s.potential = p.number("potential", 1.0);
  s.readout = read_readout(p, 3.0);
  s.tol = read_tolerances(p);
  const long long steps = p.integer("shrink_steps", 5);
  const double factor = p.number("shrink_factor", 0.5);
  if (steps < 2) throw ConfigError(p.field("shrink_steps"), "must be at least 2");
  if (!(factor > 0.0 && factor < 1.0)) throw ConfigError(p.field("shrink_factor"), "must lie in (0, 1)");
  p.finish();
  const auto grids = levels(ctx);
  for (const auto& g : grids) s.at(g).validate();
  Result res;
  if (!run) return res;

  const std::size_t n = grids.size();
  std::vector<cqi::postulates::CqiResult> cqi(n);
  std::vector<double> prr(n);
  cqi::parallel::parallel_for(n, [&](std::size_t i) {
    const auto e = s.at(grids[i]);
    cqi[i] = cqi::postulates::cqi_probability(e);
    prr[i] = cqi::postulates::rr_probability(e);
  });
  std::vector<double> pc;
  for (const auto& c : cqi) pc.push_back(c.p_cqi);
  res.table.columns = {"level", "nx", "dx", "p_born", "p_late_slice", "p_norm_route", "p_cqi", "cqi_born_rel",
                       "born_routes_rel", "p_rr", "rr_over_born", "trace_deficit", "max_offdiag", "k_max",
                       "convergence"};
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = cqi[i];
    res.table.rows.push_back({static_cast<long long>(i), static_cast<long long>(grids[i].nx), grids[i].dx(), c.p_born,
                              c.p_late_slice, c.p_norm_route, c.p_cqi, c.p_cqi / c.p_born - 1.0, c.born.rel_diff, prr[i],
                              prr[i] / c.p_born, c.trace_deficit, c.max_offdiag, c.born.integral.k_max,
                              convergence(pc, i)});
  }
  res.summary.push_back("P_Born = " + format_double(cqi.back().p_born) + ", P_CQI/P_Born - 1 = " +
                        format_double(cqi.back().p_cqi / cqi.back().p_born - 1.0));

  if (s.region.size() == 1) {
    const auto shrink = cqi::postulates::shrinking_sequence(s.at(grids.front()), static_cast<std::size_t>(steps), factor);
    Table t;
    t.columns = {"step", "scale", "width", "duration", "p_rr", "p_born", "gain", "ratio", "ratio_change"};
    for (std::size_t i = 0; i < shrink.size(); ++i) {
      const auto& st = shrink[i];
      Cell change = std::monostate{};
      if (i > 0) change = std::abs(st.ratio - shrink[i - 1].ratio);
      t.rows.push_back({static_cast<long long>(i), st.scale, st.region.width(), st.region.duration(), st.p_rr,
                        st.p_born, st.gain, st.ratio, change});
    }
    res.extra["shrink"] = t;
  }
  const auto& last = cqi.back();
  res.diagnostics = {{"perturbativity", last.born.perturbativity},
                     {"born_panels", last.born.integral.panels},
                     {"born_last_shell", last.born.integral.last_shell},
                     {"schmidt_rank", last.reduced.schmidt_rank},
                     {"trace_error", last.reduced.trace_error},
                     {"max_offdiag_zeroed", last.reduced.max_offdiag_zeroed}};
  return res;
}

Result run_two_point(Node& p, const Context& ctx, bool run) {
  DetectorSetup s;
  s.kernel = read_kernel(p);
  s.packet = read_packet(p, 0.0);
  s.t0 = p.number("t0", 0.0);
  const auto points = p.numbers("points", std::vector<double>{-2.0, 2.0});
  if (points.size() != 2) throw ConfigError(p.field("points"), "must hold exactly two positions");
  const double t_slice = p.number("t_slice", 1.0);
  const double side = p.number("side", 2.0 * ctx.grid.dx());
  if (!(side > 0.0)) throw ConfigError(p.field("side"), "must be positive");
  s.region = {cqi::postulates::Rect::square(points[0], t_slice, side),
              cqi::postulates::Rect::square(points[1], t_slice, side)};
  s.alpha = p.number("alpha", 0.1);
  s.potential = p.number("potential", 1.0);
  s.readout = read_readout(p, t_slice + 1.0);
  s.tol = read_tolerances(p);
  p.finish();
  const auto grids = levels(ctx);
  for (const auto& g : grids) s.at(g).validate();
  Result res;
  if (!run) return res;

  const std::size_t n = grids.size();
  std::vector<cqi::postulates::TwoPointResult> tp(n);
  std::vector<double> pc(n);
  cqi::parallel::parallel_for(n, [&](std::size_t i) {
    const auto e = s.at(grids[i]);
    tp[i] = cqi::postulates::two_point_comparison(e);
    pc[i] = cqi::postulates::cqi_probability(e).p_cqi;
  });
  std::vector<double> ratios;
  for (const auto& r : tp) ratios.push_back(r.ratio());
  res.table.columns = {"level", "nx", "p_rr", "p_born", "p_cqi", "calibration", "p_born_calibrated",
                       "cross_measured", "cross_predicted", "cross_point_values", "cross_rel_error", "ratio",
                       "w_residual", "convergence"};
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = tp[i];
    res.table.rows.push_back({static_cast<long long>(i), static_cast<long long>(grids[i].nx), r.p_rr, r.p_born, pc[i],
                              r.calibration, r.p_born_calibrated, r.cross_measured, r.cross_predicted,
                              r.cross_point_values, r.cross_rel_error, r.ratio(), r.w_residual,
                              convergence(ratios, i)});
  }
  res.summary.push_back("P_RR / P_Born = " + format_double(tp.back().ratio()) +
                        ", cross-term relative error = " + format_double(tp.back().cross_rel_error));
  res.diagnostics = {{"side", side}, {"w_residual", tp.back().w_residual}};
  return res;
}

Result run_zeno(Node& p, const Context&, bool run) {
  cqi::zeno::ZenoConfig cfg;
  cfg.omega = p.number("omega");
  const auto eps = p.numbers("epsilon");
  const long long halvings = p.integer("halvings", 0);
  const long long n_anc = p.integer("n_ancillas", 1);
  if (halvings < 0) throw ConfigError(p.field("halvings"), "must be nonnegative");
  if (n_anc < 0) throw ConfigError(p.field("n_ancillas"), "must be nonnegative");
  cfg.n_ancillas = static_cast<std::size_t>(n_anc);
  p.finish();
  std::vector<double> all;
  for (double e : eps)
    for (long long h = 0; h <= halvings; ++h) all.push_back(std::ldexp(e, static_cast<int>(-h)));
  for (double e : all) {
    auto c = cfg;
    c.epsilon = e;
    c.validate();
  }
  Result res;
  if (!run) return res;

  res.table.columns = {"epsilon", "omega_epsilon", "p_without", "p_with", "ratio", "closed_without", "closed_with",
                       "max_abs_error", "p_iterated", "n_ancillas", "outside_leading_order"};
  double worst = 0.0, cancel = 0.0;
  for (double e : all) {
    auto c = cfg;
    c.epsilon = e;
    const auto r = cqi::zeno::zeno_pair(c);
    const double we = cfg.omega * e;
    const double cw = std::pow(std::sin(2.0 * we), 2), cm = 2.0 * std::pow(std::cos(we) * std::sin(we), 2);
    const double err = std::max(std::abs(r.p_without - cw), std::abs(r.p_with - cm));
    worst = std::max(worst, err);
    if (r.entropy_with > 1e-9 || r.entropy_without > 1e-9)
      throw cqi::InvariantError("zeno: global state is not pure");
    cancel = std::max(cancel, cqi::zeno::zeno_cancellation(c, 0.0));
    if (c.outside_leading_order())
      std::cerr << "warning: omega*epsilon = " << format_double(we) << " exceeds 0.3; leading-order statements do not apply\n";
    res.table.rows.push_back({e, we, r.p_without, r.p_with, r.ratio(), cw, cm, err, cqi::zeno::iterated_zeno(c),
                              static_cast<long long>(cfg.n_ancillas), c.outside_leading_order()});
  }
  if (worst > 1e-12) throw cqi::NumericalError("zeno: evolved probabilities differ from the closed forms by " + format_double(worst));
  if (cancel > 1e-12) throw cqi::InvariantError("zeno: back-to-back CNOTs do not cancel");
  auto c = cfg;
  c.epsilon = all.front();
  res.diagnostics = {{"closed_form_max_error", worst},
                     {"cancellation_same_slice", cancel},
                     {"cancellation_delayed", cqi::zeno::zeno_cancellation(c, c.epsilon)}};
  res.summary.push_back("ratio at epsilon = " + format_double(all.front()) + ": " +
                        format_double(std::get<double>(res.table.rows.front()[4])));
  return res;
}

Result run_time_reversed_zeno(Node& p, const Context&, bool run) {
  cqi::zeno::ZenoConfig cfg;
  cfg.omega = p.number("omega");
  std::vector<double> thetas;
  if (p.has("theta")) {
    thetas = p.numbers("theta");
  } else {
    Node r = p.child("theta_range");
    const double lo = r.number("min", -std::numbers::pi / 4.0), hi = r.number("max", std::numbers::pi / 4.0);
    const long long count = r.integer("count", 50);
    r.finish();
    if (count < 1) throw ConfigError(r.field("count"), "must be at least 1");
    for (long long i = 0; i < count; ++i)
      thetas.push_back(count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1));
  }
  const long long samples = p.integer("samples", 16);
  if (samples < 2) throw ConfigError(p.field("samples"), "must be at least 2");
  p.finish();
  cfg.validate();
  Result res;
  if (!run) return res;
  res.table.columns = {"theta", "delta_t", "theta_over_omega", "abs_error", "consistency", "fit_residual"};
  double worst = 0.0;
  for (double th : thetas) {
    auto c = cfg;
    c.theta = th;
    const auto r = cqi::zeno::time_reversed_zeno(c, static_cast<std::size_t>(samples));
    const double err = std::abs(r.delta_t - th / cfg.omega);
    worst = std::max(worst, err);
    res.table.rows.push_back({th, r.delta_t, th / cfg.omega, err, r.consistency, r.fit_residual});
  }
  if (worst > 1e-10) throw cqi::NumericalError("time-reversed-zeno: |delta_t - theta/omega| = " + format_double(worst));
  res.diagnostics = {{"max_abs_error", worst}};
  res.summary.push_back("max |delta_t - theta/omega| = " + format_double(worst));
  return res;
}

Result run_chain(Node& p, const Context& ctx, bool run) {
  std::vector<cqi::chain::ChainSpec> specs;
  if (p.has("initial")) {
    cqi::chain::ChainSpec s;
    s.initial = p.complex_vector("initial");
    s.overlaps = p.has("overlaps") ? p.matrices("overlaps") : std::vector<Matrix>{};
    try {
      s.validate();
    } catch (const cqi::InvalidArgument& e) {
      throw ConfigError(p.field(s.initial.size() < 2 || std::abs(s.initial.norm() - 1.0) > s.norm_tol ? "initial" : "overlaps"),
                        e.what());
    }
    specs.push_back(s);
  } else {
    const long long d = p.integer("dim", 2), n = p.integer("observers", 3), count = p.integer("chains", 10);
    if (d < 2 || d > 4) throw ConfigError(p.field("dim"), "must lie in [2, 4]");
    if (n < 1 || n > 4) throw ConfigError(p.field("observers"), "must lie in [1, 4]");
    if (count < 1) throw ConfigError(p.field("chains"), "must be at least 1");
    for (long long c = 0; c < count; ++c) {
      auto rng = cqi::random::stream(ctx.seed, static_cast<std::uint64_t>(c));
      cqi::chain::ChainSpec s;
      s.initial = cqi::random::ket(rng, static_cast<std::size_t>(d)).amplitudes();
      for (long long k = 1; k < n; ++k) s.overlaps.push_back(cqi::random::unitary(rng, static_cast<std::size_t>(d)));
      specs.push_back(s);
    }
  }
  p.finish();
  Result res;
  if (!run) return res;
  const std::size_t n_obs = specs.front().num_observers();
  std::vector<std::optional<cqi::chain::ChainResult>> results(specs.size());
  std::vector<double> rule_diff(specs.size());
  cqi::parallel::parallel_for(specs.size(), [&](std::size_t i) {
    results[i] = cqi::chain::run_chain(specs[i]);
    const auto rule = cqi::chain::chain_rule_distributions(specs[i]);
    double d = 0.0;
    for (std::size_t k = 0; k < rule.size(); ++k)
      for (std::size_t j = 0; j < rule[k].size(); ++j)
        d = std::max(d, std::abs(rule[k][j] - results[i]->distributions[k].probs[j]));
    rule_diff[i] = d;
  });
  res.table.columns = {"chain", "dim", "q_entropy"};
  for (std::size_t k = 0; k < n_obs; ++k) res.table.columns.push_back("S_" + std::to_string(k + 1));
  for (const char* c : {"global_entropy", "arrow_nondecreasing", "q_matches_last", "chain_rule_max_diff"})
    res.table.columns.push_back(c);
  double worst = 0.0;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& r = *results[i];
    const auto arrow = cqi::chain::entropy_sequence(r);
    std::vector<Cell> row{static_cast<long long>(i), static_cast<long long>(specs[i].dim()), r.q_entropy};
    for (double s : r.entropies) row.emplace_back(s);
    row.insert(row.end(), {r.global_entropy, arrow.nondecreasing, arrow.q_matches_last, rule_diff[i]});
    res.table.rows.push_back(row);
    if (!arrow.nondecreasing || !arrow.q_matches_last) throw cqi::InvariantError("chain: entropy arrow violated in chain " + std::to_string(i));
    worst = std::max(worst, rule_diff[i]);
  }
  if (worst > 1e-10) throw cqi::NumericalError("chain: chain-rule and partial-trace routes differ by " + format_double(worst));
  res.diagnostics = {{"chain_rule_max_diff", worst}};
  res.summary.push_back(std::to_string(specs.size()) + " chain(s), chain-rule max difference " + format_double(worst));
  return res;
}

Result run_epr(Node& p, const Context& ctx, bool run) {
  cqi::epr::EprConfig cfg;
  cfg.alpha = p.complex("alpha", cfg.alpha);
  cfg.beta = p.complex("beta", cfg.beta);
  if (p.has("alice_unitary")) cfg.alice_unitary = p.matrix("alice_unitary");
  const long long count = p.integer("random_unitaries", 500);
  if (count < 0) throw ConfigError(p.field("random_unitaries"), "must be nonnegative");
  p.finish();
  cfg.validate();
  Result res;
  if (!run) return res;
  const auto r = cqi::epr::epr_reduced(cfg);
  std::vector<Matrix> us;
  if (cfg.alice_unitary) us.push_back(*cfg.alice_unitary);
  for (long long i = 0; i < count; ++i) {
    auto rng = cqi::random::stream(ctx.seed, static_cast<std::uint64_t>(i));
    us.push_back(cqi::random::unitary(rng, 2));
  }
  std::vector<double> dist(us.size());
  cqi::parallel::parallel_for(us.size(), [&](std::size_t i) {
    auto c = cfg;
    c.alice_unitary = us[i];
    dist[i] = cqi::epr::no_communication_check(c);
  });
  double worst = 0.0;
  Table nc;
  nc.columns = {"index", "trace_distance"};
  for (std::size_t i = 0; i < dist.size(); ++i) {
    worst = std::max(worst, dist[i]);
    nc.rows.push_back({static_cast<long long>(i), dist[i]});
  }
  const double order = cqi::epr::order_independence(cfg);
  res.table.columns = {"S_A", "S_B", "S_AB", "S_A_given_B", "S_B_given_A", "mutual_information", "cross_outcome",
                       "order_difference", "no_communication_max", "unitaries"};
  res.table.rows.push_back({r.s_a, r.s_b, r.s_ab, r.s_a_given_b, r.s_b_given_a, r.mutual_information, r.cross_outcome,
                            order, worst, static_cast<long long>(us.size())});
  res.extra["no-communication"] = nc;
  if (worst > 1e-12) throw cqi::InvariantError("epr: Alice's local unitary changed Bob's state");
  if (std::abs(r.s_a_given_b) > 1e-9 || r.cross_outcome > 1e-12)
    throw cqi::InvariantError("epr: outcomes are not perfectly correlated");
  res.summary.push_back("S(A|B) = " + format_double(r.s_a_given_b) + ", no-communication max distance " +
                        format_double(worst));
  return res;
}

Result run_realism(Node& p, const Context&, bool run) {
  const Complex alpha = p.complex("alpha", 0.6), beta = p.complex("beta", 0.8);
  p.finish();
  if (std::abs(std::norm(alpha) + std::norm(beta) - 1.0) > 1e-10)
    throw ConfigError(p.field("alpha"), "|alpha|^2 + |beta|^2 must equal 1");
  Result res;
  if (!run) return res;
  const auto r = cqi::realism::realism_scenario(alpha, beta);
  res.table.columns = {"slice", "S_A", "S_B", "S_A_given_B", "purity_A", "purity_B"};
  json states = json::array();
  auto mat = [](const Matrix& m) {
    json out = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
      out.push_back(row);
    }
    return out;
  };
  for (const auto& s : r.slices) {
    res.table.rows.push_back({std::string(s.label), s.s_a, s.s_b, s.s_a_given_b, s.purity_a, s.purity_b});
    states.push_back({{"slice", s.label}, {"rho_A", mat(s.rho_a.matrix())}, {"rho_B", mat(s.rho_b.matrix())}});
  }
  res.diagnostics = {{"alice_pure_at_t1", r.alice_pure_at_t1},
                     {"bob_mixed_at_t1", r.bob_mixed_at_t1},
                     {"correlated_at_t2", r.correlated_at_t2},
                     {"reduced_states", states}};
  res.summary.push_back("S(B at t1) = " + format_double(r.slices[1].s_b) + ", S(A|B at t2) = " +
                        format_double(r.slices[2].s_a_given_b));
  return res;
}

const std::vector<Kind>& kinds() {
  static const std::vector<Kind> k = {
      {"chain", "observer chain: entropy arrow and chain-rule distributions", run_chain},
      {"detector-compare", "Born, RR and CQI probabilities for one detector region", run_detector_compare},
      {"two-point", "RR versus Born on a region made of two small cells", run_two_point},
      {"zeno", "Zeno halving by an intermediate CNOT", run_zeno},
      {"time-reversed-zeno", "evolution advance delta_t after a disentangling CNOT", run_time_reversed_zeno},
      {"epr", "EPR pair with two observers: correlations and no-communication", run_epr},
      {"realism-scenario", "observer-observed sequence read from one global state", run_realism},
  };
  return k;
}

struct Loaded {
  const Kind* kind = nullptr;
  json resolved;
  std::string name;
  std::string format;
  Result result;
};

Loaded load_and_run(const std::string& path, unsigned refine, bool run) {
  std::ifstream in(path);
  if (!in) throw ConfigError("(file)", "cannot read " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("(document)", std::string("invalid JSON: ") + e.what());
  }
  Loaded out;
  Node root(doc, "", out.resolved);
  const std::string kind = root.string("kind");
  for (const auto& k : kinds())
    if (kind == k.name) out.kind = &k;
  if (!out.kind) throw ConfigError("kind", "unknown experiment kind '" + kind + "'");
  Context ctx;
  ctx.refine = refine;
  const long long seed = root.integer("seed", 1);
  if (seed < 0) throw ConfigError("seed", "must be nonnegative");
  ctx.seed = static_cast<std::uint64_t>(seed);
  {
    Node g = root.child("grid");
    ctx.grid.x_min = g.number("x_min", ctx.grid.x_min);
    ctx.grid.x_max = g.number("x_max", ctx.grid.x_max);
    const long long nx = g.integer("nx", static_cast<long long>(ctx.grid.nx));
    if (nx < 2) throw ConfigError("grid.nx", "must be at least 2");
    ctx.grid.nx = static_cast<std::size_t>(nx);
    g.finish();
    ctx.grid.validate();
  }
  {
    Node o = root.child("output");
    out.name = o.string("name", kind);
    out.format = o.string("format", "csv");
    o.finish();
    if (out.format != "csv" && out.format != "json") throw ConfigError("output.format", "must be csv or json");
    if (out.name.empty() || out.name.find('/') != std::string::npos) throw ConfigError("output.name", "must be a plain file stem");
  }
  Node params = root.child("params");
  root.finish();
  out.resolved["refine"] = refine;
  out.result = out.kind->handler(params, ctx, run);
  return out;
}

int report_error(const std::exception& e, int code) {
  std::cerr << "cqi-sim: " << e.what() << "\n";
  return code;
}

int guarded(const std::function<int()>& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    return report_error(e, 1);
  } catch (const cqi::NumericalError& e) {
    return report_error(e, 2);
  } catch (const cqi::InvalidArgument& e) {
    return report_error(e, 1);
  } catch (const cqi::InvariantError& e) {
    return report_error(e, 3);
  } catch (const std::exception& e) {
    return report_error(e, 3);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cqi-sim: covariant quantum information experiments"};
  app.set_version_flag("--version", std::string("cqi-sim ") + cqi::kVersion);
  app.require_subcommand(1);

  std::string config;
  unsigned refine = 0;
  std::string out_dir = ".";
  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", config, "experiment config (JSON)")->required();
  run->add_option("--refine", refine, "double the grid resolution k times")->check(CLI::Range(0u, 6u));
  run->add_option("--out", out_dir, "output directory");
  auto* list = app.add_subcommand("list-experiments", "list experiment kinds");
  auto* validate = app.add_subcommand("validate", "check a config without running it");
  validate->add_option("config", config, "experiment config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (*list) {
    for (const auto& k : kinds()) std::cout << k.name << "\t" << k.summary << "\n";
    return 0;
  }
  if (*validate) {
    return guarded([&] {
      const auto l = load_and_run(config, 0, false);
      std::cout << "ok: " << l.kind->name << "\n";
      return 0;
    });
  }
  return guarded([&] {
    auto l = load_and_run(config, refine, true);
    fs::create_directories(out_dir);
    const Header h{l.resolved, timestamp()};
    const fs::path dir(out_dir);
    json body = {{"diagnostics", l.result.diagnostics}};
    if (l.format == "csv") {
      write_csv(dir / (l.name + ".csv"), l.result.table, h);
      std::cout << "wrote " << (dir / (l.name + ".csv")).string() << "\n";
      for (const auto& [k, t] : l.result.extra) {
        write_csv(dir / (l.name + "." + k + ".csv"), t, h);
        std::cout << "wrote " << (dir / (l.name + "." + k + ".csv")).string() << "\n";
      }
    } else {
      body["results"] = table_json(l.result.table);
      for (const auto& [k, t] : l.result.extra) body["tables"][k] = table_json(t);
    }
    const fs::path report = dir / (l.name + (l.format == "csv" ? ".report.json" : ".json"));
    write_json(report, body, h);
    std::cout << "wrote " << report.string() << "\n";
    for (const auto& s : l.result.summary) std::cout << l.kind->name << ": " << s << "\n";
    return 0;
  });
}
