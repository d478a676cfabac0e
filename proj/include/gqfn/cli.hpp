// cli.hpp: network-spec loading and the batch commands behind the gqfn
// executable.
//
// Pipeline [A, B] means the field passes A first: series(B, A).

#pragma once

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gqfn/dpa.hpp"
#include "gqfn/dynamics.hpp"
#include "gqfn/expr.hpp"
#include "gqfn/gaussian.hpp"
#include "gqfn/generators.hpp"
#include "gqfn/slh.hpp"

namespace gqfn::cli {

using json = nlohmann::ordered_json;

enum ExitCode { kOk = 0, kValidationFailure = 1, kNumericalFailure = 2 };

struct Diagnostic {
  std::string kind;
  std::string path;
  std::string message;
  double residual = -1.0;  // < 0: not applicable
  long byte = -1;          // < 0: not applicable
};

/// Collects every problem found in a spec before giving up.
class SpecErrors : public ValidationError {
 public:
  explicit SpecErrors(std::vector<Diagnostic> d)
      : ValidationError(d.empty() ? "invalid spec" : d.front().message), diags_(std::move(d)) {}
  const std::vector<Diagnostic>& diagnostics() const { return diags_; }

 private:
  std::vector<Diagnostic> diags_;
};

inline std::string json_number(double x) {
  if (!std::isfinite(x)) return "null";
  return fmt17(x);
}

inline std::string json_string(const std::string& s) { return json(s).dump(); }

inline std::string diagnostics_json(const std::vector<Diagnostic>& ds) {
  std::string out = "[";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& d = ds[i];
    if (i) out += ",";
    out += "{\"kind\":" + json_string(d.kind) + ",\"path\":" + json_string(d.path) +
           ",\"message\":" + json_string(d.message);
    if (d.residual >= 0) out += ",\"residual\":" + json_number(d.residual);
    if (d.byte >= 0) out += ",\"byte\":" + std::to_string(d.byte);
    out += "}";
  }
  return out + "]";
}

struct Component {
  std::string name;
  Matrix s;
  std::vector<Operator> l;
  Operator h;
  std::set<std::size_t> mode_factors;
};

struct Experiment {
  std::string type = "compose-only";
  std::vector<double> t_grid;
  std::vector<std::string> labels;
  std::vector<std::string> observable_src;
  std::vector<Operator> observables;
  std::optional<Matrix> rho0;
  std::string backend = "expm";
  // dpa-limit
  double eps = 0, kappa = 0;
  std::vector<double> k_list;
  std::size_t truncation = 8;
};

struct NetworkSpec {
  int version = 1;
  HilbertSpec space;
  std::map<std::string, Component> components;
  std::vector<std::string> pipeline;
  std::optional<GaussianNoiseSpec> noise;
  Experiment experiment;
  std::set<std::size_t> mode_factors;
};

namespace detail {

class Loader {
 public:
  Loader(double tol, std::filesystem::path base) : tol_(tol), base_(std::move(base)) {}

  std::vector<Diagnostic> diags;

  void fail(const std::string& kind, const std::string& path, const std::string& msg, double residual = -1,
            long byte = -1) {
    diags.push_back({kind, path, msg, residual, byte});
  }

  bool keys(const json& j, const std::string& path, const std::set<std::string>& allowed,
            const std::set<std::string>& required) {
    if (!j.is_object()) {
      fail("schema", path, "expected an object");
      return false;
    }
    bool ok = true;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!allowed.count(it.key())) {
        fail("schema", path + "." + it.key(), "unknown key '" + it.key() + "'");
        ok = false;
      }
    }
    for (const auto& r : required) {
      if (!j.contains(r)) {
        fail("schema", path + "." + r, "missing required key '" + r + "'");
        ok = false;
      }
    }
    return ok;
  }

  std::optional<cplx> complex_value(const json& j, const std::string& path) {
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
      return cplx(j[0].get<double>(), j[1].get<double>());
    }
    fail("schema", path, "complex numbers are written [re, im]");
    return std::nullopt;
  }

  std::optional<Matrix> matrix(const json& j, const std::string& path, Index rows = -1, Index cols = -1) {
    if (!j.is_array() || j.empty() || !j[0].is_array()) {
      fail("schema", path, "expected a matrix (list of rows of [re, im] entries)");
      return std::nullopt;
    }
    const Index r = static_cast<Index>(j.size());
    const Index c = static_cast<Index>(j[0].size());
    if ((rows >= 0 && r != rows) || (cols >= 0 && c != cols)) {
      fail("schema", path,
           "matrix has shape " + std::to_string(r) + "x" + std::to_string(c) + ", expected " +
               std::to_string(rows) + "x" + std::to_string(cols));
      return std::nullopt;
    }
    Matrix m(r, c);
    bool ok = true;
    for (Index i = 0; i < r; ++i) {
      if (!j[i].is_array() || static_cast<Index>(j[i].size()) != c) {
        fail("schema", path + "[" + std::to_string(i) + "]", "ragged matrix row");
        return std::nullopt;
      }
      for (Index k = 0; k < c; ++k) {
        const auto v = complex_value(j[i][k], path + "[" + std::to_string(i) + "][" + std::to_string(k) + "]");
        if (!v) {
          ok = false;
        } else {
          m(i, k) = *v;
        }
      }
    }
    if (!ok) return std::nullopt;
    return m;
  }

  static void collect_modes(const ExprNode& n, std::set<std::size_t>& out) {
    if (n.kind == NodeKind::ModeOp && n.index >= 0) out.insert(static_cast<std::size_t>(n.index));
    for (const auto& c : n.children) collect_modes(*c, out);
  }

  /// Expression string or dense matrix.
  std::optional<Operator> op(const json& j, const std::string& path, std::set<std::size_t>& modes) {
    if (j.is_string()) {
      try {
        const ExprPtr ast = parse_expr(j.get<std::string>());
        collect_modes(*ast, modes);
        return evaluate(*ast, space_);
      } catch (const ParseError& e) {
        fail("expression", path, e.detail(), -1, static_cast<long>(e.offset()));
      } catch (const std::exception& e) {
        fail("expression", path, e.what());
      }
      return std::nullopt;
    }
    const Index n = space_.total_dim();
    auto m = matrix(j, path, n, n);
    if (!m) return std::nullopt;
    return Operator(space_, *m);
  }

  std::vector<double> grid(const json& j, const std::string& path) {
    std::vector<double> g;
    if (j.is_array()) {
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) {
          fail("schema", path, "time grid entries must be numbers");
          return {};
        }
        g.push_back(j[i].get<double>());
      }
    } else if (j.is_object()) {
      if (!keys(j, path, {"start", "stop", "count"}, {"start", "stop", "count"})) return {};
      if (!j["start"].is_number() || !j["stop"].is_number() || !j["count"].is_number_integer()) {
        fail("schema", path, "start/stop must be numbers and count an integer");
        return {};
      }
      const double a = j["start"].get<double>(), b = j["stop"].get<double>();
      const long n = j["count"].get<long>();
      if (n < 2) {
        fail("schema", path + ".count", "count must be >= 2");
        return {};
      }
      for (long i = 0; i < n; ++i) g.push_back(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    } else {
      fail("schema", path, "expected a list of times or {start, stop, count}");
      return {};
    }
    if (g.empty()) fail("schema", path, "time grid is empty");
    for (std::size_t i = 1; i < g.size(); ++i) {
      if (!(g[i] > g[i - 1])) {
        fail("schema", path, "time grid must be strictly increasing");
        return {};
      }
    }
    if (!g.empty() && g.front() < 0) fail("schema", path, "time grid must start at t >= 0");
    return g;
  }

  std::optional<Matrix> state(const json& j, const std::string& path, const HilbertSpec& space) {
    if (j.is_object()) {
      if (!keys(j, path, {"levels"}, {"levels"})) return std::nullopt;
      const json& lv = j["levels"];
      if (!lv.is_array() || lv.size() != space.factors()) {
        fail("schema", path + ".levels", "one level per factor required");
        return std::nullopt;
      }
      std::vector<std::size_t> levels;
      for (std::size_t f = 0; f < lv.size(); ++f) {
        if (!lv[f].is_number_integer() || lv[f].get<long>() < 0 ||
            static_cast<std::size_t>(lv[f].get<long>()) >= space.dim(f)) {
          fail("schema", path + ".levels[" + std::to_string(f) + "]", "level out of range");
          return std::nullopt;
        }
        levels.push_back(static_cast<std::size_t>(lv[f].get<long>()));
      }
      return DensityOperator::product_basis_state(space, levels).matrix();
    }
    const Index n = space.total_dim();
    auto m = matrix(j, path, n, n);
    if (!m) return std::nullopt;
    try {
      DensityOperator d(space, *m, tol_);
    } catch (const std::exception& e) {
      fail("state", path, e.what());
      return std::nullopt;
    }
    return m;
  }

  std::optional<Component> component(const std::string& name, const json& j, const std::string& path) {
    if (j.is_object() && j.contains("include")) {
      if (!keys(j, path, {"include"}, {"include"})) return std::nullopt;
      return included(name, j["include"], path + ".include");
    }
    if (!keys(j, path, {"s", "l", "h"}, {"l"})) return std::nullopt;
    Component c;
    c.name = name;
    const json& lj = j["l"];
    if (!lj.is_array() || lj.empty()) {
      fail("schema", path + ".l", "l must be a non-empty list of operators");
      return std::nullopt;
    }
    const Index d = static_cast<Index>(lj.size());
    bool ok = true;
    for (Index k = 0; k < d; ++k) {
      auto o = op(lj[k], path + ".l[" + std::to_string(k) + "]", c.mode_factors);
      if (o) {
        c.l.push_back(*o);
      } else {
        ok = false;
      }
    }
    c.h = Operator::zero(space_);
    if (j.contains("h")) {
      auto o = op(j["h"], path + ".h", c.mode_factors);
      if (o) {
        c.h = *o;
        const double res = c.h.hermiticity_residual();
        if (res > tol_) fail("hermiticity", path + ".h", "H is not self-adjoint", res);
      } else {
        ok = false;
      }
    }
    c.s = Matrix::Identity(d, d);
    if (j.contains("s")) {
      auto s = matrix(j["s"], path + ".s", d, d);
      if (s) {
        c.s = *s;
        const double res = max_abs_diff(c.s.adjoint() * c.s, Matrix::Identity(d, d));
        if (res > tol_) fail("unitarity", path + ".s", "S is not unitary", res);
      } else {
        ok = false;
      }
    }
    if (!ok) return std::nullopt;
    return c;
  }

  /// A component read back from a compose dump.
  std::optional<Component> included(const std::string& name, const json& j, const std::string& path) {
    if (!j.is_string()) {
      fail("schema", path, "include must be a file path");
      return std::nullopt;
    }
    std::filesystem::path p = j.get<std::string>();
    if (p.is_relative()) p = base_ / p;
    std::ifstream in(p);
    if (!in) {
      fail("io", path, "cannot read " + p.string());
      return std::nullopt;
    }
    json dump;
    try {
      dump = json::parse(in);
    } catch (const json::parse_error& e) {
      fail("json", path, e.what(), -1, static_cast<long>(e.byte));
      return std::nullopt;
    }
    if (!keys(dump, path, {"format", "order", "space", "component"}, {"format", "space", "component"})) {
      return std::nullopt;
    }
    if (dump["format"] != "gqfn-slh") {
      fail("schema", path, "included file is not a compose dump");
      return std::nullopt;
    }
    const json& sp = dump["space"];
    if (!sp.is_object() || !sp.contains("dims") || sp["dims"] != space_json()) {
      fail("schema", path, "included model lives on a different space");
      return std::nullopt;
    }
    return component(name, dump["component"], path + ":component");
  }

  json space_json() const {
    json d = json::array();
    for (auto x : space_.dims()) d.push_back(x);
    return d;
  }

  NetworkSpec load(const json& root) {
    NetworkSpec spec;
    if (!keys(root, "$", {"version", "space", "components", "noise", "pipeline", "experiment"},
              {"version", "space", "components", "pipeline"})) {
      if (!root.is_object() || !root.contains("space") || !root.contains("components")) throw SpecErrors(diags);
    }
    if (root.contains("version") && !(root["version"].is_number_integer() && root["version"].get<int>() == 1)) {
      fail("schema", "$.version", "unsupported version (expected 1)");
    }
    // space
    const json& sj = root["space"];
    if (!keys(sj, "$.space", {"dims"}, {"dims"})) throw SpecErrors(diags);
    std::vector<std::size_t> dims;
    if (!sj["dims"].is_array() || sj["dims"].empty()) {
      fail("schema", "$.space.dims", "dims must be a non-empty list");
      throw SpecErrors(diags);
    }
    for (const auto& d : sj["dims"]) {
      if (!d.is_number_integer() || d.get<long>() < 1) {
        fail("schema", "$.space.dims", "dims must be positive integers");
        throw SpecErrors(diags);
      }
      dims.push_back(static_cast<std::size_t>(d.get<long>()));
    }
    space_ = HilbertSpec(dims);
    if (space_.total_dim() > 4096) {
      fail("schema", "$.space.dims", "total dimension exceeds 4096");
      throw SpecErrors(diags);
    }
    spec.space = space_;

    // components
    const json& cj = root["components"];
    if (!cj.is_object() || cj.empty()) {
      fail("schema", "$.components", "components must be a non-empty object");
    } else {
      for (auto it = cj.begin(); it != cj.end(); ++it) {
        auto c = component(it.key(), it.value(), "$.components." + it.key());
        if (c) {
          spec.mode_factors.insert(c->mode_factors.begin(), c->mode_factors.end());
          spec.components.emplace(it.key(), std::move(*c));
        }
      }
    }

    // pipeline
    if (root.contains("pipeline")) {
      const json& pj = root["pipeline"];
      if (!pj.is_array() || pj.empty()) {
        fail("schema", "$.pipeline", "pipeline must be a non-empty list of component names");
      } else {
        for (std::size_t i = 0; i < pj.size(); ++i) {
          const std::string path = "$.pipeline[" + std::to_string(i) + "]";
          if (!pj[i].is_string()) {
            fail("schema", path, "pipeline entries are component names");
            continue;
          }
          const std::string name = pj[i].get<std::string>();
          if (!cj.is_object() || !cj.contains(name)) {
            fail("pipeline", path, "unknown component '" + name + "'");
          }
          spec.pipeline.push_back(name);
        }
      }
    }

    // channel consistency
    Index channels = -1;
    for (const auto& name : spec.pipeline) {
      auto it = spec.components.find(name);
      if (it == spec.components.end()) continue;
      const Index d = static_cast<Index>(it->second.l.size());
      if (channels < 0) {
        channels = d;
      } else if (d != channels) {
        fail("pipeline", "$.pipeline", "component '" + name + "' has " + std::to_string(d) +
                                           " channels, expected " + std::to_string(channels));
      }
    }

    // noise
    if (root.contains("noise")) {
      const json& nj = root["noise"];
      if (keys(nj, "$.noise", {"n", "m"}, {"n", "m"})) {
        auto n = matrix(nj["n"], "$.noise.n");
        auto m = matrix(nj["m"], "$.noise.m");
        if (n && m) {
          if (n->rows() != n->cols() || m->rows() != m->cols() || n->rows() != m->rows()) {
            fail("schema", "$.noise", "n and m must be square of equal size");
          } else {
            GaussianNoiseSpec g(*n, *m);
            for (const auto& c : validate_noise(g, tol_).failures()) {
              fail("noise", "$.noise", c.name + " failed", c.residual);
            }
            if (channels >= 0 && g.channels() != channels) {
              fail("noise", "$.noise", "noise has " + std::to_string(g.channels()) + " channels, pipeline has " +
                                           std::to_string(channels));
            }
            spec.noise = g;
          }
        }
      }
    }

    if (root.contains("experiment")) experiment(root["experiment"], spec);
    if (!diags.empty()) throw SpecErrors(diags);
    return spec;
  }

  void observables(const json& j, const std::string& path, Experiment& e, std::set<std::size_t>& modes) {
    if (!j.is_array()) {
      fail("schema", path, "observables must be a list of {label, expr}");
      return;
    }
    for (std::size_t i = 0; i < j.size(); ++i) {
      const std::string p = path + "[" + std::to_string(i) + "]";
      if (!keys(j[i], p, {"label", "expr"}, {"label", "expr"})) continue;
      if (!j[i]["label"].is_string() || !j[i]["expr"].is_string()) {
        fail("schema", p, "label and expr must be strings");
        continue;
      }
      auto o = op(j[i]["expr"], p + ".expr", modes);
      if (!o) continue;
      e.labels.push_back(j[i]["label"].get<std::string>());
      e.observable_src.push_back(j[i]["expr"].get<std::string>());
      e.observables.push_back(*o);
    }
  }

  void experiment(const json& j, NetworkSpec& spec) {
    Experiment& e = spec.experiment;
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
      fail("schema", "$.experiment.type", "experiment needs a string type");
      return;
    }
    e.type = j["type"].get<std::string>();
    std::set<std::size_t> modes;
    if (e.type == "compose-only") {
      keys(j, "$.experiment", {"type"}, {"type"});
    } else if (e.type == "evolve") {
      if (!keys(j, "$.experiment", {"type", "t_grid", "observables", "rho0", "backend"},
                {"type", "t_grid", "observables", "rho0"})) {
        return;
      }
      e.t_grid = grid(j["t_grid"], "$.experiment.t_grid");
      observables(j["observables"], "$.experiment.observables", e, modes);
      e.rho0 = state(j["rho0"], "$.experiment.rho0", spec.space);
      if (j.contains("backend")) {
        if (!j["backend"].is_string() || (j["backend"] != "expm" && j["backend"] != "rk4")) {
          fail("schema", "$.experiment.backend", "backend is \"expm\" or \"rk4\"");
        } else {
          e.backend = j["backend"].get<std::string>();
        }
      }
    } else if (e.type == "steady") {
      if (!keys(j, "$.experiment", {"type", "observables"}, {"type", "observables"})) return;
      observables(j["observables"], "$.experiment.observables", e, modes);
    } else if (e.type == "dpa-limit") {
      if (!keys(j, "$.experiment", {"type", "t_grid", "observable", "rho0", "dpa"},
                {"type", "t_grid", "observable", "rho0", "dpa"})) {
        return;
      }
      e.t_grid = grid(j["t_grid"], "$.experiment.t_grid");
      auto o = op(j["observable"], "$.experiment.observable", modes);
      if (o) {
        e.labels = {"observable"};
        e.observables = {*o};
        if (o->hermiticity_residual() > tol_) fail("schema", "$.experiment.observable", "observable must be hermitian");
      }
      e.rho0 = state(j["rho0"], "$.experiment.rho0", spec.space);
      const json& d = j["dpa"];
      if (keys(d, "$.experiment.dpa", {"eps", "kappa", "k_list", "truncation"}, {"eps", "kappa", "k_list"})) {
        if (!d["eps"].is_number() || !d["kappa"].is_number()) {
          fail("schema", "$.experiment.dpa", "eps and kappa must be numbers");
        } else {
          e.eps = d["eps"].get<double>();
          e.kappa = d["kappa"].get<double>();
          try {
            DpaParams{e.eps, e.kappa, 1.0, 2}.validate();
          } catch (const std::exception& ex) {
            fail("dpa", "$.experiment.dpa", ex.what());
          }
        }
        if (!d["k_list"].is_array() || d["k_list"].empty()) {
          fail("schema", "$.experiment.dpa.k_list", "k_list must be a non-empty list");
        } else {
          for (const auto& k : d["k_list"]) {
            if (!k.is_number() || k.get<double>() <= 0) {
              fail("schema", "$.experiment.dpa.k_list", "k values must be positive numbers");
              break;
            }
            e.k_list.push_back(k.get<double>());
          }
          for (std::size_t i = 1; i < e.k_list.size(); ++i) {
            if (!(e.k_list[i] > e.k_list[i - 1])) {
              fail("schema", "$.experiment.dpa.k_list", "k_list must be strictly increasing");
              break;
            }
          }
        }
        if (d.contains("truncation")) {
          if (!d["truncation"].is_number_integer() || d["truncation"].get<long>() < 2) {
            fail("schema", "$.experiment.dpa.truncation", "truncation must be an integer >= 2");
          } else {
            e.truncation = static_cast<std::size_t>(d["truncation"].get<long>());
          }
        }
      }
      if (spec.noise && !spec.noise->is_vacuum()) {
        fail("schema", "$.noise", "dpa-limit drives the system with the amplifier output; omit noise");
      }
    } else {
      fail("schema", "$.experiment.type", "unknown experiment type '" + e.type + "'");
    }
    spec.mode_factors.insert(modes.begin(), modes.end());
  }

 private:
  double tol_;
  std::filesystem::path base_;
  HilbertSpec space_;
};

}  // namespace detail

inline NetworkSpec load_spec(const std::string& path, double tol) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SpecErrors({{"io", path, "cannot read file"}});
  std::stringstream ss;
  ss << in.rdbuf();
  json root;
  try {
    root = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw SpecErrors({{"json", "$", e.what(), -1, static_cast<long>(e.byte)}});
  }
  detail::Loader loader(tol, std::filesystem::path(path).parent_path());
  return loader.load(root);
}

/// series along the pipeline: [A, B, C] ↦ C ◁ B ◁ A.
inline SlhModel compose(const NetworkSpec& spec) {
  std::optional<SlhModel> acc;
  for (const auto& name : spec.pipeline) {
    const Component& c = spec.components.at(name);
    SlhModel g = SlhModel::from_scalar_s(c.s, c.l, c.h);
    acc = acc ? series(g, *acc) : g;
  }
  if (!acc) throw ValidationError("empty pipeline");
  return *acc;
}

inline std::string order_description(const NetworkSpec& spec) {
  std::string chain, expr;
  for (std::size_t i = 0; i < spec.pipeline.size(); ++i) {
    if (i) chain += " -> ";
    chain += spec.pipeline[i];
  }
  for (std::size_t i = spec.pipeline.size(); i-- > 0;) {
    expr += spec.pipeline[i];
    if (i) expr += " <| ";
  }
  return "field order: " + chain + "; composite = " + expr;
}

namespace detail {

inline void write_complex(std::ostream& os, cplx z) {
  os << '[' << json_number(z.real()) << ',' << json_number(z.imag()) << ']';
}

inline void write_matrix(std::ostream& os, const Matrix& m, const std::string& indent) {
  os << "[\n";
  for (Index i = 0; i < m.rows(); ++i) {
    os << indent << "  [";
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      write_complex(os, m(i, j));
    }
    os << ']' << (i + 1 < m.rows() ? "," : "") << '\n';
  }
  os << indent << ']';
}

}  // namespace detail

/// Deterministic JSON dump; its "component" object is a valid component and the
/// whole file can be pulled into another spec with {"include": path}.
inline void write_compose_json(std::ostream& os, const NetworkSpec& spec, const SlhModel& g) {
  const auto s = scalar_scattering(g.s_big(), g.channels());
  if (!s) throw NumericalError("compose: composite scattering is not scalar");
  os << "{\n  \"format\": \"gqfn-slh\",\n  \"order\": [";
  for (std::size_t i = 0; i < spec.pipeline.size(); ++i) os << (i ? ", " : "") << json_string(spec.pipeline[i]);
  os << "],\n  \"space\": {\"dims\": [";
  for (std::size_t i = 0; i < spec.space.factors(); ++i) os << (i ? ", " : "") << spec.space.dims()[i];
  os << "]},\n  \"component\": {\n    \"s\": ";
  detail::write_matrix(os, *s, "    ");
  os << ",\n    \"l\": [\n";
  for (Index k = 0; k < g.channels(); ++k) {
    os << "      ";
    detail::write_matrix(os, g.l(k).matrix(), "      ");
    os << (k + 1 < g.channels() ? "," : "") << '\n';
  }
  os << "    ],\n    \"h\": ";
  detail::write_matrix(os, g.h_matrix(), "    ");
  os << "\n  }\n}\n";
}

struct Options {
  double tol = 1e-9;
  bool print_order = false;
  std::string output;  // empty: stdout
};

namespace detail {

inline int report(std::ostream& err, const std::vector<Diagnostic>& d, int code) {
  err << diagnostics_json(d) << '\n';
  return code;
}

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const SpecErrors& e) {
    return report(err, e.diagnostics(), kValidationFailure);
  } catch (const NumericalError& e) {
    return report(err, {{"numerical", "", e.what()}}, kNumericalFailure);
  } catch (const ValidationError& e) {
    return report(err, {{"validation", "", e.what()}}, kValidationFailure);
  } catch (const DomainError& e) {
    return report(err, {{"validation", "", e.what()}}, kValidationFailure);
  } catch (const std::exception& e) {
    return report(err, {{"runtime", "", e.what()}}, kNumericalFailure);
  }
}

/// Writes to the -o file or to `out`.
template <class F>
void emit(const Options& opt, std::ostream& out, F&& writer) {
  if (opt.output.empty()) {
    writer(out);
    return;
  }
  std::ofstream f(opt.output, std::ios::binary);
  if (!f) throw ValidationError("cannot open output file " + opt.output);
  writer(f);
}

inline SuperOperator spec_lindblad(const NetworkSpec& spec, const SlhModel& g) {
  const GaussianNoiseSpec noise = spec.noise ? *spec.noise : GaussianNoiseSpec::vacuum(g.channels());
  return gaussian_lindblad(g, noise);
}

}  // namespace detail

inline int cmd_validate(const std::string& path, const Options& opt, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const NetworkSpec spec = load_spec(path, opt.tol);
    if (opt.print_order) err << order_description(spec) << '\n';
    const SlhModel g = compose(spec);
    std::vector<Diagnostic> d;
    if (g.unitarity_residual() > opt.tol) d.push_back({"unitarity", "composite.s", "composite S is not unitary", g.unitarity_residual()});
    if (g.hermiticity_residual() > opt.tol) d.push_back({"hermiticity", "composite.h", "composite H is not self-adjoint", g.hermiticity_residual()});
    if (!d.empty()) return detail::report(err, d, kValidationFailure);
    out << "valid\n";
    return static_cast<int>(kOk);
  });
}

inline int cmd_compose(const std::string& path, const Options& opt, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const NetworkSpec spec = load_spec(path, opt.tol);
    if (opt.print_order) err << order_description(spec) << '\n';
    const SlhModel g = compose(spec);
    detail::emit(opt, out, [&](std::ostream& os) { write_compose_json(os, spec, g); });
    return static_cast<int>(kOk);
  });
}

inline int cmd_evolve(const std::string& path, const Options& opt, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const NetworkSpec spec = load_spec(path, opt.tol);
    if (opt.print_order) err << order_description(spec) << '\n';
    const Experiment& e = spec.experiment;
    const SlhModel g = compose(spec);
    if (e.type == "steady") {
      const DensityOperator rho = steady_state(detail::spec_lindblad(spec, g));
      StateTrajectory st;
      st.times = {0.0};
      st.states = {rho.matrix()};
      Trajectory tr = expectations(st, e.labels, e.observables);
      detail::emit(opt, out, [&](std::ostream& os) {
        std::ostringstream body;
        write_csv(body, tr);
        // a single row at t = inf
        const std::string s = body.str();
        const auto nl = s.find('\n');
        os << s.substr(0, nl + 1);
        const auto comma = s.find(',', nl + 1);
        os << "inf" << (comma == std::string::npos ? std::string("\n") : s.substr(comma));
      });
      return static_cast<int>(kOk);
    }
    if (e.type != "evolve") throw ValidationError("evolve needs an experiment of type \"evolve\" or \"steady\"");
    const DensityOperator rho0(spec.space, *e.rho0, opt.tol);
    EvolveOptions eo;
    eo.leak_factors.assign(spec.mode_factors.begin(), spec.mode_factors.end());
    eo.leak_fail = 1e-4;
    StateTrajectory st;
    if (e.backend == "rk4") {
      const GaussianNoiseSpec noise = spec.noise ? *spec.noise : GaussianNoiseSpec::vacuum(g.channels());
      const SlhModel r = rotate_out_scattering(g);
      st = master_evolve_rk4(gaussian_lindblad_terms(r.l_column(), r.h(), noise), rho0, e.t_grid, eo);
    } else {
      st = master_evolve(detail::spec_lindblad(spec, g), rho0, e.t_grid, eo);
    }
    for (const auto& w : st.warnings) err << "warning: " << w << '\n';
    const Trajectory tr = expectations(st, e.labels, e.observables);
    detail::emit(opt, out, [&](std::ostream& os) { write_csv(os, tr); });
    return static_cast<int>(kOk);
  });
}

inline int cmd_dpa_limit(const std::string& path, const Options& opt, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const NetworkSpec spec = load_spec(path, opt.tol);
    if (opt.print_order) err << order_description(spec) << '\n';
    const Experiment& e = spec.experiment;
    if (e.type != "dpa-limit") throw ValidationError("dpa-limit needs an experiment of type \"dpa-limit\"");
    const SlhModel g = compose(spec);
    const DensityOperator rho0(spec.space, *e.rho0, opt.tol);
    const ConvergenceResult r =
        convergence_experiment(g, e.eps, e.kappa, e.k_list, e.observables.front(), e.t_grid, rho0, e.truncation);
    detail::emit(opt, out, [&](std::ostream& os) { write_convergence_csv(os, r); });
    std::vector<Diagnostic> d;
    for (const auto& p : r.points) {
      if (!p.failure.empty()) d.push_back({"numerical", "k=" + fmt17(p.k), p.failure});
    }
    if (d.empty() && !r.errors_decreasing()) {
      d.push_back({"convergence", "$.experiment.dpa.k_list", "errors do not decrease along k_list"});
    }
    if (!d.empty()) return detail::report(err, d, kNumericalFailure);
    return static_cast<int>(kOk);
  });
}

}  // namespace gqfn::cli
