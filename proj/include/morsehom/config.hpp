#pragma once

#include "morsehom/functional.hpp"
#include "morsehom/homology.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace morsehom {

/// Schema violation; the message starts with the offending field path.
class ConfigError : public InvalidInput {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : InvalidInput(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct PsiConfig {
  std::string kind = "area-kappa";  // or "power-plus-quadratic"
  double p = 3.0;
  double kappa = 1.0;
};

struct GConfig {
  std::string kind = "zero";
  nlohmann::json params = nlohmann::json::object();
};

struct MeshConfig {
  int dim = 1;
  std::vector<double> domain{0.0, 1.0};
  std::vector<int> resolution{32};
};

struct ProblemConfig {
  std::string backend = "galerkin";   // or "explicit"
  std::string fixture;                // explicit backend only
  int order = 5;                      // truncated-sequence order
  PsiConfig psi;
  GConfig g;
  MeshConfig mesh;
  int quadrature_order = 4;
};

struct SolverConfig {
  double tol = 1e-10;
  int max_iter = 100;
  double seed_lo = -2.0;
  double seed_hi = 2.0;
  int seed_count = 5;
  int seed_modes = 2;
};

struct FlowConfig {
  int n_shoot = 16;
  double sphere_radius = 0.0;
  double horizon = 1e3;
  int refinements = 2;
  std::string blend = "smoothstep";
  std::optional<std::array<double, 2>> band;
  bool export_trajectories = true;
};

struct CeramiConfig {
  double r0 = 1.0;
  int samples = 200;
  int k_max = 5;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  ProblemConfig problem;
  SolverConfig solver;
  double zero_tol = 1e-6;
  int nondeg_samples = 1000;
  int max_halvings = 10;
  FlowConfig flow;
  SublevelSpec P;
  std::optional<std::vector<int>> expected_betti;
  CeramiConfig cerami;
  nlohmann::json source;  // normalized echo of the parsed document
};

namespace detail {

/// Typed access to one JSON object with field-path diagnostics.
class ConfigReader {
 public:
  ConfigReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where(), "expected an object");
  }

  void allow(std::initializer_list<const char*> keys) const {
    std::set<std::string> ok(keys.begin(), keys.end());
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!ok.count(it.key())) throw ConfigError(child(it.key()), "unknown key");
    }
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  const nlohmann::json& raw(const std::string& key) const { return j_.at(key); }
  std::string child(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  ConfigReader object(const std::string& key) const {
    static const nlohmann::json empty = nlohmann::json::object();
    return has(key) ? ConfigReader(j_.at(key), child(key)) : ConfigReader(empty, child(key));
  }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(child(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(child(key), "must be finite");
    return d;
  }

  double positive(const std::string& key, double fallback) const {
    const double d = number(key, fallback);
    if (!(d > 0.0)) throw ConfigError(child(key), "must be positive");
    return d;
  }

  int integer(const std::string& key, int fallback, int min_value) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(child(key), "expected an integer");
    const auto i = v.get<long long>();
    if (i < min_value || i > 1000000000LL) {
      throw ConfigError(child(key), "must be an integer >= " + std::to_string(min_value));
    }
    return static_cast<int>(i);
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_boolean()) throw ConfigError(child(key), "expected true or false");
    return j_.at(key).get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback,
                     std::initializer_list<const char*> choices = {}) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_string()) throw ConfigError(child(key), "expected a string");
    std::string s = j_.at(key).get<std::string>();
    if (choices.size() == 0) return s;
    std::string list;
    for (const char* c : choices) {
      if (s == c) return s;
      list += list.empty() ? c : std::string(", ") + c;
    }
    throw ConfigError(child(key), "expected one of " + list + " (got \"" + s + "\")");
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (v.is_number()) return {v.get<double>()};
    if (!v.is_array()) throw ConfigError(child(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) {
        throw ConfigError(child(key) + "[" + std::to_string(i) + "]", "expected a number");
      }
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  std::string where() const { return path_.empty() ? "<root>" : path_; }

 private:
  const nlohmann::json& j_;
  std::string path_;
};

inline GModel build_g(const GConfig& g, double p) {
  ConfigReader r(g.params, "problem.g.params");
  GModel m;
  if (g.kind == "zero") {
    r.allow({});
    m = GModel::zero();
  } else if (g.kind == "linear") {
    r.allow({"lambda"});
    if (!r.has("lambda")) throw ConfigError("problem.g.params.lambda", "required");
    m = GModel::linear(r.number("lambda", 0.0));
  } else if (g.kind == "p-linear") {
    r.allow({"lambda"});
    if (!r.has("lambda")) throw ConfigError("problem.g.params.lambda", "required");
    m = GModel::p_linear(r.number("lambda", 0.0), p);
  } else if (g.kind == "power") {
    r.allow({"coeff", "exponent", "alpha", "r", "ar_mu", "ar_R"});
    const double e = r.number("exponent", 2.0);
    if (!(e >= 1.0)) throw ConfigError("problem.g.params.exponent", "must be >= 1");
    m = GModel::power(r.number("coeff", 1.0), e);
  } else if (g.kind == "power-sum") {
    r.allow({"terms", "alpha", "r", "ar_mu", "ar_R"});
    if (!r.has("terms") || !r.raw("terms").is_array() || r.raw("terms").empty()) {
      throw ConfigError("problem.g.params.terms", "expected a non-empty array of [coeff, exponent]");
    }
    std::vector<GModel::PowerTerm> terms;
    const auto& arr = r.raw("terms");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string path = "problem.g.params.terms[" + std::to_string(i) + "]";
      if (!arr[i].is_array() || arr[i].size() != 2 || !arr[i][0].is_number() ||
          !arr[i][1].is_number()) {
        throw ConfigError(path, "expected [coeff, exponent]");
      }
      const double e = arr[i][1].get<double>();
      if (!(e >= 1.0)) throw ConfigError(path, "exponent must be >= 1");
      terms.push_back({arr[i][0].get<double>(), e});
    }
    m = GModel::power_sum(std::move(terms));
  } else if (g.kind == "oscillating") {
    r.allow({"alpha", "r", "ar_mu", "ar_R"});
    m = GModel::oscillating();
  } else {
    throw ConfigError("problem.g.kind", "unknown nonlinearity \"" + g.kind + "\"");
  }
  if (r.has("alpha")) m.alpha = r.number("alpha", 0.0);
  if (r.has("r")) m.r = r.positive("r", 1.0);
  if (r.has("ar_mu")) m.ar_mu = r.number("ar_mu", 0.0);
  if (r.has("ar_R")) m.ar_R = r.positive("ar_R", 1.0);
  return m;
}

}  // namespace detail

/// Parses and validates a configuration document. A seed override replaces
/// (or supplies) the top-level seed.
inline ExperimentConfig parse_config(const nlohmann::json& doc,
                                     std::optional<std::uint64_t> seed_override = {}) {
  using detail::ConfigReader;
  ConfigReader root(doc, "");
  root.allow({"seed", "output_dir", "problem", "solver", "spectral", "nondeg", "flow", "homology",
              "cerami"});
  ExperimentConfig cfg;

  if (seed_override) {
    cfg.seed = *seed_override;
  } else if (!root.has("seed")) {
    throw ConfigError("seed", "required");
  } else {
    const auto& s = root.raw("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
      throw ConfigError("seed", "expected a non-negative integer");
    }
    cfg.seed = s.get<std::uint64_t>();
  }
  cfg.output_dir = root.string("output_dir", cfg.output_dir);

  // problem
  {
    const ConfigReader pr = root.object("problem");
    pr.allow({"backend", "fixture", "order", "psi", "g", "mesh", "quadrature"});
    auto& p = cfg.problem;
    p.backend = pr.string("backend", p.backend, {"galerkin", "explicit"});
    if (p.backend == "explicit") {
      for (const char* k : {"psi", "g", "mesh", "quadrature"}) {
        if (pr.has(k)) throw ConfigError(pr.child(k), "not used by the explicit backend");
      }
      if (!pr.has("fixture")) throw ConfigError("problem.fixture", "required for explicit backend");
      p.fixture = pr.string("fixture", "",
                            {"double-well", "saddle-quadratic", "quartic-saddle", "quartic",
                             "quadratic", "truncated-sequence"});
      p.order = pr.integer("order", p.order, 1);
    } else {
      if (pr.has("fixture") || pr.has("order")) {
        throw ConfigError(pr.child(pr.has("fixture") ? "fixture" : "order"),
                          "only used by the explicit backend");
      }
      const ConfigReader psi = pr.object("psi");
      psi.allow({"kind", "p", "kappa"});
      p.psi.kind = psi.string("kind", p.psi.kind, {"area-kappa", "power-plus-quadratic"});
      p.psi.p = psi.number("p", p.psi.p);
      if (!(p.psi.p > 2.0)) {
        throw ConfigError("problem.psi.p", "requires p > 2 (got " + std::to_string(p.psi.p) + ")");
      }
      p.psi.kappa = psi.positive("kappa", p.psi.kappa);

      const ConfigReader g = pr.object("g");
      g.allow({"kind", "params"});
      p.g.kind = g.string("kind", p.g.kind);
      if (g.has("params")) p.g.params = g.raw("params");
      detail::build_g(p.g, p.psi.p);  // validates params

      const ConfigReader mesh = pr.object("mesh");
      mesh.allow({"dim", "domain", "resolution"});
      p.mesh.dim = mesh.integer("dim", p.mesh.dim, 1);
      if (p.mesh.dim > 2) throw ConfigError("problem.mesh.dim", "must be 1 or 2");
      const std::vector<double> dflt_domain =
          p.mesh.dim == 1 ? std::vector<double>{0.0, 1.0} : std::vector<double>{0.0, 1.0, 0.0, 1.0};
      p.mesh.domain = mesh.numbers("domain", dflt_domain);
      if (p.mesh.domain.size() != static_cast<std::size_t>(2 * p.mesh.dim)) {
        throw ConfigError("problem.mesh.domain",
                          "expected " + std::to_string(2 * p.mesh.dim) + " numbers");
      }
      for (int d = 0; d < p.mesh.dim; ++d) {
        if (!(p.mesh.domain[2 * d + 1] > p.mesh.domain[2 * d])) {
          throw ConfigError("problem.mesh.domain", "bounds must be increasing");
        }
      }
      std::vector<double> res = mesh.numbers("resolution", {p.mesh.dim == 1 ? 32.0 : 8.0});
      if (res.size() == 1 && p.mesh.dim == 2) res.push_back(res[0]);
      if (res.size() != static_cast<std::size_t>(p.mesh.dim)) {
        throw ConfigError("problem.mesh.resolution",
                          "expected " + std::to_string(p.mesh.dim) + " integers");
      }
      p.mesh.resolution.clear();
      for (double r : res) {
        if (!(r >= 2.0) || r != std::floor(r) || r > 1e6) {
          throw ConfigError("problem.mesh.resolution", "cell counts must be integers >= 2");
        }
        p.mesh.resolution.push_back(static_cast<int>(r));
      }
      const ConfigReader q = pr.object("quadrature");
      q.allow({"order"});
      p.quadrature_order = q.integer("order", 4, 1);
    }
  }

  // solver
  {
    const ConfigReader s = root.object("solver");
    s.allow({"tol", "max_iter", "seed_grid"});
    cfg.solver.tol = s.positive("tol", cfg.solver.tol);
    cfg.solver.max_iter = s.integer("max_iter", cfg.solver.max_iter, 1);
    const ConfigReader grid = s.object("seed_grid");
    grid.allow({"lo", "hi", "count", "modes"});
    cfg.solver.seed_lo = grid.number("lo", cfg.solver.seed_lo);
    cfg.solver.seed_hi = grid.number("hi", cfg.solver.seed_hi);
    if (!(cfg.solver.seed_hi > cfg.solver.seed_lo)) {
      throw ConfigError("solver.seed_grid.hi", "must exceed lo");
    }
    cfg.solver.seed_count = grid.integer("count", cfg.solver.seed_count, 1);
    cfg.solver.seed_modes = grid.integer("modes", cfg.solver.seed_modes, 1);
  }

  {
    const ConfigReader s = root.object("spectral");
    s.allow({"zero_tol"});
    cfg.zero_tol = s.positive("zero_tol", cfg.zero_tol);
  }
  {
    const ConfigReader n = root.object("nondeg");
    n.allow({"samples", "max_halvings"});
    cfg.nondeg_samples = n.integer("samples", cfg.nondeg_samples, 1);
    cfg.max_halvings = n.integer("max_halvings", cfg.max_halvings, 0);
  }
  {
    const ConfigReader f = root.object("flow");
    f.allow({"shoot", "sphere_radius", "horizon", "refinements", "blend", "band",
             "export_trajectories"});
    cfg.flow.n_shoot = f.integer("shoot", cfg.flow.n_shoot, 2);
    cfg.flow.sphere_radius = f.number("sphere_radius", cfg.flow.sphere_radius);
    if (cfg.flow.sphere_radius < 0.0) throw ConfigError("flow.sphere_radius", "must be >= 0");
    cfg.flow.horizon = f.positive("horizon", cfg.flow.horizon);
    cfg.flow.refinements = f.integer("refinements", cfg.flow.refinements, 0);
    cfg.flow.blend = f.string("blend", cfg.flow.blend, {"smoothstep", "cosine", "exp"});
    if (f.has("band")) {
      const auto b = f.numbers("band", {});
      if (b.size() != 2 || !(b[1] > b[0])) {
        throw ConfigError("flow.band", "expected [a, b] with a < b");
      }
      cfg.flow.band = std::array<double, 2>{b[0], b[1]};
    }
    cfg.flow.export_trajectories = f.boolean("export_trajectories", cfg.flow.export_trajectories);
  }
  {
    const ConfigReader h = root.object("homology");
    h.allow({"P", "expect"});
    if (h.has("expect")) {
      const auto& e = h.raw("expect");
      std::vector<int> b;
      if (!e.is_array() || e.empty()) throw ConfigError("homology.expect", "expected an array of integers");
      for (std::size_t i = 0; i < e.size(); ++i) {
        if (!e[i].is_number_integer() || e[i].get<long long>() < 0) {
          throw ConfigError("homology.expect[" + std::to_string(i) + "]",
                            "expected a non-negative integer");
        }
        b.push_back(e[i].get<int>());
      }
      cfg.expected_betti = b;
    }
    const ConfigReader P = h.object("P");
    P.allow({"kind", "a"});
    const std::string kind = P.string("kind", "empty", {"empty", "sublevel"});
    if (kind == "sublevel") {
      if (!P.has("a")) throw ConfigError("homology.P.a", "required for a sublevel set");
      cfg.P.threshold = P.number("a", 0.0);
    } else if (P.has("a")) {
      throw ConfigError("homology.P.a", "only used with kind \"sublevel\"");
    }
  }
  {
    const ConfigReader c = root.object("cerami");
    c.allow({"r0", "samples", "k_max"});
    cfg.cerami.r0 = c.positive("r0", cfg.cerami.r0);
    cfg.cerami.samples = c.integer("samples", cfg.cerami.samples, 1);
    cfg.cerami.k_max = c.integer("k_max", cfg.cerami.k_max, 1);
  }
  cfg.source = doc;
  if (seed_override) cfg.source["seed"] = cfg.seed;
  return cfg;
}

/// Reads a configuration file; JSON syntax errors become ConfigError.
inline ExperimentConfig load_config(const std::string& path,
                                    std::optional<std::uint64_t> seed_override = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("<file>", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(doc, seed_override);
}

/// Builds the discrete functional described by the problem block.
inline FunctionalPtr build_functional(const ProblemConfig& p) {
  if (p.backend == "explicit") {
    if (p.fixture == "double-well") return fixtures::double_well();
    if (p.fixture == "saddle-quadratic") return fixtures::saddle_quadratic();
    if (p.fixture == "quartic-saddle") return fixtures::quartic_saddle();
    if (p.fixture == "quartic") return fixtures::quartic();
    if (p.fixture == "quadratic") return fixtures::quadratic(p.order);
    if (p.fixture == "truncated-sequence") return build_truncated(p.order);
    throw ConfigError("problem.fixture", "unknown fixture \"" + p.fixture + "\"");
  }
  const PsiModel psi = p.psi.kind == "area-kappa" ? PsiModel::area_kappa(p.psi.p, p.psi.kappa)
                                                  : PsiModel::power_plus_quadratic(p.psi.p);
  GModel g = detail::build_g(p.g, p.psi.p);
  const auto& d = p.mesh.domain;
  Mesh mesh = p.mesh.dim == 1
                  ? Mesh::interval(d[0], d[1], p.mesh.resolution[0], p.quadrature_order)
                  : Mesh::rectangle(d[0], d[1], d[2], d[3], p.mesh.resolution[0],
                                    p.mesh.resolution[1], p.quadrature_order);
  return assemble(psi, std::move(g), std::move(mesh));
}

}  // namespace morsehom
