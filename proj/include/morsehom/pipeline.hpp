#pragma once

#include "morsehom/config.hpp"
#include "morsehom/flow.hpp"
#include "morsehom/growth.hpp"
#include "morsehom/homology.hpp"
#include "morsehom/json_out.hpp"

#include <Eigen/Core>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace morsehom {

inline constexpr const char* kVersion = "0.1.0";

enum class Stage { Find, Index, Certify, Flow, Homology, Cerami };

inline const std::vector<Stage>& all_stages() {
  static const std::vector<Stage> s{Stage::Find, Stage::Index, Stage::Certify,
                                    Stage::Flow, Stage::Homology, Stage::Cerami};
  return s;
}

inline std::string to_string(Stage s) {
  switch (s) {
    case Stage::Find: return "find";
    case Stage::Index: return "index";
    case Stage::Certify: return "certify";
    case Stage::Flow: return "flow";
    case Stage::Homology: return "homology";
    case Stage::Cerami: return "cerami";
  }
  return "?";
}

inline Stage stage_from_string(const std::string& s) {
  for (Stage st : all_stages()) {
    if (to_string(st) == s) return st;
  }
  throw ConfigError("--stage", "unknown stage \"" + s +
                                   "\" (expected find, index, certify, flow, homology, cerami)");
}

/// Adds the stages each requested stage depends on.
inline std::set<Stage> with_dependencies(std::set<Stage> stages) {
  if (stages.count(Stage::Homology)) stages.insert(Stage::Flow);
  if (stages.count(Stage::Flow)) stages.insert(Stage::Certify);
  if (stages.count(Stage::Certify)) stages.insert(Stage::Index);
  if (stages.count(Stage::Index)) stages.insert(Stage::Find);
  return stages;
}

struct RunOptions {
  std::set<Stage> stages{all_stages().begin(), all_stages().end()};
  std::optional<std::string> out_dir;      // overrides the configured directory
  std::vector<std::pair<int, int>> pairs;  // orbit pairs to list; empty lists all
  bool write_files = true;
  std::vector<std::string> command_line;
};

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct RunReport {
  Json report;
  Json manifest;
  std::vector<CheckResult> checks;
  std::map<std::string, double> timings;  // seconds per stage
  std::string failed_stage;
  std::string error;
  int exit_code = 0;
  std::vector<std::string> files;

  bool passed() const { return exit_code == 0; }
};

namespace detail {

/// Failure inside a named stage.
class StageFailure : public Error {
 public:
  StageFailure(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

inline Json vec_json(const Vector& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Json opt_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

/// Seeds for the critical point search.
inline std::vector<Vector> search_seeds(const DiscreteFunctional& F, const SolverConfig& s) {
  if (const auto* G = dynamic_cast<const GalerkinFunctional*>(&F)) {
    return modal_seed_grid(G->mesh(), s.seed_lo, s.seed_hi, s.seed_count, s.seed_modes);
  }
  const Index n = F.dofs();
  if (std::pow(static_cast<double>(s.seed_count), static_cast<double>(n)) <= 20000.0) {
    return tensor_seed_grid(n, s.seed_lo, s.seed_hi, s.seed_count);
  }
  // Axis seeds when the tensor grid would be too large.
  std::vector<Vector> seeds{Vector::Zero(n)};
  for (Index i = 0; i < n; ++i) {
    for (int k = 0; k < s.seed_count; ++k) {
      const double a = s.seed_count == 1 ? s.seed_hi
                                         : s.seed_lo + (s.seed_hi - s.seed_lo) * k / (s.seed_count - 1);
      if (a == 0.0) continue;
      Vector v = Vector::Zero(n);
      v[i] = a;
      seeds.push_back(v);
    }
  }
  return seeds;
}

struct BandEstimate {
  EpsilonEstimate eps;
  double R = 0.0;
};

/// Everything computed for one functional.
struct Analysis {
  FunctionalPtr F;
  std::vector<CriticalPoint> cps;
  std::vector<std::optional<Splitting>> splits;
  std::vector<std::optional<CertifyResult>> certs;
  std::optional<FlowField> field;
  std::vector<ShootResult> shots;
  ParityMap parities;
  bool shooting_reliable = true;
  std::optional<BandEstimate> band;
  Json find, index, certify, flow;
};

class Runner {
 public:
  Runner(const ExperimentConfig& cfg, const RunOptions& opt) : cfg_(cfg), opt_(opt) {}

  RunReport run() {
    RunReport rep;
    stages_ = with_dependencies(opt_.stages);
    Json stages = Json::object();
    std::optional<Analysis> a;
    std::optional<double> factor;

    try {
      a.emplace();
      try {
        a->F = build_functional(cfg_.problem);
      } catch (const std::exception& e) {
        throw StageFailure("assemble", e.what());
      }
      analyze(*a, rep);
      if (stages_.count(Stage::Flow) && !a->shooting_reliable &&
          cfg_.problem.backend == "galerkin") {
        // One retry with a seeded relative perturbation of g.
        NormalSampler rng(substream(cfg_.seed, "perturbation"));
        factor = 1.0 + 1e-6 * (2.0 * rng.uniform() - 1.0);
        const auto* G = dynamic_cast<const GalerkinFunctional*>(a->F.get());
        Analysis b;
        b.F = assemble(G->psi(), G->g().scaled(*factor), G->mesh());
        rep.checks.clear();
        analyze(b, rep);
        a = std::move(b);
      }
    } catch (const StageFailure& e) {
      rep.failed_stage = e.stage();
      rep.error = e.what();
    }
    if (a && !a->F) a.reset();
    if (a) {
      if (!a->find.is_null()) stages["find"] = a->find;
      if (!a->index.is_null()) stages["index"] = a->index;
      if (!a->certify.is_null()) stages["certify"] = a->certify;
      if (!a->flow.is_null()) stages["flow"] = a->flow;
    }
    if (rep.failed_stage.empty() && a && stages_.count(Stage::Homology)) {
      guarded(Stage::Homology, rep, [&] { stages["homology"] = homology(*a, rep); });
    }
    if (rep.failed_stage.empty() && stages_.count(Stage::Cerami)) {
      guarded(Stage::Cerami, rep, [&] {
        const FunctionalPtr F = a ? a->F : build_functional(cfg_.problem);
        stages["cerami"] = cerami(*F, a ? &*a : nullptr, rep);
      });
    }
    if (!rep.failed_stage.empty()) {
      stages[rep.failed_stage] = Json{{"status", "failed"}, {"error", rep.error}};
    }

    bool all_pass = rep.failed_stage.empty();
    Json checks = Json::array();
    for (const auto& c : rep.checks) {
      all_pass = all_pass && c.pass;
      checks.push_back(Json{{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    }
    rep.exit_code = all_pass ? 0 : 1;

    Json requested = Json::array();
    for (Stage s : all_stages()) {
      if (stages_.count(s)) requested.push_back(to_string(s));
    }
    Json problem{{"backend", cfg_.problem.backend}};
    if (a) {
      problem["name"] = a->F->name();
      problem["dofs"] = a->F->dofs();
    }
    rep.report = Json{{"tool", "morsehom"},
                      {"version", kVersion},
                      {"seed", cfg_.seed},
                      {"config", Json(cfg_.source)},
                      {"problem", problem},
                      {"stages_run", requested},
                      {"perturbation", factor ? Json{{"g_scale", *factor},
                                                     {"reason", "unreliable shooting"}}
                                              : Json(nullptr)},
                      {"stages", stages},
                      {"checks", checks},
                      {"failed_stage", rep.failed_stage.empty() ? Json(nullptr)
                                                                : Json(rep.failed_stage)},
                      {"passed", all_pass},
                      {"exit_code", rep.exit_code}};
    if (opt_.write_files) write(rep, a ? &*a : nullptr);
    return rep;
  }

 private:
  template <class Fn>
  void guarded(Stage s, RunReport& rep, Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      fn();
    } catch (const std::exception& e) {
      rep.failed_stage = to_string(s);
      rep.error = to_string(s) + ": " + e.what();
    }
    rep.timings[to_string(s)] += seconds_since(t0);
  }

  static double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

  template <class Fn>
  void stage(Stage s, RunReport& rep, Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      fn();
    } catch (const StageFailure&) {
      throw;
    } catch (const std::exception& e) {
      rep.timings[to_string(s)] += seconds_since(t0);
      throw StageFailure(to_string(s), e.what());
    }
    rep.timings[to_string(s)] += seconds_since(t0);
  }

  static void set_check(RunReport& rep, const std::string& name, bool pass, std::string detail) {
    for (auto& c : rep.checks) {
      if (c.name == name) {
        c.pass = pass;
        c.detail = std::move(detail);
        return;
      }
    }
    rep.checks.push_back({name, pass, std::move(detail)});
  }

  void analyze(Analysis& a, RunReport& rep) {
    if (stages_.count(Stage::Find)) stage(Stage::Find, rep, [&] { find(a, rep); });
    if (stages_.count(Stage::Index)) stage(Stage::Index, rep, [&] { index(a, rep); });
    if (stages_.count(Stage::Certify)) stage(Stage::Certify, rep, [&] { certify(a, rep); });
    if (stages_.count(Stage::Flow)) stage(Stage::Flow, rep, [&] { flow(a, rep); });
  }

  void find(Analysis& a, RunReport& rep) const {
    DeflationOptions dopt;
    dopt.newton.tol = cfg_.solver.tol;
    dopt.newton.max_iter = cfg_.solver.max_iter;
    const auto seeds = search_seeds(*a.F, cfg_.solver);
    a.cps = deflated_search(*a.F, seeds, dopt);
    Json pts = Json::array();
    for (const auto& cp : a.cps) {
      pts.push_back(Json{{"id", cp.id},
                         {"value", cp.value},
                         {"residual", cp.residual},
                         {"iterations", cp.iterations},
                         {"norm", MetricNorm(a.F->flow_metric()).norm(cp.coefficients)},
                         {"coefficients", vec_json(cp.coefficients)}});
    }
    a.find = Json{{"status", "ok"},
                  {"seeds", seeds.size()},
                  {"count", a.cps.size()},
                  {"critical_points", pts}};
    set_check(rep, "find.nonempty", !a.cps.empty(),
              std::to_string(a.cps.size()) + " critical points");
  }

  void index(Analysis& a, RunReport& rep) const {
    SplittingOptions sopt;
    sopt.rel_zero_tol = cfg_.zero_tol;
    sopt.residual_tol = std::max(1e-8, 10.0 * cfg_.solver.tol);
    Json pts = Json::array();
    int degenerate = 0;
    for (auto& cp : a.cps) {
      Splitting s = splitting(*a.F, cp, sopt);
      cp.morse_index = s.morse_index;
      degenerate += s.degenerate() ? 1 : 0;
      Json near = Json::array();
      for (Index k : s.near_zero()) near.push_back(s.eigenvalues[k]);
      pts.push_back(Json{{"id", cp.id},
                         {"morse_index", s.morse_index},
                         {"null_count", s.null_count},
                         {"co_index", s.co_index()},
                         {"degenerate", s.degenerate()},
                         {"zero_tol", s.zero_tol},
                         {"injectivity_margin", injectivity_margin(s)},
                         {"near_zero_eigenvalues", near},
                         {"eigen_residual", s.max_residual},
                         {"eigenvalues", vec_json(s.eigenvalues)}});
      a.splits.push_back(std::move(s));
    }
    a.index = Json{{"status", "ok"}, {"degenerate_count", degenerate}, {"points", pts}};
    set_check(rep, "index.computed", true, std::to_string(a.cps.size()) + " splittings");
  }

  void certify(Analysis& a, RunReport& rep) const {
    Json pts = Json::array();
    int failed = 0;
    auto cert_json = [](const NondegCertificate& c) {
      return Json{{"verdict", to_string(c.verdict)},
                  {"delta", c.delta},
                  {"c", c.c},
                  {"c1", c.c1},
                  {"samples", c.samples},
                  {"worst_margin", c.worst_margin},
                  {"note", c.note}};
    };
    for (std::size_t i = 0; i < a.cps.size(); ++i) {
      const auto& cp = a.cps[i];
      const Splitting& s = *a.splits[i];
      if (s.degenerate()) {
        a.certs.emplace_back();
        std::string why;
        try {
          HyperbolicOperator::from_splitting(s);
        } catch (const RefusalError& e) {
          why = e.what();
        }
        pts.push_back(Json{{"id", cp.id}, {"status", "refused"}, {"reason", why}});
        continue;
      }
      CertifyOptions copt;
      copt.samples = cfg_.nondeg_samples;
      copt.max_halvings = cfg_.max_halvings;
      copt.seed = splitmix64(cfg_.seed + static_cast<std::uint64_t>(cp.id));
      CertifyResult r = morsehom::certify(*a.F, cp, s, a.cps, copt);
      failed += r.passed() ? 0 : 1;
      pts.push_back(Json{{"id", cp.id},
                         {"status", r.passed() ? "certified" : "failed"},
                         {"halvings", r.halvings},
                         {"criterion", cert_json(r.criterion)},
                         {"lyapunov", cert_json(r.lyapunov)}});
      a.certs.push_back(std::move(r));
    }
    a.certify = Json{{"status", "ok"}, {"failed_count", failed}, {"points", pts}};
    set_check(rep, "certify.all_pass", failed == 0,
              std::to_string(failed) + " non-degenerate points failed certification");
  }

  BandEstimate band_estimate(const DiscreteFunctional& F) const {
    BandEstimate b;
    const auto& band = *cfg_.flow.band;
    b.eps = estimate_epsilon_detail(F, band[0], band[1], cfg_.cerami.r0, cfg_.cerami.samples,
                                    cfg_.seed);
    b.R = gronwall_radius(cfg_.cerami.r0, b.eps.epsilon, band[0], band[1]);
    return b;
  }

  void flow(Analysis& a, RunReport& rep) const {
    std::vector<FieldNode> nodes;
    for (std::size_t i = 0; i < a.cps.size(); ++i) {
      if (!a.certs[i]) continue;  // degenerate points stay outside the field
      if (!a.certs[i]->passed()) {
        throw InvalidInput("critical point " + std::to_string(a.cps[i].id) +
                           " is not certified");
      }
      nodes.push_back(FieldNode{a.cps[i], HyperbolicOperator::from_splitting(*a.splits[i]),
                                a.splits[i]->morse_index, a.certs[i]->criterion.delta});
    }
    if (nodes.empty()) throw InvalidInput("no certified critical points");
    a.field.emplace(*a.F, std::move(nodes), blend_profile_from_string(cfg_.flow.blend));
    const FlowField& V = *a.field;

    ShootOptions sopt;
    sopt.n_shoot = cfg_.flow.n_shoot;
    sopt.sphere_radius = cfg_.flow.sphere_radius;
    sopt.horizon = cfg_.flow.horizon;
    sopt.refinements = cfg_.flow.refinements;
    sopt.seed = cfg_.seed;
    double max_norm = 0.0;
    for (const auto& l : V.locals()) max_norm = std::max(max_norm, V.norm().norm(l.cp.coefficients));
    sopt.integrate.escape_bound = 100.0 * (1.0 + max_norm);
    if (cfg_.flow.band) {
      a.band = band_estimate(*a.F);
      if (std::isfinite(a.band->R)) {
        sopt.integrate.escape_bound = std::max(sopt.integrate.escape_bound, 10.0 * a.band->R);
      }
    }

    const Shooter shooter(V, sopt);
    Json sources = Json::array();
    Json orbits = Json::array();
    for (const auto& l : V.locals()) {
      if (l.morse_index == 0) continue;
      ShootResult r = shooter.shoot(l.cp.id);
      a.shooting_reliable = a.shooting_reliable && r.reliable;
      Json counts = Json::array();
      for (const auto& lo : V.locals()) {
        if (lo.morse_index != l.morse_index - 1) continue;
        const auto it = r.counts.find(lo.cp.id);
        const int n = it == r.counts.end() ? 0 : it->second;
        a.parities[{l.cp.id, lo.cp.id}] = n % 2;
        counts.push_back(Json{{"target", lo.cp.id}, {"count", n}, {"parity", n % 2}});
        if (listed(l.cp.id, lo.cp.id)) {
          orbits.push_back(Json{{"source", l.cp.id},
                                {"target", lo.cp.id},
                                {"count", n},
                                {"parity", n % 2},
                                {"reliable", r.reliable}});
        }
      }
      Json terminals = Json::object();
      for (const auto& t : r.trajectories) {
        const std::string k = to_string(t.terminal);
        terminals[k] = terminals.value(k, 0) + 1;
      }
      sources.push_back(Json{{"source", l.cp.id},
                             {"unstable_dim", r.unstable_dim},
                             {"n_shoot", r.n_shoot},
                             {"reliable", r.reliable},
                             {"warning", r.warning},
                             {"counts", counts},
                             {"terminals", terminals},
                             {"trajectories", r.trajectories.size()}});
      a.shots.push_back(std::move(r));
    }
    Json radii = Json::array();
    for (const auto& l : V.locals()) {
      radii.push_back(Json{{"id", l.cp.id}, {"morse_index", l.morse_index}, {"rho", l.rho}});
    }
    a.flow = Json{{"status", "ok"},
                  {"blend", to_string(V.profile())},
                  {"metric", a.F->backend() == Backend::Galerkin ? "h-gram-at-zero" : "explicit"},
                  {"escape_bound", sopt.integrate.escape_bound},
                  {"neighborhoods", radii},
                  {"sources", sources},
                  {"orbits", orbits},
                  {"reliable", a.shooting_reliable}};
    set_check(rep, "flow.reliable", a.shooting_reliable,
              a.shooting_reliable ? "all shooting passes resolved" : "unresolved shooting");
    if (a.band) {
      std::vector<Trajectory> all;
      for (const auto& s : a.shots) all.insert(all.end(), s.trajectories.begin(), s.trajectories.end());
      const BandConfinement bc =
          band_confined_max_norm(V, all, (*cfg_.flow.band)[0], (*cfg_.flow.band)[1], cfg_.cerami.r0);
      const double emp = bc.max_norm;
      const bool ok = emp <= a.band->R;
      a.flow["band"] = Json{{"a", (*cfg_.flow.band)[0]},
                            {"b", (*cfg_.flow.band)[1]},
                            {"r0", cfg_.cerami.r0},
                            {"epsilon", a.band->eps.epsilon},
                            {"R", a.band->R},
                            {"empirical_max_norm", emp},
                            {"confined_points", bc.points},
                            {"contained", ok}};
      set_check(rep, "flow.band_containment", ok, "max norm on band-confined segments vs Gronwall radius");
    }
  }

  bool listed(int hi, int lo) const {
    if (opt_.pairs.empty()) return true;
    for (const auto& p : opt_.pairs) {
      if (p.first == hi && p.second == lo) return true;
    }
    return false;
  }

  Json homology(const Analysis& a, RunReport& rep) const {
    std::vector<GradedPoint> pts;
    for (std::size_t i = 0; i < a.cps.size(); ++i) {
      pts.push_back({a.cps[i].id, a.splits[i]->morse_index, a.cps[i].value,
                     a.splits[i]->degenerate()});
    }
    const MorseComplex mc = build_morse_complex(pts, a.parities, cfg_.P);
    const std::vector<int> b = betti(mc);
    Json gens = Json::array();
    for (const auto& g : mc.generators) gens.push_back(g);
    Json bnd = Json::array();
    for (const auto& d : mc.boundaries) bnd.push_back(d.bit_rows());
    Json out{{"status", "ok"},
             {"P", cfg_.P.threshold ? Json{{"kind", "sublevel"}, {"a", *cfg_.P.threshold}}
                                    : Json{{"kind", "empty"}}},
             {"generators", gens},
             {"boundaries", bnd},
             {"d_squared_zero", d_squared_zero(mc)},
             {"betti", b},
             {"euler_characteristic", euler_characteristic(b)}};
    set_check(rep, "homology.d_squared_zero", d_squared_zero(mc), "boundary composition");
    if (cfg_.expected_betti) {
      std::vector<int> want = *cfg_.expected_betti;
      std::vector<int> got = b;
      const std::size_t n = std::max(want.size(), got.size());
      want.resize(n, 0);
      got.resize(n, 0);
      out["expected_betti"] = *cfg_.expected_betti;
      out["matches_expected"] = want == got;
      set_check(rep, "homology.matches_expected", want == got, "betti numbers vs expectation");
    }
    return out;
  }

  Json cerami(const DiscreteFunctional& F, const Analysis* a, RunReport& rep) const {
    Json out{{"status", "ok"}};
    const auto* G = dynamic_cast<const GalerkinFunctional*>(&F);
    bool expected = true;
    std::string why = "explicit backend: growth classification not applicable";
    if (G) {
      const double p = G->psi().p;
      const int n = G->mesh().dim();
      std::optional<double> length;
      if (n == 1) length = G->mesh().domain()[1] - G->mesh().domain()[0];
      Json growth;
      try {
        const GrowthClass gc = classify_growth(G->g(), p, n, length);
        growth = Json{{"tag", to_string(gc.tag)},
                      {"q", gc.q},
                      {"p", gc.p},
                      {"threshold_low", gc.threshold_low},
                      {"threshold_high", gc.threshold_high},
                      {"lambda", opt_json(gc.lambda)},
                      {"resonant", gc.resonant ? Json(*gc.resonant) : Json(nullptr)},
                      {"ratios", gc.ratios}};
        switch (gc.tag) {
          case GrowthTag::Sublinear:
            why = "sublinear growth: coercive, condition (C) holds";
            break;
          case GrowthTag::Linear:
            expected = !gc.resonant.value_or(false);
            why = gc.resonant ? (*gc.resonant ? "linear growth at a resonant lambda"
                                              : "linear growth away from the spectrum")
                              : "linear growth, resonance not assessed";
            break;
          case GrowthTag::Superlinear: {
            const SuperlinearReport sr = superlinear_check(G->g(), p);
            expected = sr.monotonicity && sr.lower_bound && (!sr.ar_declared || sr.ar_condition);
            growth["superlinear"] = Json{{"monotonicity", sr.monotonicity},
                                         {"lower_bound", sr.lower_bound},
                                         {"ar_declared", sr.ar_declared},
                                         {"ar_condition", sr.ar_condition},
                                         {"r", sr.r},
                                         {"alpha", sr.alpha},
                                         {"lower_bound_min", sr.lower_bound_min},
                                         {"monotonicity_failures", sr.monotonicity_failures.size()}};
            why = expected ? "superlinear structural conditions hold on the grid"
                           : "superlinear structural conditions violated";
            break;
          }
          case GrowthTag::Unclassified:
            expected = false;
            why = "growth exponent outside the classified ranges";
            break;
        }
      } catch (const ClassificationConflict& e) {
        growth = Json{{"tag", "conflict"}, {"error", e.what()}};
        expected = false;
        why = "declared growth disagrees with the ratio scan";
      }
      out["growth"] = growth;
      if (length) {
        const auto spec = plaplace_spectrum_1d(p, *length, cfg_.cerami.k_max);
        out["plaplace_spectrum"] = spec;
      }
    } else {
      out["growth"] = nullptr;
    }
    if (cfg_.flow.band) {
      const BandEstimate b = a && a->band ? *a->band : band_estimate(F);
      out["band"] = Json{{"a", (*cfg_.flow.band)[0]},
                         {"b", (*cfg_.flow.band)[1]},
                         {"r0", cfg_.cerami.r0},
                         {"epsilon", b.eps.epsilon},
                         {"band_hits", b.eps.band_hits},
                         {"outside_hits", b.eps.outside_hits},
                         {"R", b.R}};
    }
    out["condition_expected"] = expected;
    out["reason"] = why;
    set_check(rep, "cerami.condition_expected", expected, why);
    return out;
  }

  void write(RunReport& rep, const Analysis* a) const {
    namespace fs = std::filesystem;
    const fs::path dir = opt_.out_dir.value_or(cfg_.output_dir);
    fs::create_directories(dir);
    const std::string text = to_json_text(rep.report);
    {
      std::ofstream f(dir / "report.json", std::ios::binary);
      f << text;
    }
    rep.files.push_back("report.json");
    if (a && cfg_.flow.export_trajectories) {
      for (const auto& s : a->shots) {
        for (std::size_t k = 0; k < s.trajectories.size(); ++k) {
          const std::string name =
              "traj_" + std::to_string(s.source) + "_" + std::to_string(k) + ".csv";
          write_csv(dir / name, s.trajectories[k], *a->F);
          rep.files.push_back(name);
        }
      }
    }
    double total = 0.0;
    Json timings = Json::object();
    for (Stage s : all_stages()) {
      const auto it = rep.timings.find(to_string(s));
      if (it == rep.timings.end()) continue;
      timings[it->first] = it->second;
      total += it->second;
    }
    Json cmd = Json::array();
    for (const auto& c : opt_.command_line) cmd.push_back(c);
    rep.manifest = Json{{"tool", "morsehom"},
                        {"version", kVersion},
                        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                      std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                      std::to_string(EIGEN_MINOR_VERSION)},
#ifdef __VERSION__
                        {"compiler", __VERSION__},
#endif
                        {"command", cmd},
                        {"seed", cfg_.seed},
                        {"report_fnv1a", fnv1a(text)},
                        {"files", rep.files},
                        {"wall_seconds", timings},
                        {"wall_seconds_total", total}};
    std::ofstream f(dir / "manifest.json", std::ios::binary);
    f << to_json_text(rep.manifest);
  }

  static void write_csv(const std::filesystem::path& path, const Trajectory& t,
                        const DiscreteFunctional& F) {
    std::ofstream f(path, std::ios::binary);
    f << "t";
    for (Index i = 0; i < F.dofs(); ++i) f << ",u_" << (i + 1);
    f << ",f,cerami\n";
    for (std::size_t k = 0; k < t.size(); ++k) {
      f << format_double(t.times[k]);
      for (Index i = 0; i < t.states[k].size(); ++i) f << ',' << format_double(t.states[k][i]);
      f << ',' << format_double(t.f_values[k]) << ',' << format_double(t.cerami[k]) << '\n';
    }
  }

  const ExperimentConfig& cfg_;
  const RunOptions& opt_;
  std::set<Stage> stages_;
};

}  // namespace detail

/// Runs the enabled stages in dependency order, writes report.json,
/// manifest.json and one traj_<source>_<k>.csv per shooting trajectory.
/// exit_code is 0 iff every stage completed and every enabled check passed.
inline RunReport run(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
  return detail::Runner(cfg, opt).run();
}

/// Behavior of the truncated sequence functional near its origin.
inline Json counterexample_report(const std::vector<int>& orders) {
  Json rows = Json::array();
  for (int N : orders) {
    const auto F = build_truncated(N);
    const auto [v, dist] = F->nearest_nonzero_critical();
    const Vector h0 = F->hessian(Vector::Zero(N)).diagonal();
    rows.push_back(Json{{"order", N},
                        {"nearest_distance", dist},
                        {"expected_distance", std::numbers::pi / N},
                        {"residual", F->gradient(v).norm()},
                        {"value_at_origin", F->value(Vector::Zero(N))},
                        {"hessian_at_origin_min_abs", h0.cwiseAbs().minCoeff()},
                        {"hessian_at_origin_max_abs", h0.cwiseAbs().maxCoeff()},
                        {"morse_index_at_origin", (h0.array() < 0.0).count()}});
  }
  return Json{{"tool", "morsehom"}, {"version", kVersion}, {"counterexample", rows}};
}

}  // namespace morsehom
