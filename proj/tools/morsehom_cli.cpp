#include "morsehom/pipeline.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace morsehom;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::pair<int, int>> parse_pairs(const std::string& s) {
  std::vector<std::pair<int, int>> out;
  for (const auto& item : split(s, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError("--pairs", "expected hi:lo[,hi:lo...]");
    try {
      out.emplace_back(std::stoi(item.substr(0, colon)), std::stoi(item.substr(colon + 1)));
    } catch (const std::exception&) {
      throw ConfigError("--pairs", "bad pair \"" + item + "\"");
    }
  }
  return out;
}

std::array<double, 2> parse_band(const std::string& s) {
  const auto parts = split(s, ',');
  if (parts.size() != 2) throw ConfigError("--band", "expected a,b");
  try {
    const double a = std::stod(parts[0]);
    const double b = std::stod(parts[1]);
    if (!(b > a)) throw ConfigError("--band", "need a < b");
    return {a, b};
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("--band", "expected two numbers");
  }
}

void print_summary(const RunReport& rep, std::ostream& out) {
  for (const auto& c : rep.checks) {
    out << (c.pass ? "PASS " : "FAIL ") << c.name << "  " << c.detail << '\n';
  }
  if (!rep.failed_stage.empty()) {
    std::cerr << "error: stage " << rep.failed_stage << " failed: " << rep.error << '\n';
  }
  out << (rep.passed() ? "OK" : "NOT OK") << " (exit " << rep.exit_code << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Morse homology engine for quasilinear elliptic functionals"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string stage_list;
  app.add_option("--config", config_path, "Experiment configuration (JSON)");
  app.add_option("--seed", seed, "Master seed, overrides the configuration");
  app.add_option("--out", out_dir, "Output directory, overrides the configuration");
  app.add_option("--stage", stage_list,
                 "Comma-separated stages to run (find,index,certify,flow,homology,cerami)");

  struct Sub {
    CLI::App* app;
    std::set<Stage> stages;
  };
  std::vector<Sub> subs{
      {app.add_subcommand("run", "Run the enabled stages"), {}},
      {app.add_subcommand("find-critical", "Locate critical points"), {Stage::Find}},
      {app.add_subcommand("index", "Morse indices and splittings"), {Stage::Index}},
      {app.add_subcommand("certify", "Non-degeneracy certificates"), {Stage::Certify}},
      {app.add_subcommand("flow", "Gradient-like flow and orbit counts"), {Stage::Flow}},
      {app.add_subcommand("homology", "Morse complex and Betti numbers"), {Stage::Homology}},
      {app.add_subcommand("diagnose-cerami", "Growth class and Palais-Smale diagnostics"),
       {Stage::Cerami}}};
  CLI::App* flow_cmd = subs[4].app;
  int shoot = 0;
  std::string pairs;
  double sphere_radius = -1.0;
  std::string band;
  flow_cmd->add_option("--shoot", shoot, "Initial number of shooting samples");
  flow_cmd->add_option("--pairs", pairs, "Orbit pairs to list, as hi:lo[,hi:lo...]");
  flow_cmd->add_option("--sphere-radius", sphere_radius, "Unstable sphere radius");
  flow_cmd->add_option("--band", band, "Energy band a,b for the Cerami estimate");

  CLI::App* cx = app.add_subcommand("counterexample", "Truncated sequence functional near 0");
  std::string orders = "5,10,20";
  cx->add_option("--orders", orders, "Comma-separated truncation orders");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  std::vector<std::string> command_line(argv, argv + argc);
  try {
    if (cx->parsed()) {
      std::vector<int> ns;
      for (const auto& s : split(orders, ',')) {
        try {
          ns.push_back(std::stoi(s));
        } catch (const std::exception&) {
          throw ConfigError("--orders", "bad order \"" + s + "\"");
        }
        if (ns.back() < 1) throw ConfigError("--orders", "orders must be >= 1");
      }
      const std::string text = to_json_text(counterexample_report(ns));
      if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::ofstream(std::filesystem::path(out_dir) / "report.json", std::ios::binary) << text;
      }
      std::cout << text;
      return 0;
    }

    if (config_path.empty()) throw ConfigError("--config", "required");
    ExperimentConfig cfg = load_config(config_path, seed);
    RunOptions opt;
    opt.command_line = command_line;
    if (!out_dir.empty()) opt.out_dir = out_dir;
    for (const auto& s : subs) {
      if (s.app->parsed() && !s.stages.empty()) opt.stages = s.stages;
    }
    if (!stage_list.empty()) {
      opt.stages.clear();
      for (const auto& s : split(stage_list, ',')) opt.stages.insert(stage_from_string(s));
    }
    if (flow_cmd->parsed()) {
      if (shoot != 0) {
        if (shoot < 2) throw ConfigError("--shoot", "need at least 2 samples");
        cfg.flow.n_shoot = shoot;
      }
      if (sphere_radius >= 0.0) cfg.flow.sphere_radius = sphere_radius;
      if (!band.empty()) cfg.flow.band = parse_band(band);
      if (!pairs.empty()) opt.pairs = parse_pairs(pairs);
    }
    const RunReport rep = run(cfg, opt);
    print_summary(rep, std::cout);
    return rep.exit_code;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
