#include <algorithm>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uturnlab/cli/config.hpp"

namespace uturnlab::cli {

namespace {

using nlohmann::json;

struct SubcommandState {
  CLI::App* app = nullptr;
  std::string config_path;
  std::uint64_t seed = 0;
  std::string threads;
  std::string output_dir;
  std::string target;
  // predict / sampler-ish inline flags
  double h = 0.0;
  int k_max = 0;
  double hbar = 0.0;
  // phase
  double kappa = 0.0;
  double ratio = 0.0;
};

void add_shared_options(SubcommandState& state) {
  state.app->add_option("--config", state.config_path, "JSON config file");
  state.app->add_option("--seed", state.seed, "master seed (64-bit unsigned)");
  state.app->add_option("--threads", state.threads, "worker count or 'auto'");
  state.app->add_option("--out", state.output_dir, "output directory");
}

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ConfigError("config: malformed JSON in '" + path + "': " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config: top level must be a JSON object");
  return doc;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"uturnlab: orbit-selection, coupling and mixing experiments for "
               "no-U-turn and Hamiltonian Monte Carlo kernels on diagonal Gaussian targets"};
  app.set_help_flag("--help", "print help");
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, std::string>> names = {
      {"sample", "run sampler chains and emit per-transition trace tables"},
      {"concentration", "U-turn diagnostic statistics over a (t-, t+) grid"},
      {"orbits", "orbit-length and index-selection statistics for NUTS"},
      {"phase", "accelerated-phase membership for a two-scale family"},
      {"contraction", "synchronous-coupling contraction measurement"},
      {"mixing", "radial-KS mixing estimation across replicas"},
      {"predict", "critical orbit length from the uniform term"},
  };

  std::vector<SubcommandState> states(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    auto& state = states[i];
    state.app = app.add_subcommand(names[i].first, names[i].second);
    state.app->set_help_flag("--help", "print help");
    add_shared_options(state);
    const std::string& name = names[i].first;
    if (name == "phase") {
      state.app->add_option("--kappa", state.kappa, "condition number (>= 1)");
      state.app->add_option("--ratio", state.ratio, "dimension ratio d2/d1");
    } else {
      state.app->add_option("--target", state.target,
                            "target shorthand, e.g. two_scale:1,2500,200,4000");
    }
    if (name == "predict") {
      state.app->add_option("--h", state.h, "grid step");
      state.app->add_option("--kmax", state.k_max, "maximum number of doublings");
      state.app->add_option("--hbar", state.hbar, "leapfrog step in the uniform term (0 = exact)");
    }
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    for (std::size_t i = 0; i < names.size(); ++i) {
      const auto& state = states[i];
      if (!state.app->parsed()) continue;
      json doc = state.config_path.empty() ? json::object() : load_config_file(state.config_path);
      doc["experiment"] = names[i].first;
      auto given = [&](const std::string& name) {
        const CLI::Option* opt = state.app->get_option_no_throw(name);
        return opt != nullptr && opt->count() > 0;
      };
      if (given("--seed")) doc["seed"] = state.seed;
      if (given("--threads")) {
        if (state.threads == "auto")
          doc["threads"] = "auto";
        else
          doc["threads"] = std::stoi(state.threads);
      }
      if (given("--out")) doc["output_dir"] = state.output_dir;
      if (given("--target")) doc["target"] = state.target;
      if (given("--h")) doc["h"] = state.h;
      if (given("--kmax")) doc["k_max"] = state.k_max;
      if (given("--hbar")) doc["hbar"] = state.hbar;
      if (given("--kappa")) doc["kappa"] = state.kappa;
      if (given("--ratio")) doc["ratio"] = state.ratio;
      return execute(parse_run(doc));
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

}  // namespace uturnlab::cli
