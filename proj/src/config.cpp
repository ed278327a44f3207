#include "uturnlab/cli/config.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <vector>

namespace uturnlab::cli {

namespace {

using nlohmann::json;

// Tracks which keys of an object were consumed; leftovers are schema errors.
class Fields {
 public:
  Fields(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  const json* optional(const std::string& name) {
    seen_.insert(name);
    auto it = obj_.find(name);
    return it == obj_.end() ? nullptr : &*it;
  }

  const json& require(const std::string& name) {
    const json* node = optional(name);
    if (!node) throw ConfigError(path_ + ": missing required field '" + name + "'");
    return *node;
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key()))
        throw ConfigError(path_ + ": unknown field '" + it.key() + "'");
    }
  }

  const std::string& path() const { return path_; }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

double as_double(const json& node, const std::string& path) {
  if (!node.is_number()) throw ConfigError(path + ": expected a number");
  return node.get<double>();
}

double as_positive(const json& node, const std::string& path) {
  double v = as_double(node, path);
  if (!(v > 0.0)) throw ConfigError(path + ": must be positive");
  return v;
}

std::int64_t as_integer(const json& node, const std::string& path) {
  if (!node.is_number_integer()) throw ConfigError(path + ": expected an integer");
  return node.get<std::int64_t>();
}

std::int64_t as_count(const json& node, const std::string& path, std::int64_t lo,
                      std::int64_t hi) {
  std::int64_t v = as_integer(node, path);
  if (v < lo || v > hi)
    throw ConfigError(path + ": must be in [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "]");
  return v;
}

bool as_bool(const json& node, const std::string& path) {
  if (!node.is_boolean()) throw ConfigError(path + ": expected a boolean");
  return node.get<bool>();
}

std::string as_string(const json& node, const std::string& path) {
  if (!node.is_string()) throw ConfigError(path + ": expected a string");
  return node.get<std::string>();
}

std::vector<double> split_numbers(const std::string& text, const std::string& path) {
  std::vector<double> out;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(path + ": cannot parse number '" + item + "'");
    }
  }
  return out;
}

ScaleBlockTarget<double> target_from_shorthand(const std::string& text,
                                               const std::string& path) {
  auto colon = text.find(':');
  std::string preset = text.substr(0, colon);
  std::vector<double> args =
      colon == std::string::npos ? std::vector<double>{} : split_numbers(text.substr(colon + 1), path);
  try {
    if (preset == "isotropic" && args.size() == 2)
      return ScaleBlockTarget<double>::isotropic(args[0], static_cast<Index>(args[1]));
    if (preset == "two_scale" && args.size() == 4)
      return ScaleBlockTarget<double>::two_scale(args[0], args[1], static_cast<Index>(args[2]),
                                                 static_cast<Index>(args[3]));
    if (preset == "harmonic_chain" && args.size() == 1)
      return ScaleBlockTarget<double>::harmonic_chain(static_cast<Index>(args[0]));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
  throw ConfigError(path + ": bad target shorthand '" + text +
                    "' (expected isotropic:m,d | two_scale:m1,m2,d1,d2 | harmonic_chain:d)");
}

lab::CommonConfig parse_common(Fields& fields) {
  lab::CommonConfig common;
  if (const json* node = fields.optional("seed")) {
    if (!node->is_number_unsigned() && !node->is_number_integer())
      throw ConfigError("seed: expected an unsigned integer");
    common.seed = node->get<std::uint64_t>();
  }
  if (const json* node = fields.optional("threads")) {
    if (node->is_string()) {
      if (node->get<std::string>() != "auto") throw ConfigError("threads: expected int or \"auto\"");
      common.threads = 0;
    } else {
      common.threads = static_cast<int>(as_count(*node, "threads", 1, 1024));
    }
  }
  if (const json* node = fields.optional("output_dir"))
    common.output_dir = as_string(*node, "output_dir");
  return common;
}

FlowKind parse_flow_kind(const json& node, const std::string& path) {
  std::string kind = as_string(node, path);
  if (kind == "exact") return FlowKind::exact;
  if (kind == "leapfrog") return FlowKind::leapfrog;
  throw ConfigError(path + ": expected \"exact\" or \"leapfrog\"");
}

IntegrationTimeLaw<double> parse_law(const json& node, const std::string& path) {
  Fields fields(node, path);
  std::string variant = as_string(fields.require("variant"), path + ".variant");
  IntegrationTimeLaw<double> law = IntegrationTimeLaw<double>::point(0.0);
  try {
    if (variant == "point") {
      law = IntegrationTimeLaw<double>::point(as_double(fields.require("t"), path + ".t"));
    } else if (variant == "triangular") {
      double h = as_positive(fields.require("h"), path + ".h");
      int k = static_cast<int>(as_count(fields.require("k_star"), path + ".k_star", 0, 30));
      law = IntegrationTimeLaw<double>::triangular(h, k);
    } else if (variant == "exponential") {
      law = IntegrationTimeLaw<double>::exponential(
          as_positive(fields.require("lambda"), path + ".lambda"));
    } else {
      throw ConfigError(path + ".variant: expected point | triangular | exponential");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
  fields.finish();
  return law;
}

json law_to_json(const IntegrationTimeLaw<double>& law) {
  switch (law.kind()) {
    case LawKind::point:
      return {{"variant", "point"}, {"t", law.point_time()}};
    case LawKind::triangular:
      return {{"variant", "triangular"}, {"h", law.grid_step()}, {"k_star", law.k_star()}};
    default:
      return {{"variant", "exponential"}, {"lambda", law.rate()}};
  }
}

lab::SamplerConfig parse_sampler(const json& node, const std::string& path) {
  Fields fields(node, path);
  lab::SamplerConfig sampler;
  std::string kernel = as_string(fields.require("kernel"), path + ".kernel");
  if (kernel == "nuts") {
    sampler.kind = lab::SamplerConfig::Kind::nuts;
    sampler.h = as_positive(fields.require("h"), path + ".h");
    sampler.k_max = static_cast<int>(as_count(fields.require("k_max"), path + ".k_max", 0, 30));
    sampler.flow = parse_flow_kind(fields.require("flow"), path + ".flow");
  } else if (kernel == "hmc") {
    sampler.kind = lab::SamplerConfig::Kind::hmc;
    sampler.flow = parse_flow_kind(fields.require("flow"), path + ".flow");
    sampler.h = as_positive(fields.require("h"), path + ".h");
    sampler.law = parse_law(fields.require("law"), path + ".law");
    try {
      sampler.law->check_compatible(sampler.flow_variant());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(path + ".law: " + e.what());
    }
  } else {
    throw ConfigError(path + ".kernel: expected \"nuts\" or \"hmc\"");
  }
  fields.finish();
  return sampler;
}

json sampler_to_json(const lab::SamplerConfig& sampler) {
  json doc;
  doc["kernel"] = sampler.kind == lab::SamplerConfig::Kind::nuts ? "nuts" : "hmc";
  doc["h"] = sampler.h;
  doc["flow"] = sampler.flow == FlowKind::leapfrog ? "leapfrog" : "exact";
  if (sampler.kind == lab::SamplerConfig::Kind::nuts)
    doc["k_max"] = sampler.k_max;
  else
    doc["law"] = law_to_json(*sampler.law);
  return doc;
}

lab::StartKind parse_start(const json& node, const std::string& path) {
  std::string kind = as_string(node, path);
  if (kind == "zero") return lab::StartKind::zero;
  if (kind == "stationary") return lab::StartKind::stationary;
  if (kind == "overdispersed") return lab::StartKind::overdispersed;
  throw ConfigError(path + ": expected zero | stationary | overdispersed");
}

const char* start_to_string(lab::StartKind kind) {
  switch (kind) {
    case lab::StartKind::zero: return "zero";
    case lab::StartKind::stationary: return "stationary";
    default: return "overdispersed";
  }
}

json common_to_json(const lab::CommonConfig& common) {
  return {{"seed", common.seed},
          {"threads", common.threads == 0 ? json("auto") : json(common.threads)},
          {"output_dir", common.output_dir}};
}

void merge_common(json& doc, const lab::CommonConfig& common) {
  json fields = common_to_json(common);
  for (auto& [key, value] : fields.items()) doc[key] = value;
}

}  // namespace

ScaleBlockTarget<double> parse_target(const json& node, const std::string& path) {
  if (node.is_string()) return target_from_shorthand(node.get<std::string>(), path);
  Fields fields(node, path);
  std::string preset = as_string(fields.require("preset"), path + ".preset");
  try {
    if (preset == "isotropic") {
      double m = as_positive(fields.require("m"), path + ".m");
      auto d = as_count(fields.require("d"), path + ".d", 1, 1 << 24);
      fields.finish();
      return ScaleBlockTarget<double>::isotropic(m, d);
    }
    if (preset == "two_scale") {
      double m1 = as_positive(fields.require("m1"), path + ".m1");
      double m2 = as_positive(fields.require("m2"), path + ".m2");
      auto d1 = as_count(fields.require("d1"), path + ".d1", 1, 1 << 24);
      auto d2 = as_count(fields.require("d2"), path + ".d2", 1, 1 << 24);
      fields.finish();
      return ScaleBlockTarget<double>::two_scale(m1, m2, d1, d2);
    }
    if (preset == "harmonic_chain") {
      auto d = as_count(fields.require("d"), path + ".d", 1, 1 << 16);
      fields.finish();
      return ScaleBlockTarget<double>::harmonic_chain(d);
    }
    if (preset == "custom") {
      const json& blocks = fields.require("blocks");
      if (!blocks.is_array() || blocks.empty())
        throw ConfigError(path + ".blocks: expected a nonempty array");
      std::vector<ScaleBlock<double>> parsed;
      for (std::size_t i = 0; i < blocks.size(); ++i) {
        std::string block_path = path + ".blocks[" + std::to_string(i) + "]";
        Fields block(blocks[i], block_path);
        double m = as_positive(block.require("m"), block_path + ".m");
        auto d = as_count(block.require("d"), block_path + ".d", 1, 1 << 24);
        block.finish();
        parsed.push_back({m, d});
      }
      fields.finish();
      return ScaleBlockTarget<double>(std::move(parsed));
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
  throw ConfigError(path + ".preset: expected isotropic | two_scale | harmonic_chain | custom");
}

json target_to_json(const ScaleBlockTarget<double>& target) {
  json blocks = json::array();
  for (const auto& block : target.blocks())
    blocks.push_back({{"m", block.stiffness}, {"d", block.dim}});
  return {{"preset", "custom"}, {"blocks", std::move(blocks)}};
}

Run parse_run(const json& doc) {
  Fields top(doc, "config");
  std::string experiment = as_string(top.require("experiment"), "experiment");
  lab::CommonConfig common = parse_common(top);

  Run run;
  run.experiment = experiment;
  json echo;
  echo["experiment"] = experiment;
  merge_common(echo, common);

  if (experiment == "concentration") {
    lab::ConcentrationConfig config;
    config.common = common;
    if (const json* node = top.optional("targets")) {
      if (!node->is_array() || node->empty())
        throw ConfigError("targets: expected a nonempty array");
      for (std::size_t i = 0; i < node->size(); ++i)
        config.targets.push_back(parse_target((*node)[i], "targets[" + std::to_string(i) + "]"));
    } else {
      config.targets.push_back(parse_target(top.require("target"), "target"));
    }
    if (const json* node = top.optional("flow"))
      config.flow = parse_flow_kind(*node, "flow");
    if (const json* node = top.optional("h")) config.h = as_positive(*node, "h");
    if (const json* node = top.optional("t_max")) config.t_max = as_positive(*node, "t_max");
    if (const json* node = top.optional("grid_n"))
      config.grid_n = static_cast<int>(as_count(*node, "grid_n", 2, 200));
    if (const json* node = top.optional("n_draws"))
      config.n_draws = as_count(*node, "n_draws", 100, 100000000);
    if (const json* node = top.optional("mean_cell_fraction"))
      config.mean_cell_fraction = as_positive(*node, "mean_cell_fraction");
    if (const json* node = top.optional("std_ratio_tolerance"))
      config.std_ratio_tolerance = as_positive(*node, "std_ratio_tolerance");
    top.finish();
    json targets = json::array();
    for (const auto& t : config.targets) targets.push_back(target_to_json(t));
    echo["targets"] = std::move(targets);
    echo["flow"] = config.flow == FlowKind::leapfrog ? "leapfrog" : "exact";
    echo["h"] = config.h;
    echo["t_max"] = config.t_max;
    echo["grid_n"] = config.grid_n;
    echo["n_draws"] = config.n_draws;
    echo["mean_cell_fraction"] = config.mean_cell_fraction;
    echo["std_ratio_tolerance"] = config.std_ratio_tolerance;
    run.config = std::move(config);
  } else if (experiment == "orbits") {
    lab::OrbitStatsConfig config{common, parse_target(top.require("target"), "target"),
                                 parse_sampler(top.require("sampler"), "sampler")};
    if (config.sampler.kind != lab::SamplerConfig::Kind::nuts)
      throw ConfigError("sampler.kernel: orbits requires the nuts kernel");
    if (const json* node = top.optional("n_transitions"))
      config.n_transitions = as_count(*node, "n_transitions", 1, 100000000);
    if (const json* node = top.optional("shell_scale"))
      config.shell_scale = as_positive(*node, "shell_scale");
    if (const json* node = top.optional("empirical_band_factor"))
      config.empirical_band_factor = as_positive(*node, "empirical_band_factor");
    if (const json* node = top.optional("dominance_threshold"))
      config.dominance_threshold = as_positive(*node, "dominance_threshold");
    if (const json* node = top.optional("placement_p_threshold"))
      config.placement_p_threshold = as_positive(*node, "placement_p_threshold");
    if (const json* node = top.optional("emit_trace"))
      config.emit_trace = as_bool(*node, "emit_trace");
    top.finish();
    echo["target"] = target_to_json(config.target);
    echo["sampler"] = sampler_to_json(config.sampler);
    echo["n_transitions"] = config.n_transitions;
    echo["shell_scale"] = config.shell_scale;
    echo["empirical_band_factor"] = config.empirical_band_factor;
    echo["dominance_threshold"] = config.dominance_threshold;
    echo["placement_p_threshold"] = config.placement_p_threshold;
    echo["emit_trace"] = config.emit_trace;
    run.config = std::move(config);
  } else if (experiment == "contraction") {
    lab::ContractionConfig config;
    config.common = common;
    config.target = parse_target(top.require("target"), "target");
    config.law = parse_law(top.require("law"), "law");
    if (const json* node = top.optional("flow"))
      config.flow = parse_flow_kind(*node, "flow");
    if (const json* node = top.optional("flow_step"))
      config.flow_step = as_positive(*node, "flow_step");
    else if (config.law.kind() == LawKind::triangular)
      config.flow_step = config.law.grid_step();
    if (const json* node = top.optional("n_pairs"))
      config.n_pairs = as_count(*node, "n_pairs", 10, 100000000);
    if (const json* node = top.optional("n_steps"))
      config.n_steps = static_cast<int>(as_count(*node, "n_steps", 1, 100000));
    top.finish();
    echo["target"] = target_to_json(config.target);
    echo["law"] = law_to_json(config.law);
    echo["flow"] = config.flow == FlowKind::leapfrog ? "leapfrog" : "exact";
    echo["flow_step"] = config.flow_step;
    echo["n_pairs"] = config.n_pairs;
    echo["n_steps"] = config.n_steps;
    run.config = std::move(config);
  } else if (experiment == "mixing") {
    lab::MixingConfig config{common, parse_target(top.require("target"), "target"),
                             parse_sampler(top.require("sampler"), "sampler")};
    if (const json* node = top.optional("n_replicas"))
      config.n_replicas = static_cast<int>(as_count(*node, "n_replicas", 10, 1000000));
    if (const json* node = top.optional("horizon"))
      config.horizon = static_cast<int>(as_count(*node, "horizon", 1, 1000000));
    if (const json* node = top.optional("checkpoints")) {
      if (!node->is_array()) throw ConfigError("checkpoints: expected an array");
      for (const auto& c : *node)
        config.checkpoints.push_back(static_cast<int>(as_count(c, "checkpoints[]", 1, 1000000)));
    } else if (const json* node2 = top.optional("checkpoint_stride")) {
      int stride = static_cast<int>(as_count(*node2, "checkpoint_stride", 1, 1000000));
      for (int c = stride; c <= config.horizon; c += stride) config.checkpoints.push_back(c);
    }
    if (const json* node = top.optional("start")) config.start = parse_start(*node, "start");
    if (const json* node = top.optional("epsilon"))
      config.epsilon = as_positive(*node, "epsilon");
    if (const json* node = top.optional("shell_scale"))
      config.shell_scale = as_positive(*node, "shell_scale");
    if (const json* node = top.optional("monitor_shells"))
      config.monitor_shells = as_bool(*node, "monitor_shells");
    if (const json* node = top.optional("mixing_pass_threshold"))
      config.mixing_pass_threshold = as_positive(*node, "mixing_pass_threshold");
    top.finish();
    echo["target"] = target_to_json(config.target);
    echo["sampler"] = sampler_to_json(config.sampler);
    echo["n_replicas"] = config.n_replicas;
    echo["horizon"] = config.horizon;
    if (!config.checkpoints.empty()) echo["checkpoints"] = config.checkpoints;
    echo["start"] = start_to_string(config.start);
    echo["epsilon"] = config.epsilon;
    echo["shell_scale"] = config.shell_scale;
    echo["monitor_shells"] = config.monitor_shells;
    if (config.mixing_pass_threshold) echo["mixing_pass_threshold"] = *config.mixing_pass_threshold;
    run.config = std::move(config);
  } else if (experiment == "sample") {
    lab::SampleConfig config{common, parse_target(top.require("target"), "target"),
                             parse_sampler(top.require("sampler"), "sampler")};
    if (const json* node = top.optional("n_replicas"))
      config.n_replicas = static_cast<int>(as_count(*node, "n_replicas", 1, 1000000));
    if (const json* node = top.optional("n_transitions"))
      config.n_transitions = static_cast<int>(as_count(*node, "n_transitions", 1, 10000000));
    if (const json* node = top.optional("start")) config.start = parse_start(*node, "start");
    if (const json* node = top.optional("emit_trace"))
      config.emit_trace = as_bool(*node, "emit_trace");
    if (const json* node = top.optional("radial_check"))
      config.radial_check = as_bool(*node, "radial_check");
    if (const json* node = top.optional("radial_epsilon"))
      config.radial_epsilon = as_positive(*node, "radial_epsilon");
    top.finish();
    echo["target"] = target_to_json(config.target);
    echo["sampler"] = sampler_to_json(config.sampler);
    echo["n_replicas"] = config.n_replicas;
    echo["n_transitions"] = config.n_transitions;
    echo["start"] = start_to_string(config.start);
    echo["emit_trace"] = config.emit_trace;
    echo["radial_check"] = config.radial_check;
    echo["radial_epsilon"] = config.radial_epsilon;
    run.config = std::move(config);
  } else if (experiment == "predict") {
    PredictQuery query;
    query.common = common;
    query.target = parse_target(top.require("target"), "target");
    query.h = as_positive(top.require("h"), "h");
    if (const json* node = top.optional("k_max"))
      query.k_max = static_cast<int>(as_count(*node, "k_max", 1, 30));
    if (const json* node = top.optional("hbar")) {
      query.hbar = as_double(*node, "hbar");
      if (query.hbar < 0.0) throw ConfigError("hbar: must be >= 0");
    }
    top.finish();
    echo["target"] = target_to_json(query.target);
    echo["h"] = query.h;
    echo["k_max"] = query.k_max;
    echo["hbar"] = query.hbar;
    run.config = std::move(query);
  } else if (experiment == "phase") {
    PhaseQuery query;
    query.common = common;
    query.kappa = as_double(top.require("kappa"), "kappa");
    query.ratio = as_double(top.require("ratio"), "ratio");
    if (query.kappa < 1.0) throw ConfigError("kappa: must be >= 1");
    if (!(query.ratio > 0.0)) throw ConfigError("ratio: must be positive");
    top.finish();
    echo["kappa"] = query.kappa;
    echo["ratio"] = query.ratio;
    run.config = std::move(query);
  } else {
    throw ConfigError("experiment: unknown experiment '" + experiment +
                      "' (expected sample | concentration | orbits | phase | contraction | "
                      "mixing | predict)");
  }

  run.normalized = std::move(echo);
  return run;
}

}  // namespace uturnlab::cli
