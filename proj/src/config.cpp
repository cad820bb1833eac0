#include "kzsparse/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "kzsparse/errors.hpp"
#include "kzsparse/toml_lite.hpp"

namespace kzsparse {

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += "; ";
    out += item;
  }
  return out;
}

// Walks one JSON object, remembering which keys were consumed so that
// leftovers can be reported as unknown fields.
class ObjectReader {
 public:
  ObjectReader(const nlohmann::json& j, std::string path, std::vector<std::string>& problems)
      : j_(j), path_(std::move(path)), problems_(problems) {
    if (!j_.is_object()) problems_.push_back(where("") + ": expected an object");
  }

  ~ObjectReader() {
    if (!j_.is_object()) return;
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) problems_.push_back(where(key) + ": unknown field");
    }
  }

  ObjectReader(const ObjectReader&) = delete;
  ObjectReader& operator=(const ObjectReader&) = delete;

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.is_object() && j_.contains(key) && !j_.at(key).is_null();
  }

  const nlohmann::json& at(const std::string& key) { return j_.at(key); }

  std::string where(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      problems_.push_back(where(key) + ": wrong type");
    }
  }

  template <typename T>
  void read(const std::string& key, std::optional<T>& out) {
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      problems_.push_back(where(key) + ": wrong type");
    }
  }

  void read_string(const std::string& key, std::string& out) { read(key, out); }

  std::vector<std::string>& problems() { return problems_; }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::vector<std::string>& problems_;
  std::set<std::string> seen_;
};

// Reads either a scalar or a list of positive integers.
void read_size_list(ObjectReader& r, const std::string& key, std::vector<std::size_t>& out) {
  if (!r.has(key)) return;
  const auto& v = r.at(key);
  try {
    if (v.is_array()) {
      out = v.get<std::vector<std::size_t>>();
    } else {
      out = {v.get<std::size_t>()};
    }
  } catch (const nlohmann::json::exception&) {
    r.problems().push_back(r.where(key) + ": expected a non-negative integer or a list of them");
  }
}

template <typename Fn>
void read_enum(ObjectReader& r, const std::string& key, Fn&& assign) {
  if (!r.has(key)) return;
  try {
    assign(r.at(key).get<std::string>());
  } catch (const nlohmann::json::exception&) {
    r.problems().push_back(r.where(key) + ": expected a string");
  } catch (const std::invalid_argument& e) {
    r.problems().push_back(r.where(key) + ": " + e.what());
  }
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error("invalid configuration: " + join(problems)), problems_(std::move(problems)) {}

std::string to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::KZ: return "kz";
    case SolverKind::IHT: return "iht";
    case SolverKind::KZIHT: return "kziht";
    case SolverKind::KZPT: return "kzpt";
  }
  return "kziht";
}

SolverKind solver_kind_from_string(const std::string& name) {
  if (name == "kz") return SolverKind::KZ;
  if (name == "iht") return SolverKind::IHT;
  if (name == "kziht") return SolverKind::KZIHT;
  if (name == "kzpt") return SolverKind::KZPT;
  throw std::invalid_argument("unknown solver '" + name + "' (expected kz, iht, kziht or kzpt)");
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  std::vector<std::string> problems;
  {
    ObjectReader root(j, "", problems);

    if (root.has("matrix")) {
      ObjectReader r(root.at("matrix"), "matrix", problems);
      read_enum(r, "kind", [&](const std::string& s) { c.matrix.kind = operator_kind_from_string(s); });
      r.read("m", c.matrix.m);
      r.read("N", c.matrix.n);
    }
    if (root.has("signal")) {
      ObjectReader r(root.at("signal"), "signal", problems);
      read_size_list(r, "s", c.s_values);
    }
    if (root.has("noise")) {
      ObjectReader r(root.at("noise"), "noise", problems);
      read_enum(r, "model", [&](const std::string& s) {
        if (s == "none") {
          c.noise.kind = NoiseModel::Kind::None;
        } else if (s == "gaussian") {
          c.noise.kind = NoiseModel::Kind::Gaussian;
        } else {
          throw std::invalid_argument("unknown noise model '" + s + "' (expected none or gaussian)");
        }
      });
      r.read("sigma", c.noise.sigma);
    }
    if (root.has("solver")) {
      ObjectReader r(root.at("solver"), "solver", problems);
      read_enum(r, "name", [&](const std::string& s) { c.solver.name = solver_kind_from_string(s); });
      if (r.has("gamma")) {
        const auto& g = r.at("gamma");
        if (g.is_string() && g.get<std::string>() == "auto") {
          c.solver.gamma.reset();
        } else if (g.is_number()) {
          c.solver.gamma = g.get<double>();
        } else {
          problems.push_back("solver.gamma: expected a number or \"auto\"");
        }
      }
      r.read("lambda", c.solver.lambda);
      r.read("period", c.solver.period);
      r.read("epochs", c.solver.epochs);
      read_enum(r, "rule", [&](const std::string& s) { c.solver.rule = schedule_rule_from_string(s); });
      r.read("target_error", c.solver.target_error);
      r.read("divergence_threshold", c.solver.divergence_threshold);
      read_enum(r, "preset", [&](const std::string& s) {
        if (s == "none") {
          c.solver.preset = StepPresetKind::None;
        } else if (s == "subgaussian") {
          c.solver.preset = StepPresetKind::SubGaussian;
        } else {
          throw std::invalid_argument("unknown preset '" + s + "' (expected none or subgaussian)");
        }
      });
      r.read("K", c.solver.k_subg);
      r.read("C_rip", c.solver.c_rip);
    }
    root.read("trials", c.trials);
    root.read("base_seed", c.base_seed);
    root.read("success_threshold", c.success_threshold);
    root.read_string("outputs", c.outputs);
    root.read("threads", c.threads);
    root.read("per_trial_csv", c.per_trial_csv);
    if (root.has("phase")) {
      ObjectReader r(root.at("phase"), "phase", problems);
      read_size_list(r, "m_values", c.m_values);
    }
    if (root.has("sweep")) {
      ObjectReader r(root.at("sweep"), "sweep", problems);
      read_size_list(r, "p_list", c.p_list);
      r.read("tolerance", c.tolerance);
    }
    if (root.has("ablation")) {
      ObjectReader r(root.at("ablation"), "ablation", problems);
      if (r.has("rules")) {
        try {
          c.rules.clear();
          for (const auto& name : r.at("rules").get<std::vector<std::string>>()) {
            c.rules.push_back(schedule_rule_from_string(name));
          }
        } catch (const std::exception& e) {
          problems.push_back(std::string("ablation.rules: ") + e.what());
        }
      }
    }
  }
  if (!problems.empty()) throw ConfigError(problems);
  auto invalid = validate(c);
  if (!invalid.empty()) throw ConfigError(invalid);
  return c;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["matrix"] = {{"kind", to_string(c.matrix.kind)}, {"m", c.matrix.m}, {"N", c.matrix.n}};
  j["signal"] = {{"s", c.s_values}};
  j["noise"] = {{"model", c.noise.kind == NoiseModel::Kind::Gaussian ? "gaussian" : "none"},
                {"sigma", c.noise.sigma}};
  nlohmann::json solver;
  solver["name"] = to_string(c.solver.name);
  solver["gamma"] = c.solver.gamma ? nlohmann::json(*c.solver.gamma) : nlohmann::json("auto");
  solver["lambda"] = c.solver.lambda;
  solver["period"] = c.solver.period ? nlohmann::json(*c.solver.period) : nlohmann::json(nullptr);
  solver["epochs"] = c.solver.epochs ? nlohmann::json(*c.solver.epochs) : nlohmann::json(nullptr);
  solver["rule"] = to_string(c.solver.rule);
  solver["target_error"] = c.solver.target_error;
  solver["divergence_threshold"] = c.solver.divergence_threshold;
  solver["preset"] = c.solver.preset == StepPresetKind::SubGaussian ? "subgaussian" : "none";
  solver["K"] = c.solver.k_subg;
  solver["C_rip"] = c.solver.c_rip;
  j["solver"] = std::move(solver);
  j["trials"] = c.trials;
  j["base_seed"] = c.base_seed;
  j["success_threshold"] = c.success_threshold;
  j["outputs"] = c.outputs;
  j["threads"] = c.threads;
  j["per_trial_csv"] = c.per_trial_csv;
  j["phase"] = {{"m_values", c.m_values}};
  j["sweep"] = {{"p_list", c.p_list}, {"tolerance", c.tolerance}};
  std::vector<std::string> rules;
  for (auto r : c.rules) rules.push_back(to_string(r));
  j["ablation"] = {{"rules", rules}};
  return j;
}

nlohmann::json load_config_tree(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"config: cannot open '" + path.string() + "'"});
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    if (path.extension() == ".toml") return parse_toml_lite(buffer.str());
    return nlohmann::json::parse(buffer.str());
  } catch (const std::exception& e) {
    throw ConfigError({"config: cannot parse '" + path.string() + "': " + e.what()});
  }
}

void apply_override(nlohmann::json& tree, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError({"override '" + assignment + "': expected key=value"});
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::exception&) {
    value = raw;
  }
  nlohmann::json* node = &tree;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError({"override '" + assignment + "': empty key segment"});
    if (node->is_null()) *node = nlohmann::json::object();
    if (!node->is_object()) throw ConfigError({"override '" + assignment + "': '" + part + "' is not inside an object"});
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

std::vector<std::string> validate(const ExperimentConfig& c) {
  std::vector<std::string> p;
  if (c.matrix.m == 0) p.push_back("matrix.m: must be positive");
  if (c.matrix.n == 0) p.push_back("matrix.N: must be positive");
  const bool bos = c.matrix.kind == OperatorKind::SubsampledBOS;
  if (c.matrix.kind == OperatorKind::ExplicitDense) {
    p.push_back("matrix.kind: experiments generate hadamard, bernoulli or gaussian operators");
  }
  if (bos && !is_power_of_two(c.matrix.n)) p.push_back("matrix.N: hadamard operators need a power of two");
  auto check_m = [&](std::size_t m, const std::string& field) {
    if (m == 0) p.push_back(field + ": must be positive");
    if (bos && m > c.matrix.n) p.push_back(field + ": hadamard operators need m <= N");
  };
  check_m(c.matrix.m, "matrix.m");
  for (std::size_t i = 0; i < c.m_values.size(); ++i) {
    check_m(c.m_values[i], "phase.m_values[" + std::to_string(i) + "]");
  }
  if (c.s_values.empty()) p.push_back("signal.s: at least one sparsity level is required");
  for (std::size_t i = 0; i < c.s_values.size(); ++i) {
    const auto s = c.s_values[i];
    if (s == 0 || s > c.matrix.n) {
      p.push_back("signal.s[" + std::to_string(i) + "]: must lie in [1, N]");
    }
  }
  if (!(c.noise.sigma >= 0.0) || !std::isfinite(c.noise.sigma)) p.push_back("noise.sigma: must be finite and >= 0");
  if (c.solver.gamma && (!std::isfinite(*c.solver.gamma) || *c.solver.gamma <= 0.0)) {
    p.push_back("solver.gamma: must be positive");
  }
  if (!(c.solver.lambda > 0.0) || !std::isfinite(c.solver.lambda)) p.push_back("solver.lambda: must be positive");
  if (c.solver.epochs && *c.solver.epochs == 0) p.push_back("solver.epochs: must be positive");
  if (c.solver.period) {
    if (*c.solver.period == 0) p.push_back("solver.period: must be positive");
    if (*c.solver.period > c.matrix.m) p.push_back("solver.period: must not exceed matrix.m");
    for (auto m : c.m_values) {
      if (*c.solver.period > m) {
        p.push_back("solver.period: exceeds phase.m_value " + std::to_string(m));
        break;
      }
    }
  }
  if (!(c.solver.divergence_threshold > 0.0)) p.push_back("solver.divergence_threshold: must be positive");
  if (!(c.solver.target_error >= 0.0)) p.push_back("solver.target_error: must be >= 0");
  if (!(c.solver.k_subg > 0.0)) p.push_back("solver.K: must be positive");
  if (!(c.solver.c_rip > 0.0)) p.push_back("solver.C_rip: must be positive");
  if (c.solver.preset == StepPresetKind::SubGaussian && bos) {
    p.push_back("solver.preset: the subgaussian preset needs a bernoulli or gaussian matrix");
  }
  if (c.trials == 0) p.push_back("trials: must be at least 1");
  if (!(c.success_threshold > 0.0)) p.push_back("success_threshold: must be positive");
  for (std::size_t i = 0; i < c.p_list.size(); ++i) {
    if (c.p_list[i] == 0 || c.p_list[i] > c.matrix.m) {
      p.push_back("sweep.p_list[" + std::to_string(i) + "]: must lie in [1, matrix.m]");
    }
  }
  if (!(c.tolerance > 0.0)) p.push_back("sweep.tolerance: must be positive");
  if (c.rules.empty()) p.push_back("ablation.rules: at least one rule is required");
  return p;
}

SolverParams resolve_params(const ExperimentConfig& c, std::size_t m, std::size_t s,
                            std::size_t default_epochs) {
  SolverParams params;
  params.s = SparsityLevel(s);
  params.lambda = c.solver.lambda;
  params.period = c.solver.period;
  params.epochs = c.solver.epochs.value_or(default_epochs);
  params.divergence_threshold = c.solver.divergence_threshold;
  params.target_error = c.solver.target_error;

  const double n = static_cast<double>(c.matrix.n);
  const double rows = static_cast<double>(m);
  if (c.solver.preset == StepPresetKind::SubGaussian) {
    const auto preset = subgaussian_step_preset(m, c.matrix.n, s, c.solver.k_subg);
    params.gamma = preset.gamma;
    params.lambda = preset.lambda;
  } else {
    switch (c.solver.name) {
      case SolverKind::KZ: params.gamma = 1.0; break;
      case SolverKind::IHT:
      case SolverKind::KZIHT: params.gamma = n / rows; break;
      case SolverKind::KZPT:
        params.gamma = c.matrix.kind == OperatorKind::SubsampledBOS
                           ? n / static_cast<double>(c.solver.period.value_or(m))
                           : n / rows;
        break;
    }
  }
  if (c.solver.gamma) params.gamma = *c.solver.gamma;
  return params;
}

}  // namespace kzsparse
