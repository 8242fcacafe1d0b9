#include "linebo/config.hpp"

#include "linebo/error.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace linebo {

namespace {

using nlohmann::json;

// Line of the first `"key"` on the path (each key searched after the
// previous one). 0 when not found.
int locate(const std::string& text, const std::vector<std::string>& path) {
  std::size_t pos = 0;
  bool found = false;
  for (const auto& key : path) {
    const auto hit = text.find("\"" + key + "\"", pos);
    if (hit == std::string::npos) break;
    pos = hit + 1;
    found = true;
  }
  if (!found) return 0;
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n'));
}

std::string join(const std::vector<std::string>& path) {
  std::string out;
  for (const auto& p : path) out += (out.empty() ? "" : ".") + p;
  return out;
}

class Reader {
 public:
  Reader(const std::string& text, const std::string& source) : text_(text), source_(source) {}

  [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& what) const {
    const int line = locate(text_, path);
    std::string where = source_ + (line > 0 ? ":" + std::to_string(line) : "");
    throw ConfigError(where + ": " + join(path) + ": " + what);
  }

  const json& object(const json& parent, const std::vector<std::string>& path,
                     std::initializer_list<const char*> allowed) const {
    if (!parent.is_object()) fail(path, "expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, val] : parent.items()) {
      if (!ok.count(key)) {
        auto p = path;
        p.push_back(key);
        fail(p, "unknown field");
      }
    }
    return parent;
  }

  template <typename T>
  std::optional<T> get(const json& obj, std::vector<std::string> path, const char* key) const {
    if (!obj.contains(key)) return std::nullopt;
    path.push_back(key);
    const json& v = obj.at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) fail(path, "expected true/false");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) fail(path, "expected a string");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) fail(path, "expected an integer");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) fail(path, "expected a number");
      } else {
        if (!v.is_array()) fail(path, "expected an array");
      }
      return v.get<T>();
    } catch (const json::exception& e) {
      fail(path, e.what());
    }
  }

  template <typename T>
  T require(const json& obj, std::vector<std::string> path, const char* key) const {
    auto v = get<T>(obj, path, key);
    if (!v) {
      path.push_back(key);
      fail(path, "missing required field");
    }
    return *v;
  }

 private:
  const std::string& text_;
  std::string source_;
};

template <typename T>
void assign(std::optional<T> v, T& target) {
  if (v) target = *v;
}

}  // namespace

std::string RunConfig::run_label() const {
  if (!label.empty()) return label;
  if (!objective.builtin.empty()) return objective.builtin + std::to_string(dim());
  return "external";
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    // nlohmann reports "line L, column C" itself
    throw ConfigError(source + ": " + e.what());
  }
  Reader rd(text, source);
  rd.object(root, {}, {"schema_version", "label", "space", "objective", "algorithm", "acquisition", "policy", "grid",
                       "fullspace", "fit", "budget", "failures", "seed", "clock", "latency", "proposal_time_s",
                       "output_dir"});
  RunConfig cfg;
  cfg.schema_version = rd.require<int>(root, {}, "schema_version");
  if (cfg.schema_version != kSchemaVersion) {
    rd.fail({"schema_version"}, "unsupported version " + std::to_string(cfg.schema_version));
  }
  assign(rd.get<std::string>(root, {}, "label"), cfg.label);

  if (!root.contains("space")) rd.fail({"space"}, "missing required field (bounds)");
  const json& space = rd.object(root.at("space"), {"space"}, {"lower", "upper"});
  cfg.lower = rd.require<std::vector<double>>(space, {"space"}, "lower");
  cfg.upper = rd.require<std::vector<double>>(space, {"space"}, "upper");

  if (!root.contains("objective")) rd.fail({"objective"}, "missing required field");
  const json& obj = rd.object(root.at("objective"), {"objective"},
                              {"builtin", "external", "noise_sd", "effective_dim", "condition", "rotation_seed",
                               "maximize"});
  assign(rd.get<std::string>(obj, {"objective"}, "builtin"), cfg.objective.builtin);
  assign(rd.get<double>(obj, {"objective"}, "noise_sd"), cfg.objective.params.noise_sd);
  assign(rd.get<int>(obj, {"objective"}, "effective_dim"), cfg.objective.params.effective_dim);
  assign(rd.get<double>(obj, {"objective"}, "condition"), cfg.objective.params.condition);
  assign(rd.get<std::uint64_t>(obj, {"objective"}, "rotation_seed"), cfg.objective.params.rotation_seed);
  assign(rd.get<bool>(obj, {"objective"}, "maximize"), cfg.objective.maximize);
  if (obj.contains("external")) {
    const std::vector<std::string> p{"objective", "external"};
    const json& ext = rd.object(obj.at("external"), p, {"command", "mode", "timeout_s", "workdir"});
    ExternalSpec spec;
    spec.command = rd.require<std::string>(ext, p, "command");
    if (auto m = rd.get<std::string>(ext, p, "mode")) {
      try {
        spec.mode = parse_external_mode(*m);
      } catch (const InvalidArgument& e) {
        rd.fail({"objective", "external", "mode"}, e.what());
      }
    }
    assign(rd.get<double>(ext, p, "timeout_s"), spec.timeout_s);
    assign(rd.get<std::string>(ext, p, "workdir"), spec.workdir);
    cfg.objective.external = spec;
  }

  const auto algo = rd.require<std::string>(root, {}, "algorithm");
  try {
    cfg.optimizer.algorithm = parse_algorithm(algo);
  } catch (const InvalidArgument& e) {
    rd.fail({"algorithm"}, e.what());
  }

  if (root.contains("acquisition")) {
    const json& a = rd.object(root.at("acquisition"), {"acquisition"}, {"lcb_beta", "beta_range"});
    assign(rd.get<double>(a, {"acquisition"}, "lcb_beta"), cfg.optimizer.acq.lcb_beta);
    if (auto r = rd.get<std::vector<double>>(a, {"acquisition"}, "beta_range")) {
      if (r->size() != 2) rd.fail({"acquisition", "beta_range"}, "expected [lo, hi]");
      cfg.optimizer.acq.beta_lo = (*r)[0];
      cfg.optimizer.acq.beta_hi = (*r)[1];
    }
  }
  if (root.contains("policy")) {
    const json& p = rd.object(root.at("policy"), {"policy"}, {"p_random", "delta"});
    assign(rd.get<double>(p, {"policy"}, "p_random"), cfg.optimizer.policy.p_random);
    assign(rd.get<double>(p, {"policy"}, "delta"), cfg.optimizer.policy.delta);
  }
  if (root.contains("grid")) {
    const json& g = rd.object(root.at("grid"), {"grid"}, {"points", "refine", "refine_tol"});
    assign(rd.get<int>(g, {"grid"}, "points"), cfg.optimizer.grid.grid_points);
    assign(rd.get<bool>(g, {"grid"}, "refine"), cfg.optimizer.grid.refine);
    assign(rd.get<double>(g, {"grid"}, "refine_tol"), cfg.optimizer.grid.refine_tol);
  }
  if (root.contains("fullspace")) {
    const std::vector<std::string> p{"fullspace"};
    const json& f = rd.object(root.at("fullspace"), p,
                              {"inner", "candidates", "starts", "window", "golden_tol", "grid_per_dim"});
    auto& fs = cfg.optimizer.fullspace;
    if (auto inner = rd.get<std::string>(f, p, "inner")) {
      if (*inner == "random-golden") fs.inner = FullSpaceConfig::Inner::RandomGolden;
      else if (*inner == "grid") fs.inner = FullSpaceConfig::Inner::Grid;
      else rd.fail({"fullspace", "inner"}, "expected \"random-golden\" or \"grid\"");
    }
    assign(rd.get<int>(f, p, "candidates"), fs.candidates);
    assign(rd.get<int>(f, p, "starts"), fs.starts);
    assign(rd.get<double>(f, p, "window"), fs.window);
    assign(rd.get<double>(f, p, "golden_tol"), fs.golden_tol);
    assign(rd.get<int>(f, p, "grid_per_dim"), fs.grid_per_dim);
  }
  if (root.contains("fit")) {
    const std::vector<std::string> p{"fit"};
    const json& f = rd.object(root.at("fit"), p, {"ard", "restarts", "max_iterations", "refit_all_until", "refit_every"});
    assign(rd.get<bool>(f, p, "ard"), cfg.optimizer.fit.ard);
    assign(rd.get<int>(f, p, "restarts"), cfg.optimizer.fit.restarts);
    assign(rd.get<int>(f, p, "max_iterations"), cfg.optimizer.fit.max_iterations);
    assign(rd.get<int>(f, p, "refit_all_until"), cfg.optimizer.refit_all_until);
    assign(rd.get<int>(f, p, "refit_every"), cfg.optimizer.refit_every);
  }
  if (root.contains("budget")) {
    const std::vector<std::string> p{"budget"};
    const json& b = rd.object(root.at("budget"), p, {"max_evals", "n_init", "batch", "repeats"});
    assign(rd.get<int>(b, p, "max_evals"), cfg.budget.max_evals);
    assign(rd.get<int>(b, p, "n_init"), cfg.budget.n_init);
    assign(rd.get<int>(b, p, "batch"), cfg.budget.batch_size);
    assign(rd.get<int>(b, p, "repeats"), cfg.budget.repeats);
  }
  if (root.contains("failures")) {
    const std::vector<std::string> p{"failures"};
    const json& f = rd.object(root.at("failures"), p, {"retries", "max_consecutive", "timeout_s"});
    assign(rd.get<int>(f, p, "retries"), cfg.failures.retries);
    assign(rd.get<int>(f, p, "max_consecutive"), cfg.failures.max_consecutive_failures);
    assign(rd.get<double>(f, p, "timeout_s"), cfg.timeout_s);
  }
  assign(rd.get<std::uint64_t>(root, {}, "seed"), cfg.seed);
  if (auto c = rd.get<std::string>(root, {}, "clock")) {
    if (*c == "simulated") cfg.clock = ClockKind::Simulated;
    else if (*c == "wall") cfg.clock = ClockKind::Wall;
    else rd.fail({"clock"}, "expected \"simulated\" or \"wall\"");
  }
  if (root.contains("latency")) {
    const std::vector<std::string> p{"latency"};
    const json& l = rd.object(root.at("latency"), p, {"model", "value", "lo", "hi", "mean"});
    try {
      cfg.latency.kind = parse_latency_kind(rd.require<std::string>(l, p, "model"));
    } catch (const InvalidArgument& e) {
      rd.fail({"latency", "model"}, e.what());
    }
    switch (cfg.latency.kind) {
      case LatencyModel::Kind::Constant: cfg.latency.a = cfg.latency.b = rd.require<double>(l, p, "value"); break;
      case LatencyModel::Kind::Uniform:
        cfg.latency.a = rd.require<double>(l, p, "lo");
        cfg.latency.b = rd.require<double>(l, p, "hi");
        break;
      case LatencyModel::Kind::Exponential: cfg.latency.a = rd.require<double>(l, p, "mean"); break;
    }
  }
  assign(rd.get<double>(root, {}, "proposal_time_s"), cfg.optimizer.proposal_time_s);
  assign(rd.get<std::string>(root, {}, "output_dir"), cfg.output_dir);

  try {
    validate_config(cfg);
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

void validate_config(const RunConfig& c) {
  auto check = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  try {
    DesignSpace space(c.lower, c.upper);
    (void)space;
  } catch (const Error& e) {
    throw ConfigError(std::string("space: ") + e.what());
  }
  const bool builtin = !c.objective.builtin.empty();
  check(builtin != c.objective.external.has_value(), "objective: exactly one of builtin/external is required");
  if (builtin) {
    try {
      const BenchmarkFn fn = make_benchmark(c.objective.builtin, c.dim(), c.objective.params);
      (void)fn;
    } catch (const Error& e) {
      throw ConfigError(std::string("objective.builtin: ") + e.what());
    }
    check(c.objective.params.noise_sd >= 0.0, "objective.noise_sd: must be >= 0");
  } else {
    check(!c.objective.external->command.empty(), "objective.external.command: must be non-empty");
  }
  try {
    c.budget.validate();
    c.optimizer.validate(c.dim());
    c.latency.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (c.optimizer.algorithm != Algorithm::Random && !uses_line_search(c.optimizer.algorithm)) {
    check(c.budget.batch_size == 1, "budget.batch: full-space baselines run with batch 1");
  }
  check(c.failures.retries >= 0, "failures.retries: must be >= 0");
  check(c.failures.max_consecutive_failures >= 0, "failures.max_consecutive: must be >= 0");
  check(c.timeout_s >= 0.0, "failures.timeout_s: must be >= 0");
}

nlohmann::ordered_json config_to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["schema_version"] = c.schema_version;
  if (!c.label.empty()) j["label"] = c.label;
  j["space"] = {{"lower", c.lower}, {"upper", c.upper}};
  nlohmann::ordered_json obj;
  if (c.objective.external) {
    obj["external"] = {{"command", c.objective.external->command},
                       {"mode", std::string(to_string(c.objective.external->mode))},
                       {"timeout_s", c.objective.external->timeout_s},
                       {"workdir", c.objective.external->workdir}};
  } else {
    obj["builtin"] = c.objective.builtin;
    obj["noise_sd"] = c.objective.params.noise_sd;
    obj["effective_dim"] = c.objective.params.effective_dim;
    obj["condition"] = c.objective.params.condition;
    obj["rotation_seed"] = c.objective.params.rotation_seed;
  }
  obj["maximize"] = c.objective.maximize;
  j["objective"] = obj;
  const auto& o = c.optimizer;
  j["algorithm"] = std::string(to_string(o.algorithm));
  j["acquisition"] = {{"lcb_beta", o.acq.lcb_beta}, {"beta_range", {o.acq.beta_lo, o.acq.beta_hi}}};
  j["policy"] = {{"p_random", o.policy.p_random}, {"delta", o.policy.delta}};
  j["grid"] = {{"points", o.grid.grid_points}, {"refine", o.grid.refine}, {"refine_tol", o.grid.refine_tol}};
  j["fullspace"] = {{"inner", o.fullspace.inner == FullSpaceConfig::Inner::Grid ? "grid" : "random-golden"},
                    {"candidates", o.fullspace.candidates},
                    {"starts", o.fullspace.starts},
                    {"window", o.fullspace.window},
                    {"golden_tol", o.fullspace.golden_tol},
                    {"grid_per_dim", o.fullspace.grid_per_dim}};
  j["fit"] = {{"ard", o.fit.ard},
              {"restarts", o.fit.restarts},
              {"max_iterations", o.fit.max_iterations},
              {"refit_all_until", o.refit_all_until},
              {"refit_every", o.refit_every}};
  j["budget"] = {{"max_evals", c.budget.max_evals},
                 {"n_init", c.budget.n_init},
                 {"batch", c.budget.batch_size},
                 {"repeats", c.budget.repeats}};
  j["failures"] = {{"retries", c.failures.retries},
                   {"max_consecutive", c.failures.max_consecutive_failures},
                   {"timeout_s", c.timeout_s}};
  j["seed"] = c.seed;
  j["clock"] = c.clock == ClockKind::Simulated ? "simulated" : "wall";
  nlohmann::ordered_json lat;
  lat["model"] = std::string(to_string(c.latency.kind));
  switch (c.latency.kind) {
    case LatencyModel::Kind::Constant: lat["value"] = c.latency.a; break;
    case LatencyModel::Kind::Uniform:
      lat["lo"] = c.latency.a;
      lat["hi"] = c.latency.b;
      break;
    case LatencyModel::Kind::Exponential: lat["mean"] = c.latency.a; break;
  }
  j["latency"] = lat;
  j["proposal_time_s"] = o.proposal_time_s;
  j["output_dir"] = c.output_dir;
  return j;
}

RunConfig benchmark_config(const std::string& name, int dim, Algorithm algo, int batch) {
  const BenchmarkFn fn = make_benchmark(name, dim);
  RunConfig c;
  c.label = name + std::to_string(dim);
  c.lower = fn.lower;
  c.upper = fn.upper;
  c.objective.builtin = name;
  c.optimizer.algorithm = algo;
  c.budget.batch_size = batch;
  return c;
}

void apply_environment(RunConfig& config) {
  if (const char* seed = std::getenv("LINEBO_SEED"); seed && *seed) {
    try {
      config.seed = std::stoull(seed);
    } catch (const std::exception&) {
      throw ConfigError(std::string("LINEBO_SEED: not an unsigned integer: ") + seed);
    }
  }
  if (const char* out = std::getenv("LINEBO_OUT"); out && *out) config.output_dir = out;
}

}  // namespace linebo
