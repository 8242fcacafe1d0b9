#include "linebo/journal.hpp"

#include "linebo/error.hpp"

#include <algorithm>

namespace linebo {

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Start: return "start";
    case EventKind::Dispatch: return "dispatch";
    case EventKind::Observation: return "observation";
    case EventKind::Failure: return "failure";
    case EventKind::Proposal: return "proposal";
    case EventKind::Fit: return "fit";
    case EventKind::End: return "end";
  }
  return "?";
}

EventKind parse_event_kind(std::string_view text) {
  for (EventKind k : {EventKind::Start, EventKind::Dispatch, EventKind::Observation, EventKind::Failure,
                      EventKind::Proposal, EventKind::Fit, EventKind::End}) {
    if (to_string(k) == text) return k;
  }
  throw InvalidArgument("unknown journal event kind '" + std::string(text) + "'");
}

nlohmann::ordered_json to_json(const EvalRecord& r) {
  nlohmann::ordered_json j;
  j["run"] = r.run;
  j["kind"] = to_string(r.kind);
  j["seq"] = r.seq;
  if (r.index >= 0) j["index"] = r.index;
  if (r.worker) j["worker"] = *r.worker;
  if (r.point) j["x"] = *r.point;
  if (r.value) j["value"] = *r.value;
  j["sim_time"] = r.sim_time;
  if (r.wall_time) j["wall_time"] = *r.wall_time;
  if (r.dimension) j["dimension"] = *r.dimension;
  if (r.line_beta) j["line_beta"] = *r.line_beta;
  if (r.acquisition) j["acq"] = *r.acquisition;
  if (r.explore_beta) j["explore_beta"] = *r.explore_beta;
  for (const auto& [key, val] : r.extra.items()) j[key] = val;
  return j;
}

EvalRecord record_from_json(const nlohmann::json& j) {
  EvalRecord r;
  r.run = j.at("run").get<std::string>();
  r.kind = parse_event_kind(j.at("kind").get<std::string>());
  r.seq = j.value("seq", 0LL);
  r.index = j.value("index", -1LL);
  if (j.contains("worker")) r.worker = j["worker"].get<int>();
  if (j.contains("x")) r.point = j["x"].get<std::vector<double>>();
  if (j.contains("value")) r.value = j["value"].get<double>();
  r.sim_time = j.value("sim_time", 0.0);
  if (j.contains("wall_time")) r.wall_time = j["wall_time"].get<double>();
  if (j.contains("dimension")) r.dimension = j["dimension"].get<int>();
  if (j.contains("line_beta")) r.line_beta = j["line_beta"].get<double>();
  if (j.contains("acq")) r.acquisition = j["acq"].get<std::string>();
  if (j.contains("explore_beta")) r.explore_beta = j["explore_beta"].get<double>();
  static const char* known[] = {"run", "kind", "seq", "index", "worker", "x", "value", "sim_time",
                                "wall_time", "dimension", "line_beta", "acq", "explore_beta"};
  for (const auto& [key, val] : j.items()) {
    if (std::find(std::begin(known), std::end(known), key) == std::end(known)) r.extra[key] = val;
  }
  return r;
}

void Journal::open_file(const std::string& path) {
  std::lock_guard lock(mutex_);
  file_.open(path, std::ios::out | std::ios::trunc);
  if (!file_) throw IoError("cannot open journal " + path);
}

void Journal::append(EvalRecord record) {
  std::lock_guard lock(mutex_);
  record.run = run_;
  record.seq = static_cast<long long>(records_.size());
  if (file_.is_open()) {
    file_ << to_json(record).dump() << '\n';
    file_.flush();
  }
  records_.push_back(std::move(record));
}

std::vector<EvalRecord> read_journal(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read journal " + path);
  std::vector<EvalRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": bad journal record: " + e.what());
    }
  }
  return out;
}

}  // namespace linebo
