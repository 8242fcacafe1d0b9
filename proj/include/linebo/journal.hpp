#pragma once

#include <nlohmann/json.hpp>

#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace linebo {

enum class EventKind { Start, Dispatch, Observation, Failure, Proposal, Fit, End };

std::string_view to_string(EventKind kind);
EventKind parse_event_kind(std::string_view text);

/// One line of the run journal. Kind-specific fields (fit hyperparameters,
/// budget counters, ...) ride in `extra`.
struct EvalRecord {
  std::string run;
  EventKind kind = EventKind::Dispatch;
  long long seq = 0;     // dense record number within the run
  long long index = -1;  // evaluation index (dispatch ordinal), -1 if none
  std::optional<int> worker;
  std::optional<std::vector<double>> point;  // raw units
  std::optional<double> value;
  double sim_time = 0.0;
  std::optional<double> wall_time;
  std::optional<int> dimension;
  std::optional<double> line_beta;
  std::optional<std::string> acquisition;
  std::optional<double> explore_beta;
  nlohmann::json extra = nlohmann::json::object();
};

nlohmann::ordered_json to_json(const EvalRecord& r);
EvalRecord record_from_json(const nlohmann::json& j);

/// Append-only event log. Keeps records in memory and, when a file is
/// attached, writes each one as an ndjson line immediately so an interrupted
/// run leaves a usable prefix. Appends are serialized.
class Journal {
 public:
  explicit Journal(std::string run_id = "run") : run_(std::move(run_id)) {}

  void open_file(const std::string& path);
  void append(EvalRecord record);

  const std::string& run_id() const { return run_; }
  const std::vector<EvalRecord>& records() const { return records_; }

 private:
  std::string run_;
  std::vector<EvalRecord> records_;
  std::ofstream file_;
  std::mutex mutex_;
};

/// Reads an ndjson journal. Throws IoError / ConfigError with the line number.
std::vector<EvalRecord> read_journal(const std::string& path);

}  // namespace linebo
