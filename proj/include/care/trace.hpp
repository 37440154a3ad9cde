// SPDX-License-Identifier: Apache-2.0
//
// Append-only run traces: one line-delimited JSON file per run plus an
// index file, with (run id, step) unique and contiguous from zero. A
// recorded run can be replayed through scripted backends byte-for-byte.
// The clock is injectable so scripted runs stay deterministic while remote
// runs keep wall-clock component timings.

#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace care {

struct StoreUnavailable : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnknownRun : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CorruptTrace : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Fixed component taxonomy; latency accounting groups by these names.
enum class Component { Coordinator, EntityProp, Segmentation, Gvqa, Embed, Judge };

std::string_view to_string(Component c);
Component component_from_string(std::string_view s);

struct TraceRecord {
  std::string run_id;
  std::uint64_t step = 0;
  Component component = Component::Gvqa;
  std::string request_digest;
  nlohmann::json response;
  std::int64_t micros = 0;
  nlohmann::json reward;  // reward decisions attached to this step, or null

  nlohmann::json to_json() const;
  static TraceRecord from_json(const nlohmann::json& j);
};

class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::int64_t now_micros() = 0;
};

class SystemClock : public Clock {
 public:
  std::int64_t now_micros() override;
};

// Deterministic clock: every reading advances by a fixed quantum.
class SteppingClock : public Clock {
 public:
  explicit SteppingClock(std::int64_t quantum_micros = 1000)
      : quantum_(quantum_micros) {}
  std::int64_t now_micros() override { return now_ += quantum_; }

 private:
  std::int64_t quantum_;
  std::int64_t now_ = 0;
};

// Single writer per run. Steps are assigned contiguously from zero.
class TraceWriter {
 public:
  // Creates <dir>/runs/<run_id>.jsonl; throws StoreUnavailable when the run
  // already exists or the directory cannot be created.
  TraceWriter(const std::string& dir, const std::string& run_id);
  ~TraceWriter();

  TraceWriter(const TraceWriter&) = delete;
  TraceWriter& operator=(const TraceWriter&) = delete;

  std::uint64_t append(Component component, const std::string& request_digest,
                       nlohmann::json response, std::int64_t micros,
                       nlohmann::json reward = nullptr);

  // Free-form run summary written to the index entry on close.
  void set_summary(nlohmann::json summary);

  void close();

  const std::string& run_id() const { return run_id_; }
  std::uint64_t steps() const { return next_step_; }

 private:
  std::string dir_;
  std::string run_id_;
  std::string file_rel_;
  std::ofstream out_;
  std::uint64_t next_step_ = 0;
  nlohmann::json summary_;
  bool open_ = false;
};

struct IndexEntry {
  std::string run_id;
  std::string file;
  std::uint64_t records = 0;
  nlohmann::json summary;
};

class TraceStore {
 public:
  explicit TraceStore(std::string dir) : dir_(std::move(dir)) {}

  // All records of a run, validated for contiguity. Throws UnknownRun when
  // the run is not indexed and CorruptTrace on malformed or gapped files.
  std::vector<TraceRecord> replay_cursor(const std::string& run_id) const;

  std::vector<IndexEntry> index() const;

  const std::string& dir() const { return dir_; }

 private:
  std::string dir_;
};

// Shared per-run context: where to trace and which clock to read.
struct RunContext {
  TraceWriter* writer = nullptr;
  Clock* clock = nullptr;

  std::int64_t now() { return clock ? clock->now_micros() : 0; }
  void record(Component component, const std::string& digest,
              nlohmann::json response, std::int64_t micros,
              nlohmann::json reward = nullptr) {
    if (writer) {
      writer->append(component, digest, std::move(response), micros, std::move(reward));
    }
  }
};

}  // namespace care
