// SPDX-License-Identifier: Apache-2.0
//
// Scoring and benchmarking: Dice overlap, closed/open answer accuracy,
// entity-set accuracy, full pipeline sweeps with per-component latency.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "care/coordinator.hpp"
#include "care/flow.hpp"
#include "care/rewards.hpp"

namespace care {

struct DimensionMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EvalItem {
  std::string id;
  std::string image_path;
  std::string question;
  std::string gt;
  QType qtype = QType::Closed;
  std::string dataset = "all";
};

// Line-delimited JSON items: {id, image, question, answer, qtype, dataset}.
std::vector<EvalItem> load_eval_items(const std::string& path);

// 2|A∩B| / (|A|+|B|); two empty masks overlap perfectly by convention.
double dice(const BinaryMask& a, const BinaryMask& b);

// Closed-ended: normalized equality or the bare option letter rule.
bool eval_closed(const std::string& pred, const std::string& gt);

// Open-ended: normalized equality short-circuits, otherwise the judge
// decides. Propagates UnparseableVerdict.
bool eval_open(const std::string& pred, const std::string& gt,
               ChatBackend& judge, const std::string& question = "");

// Fraction of matched name pairs with cosine similarity >= sim_threshold,
// denominated by max(P, Q) so spurious and missing proposals both penalize.
// An empty proposal scores 0.
double entity_set_accuracy(const EntityProposal& pred,
                           const GroundTruthEntities& gt,
                           EmbedBackend& embedder, double sim_threshold);

enum class PipelineKind { Flow, Coord };

struct ComponentLatency {
  Component component = Component::Gvqa;
  std::size_t calls = 0;
  double mean_micros = 0.0;
};

struct DatasetRow {
  std::string dataset;
  std::size_t n = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
};

struct BenchReport {
  PipelineKind pipeline = PipelineKind::Flow;
  std::vector<DatasetRow> per_dataset;
  std::size_t n = 0;
  std::size_t correct = 0;
  double overall = 0.0;
  std::vector<ComponentLatency> latency;
  std::optional<EditTable> edits;            // coordinator runs only
  std::vector<std::string> item_errors;      // "<id>: <what>"
};

struct BenchBackends {
  FlowBackends flow;    // used when pipeline == Flow
  CoordBackends coord;  // used when pipeline == Coord
  ChatBackend* judge = nullptr;  // required when any item is open-ended
};

struct BenchOptions {
  PipelineKind pipeline = PipelineKind::Flow;
  FlowConfig cfg;
  CoordBudget budget;
  std::string trace_dir;  // required; one run per item is written here
  std::string run_prefix = "bench";
  Clock* clock = nullptr;  // nullptr selects the system clock
};

// Runs the chosen pipeline over every item. Per-item failures score as
// incorrect and are noted in item_errors; the sweep never aborts. Latency is
// aggregated from the written traces.
BenchReport run_benchmark(const std::vector<EvalItem>& items,
                          const BenchBackends& backends,
                          const BenchOptions& opts);

std::string render_markdown(const BenchReport& report);
nlohmann::json report_to_json(const BenchReport& report);

}  // namespace care
