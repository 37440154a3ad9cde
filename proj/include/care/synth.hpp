// SPDX-License-Identifier: Apache-2.0
//
// Proposal-training data synthesis from segmentation records: sample masks,
// have a chat backend phrase a question, fix the answer to the sampled names.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "care/backends.hpp"
#include "care/raster.hpp"

namespace care {

struct EmptyCorpus : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CorruptRecord : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The six question styles a synthesized example can take.
enum class TaskKind {
  DescribeEntity,
  FindAnomaly,
  LocateEntity,
  CountEntities,
  SegmentEntity,
  CropRegion,
};
inline constexpr int kTaskKindCount = 6;

std::string_view to_string(TaskKind t);
TaskKind task_kind_from_string(std::string_view s);

struct MaskInfo {
  std::string entity;
  BinaryMask mask;
  std::string position;  // free-text location summary, e.g. "upper left"
};

struct SegRecord {
  std::string image_path;
  std::string modality;
  std::string organ;
  std::vector<MaskInfo> masks;  // at least one
};

// Normalized entity names, deduplicated and sorted.
struct EntityCatalog {
  std::vector<std::string> names;
  bool contains(const std::string& name) const;
};

struct SynthExample {
  std::string image_path;
  std::string question;
  std::vector<std::string> answer;  // normalized sampled entity names
  TaskKind task = TaskKind::DescribeEntity;
};

// Union of normalized entity names across records. Throws EmptyCorpus when
// no record carries a mask.
EntityCatalog build_entity_catalog(const std::vector<SegRecord>& records);

// Deterministic per (seed, record_index): samples 1..min(3, |masks|) masks
// and a task kind, asks the backend to phrase the question, and fixes the
// answer to the sampled names regardless of what the backend wrote. An empty
// reply is retried once with a reminder; a second empty reply skips the
// record (nullopt).
std::optional<SynthExample> synthesize_example(const SegRecord& rec,
                                               std::size_t record_index,
                                               ChatBackend& chat,
                                               std::uint64_t seed);

// True iff answer is non-empty and within the catalog, the question is
// non-empty, and the task kind is one of the six.
bool validate_example(const SynthExample& ex, const EntityCatalog& catalog);

// Reads every *.json record under dir (sorted by name). Each file holds
// {image, modality, organ, masks: [{entity, mask_png, position}]} with paths
// resolved relative to dir. Throws CorruptRecord naming the offending file.
std::vector<SegRecord> load_seg_records(const std::string& dir);

nlohmann::json example_to_json(const SynthExample& ex);
SynthExample example_from_json(const nlohmann::json& j);

// Line-delimited JSON, one example per line.
void write_examples_jsonl(const std::string& path,
                          const std::vector<SynthExample>& examples);

}  // namespace care
