// SPDX-License-Identifier: Apache-2.0

#include "care/synth.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "care/prompts.hpp"
#include "care/text.hpp"

namespace care {

namespace {

constexpr TaskKind kTaskKinds[kTaskKindCount] = {
    TaskKind::DescribeEntity, TaskKind::FindAnomaly,   TaskKind::LocateEntity,
    TaskKind::CountEntities,  TaskKind::SegmentEntity, TaskKind::CropRegion,
};

// splitmix64; sequential draws from a (seed, record index) stream.
std::uint64_t mix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string metadata_block(const SegRecord& rec,
                           const std::vector<std::size_t>& picks) {
  std::string block = "modality: " + rec.modality + "\norgan: " + rec.organ +
                      "\nentities:";
  for (const std::size_t i : picks) {
    block += "\n- " + rec.masks[i].entity;
    if (!rec.masks[i].position.empty()) {
      block += " (" + rec.masks[i].position + ")";
    }
  }
  return block;
}

}  // namespace

std::string_view to_string(TaskKind t) {
  switch (t) {
    case TaskKind::DescribeEntity:
      return "describe_entity";
    case TaskKind::FindAnomaly:
      return "find_anomaly";
    case TaskKind::LocateEntity:
      return "locate_entity";
    case TaskKind::CountEntities:
      return "count_entities";
    case TaskKind::SegmentEntity:
      return "segment_entity";
    case TaskKind::CropRegion:
      return "crop_region";
  }
  throw std::invalid_argument("to_string: bad TaskKind");
}

TaskKind task_kind_from_string(std::string_view s) {
  for (const TaskKind t : kTaskKinds) {
    if (s == to_string(t)) return t;
  }
  throw std::invalid_argument("task_kind_from_string: " + std::string(s));
}

bool EntityCatalog::contains(const std::string& name) const {
  return std::binary_search(names.begin(), names.end(), normalize_entity(name));
}

EntityCatalog build_entity_catalog(const std::vector<SegRecord>& records) {
  std::set<std::string> names;
  for (const auto& rec : records) {
    for (const auto& m : rec.masks) {
      const std::string n = normalize_entity(m.entity);
      if (!n.empty()) names.insert(n);
    }
  }
  if (names.empty()) throw EmptyCorpus("build_entity_catalog: no entities");
  return EntityCatalog{{names.begin(), names.end()}};
}

std::optional<SynthExample> synthesize_example(const SegRecord& rec,
                                               std::size_t record_index,
                                               ChatBackend& chat,
                                               std::uint64_t seed) {
  if (rec.masks.empty()) {
    throw CorruptRecord("synthesize_example: record without masks: " +
                        rec.image_path);
  }
  std::uint64_t state =
      seed ^ fnv1a64(&record_index, sizeof(record_index), 0x1000193ULL);

  // Sample 1..min(3, |masks|) distinct masks via partial Fisher-Yates.
  const std::size_t k_max = std::min<std::size_t>(3, rec.masks.size());
  const std::size_t k = 1 + static_cast<std::size_t>(mix64(state) % k_max);
  std::vector<std::size_t> order(rec.masks.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j =
        i + static_cast<std::size_t>(mix64(state) % (order.size() - i));
    std::swap(order[i], order[j]);
  }
  std::vector<std::size_t> picks(order.begin(),
                                 order.begin() + static_cast<std::ptrdiff_t>(k));
  const TaskKind task =
      kTaskKinds[static_cast<std::size_t>(mix64(state) % kTaskKindCount)];

  SynthExample ex;
  ex.image_path = rec.image_path;
  ex.task = task;
  std::set<std::string> seen;
  for (const std::size_t i : picks) {
    const std::string n = normalize_entity(rec.masks[i].entity);
    if (!n.empty() && seen.insert(n).second) ex.answer.push_back(n);
  }
  if (ex.answer.empty()) return std::nullopt;

  std::string entity_list;
  for (const auto& n : ex.answer) {
    if (!entity_list.empty()) entity_list += ", ";
    entity_list += n;
  }

  ChatRequest req;
  req.system_prompt = prompts::synth_system();
  req.turns.push_back({"user",
                       prompts::synth_user(metadata_block(rec, picks),
                                           std::string(to_string(task)),
                                           entity_list),
                       {}});
  ChatResponse resp = chat.chat_complete(req);
  std::string question = collapse_whitespace(resp.text);
  if (question.empty()) {
    req.turns.push_back({"assistant", resp.text, {}});
    req.turns.push_back({"user", prompts::malformed_retry_reminder(), {}});
    resp = chat.chat_complete(req);
    question = collapse_whitespace(resp.text);
    if (question.empty()) return std::nullopt;  // skip this record
  }
  ex.question = question;
  return ex;
}

bool validate_example(const SynthExample& ex, const EntityCatalog& catalog) {
  if (ex.answer.empty() || trim(ex.question).empty()) return false;
  for (const auto& name : ex.answer) {
    if (!catalog.contains(name)) return false;
  }
  switch (ex.task) {
    case TaskKind::DescribeEntity:
    case TaskKind::FindAnomaly:
    case TaskKind::LocateEntity:
    case TaskKind::CountEntities:
    case TaskKind::SegmentEntity:
    case TaskKind::CropRegion:
      return true;
  }
  return false;
}

std::vector<SegRecord> load_seg_records(const std::string& dir) {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  if (ec) throw CorruptRecord("load_seg_records: cannot read " + dir);
  std::sort(files.begin(), files.end());

  std::vector<SegRecord> records;
  for (const auto& file : files) {
    std::ifstream in(file);
    const nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw CorruptRecord("load_seg_records: bad JSON in " + file.string());
    }
    try {
      SegRecord rec;
      rec.image_path = (fs::path(dir) / j.at("image").get<std::string>()).string();
      rec.modality = j.value("modality", std::string());
      rec.organ = j.value("organ", std::string());
      for (const auto& m : j.at("masks")) {
        MaskInfo info;
        info.entity = m.at("entity").get<std::string>();
        info.position = m.value("position", std::string());
        const fs::path mask_path = fs::path(dir) / m.at("mask_png").get<std::string>();
        info.mask = image_to_mask(load_image(mask_path.string()));
        rec.masks.push_back(std::move(info));
      }
      if (rec.masks.empty()) {
        throw CorruptRecord("load_seg_records: no masks in " + file.string());
      }
      records.push_back(std::move(rec));
    } catch (const CorruptRecord&) {
      throw;
    } catch (const std::exception& e) {
      throw CorruptRecord("load_seg_records: " + file.string() + ": " + e.what());
    }
  }
  return records;
}

nlohmann::json example_to_json(const SynthExample& ex) {
  return {{"image", ex.image_path},
          {"question", ex.question},
          {"answer", ex.answer},
          {"task_kind", std::string(to_string(ex.task))}};
}

SynthExample example_from_json(const nlohmann::json& j) {
  SynthExample ex;
  ex.image_path = j.at("image").get<std::string>();
  ex.question = j.at("question").get<std::string>();
  ex.answer = j.at("answer").get<std::vector<std::string>>();
  ex.task = task_kind_from_string(j.at("task_kind").get<std::string>());
  return ex;
}

void write_examples_jsonl(const std::string& path,
                          const std::vector<SynthExample>& examples) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_examples_jsonl: cannot open " + path);
  for (const auto& ex : examples) {
    out << example_to_json(ex).dump() << "\n";
  }
}

}  // namespace care
