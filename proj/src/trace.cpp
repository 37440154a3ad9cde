// SPDX-License-Identifier: Apache-2.0

#include "care/trace.hpp"

#include <chrono>
#include <filesystem>

namespace care {

namespace fs = std::filesystem;

std::string_view to_string(Component c) {
  switch (c) {
    case Component::Coordinator: return "coordinator";
    case Component::EntityProp: return "entity_prop";
    case Component::Segmentation: return "segmentation";
    case Component::Gvqa: return "gvqa";
    case Component::Embed: return "embed";
    case Component::Judge: return "judge";
  }
  return "gvqa";
}

Component component_from_string(std::string_view s) {
  if (s == "coordinator") return Component::Coordinator;
  if (s == "entity_prop") return Component::EntityProp;
  if (s == "segmentation") return Component::Segmentation;
  if (s == "gvqa") return Component::Gvqa;
  if (s == "embed") return Component::Embed;
  if (s == "judge") return Component::Judge;
  throw CorruptTrace("unknown trace component: " + std::string(s));
}

nlohmann::json TraceRecord::to_json() const {
  return {{"run_id", run_id},
          {"step", step},
          {"component", std::string(to_string(component))},
          {"request_digest", request_digest},
          {"response", response},
          {"micros", micros},
          {"reward", reward}};
}

TraceRecord TraceRecord::from_json(const nlohmann::json& j) {
  TraceRecord rec;
  try {
    rec.run_id = j.at("run_id").get<std::string>();
    rec.step = j.at("step").get<std::uint64_t>();
    rec.component = component_from_string(j.at("component").get<std::string>());
    rec.request_digest = j.at("request_digest").get<std::string>();
    rec.response = j.at("response");
    rec.micros = j.at("micros").get<std::int64_t>();
    rec.reward = j.value("reward", nlohmann::json());
  } catch (const nlohmann::json::exception& e) {
    throw CorruptTrace(std::string("trace record: ") + e.what());
  }
  return rec;
}

std::int64_t SystemClock::now_micros() {
  return std::chrono::duration_cast<std::chrono::microseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

TraceWriter::TraceWriter(const std::string& dir, const std::string& run_id)
    : dir_(dir), run_id_(run_id) {
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "runs", ec);
  if (ec) throw StoreUnavailable("trace store: cannot create " + dir);
  file_rel_ = "runs/" + run_id + ".jsonl";
  const fs::path file = fs::path(dir) / file_rel_;
  if (fs::exists(file)) {
    throw StoreUnavailable("trace store: run already recorded: " + run_id);
  }
  out_.open(file, std::ios::trunc);
  if (!out_) throw StoreUnavailable("trace store: cannot open " + file.string());
  open_ = true;
}

TraceWriter::~TraceWriter() {
  if (open_) {
    try {
      close();
    } catch (...) {
      // Destructors must not throw; the index entry is lost, the records
      // written so far remain on disk.
    }
  }
}

std::uint64_t TraceWriter::append(Component component, const std::string& request_digest,
                                  nlohmann::json response, std::int64_t micros,
                                  nlohmann::json reward) {
  if (!open_) throw StoreUnavailable("trace writer: append after close");
  TraceRecord rec;
  rec.run_id = run_id_;
  rec.step = next_step_;
  rec.component = component;
  rec.request_digest = request_digest;
  rec.response = std::move(response);
  rec.micros = micros;
  rec.reward = std::move(reward);
  out_ << rec.to_json().dump() << "\n";
  if (!out_) throw StoreUnavailable("trace writer: write failed");
  return next_step_++;
}

void TraceWriter::set_summary(nlohmann::json summary) { summary_ = std::move(summary); }

void TraceWriter::close() {
  if (!open_) return;
  out_.flush();
  out_.close();
  open_ = false;
  const fs::path index = fs::path(dir_) / "index.jsonl";
  std::ofstream idx(index, std::ios::app);
  if (!idx) throw StoreUnavailable("trace store: cannot append index");
  idx << nlohmann::json{{"run_id", run_id_},
                        {"file", file_rel_},
                        {"records", next_step_},
                        {"summary", summary_}}
             .dump()
      << "\n";
}

std::vector<TraceRecord> TraceStore::replay_cursor(const std::string& run_id) const {
  bool indexed = false;
  std::string file_rel;
  for (const auto& entry : index()) {
    if (entry.run_id == run_id) {
      indexed = true;
      file_rel = entry.file;
      break;
    }
  }
  if (!indexed) throw UnknownRun("trace store: unknown run " + run_id);

  std::ifstream in(fs::path(dir_) / file_rel);
  if (!in) throw UnknownRun("trace store: missing file for run " + run_id);
  std::vector<TraceRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw CorruptTrace("trace store: bad line in " + file_rel);
    records.push_back(TraceRecord::from_json(j));
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].step != i || records[i].run_id != run_id) {
      throw CorruptTrace("trace store: steps not contiguous in " + file_rel);
    }
  }
  return records;
}

std::vector<IndexEntry> TraceStore::index() const {
  std::ifstream in(fs::path(dir_) / "index.jsonl");
  std::vector<IndexEntry> entries;
  if (!in) return entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw CorruptTrace("trace store: bad index line");
    IndexEntry entry;
    entry.run_id = j.value("run_id", std::string());
    entry.file = j.value("file", std::string());
    entry.records = j.value("records", std::uint64_t{0});
    entry.summary = j.value("summary", nlohmann::json());
    entries.push_back(std::move(entry));
  }
  return entries;
}

}  // namespace care
