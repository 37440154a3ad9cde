// SPDX-License-Identifier: Apache-2.0

#include "care/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>

#include "care/assignment.hpp"
#include "care/kernels.hpp"
#include "care/scripted.hpp"
#include "care/text.hpp"

namespace care {

namespace {

std::string format_double(double v, int places) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", places, v);
  return buf;
}

DatasetRow& row_for(std::vector<DatasetRow>& rows, const std::string& dataset) {
  for (auto& row : rows) {
    if (row.dataset == dataset) return row;
  }
  rows.push_back(DatasetRow{dataset, 0, 0, 0.0});
  return rows.back();
}

}  // namespace

std::vector<EvalItem> load_eval_items(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_eval_items: cannot open " + path);
  std::vector<EvalItem> items;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw std::runtime_error("load_eval_items: bad JSON at " + path + ":" +
                               std::to_string(lineno));
    }
    EvalItem item;
    item.id = j.value("id", "item" + std::to_string(lineno));
    item.image_path = j.at("image").get<std::string>();
    item.question = j.at("question").get<std::string>();
    item.gt = j.at("answer").get<std::string>();
    item.qtype = qtype_from_string(j.value("qtype", "closed"));
    item.dataset = j.value("dataset", "all");
    if (trim(item.gt).empty()) {
      throw std::runtime_error("load_eval_items: empty answer at " + path + ":" +
                               std::to_string(lineno));
    }
    items.push_back(std::move(item));
  }
  return items;
}

double dice(const BinaryMask& a, const BinaryMask& b) {
  if (a.width != b.width || a.height != b.height) {
    throw DimensionMismatch("dice: mask dimensions differ");
  }
  const std::size_t n = a.bits.size();
  const std::uint64_t ca = kernels::count_nonzero_u8(a.bits.data(), n);
  const std::uint64_t cb = kernels::count_nonzero_u8(b.bits.data(), n);
  if (ca + cb == 0) return 1.0;  // two empty masks overlap perfectly
  const std::uint64_t both = kernels::count_and_u8(a.bits.data(),
                                                   b.bits.data(), n);
  return 2.0 * static_cast<double>(both) / static_cast<double>(ca + cb);
}

bool eval_closed(const std::string& pred, const std::string& gt) {
  return reward_accuracy(pred, gt, QType::Closed) == 1.0;
}

bool eval_open(const std::string& pred, const std::string& gt,
               ChatBackend& judge, const std::string& question) {
  return judge_answer(judge, question, gt, pred);
}

double entity_set_accuracy(const EntityProposal& pred,
                           const GroundTruthEntities& gt,
                           EmbedBackend& embedder, double sim_threshold) {
  if (gt.entities.empty()) {
    throw std::invalid_argument("entity_set_accuracy: empty ground truth");
  }
  if (pred.entities.empty()) return 0.0;

  std::vector<std::string> pred_names;
  pred_names.reserve(pred.entities.size());
  for (const auto& e : pred.entities) pred_names.push_back(normalize_entity(e));
  std::vector<std::string> gt_names;
  gt_names.reserve(gt.entities.size());
  for (const auto& e : gt.entities) gt_names.push_back(normalize_entity(e));

  const auto pred_emb = embedder.embed_texts(pred_names);
  const auto gt_emb = embedder.embed_texts(gt_names);
  const SimilarityMatrix sims = similarity_matrix(pred_emb, gt_emb);
  const Assignment matched = km_assign(sims);

  std::size_t hits = 0;
  for (const auto& [r, c] : matched.pairs) {
    if (sims.at(r, c) >= sim_threshold) ++hits;
  }
  return static_cast<double>(hits) /
         static_cast<double>(std::max(pred_names.size(), gt_names.size()));
}

BenchReport run_benchmark(const std::vector<EvalItem>& items,
                          const BenchBackends& backends,
                          const BenchOptions& opts) {
  if (items.empty()) throw std::invalid_argument("run_benchmark: no items");
  if (opts.trace_dir.empty()) {
    throw std::invalid_argument("run_benchmark: trace_dir required");
  }
  const bool any_open = std::any_of(items.begin(), items.end(), [](const auto& i) {
    return i.qtype == QType::Open;
  });
  if (any_open && backends.judge == nullptr) {
    throw std::invalid_argument("run_benchmark: open items need a judge");
  }

  SystemClock system_clock;
  Clock* clock = opts.clock ? opts.clock : &system_clock;

  BenchReport report;
  report.pipeline = opts.pipeline;
  std::vector<EditInput> edits;
  struct LatencyAcc {
    std::uint64_t micros = 0;
    std::size_t calls = 0;
  };
  std::map<Component, LatencyAcc> latency;

  for (std::size_t i = 0; i < items.size(); ++i) {
    const EvalItem& item = items[i];
    char suffix[16];
    std::snprintf(suffix, sizeof(suffix), "%04zu", i);
    const std::string run_id = opts.run_prefix + "-" + suffix;

    TraceWriter writer(opts.trace_dir, run_id);
    RunContext ctx{&writer, clock};
    bool correct = false;
    try {
      const ImageRef image = make_image_ref(item.id, load_image(item.image_path));
      std::string answer;
      if (opts.pipeline == PipelineKind::Flow) {
        answer = run_flow(image, item.question, backends.flow, opts.cfg, ctx)
                     .final_answer;
      } else {
        const CoordResult r = run_coord(image, item.question, backends.coord,
                                        opts.budget, opts.cfg, ctx);
        answer = r.final_answer;
        edits.push_back(
            {r.pre_review_answer, r.final_answer, item.gt, item.qtype, item.dataset});
      }
      if (item.qtype == QType::Closed) {
        correct = eval_closed(answer, item.gt);
      } else {
        RecordingChatBackend judge(*backends.judge, ctx, Component::Judge);
        correct = eval_open(answer, item.gt, judge, item.question);
      }
    } catch (const std::exception& e) {
      report.item_errors.push_back(item.id + ": " + e.what());
      writer.set_summary({{"item", item.id}, {"error", e.what()}});
    }
    writer.close();

    ++report.n;
    if (correct) ++report.correct;
    DatasetRow& row = row_for(report.per_dataset, item.dataset);
    ++row.n;
    if (correct) ++row.correct;

    const TraceStore store(opts.trace_dir);
    for (const TraceRecord& rec : store.replay_cursor(run_id)) {
      auto& acc = latency[rec.component];
      acc.micros += rec.micros;
      ++acc.calls;
    }
  }

  for (auto& row : report.per_dataset) {
    row.accuracy = static_cast<double>(row.correct) / static_cast<double>(row.n);
  }
  report.overall =
      static_cast<double>(report.correct) / static_cast<double>(report.n);
  for (const auto& [component, acc] : latency) {
    report.latency.push_back(
        {component, acc.calls,
         static_cast<double>(acc.micros) / static_cast<double>(acc.calls)});
  }
  if (opts.pipeline == PipelineKind::Coord && !edits.empty()) {
    report.edits = edit_accounting(edits);
  }
  return report;
}

std::string render_markdown(const BenchReport& report) {
  std::string md = "# Benchmark report\n\n";
  md += "Pipeline: ";
  md += report.pipeline == PipelineKind::Flow ? "flow" : "coord";
  md += "\n\nItems: " + std::to_string(report.n) +
        ", correct: " + std::to_string(report.correct) +
        ", accuracy: " + format_double(report.overall, 4) + "\n";
  md += "Errors: " + std::to_string(report.item_errors.size()) + "\n\n";

  md += "| dataset | n | correct | accuracy |\n|---|---:|---:|---:|\n";
  for (const auto& row : report.per_dataset) {
    md += "| " + row.dataset + " | " + std::to_string(row.n) + " | " +
          std::to_string(row.correct) + " | " + format_double(row.accuracy, 4) +
          " |\n";
  }

  if (!report.latency.empty()) {
    md += "\n## Component latency\n\n";
    md += "| component | calls | mean ms |\n|---|---:|---:|\n";
    for (const auto& lat : report.latency) {
      md += "| " + std::string(to_string(lat.component)) + " | " +
            std::to_string(lat.calls) + " | " +
            format_double(lat.mean_micros / 1000.0, 3) + " |\n";
    }
  }

  if (report.edits) {
    md += "\n## Review edits\n\n";
    md += "| dataset | n | fixed | broke | delta | overwritten |\n"
          "|---|---:|---:|---:|---:|---:|\n";
    auto edit_row = [&](const std::string& name, const EditCell& cell) {
      md += "| " + name + " | " + std::to_string(cell.n) + " | " +
            format_double(cell.fixed_ratio, 4) + " | " +
            format_double(cell.broke_ratio, 4) + " | " +
            format_double(cell.delta, 4) + " | " +
            format_double(cell.total_overwrite, 4) + " |\n";
    };
    for (const auto& [name, cell] : report.edits->per_dataset) {
      edit_row(name, cell);
    }
    edit_row("overall", report.edits->overall);
  }

  if (!report.item_errors.empty()) {
    md += "\n## Errors\n\n";
    for (const auto& err : report.item_errors) md += "- " + err + "\n";
  }
  return md;
}

nlohmann::json report_to_json(const BenchReport& report) {
  nlohmann::json datasets = nlohmann::json::array();
  for (const auto& row : report.per_dataset) {
    datasets.push_back({{"dataset", row.dataset},
                        {"n", row.n},
                        {"correct", row.correct},
                        {"accuracy", row.accuracy}});
  }
  nlohmann::json latency = nlohmann::json::array();
  for (const auto& lat : report.latency) {
    latency.push_back({{"component", std::string(to_string(lat.component))},
                       {"calls", lat.calls},
                       {"mean_micros", lat.mean_micros}});
  }
  nlohmann::json j{{"pipeline", report.pipeline == PipelineKind::Flow ? "flow" : "coord"},
                   {"n", report.n},
                   {"correct", report.correct},
                   {"overall", report.overall},
                   {"datasets", datasets},
                   {"latency", latency},
                   {"errors", report.item_errors}};
  if (report.edits) {
    auto cell_json = [](const EditCell& cell) {
      return nlohmann::json{{"n", cell.n},
                            {"fixed", cell.fixed},
                            {"broke", cell.broke},
                            {"unchanged", cell.unchanged},
                            {"changed_wrong", cell.changed_wrong},
                            {"changed_right", cell.changed_right},
                            {"fixed_ratio", cell.fixed_ratio},
                            {"broke_ratio", cell.broke_ratio},
                            {"delta", cell.delta},
                            {"total_overwrite", cell.total_overwrite}};
    };
    nlohmann::json edits{{"overall", cell_json(report.edits->overall)}};
    nlohmann::json per_dataset = nlohmann::json::object();
    for (const auto& [name, cell] : report.edits->per_dataset) {
      per_dataset[name] = cell_json(cell);
    }
    edits["per_dataset"] = per_dataset;
    j["edits"] = edits;
  }
  return j;
}

}  // namespace care
