// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "json.hpp"
#include "vflow/bench.hpp"
#include "vflow/sha256.hpp"

namespace vflow::bench {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

void dump_to(const ordered_json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << j.dump(2) << "\n";
}

ordered_json timings_json(const StageTimings& t) {
  ordered_json j;
  j["edit"] = t.edit;
  j["repaint"] = t.repaint;
  j["mesh"] = t.mesh;
  j["texture"] = t.texture;
  j["total"] = t.total;
  return j;
}

StageTimings timings_from(const ordered_json& j) {
  StageTimings t;
  t.edit = j.value("edit", 0.0);
  t.repaint = j.value("repaint", 0.0);
  t.mesh = j.value("mesh", 0.0);
  t.texture = j.value("texture", 0.0);
  t.total = j.value("total", 0.0);
  return t;
}

ordered_json metrics_json(const CaseMetrics& m) {
  ordered_json j;
  j["id"] = m.id;
  j["ok"] = m.ok;
  j["error"] = m.error;
  j["sil_iou"] = m.sil_iou;
  j["preserve_iou"] = m.preserve_iou;
  j["chamfer"] = m.chamfer;
  j["e_sil"] = m.e_sil;
  return j;
}

CaseMetrics metrics_from(const ordered_json& j) {
  CaseMetrics m;
  m.id = j.value("id", -1);
  m.ok = j.value("ok", false);
  m.error = j.value("error", std::string());
  m.sil_iou = j.value("sil_iou", 0.0);
  m.preserve_iou = j.value("preserve_iou", 0.0);
  m.chamfer = j.value("chamfer", 0.0);
  m.e_sil = j.value("e_sil", 0.0);
  return m;
}

ordered_json load_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open");
  return ordered_json::parse(in);
}

}  // namespace

void write_metrics(const CaseMetrics& m, const std::string& dir) {
  dump_to(metrics_json(m), dir + "/metrics.json");
}

void write_timings(const StageTimings& t, const std::string& dir) {
  dump_to(timings_json(t), dir + "/timings.json");
}

Aggregate aggregate_rows(const std::vector<CaseMetrics>& rows) {
  Aggregate agg;
  agg.rows = rows;
  for (const CaseMetrics& m : rows) {
    if (!m.ok) {
      ++agg.failed;
      continue;
    }
    ++agg.completed;
    agg.mean_sil_iou += m.sil_iou;
    agg.mean_preserve_iou += m.preserve_iou;
    agg.mean_chamfer += m.chamfer;
    agg.mean_e_sil += m.e_sil;
    agg.mean_timings.edit += m.timings.edit;
    agg.mean_timings.repaint += m.timings.repaint;
    agg.mean_timings.mesh += m.timings.mesh;
    agg.mean_timings.texture += m.timings.texture;
    agg.mean_timings.total += m.timings.total;
  }
  if (agg.completed > 0) {
    const double inv = 1.0 / agg.completed;
    agg.mean_sil_iou *= inv;
    agg.mean_preserve_iou *= inv;
    agg.mean_chamfer *= inv;
    agg.mean_e_sil *= inv;
    agg.mean_timings.edit *= inv;
    agg.mean_timings.repaint *= inv;
    agg.mean_timings.mesh *= inv;
    agg.mean_timings.texture *= inv;
    agg.mean_timings.total *= inv;
  }
  return agg;
}

Aggregate evaluate_run(const std::string& run_dir) {
  std::vector<std::string> dirs;
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    if (entry.is_directory() && entry.path().filename().string().rfind("case_", 0) == 0)
      dirs.push_back(entry.path().string());
  }
  std::sort(dirs.begin(), dirs.end());

  std::vector<CaseMetrics> rows;
  rows.reserve(dirs.size());
  for (const std::string& d : dirs) {
    CaseMetrics m;
    try {
      m = metrics_from(load_json(d + "/metrics.json"));
      if (fs::exists(d + "/timings.json"))
        m.timings = timings_from(load_json(d + "/timings.json"));
    } catch (const std::exception& e) {
      m = CaseMetrics{};
      m.ok = false;
      m.error = std::string("unreadable metrics: ") + e.what();
      std::string name = fs::path(d).filename().string();
      try {
        m.id = std::stoi(name.substr(5));
      } catch (...) {
        m.id = -1;
      }
    }
    rows.push_back(std::move(m));
  }
  return aggregate_rows(rows);
}

void write_report(const Aggregate& agg, const std::string& path) {
  ordered_json j;
  j["cases"] = static_cast<int>(agg.rows.size());
  j["completed"] = agg.completed;
  j["failed"] = agg.failed;
  j["mean_sil_iou"] = agg.mean_sil_iou;
  j["mean_preserve_iou"] = agg.mean_preserve_iou;
  j["mean_chamfer"] = agg.mean_chamfer;
  j["mean_e_sil"] = agg.mean_e_sil;
  j["mean_timings"] = timings_json(agg.mean_timings);
  ordered_json rows = ordered_json::array();
  for (const CaseMetrics& m : agg.rows) {
    ordered_json row = metrics_json(m);
    row["timings"] = timings_json(m.timings);
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  dump_to(j, path);
}

void write_manifest(const std::string& run_dir) {
  std::vector<std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(run_dir)) {
    if (!entry.is_regular_file()) continue;
    std::string name = entry.path().filename().string();
    if (name == "manifest.json" || name == "report.json" || name == "timings.json") continue;
    files.push_back(fs::relative(entry.path(), run_dir).generic_string());
  }
  std::sort(files.begin(), files.end());

  ordered_json entries;
  for (const std::string& rel : files)
    entries[rel] = sha256_file((fs::path(run_dir) / rel).string());
  ordered_json j;
  j["files"] = std::move(entries);
  dump_to(j, run_dir + "/manifest.json");
}

}  // namespace vflow::bench
