#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "metajudge/aggregation.hpp"
#include "metajudge/core.hpp"
#include "metajudge/errors.hpp"
#include "metajudge/meta_judgment.hpp"

namespace metajudge {

// A judgment with its panel-aggregated final score and selection outcome.
struct ScoredJudgment {
  JudgmentRecord judgment;
  TaskCategory category = TaskCategory::Knowledge;
  FinalScore final;
  std::vector<AgentMetaJudgment> per_agent;
  std::optional<AgentMetaJudgment> summary;  // set when a summarizer ran
  bool selected = false;
  bool partial = false;

  friend bool operator==(const ScoredJudgment&, const ScoredJudgment&) = default;
};

struct SelectionRun {
  double threshold = 4.5;
  std::vector<ScoredJudgment> scored;  // discarded items kept with selected=false
  std::string plan_digest;
  std::string started_at;
  std::string finished_at;
};

// Keeps exactly the items whose final score strictly exceeds T. The
// comparison is an exact floating-point comparison, so a score of exactly T
// is discarded.
inline SelectionRun select_by_threshold(std::vector<ScoredJudgment> scored, double threshold,
                                        std::string plan_digest = {}) {
  if (!(threshold >= 1.0 && threshold <= 5.0)) {
    throw PreconditionError("selection threshold must lie in [1,5]");
  }
  for (auto& item : scored) {
    item.selected = item.final.value > threshold;
  }
  SelectionRun run;
  run.threshold = threshold;
  run.scored = std::move(scored);
  run.plan_digest = std::move(plan_digest);
  return run;
}

struct PrecisionRow {
  std::string label;
  long n_selected = 0;
  long tp = 0;
  long fp = 0;
  std::optional<double> precision;  // unset when nothing was selected (0/0)
};

struct PrecisionReport {
  double threshold = 4.5;
  std::string plan_digest;
  std::vector<PrecisionRow> selection_rows;  // four categories then overall
  std::vector<PrecisionRow> baseline_rows;   // raw-judgment precision, same layout
};

namespace detail {

inline PrecisionRow make_row(std::string label, long selected, long correct) {
  PrecisionRow row;
  row.label = std::move(label);
  row.n_selected = selected;
  row.tp = correct;
  row.fp = selected - correct;
  if (selected > 0) {
    row.precision = static_cast<double>(correct) / static_cast<double>(selected);
  }
  return row;
}

}  // namespace detail

// Per-category and overall precision of the selected set, plus the
// raw-judgment baseline over the full set. Empty selections report an
// undefined precision rather than zero.
inline PrecisionReport precision(const SelectionRun& run) {
  std::map<TaskCategory, std::pair<long, long>> selected_counts;  // {selected, correct}
  std::map<TaskCategory, std::pair<long, long>> raw_counts;       // {total, correct}
  for (const auto& item : run.scored) {
    auto& raw = raw_counts[item.category];
    raw.first += 1;
    raw.second += item.judgment.is_correct ? 1 : 0;
    if (item.selected) {
      auto& sel = selected_counts[item.category];
      sel.first += 1;
      sel.second += item.judgment.is_correct ? 1 : 0;
    }
  }

  PrecisionReport report;
  report.threshold = run.threshold;
  report.plan_digest = run.plan_digest;

  long total_selected = 0, total_correct = 0;
  long raw_total = 0, raw_correct = 0;
  for (TaskCategory category : kAllCategories) {
    const auto sel = selected_counts.count(category) ? selected_counts.at(category)
                                                     : std::pair<long, long>{0, 0};
    const auto raw = raw_counts.count(category) ? raw_counts.at(category)
                                                : std::pair<long, long>{0, 0};
    report.selection_rows.push_back(
        detail::make_row(std::string(to_string(category)), sel.first, sel.second));
    report.baseline_rows.push_back(
        detail::make_row(std::string(to_string(category)), raw.first, raw.second));
    total_selected += sel.first;
    total_correct += sel.second;
    raw_total += raw.first;
    raw_correct += raw.second;
  }
  report.selection_rows.push_back(detail::make_row("Overall", total_selected, total_correct));
  report.baseline_rows.push_back(detail::make_row("Overall", raw_total, raw_correct));
  return report;
}

// ── Config comparison (one row per run, Table-style) ────────────

struct ComparisonRow {
  std::string label;
  // Knowledge, Reasoning, Math, Coding, Overall; unset cells were 0/0.
  std::vector<std::optional<double>> cells;
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;  // baseline first, then one per run
};

namespace detail {

inline std::vector<std::string> sorted_ids(const SelectionRun& run) {
  std::vector<std::string> ids;
  ids.reserve(run.scored.size());
  for (const auto& item : run.scored) ids.push_back(item.judgment.pair_id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

inline ComparisonRow row_from_report(std::string label,
                                     const std::vector<PrecisionRow>& rows) {
  ComparisonRow row;
  row.label = std::move(label);
  for (const auto& entry : rows) row.cells.push_back(entry.precision);
  return row;
}

}  // namespace detail

// Emits one precision row per run plus the raw-judgment baseline row.
// All runs must cover the same judgment set.
inline ComparisonTable compare_configs(const std::vector<SelectionRun>& runs,
                                       const std::vector<std::string>& labels = {}) {
  if (runs.empty()) throw PreconditionError("compare_configs needs at least one run");
  const auto reference_ids = detail::sorted_ids(runs.front());
  for (const auto& run : runs) {
    if (detail::sorted_ids(run) != reference_ids) {
      throw ValidationError("runs cover different judgment sets");
    }
  }

  ComparisonTable table;
  const PrecisionReport first_report = precision(runs.front());
  table.rows.push_back(detail::row_from_report("Raw Judgments", first_report.baseline_rows));
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const PrecisionReport report = precision(runs[i]);
    std::string label = i < labels.size() ? labels[i] : "run " + std::to_string(i + 1);
    table.rows.push_back(detail::row_from_report(std::move(label), report.selection_rows));
  }
  return table;
}

// ── Report rendering ────────────────────────────────────────────
// Percentages print with two decimals; undefined precision renders as "--"
// in text and "NA" in CSV.

namespace detail {

inline std::string format_percent(const std::optional<double>& fraction,
                                  const char* undefined_marker) {
  if (!fraction) return undefined_marker;
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.2f", *fraction * 100.0);
  return buffer;
}

}  // namespace detail

inline std::string render_report_text(const PrecisionReport& report) {
  std::ostringstream out;
  char line[160];
  out << "Precision report (threshold " << report.threshold << ")\n";
  if (!report.plan_digest.empty()) out << "plan digest: " << report.plan_digest << "\n";
  std::snprintf(line, sizeof(line), "%-12s %10s %8s %8s %10s\n", "category", "selected",
                "tp", "fp", "precision");
  out << line;
  auto print_rows = [&](const std::vector<PrecisionRow>& rows) {
    for (const auto& row : rows) {
      std::snprintf(line, sizeof(line), "%-12s %10ld %8ld %8ld %10s\n", row.label.c_str(),
                    row.n_selected, row.tp, row.fp,
                    detail::format_percent(row.precision, "--").c_str());
      out << line;
    }
  };
  print_rows(report.selection_rows);
  out << "baseline (raw judgments)\n";
  print_rows(report.baseline_rows);
  return out.str();
}

inline constexpr std::string_view kReportCsvHeader =
    "row,category,n_selected,tp,fp,precision_pct";

inline std::string render_report_csv(const PrecisionReport& report) {
  std::ostringstream out;
  out << kReportCsvHeader << "\n";
  for (const auto& row : report.selection_rows) {
    out << "selection," << row.label << "," << row.n_selected << "," << row.tp << ","
        << row.fp << "," << detail::format_percent(row.precision, "NA") << "\n";
  }
  for (const auto& row : report.baseline_rows) {
    out << "baseline," << row.label << "," << row.n_selected << "," << row.tp << ","
        << row.fp << "," << detail::format_percent(row.precision, "NA") << "\n";
  }
  return out.str();
}

inline std::string render_comparison_text(const ComparisonTable& table) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-24s %10s %10s %10s %10s %10s\n", "config",
                "Knowledge", "Reasoning", "Math", "Coding", "Overall");
  out << line;
  for (const auto& row : table.rows) {
    std::string cells[5];
    for (std::size_t i = 0; i < 5 && i < row.cells.size(); ++i) {
      cells[i] = detail::format_percent(row.cells[i], "--");
    }
    std::snprintf(line, sizeof(line), "%-24s %10s %10s %10s %10s %10s\n",
                  row.label.c_str(), cells[0].c_str(), cells[1].c_str(), cells[2].c_str(),
                  cells[3].c_str(), cells[4].c_str());
    out << line;
  }
  return out.str();
}

}  // namespace metajudge
