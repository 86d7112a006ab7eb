#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "metajudge/evaluation.hpp"

#include "helpers.hpp"

using namespace metajudge;

namespace {

ScoredJudgment make_scored(std::string pair_id, TaskCategory category, bool correct,
                           double score) {
  ScoredJudgment scored;
  scored.judgment.pair_id = std::move(pair_id);
  scored.judgment.decision = Decision::AWins;
  scored.judgment.is_correct = correct;
  scored.category = category;
  scored.final = {score, Strategy::WeightedAverage, std::nullopt};
  return scored;
}

// Per-category (selected, correct) counts, all selected items scored 5 and
// the rest scored 1 so any threshold in (1,5) selects exactly them.
std::vector<ScoredJudgment> counts_fixture(
    const std::map<TaskCategory, std::pair<long, long>>& selected_correct,
    const std::map<TaskCategory, long>& unselected = {}) {
  std::vector<ScoredJudgment> scored;
  long serial = 0;
  for (const auto& [category, counts] : selected_correct) {
    for (long i = 0; i < counts.first; ++i) {
      ++serial;
      scored.push_back(make_scored("s" + std::to_string(serial), category,
                                   i < counts.second, 5.0));
    }
  }
  for (const auto& [category, count] : unselected) {
    for (long i = 0; i < count; ++i) {
      ++serial;
      scored.push_back(make_scored("u" + std::to_string(serial), category, i % 2 == 0, 1.0));
    }
  }
  return scored;
}

std::optional<double> cell(const PrecisionReport& report, std::size_t row) {
  return report.selection_rows.at(row).precision;
}

}  // namespace

TEST_CASE("threshold selection is strict", "[evaluation]") {
  std::vector<ScoredJudgment> scored;
  scored.push_back(make_scored("a", TaskCategory::Knowledge, true, 4.6));
  scored.push_back(make_scored("b", TaskCategory::Knowledge, true, 4.5));
  scored.push_back(make_scored("c", TaskCategory::Knowledge, true, 4.4));

  const auto run = select_by_threshold(scored, 4.5);
  CHECK(run.scored[0].selected);
  CHECK_FALSE(run.scored[1].selected);  // exactly T is discarded
  CHECK_FALSE(run.scored[2].selected);
  CHECK(run.scored.size() == 3);  // discarded items are retained

  const auto top = select_by_threshold(scored, 5.0);
  for (const auto& item : top.scored) CHECK_FALSE(item.selected);

  CHECK_THROWS_AS(select_by_threshold(scored, 0.5), PreconditionError);
}

TEST_CASE("raw-judgment fixture reproduces the reference percentages", "[evaluation]") {
  // Category counts 96/154, 51/98, 44/56, 25/42 with every item selected.
  const auto scored = counts_fixture({{TaskCategory::Knowledge, {154, 96}},
                                      {TaskCategory::Reasoning, {98, 51}},
                                      {TaskCategory::Math, {56, 44}},
                                      {TaskCategory::Coding, {42, 25}}});
  const auto report = precision(select_by_threshold(scored, 4.5));

  REQUIRE(report.selection_rows.size() == 5);
  const double expected[] = {62.34, 52.04, 78.57, 59.52, 61.71};
  for (std::size_t row = 0; row < 5; ++row) {
    REQUIRE(cell(report, row).has_value());
    CHECK_THAT(*cell(report, row) * 100.0,
               Catch::Matchers::WithinAbs(expected[row], 0.01));
  }
  CHECK(report.selection_rows[4].n_selected == 350);
  CHECK(report.selection_rows[4].tp == 216);
}

TEST_CASE("plain ratios and the undefined 0/0 case", "[evaluation]") {
  SECTION("TP=3 FP=1") {
    const auto scored = counts_fixture({{TaskCategory::Math, {4, 3}}});
    const auto report = precision(select_by_threshold(scored, 4.5));
    REQUIRE(cell(report, 2).has_value());
    CHECK_THAT(*cell(report, 2), Catch::Matchers::WithinAbs(0.75, 1e-12));
  }
  SECTION("empty selection is undefined, not zero") {
    const auto scored = counts_fixture({}, {{TaskCategory::Math, 5}});
    const auto report = precision(select_by_threshold(scored, 4.5));
    CHECK_FALSE(cell(report, 2).has_value());
    CHECK(report.selection_rows[2].n_selected == 0);
    // Rendering distinguishes undefined from 0.
    CHECK(render_report_text(report).find("--") != std::string::npos);
    CHECK(render_report_csv(report).find(",NA") != std::string::npos);
    // The baseline over the same items is defined.
    CHECK(report.baseline_rows[2].precision.has_value());
  }
}

TEST_CASE("report internal consistency", "[evaluation][property]") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> score(1.0, 5.0);
  std::vector<ScoredJudgment> scored;
  for (int i = 0; i < 400; ++i) {
    scored.push_back(make_scored("p" + std::to_string(i),
                                 kAllCategories[rng() % kAllCategories.size()],
                                 rng() % 2 == 0, score(rng)));
  }
  const auto report = precision(select_by_threshold(scored, 3.5));

  long tp_sum = 0, selected_sum = 0;
  for (std::size_t row = 0; row < 4; ++row) {
    const auto& entry = report.selection_rows[row];
    CHECK(entry.tp + entry.fp == entry.n_selected);
    tp_sum += entry.tp;
    selected_sum += entry.n_selected;
    if (entry.precision) {
      CHECK_THAT(*entry.precision,
                 Catch::Matchers::WithinAbs(static_cast<double>(entry.tp) /
                                                static_cast<double>(entry.n_selected),
                                            1e-9));
    }
  }
  CHECK(report.selection_rows[4].tp == tp_sum);
  CHECK(report.selection_rows[4].n_selected == selected_sum);
}

TEST_CASE("selection sets are nested as the threshold rises", "[evaluation][property]") {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> score(1.0, 5.0);
  std::vector<ScoredJudgment> scored;
  for (int i = 0; i < 300; ++i) {
    scored.push_back(make_scored("p" + std::to_string(i), TaskCategory::Knowledge,
                                 rng() % 2 == 0, score(rng)));
  }

  std::set<std::string> previous;
  bool first = true;
  for (double threshold = 1.0; threshold <= 5.0 + 1e-12; threshold += 0.5) {
    const auto run = select_by_threshold(scored, std::min(threshold, 5.0));
    std::set<std::string> current;
    for (const auto& item : run.scored) {
      if (item.selected) current.insert(item.judgment.pair_id);
    }
    if (!first) {
      CHECK(current.size() <= previous.size());
      for (const auto& id : current) CHECK(previous.count(id) == 1);
    }
    previous = std::move(current);
    first = false;
  }
}

TEST_CASE("a perfect scorer yields precision 1.0 at 4.5", "[evaluation]") {
  std::vector<ScoredJudgment> scored;
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const bool correct = rng() % 2 == 0;
    scored.push_back(make_scored("p" + std::to_string(i), TaskCategory::Reasoning, correct,
                                 correct ? 5.0 : 1.0));
  }
  const auto report = precision(select_by_threshold(scored, 4.5));
  REQUIRE(cell(report, 4).has_value());
  CHECK(*cell(report, 4) == 1.0);
}

TEST_CASE("compare_configs lays out one row per run plus the baseline", "[evaluation]") {
  const auto base = counts_fixture({{TaskCategory::Knowledge, {154, 96}},
                                    {TaskCategory::Reasoning, {98, 51}},
                                    {TaskCategory::Math, {56, 44}},
                                    {TaskCategory::Coding, {42, 25}}});

  SECTION("structural three-row table over a 350-judgment set") {
    auto run_a = select_by_threshold(base, 4.5);
    auto relaxed = base;
    for (auto& item : relaxed) item.final.value = 3.0;
    auto run_b = select_by_threshold(relaxed, 4.5);
    const auto table = compare_configs({run_a, run_b}, {"config A", "config B"});
    REQUIRE(table.rows.size() == 3);
    CHECK(table.rows[0].label == "Raw Judgments");
    CHECK(table.rows[1].label == "config A");
    CHECK(table.rows[2].label == "config B");
    REQUIRE(table.rows[0].cells.size() == 5);
    // Baseline row equals the raw fixture percentages.
    CHECK_THAT(*table.rows[0].cells[4] * 100.0, Catch::Matchers::WithinAbs(61.71, 0.01));
    // config B selected nothing.
    CHECK_FALSE(table.rows[2].cells[4].has_value());
  }
  SECTION("mismatched judgment sets error") {
    auto other = base;
    other.pop_back();
    CHECK_THROWS_AS(
        compare_configs({select_by_threshold(base, 4.5), select_by_threshold(other, 4.5)}),
        ValidationError);
  }
  SECTION("stored-score fixture reproducing a reference selection row") {
    // Selected/correct counts chosen so each category cell and the overall
    // land on 65.71 / 63.49 / 79.17 / 70.50 / 67.47 within +/-0.01.
    const auto scored = counts_fixture({{TaskCategory::Knowledge, {910, 598}},
                                        {TaskCategory::Reasoning, {819, 520}},
                                        {TaskCategory::Math, {312, 247}},
                                        {TaskCategory::Coding, {400, 282}}},
                                       {{TaskCategory::Knowledge, 40}});
    const auto table = compare_configs({select_by_threshold(scored, 4.5)}, {"selection"});
    REQUIRE(table.rows.size() == 2);
    const double expected[] = {65.71, 63.49, 79.17, 70.50, 67.47};
    for (std::size_t column = 0; column < 5; ++column) {
      REQUIRE(table.rows[1].cells[column].has_value());
      CHECK_THAT(*table.rows[1].cells[column] * 100.0,
                 Catch::Matchers::WithinAbs(expected[column], 0.01));
    }
  }
}

TEST_CASE("report renderings are stable shapes", "[evaluation]") {
  const auto scored = counts_fixture({{TaskCategory::Knowledge, {4, 3}}});
  const auto report = precision(select_by_threshold(scored, 4.5, "digest123"));

  const std::string text = render_report_text(report);
  CHECK(text.find("digest123") != std::string::npos);
  CHECK(text.find("Knowledge") != std::string::npos);
  CHECK(text.find("75.00") != std::string::npos);

  const std::string csv = render_report_csv(report);
  CHECK(csv.rfind(std::string(kReportCsvHeader), 0) == 0);
  CHECK(csv.find("selection,Knowledge,4,3,1,75.00") != std::string::npos);
  CHECK(csv.find("baseline,Overall,4,3,1,75.00") != std::string::npos);
}
