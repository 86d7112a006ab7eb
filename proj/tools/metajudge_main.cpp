// Command-line entry point for the meta-judge selection pipeline.
//
// Exit codes: 0 success, 1 validation error, 2 transport error,
// 3 completed with partial results.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "metajudge/pipeline.hpp"
#include "metajudge/run_config.hpp"
#include "metajudge/transport_http.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitTransport = 2;
constexpr int kExitPartial = 3;

struct CommonFlags {
  std::string config_file;
  std::string dataset;
  std::string rubric;
  std::string strategy;
  double threshold = 4.5;
  bool threshold_set = false;
  std::vector<std::string> agents;
  std::string roles;
  int passes = 0;
  std::string summarizer;
  std::string mode;
  std::string out;
  int parallelism = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool lenient = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_file, "run configuration file (JSON)");
  cmd->add_option("--dataset", flags.dataset, "response-pair dataset (JSONL)");
  cmd->add_option("--rubric", flags.rubric,
                  "rubric variant (baseline|short|long|binary) or rubric file");
  cmd->add_option("--strategy", flags.strategy,
                  "aggregation strategy (weighted_average|majority_vote|summarized)");
  cmd->add_option("--threshold", flags.threshold, "selection / vote threshold T")
      ->check(CLI::Range(1.0, 5.0));
  cmd->add_option("--agents", flags.agents,
                  "agent backend specs (scripted:... or remote:<url>#<model>)")
      ->delimiter(',');
  cmd->add_option("--roles", flags.roles,
                  "comma-separated role assignments (expert,critic,general_public)");
  cmd->add_option("--passes", flags.passes, "discussion passes");
  cmd->add_option("--summarizer", flags.summarizer, "summarizer backend spec");
  cmd->add_option("--mode", flags.mode, "panel mode (independent|discussion)");
  cmd->add_option("--out", flags.out, "output directory");
  cmd->add_option("--parallelism", flags.parallelism, "max concurrent items");
  cmd->add_option("--seed", flags.seed, "random seed");
  cmd->add_flag("--lenient", flags.lenient, "skip malformed dataset lines");
}

// Flags override config-file fields, which override defaults.
metajudge::RunConfig resolve_config(const CLI::App* cmd, const CommonFlags& flags) {
  metajudge::RunConfig config;
  if (!flags.config_file.empty()) {
    config = metajudge::load_run_config_file(flags.config_file);
  }
  if (cmd->count("--dataset")) config.dataset = flags.dataset;
  if (cmd->count("--rubric")) config.rubric_spec = flags.rubric;
  if (cmd->count("--out")) config.out = flags.out;
  if (cmd->count("--parallelism")) config.parallelism = flags.parallelism;
  if (cmd->count("--seed")) config.seed = flags.seed;
  if (cmd->count("--lenient")) config.lenient = true;
  if (cmd->count("--threshold")) config.plan.vote_threshold = flags.threshold;
  if (cmd->count("--passes")) config.plan.passes = flags.passes;
  if (cmd->count("--mode")) {
    if (flags.mode == "independent") config.plan.mode = metajudge::PanelMode::Independent;
    else if (flags.mode == "discussion") config.plan.mode = metajudge::PanelMode::Discussion;
    else throw metajudge::ValidationError("unknown mode '" + flags.mode + "'");
  }
  if (cmd->count("--strategy")) {
    auto strategy = metajudge::parse_strategy(flags.strategy);
    if (!strategy) {
      throw metajudge::ValidationError("unknown strategy '" + flags.strategy + "'");
    }
    config.plan.aggregation = *strategy;
  }
  if (cmd->count("--agents")) {
    config.plan.agents.clear();
    int index = 0;
    for (const auto& spec : flags.agents) {
      metajudge::AgentConfig agent;
      agent.agent_id = "agent" + std::to_string(++index);
      agent.backend = metajudge::detail::parse_backend_string(spec);
      config.plan.agents.push_back(std::move(agent));
    }
  }
  if (cmd->count("--roles")) {
    const auto roles = metajudge::detail::split(flags.roles, ',');
    if (roles.size() > config.plan.agents.size()) {
      throw metajudge::ValidationError("more roles than agents");
    }
    for (std::size_t i = 0; i < roles.size(); ++i) {
      if (metajudge::detail::trim(roles[i]).empty()) continue;
      auto role = metajudge::parse_role(roles[i]);
      if (!role) throw metajudge::ValidationError("unknown role '" + roles[i] + "'");
      config.plan.agents[i].role = metajudge::persona_for(*role);
    }
  }
  if (cmd->count("--summarizer")) {
    metajudge::AgentConfig summarizer;
    summarizer.agent_id = "summarizer";
    summarizer.backend = metajudge::detail::parse_backend_string(flags.summarizer);
    summarizer.role = metajudge::persona_for(metajudge::Role::Summarizer);
    config.plan.summarizer = std::move(summarizer);
  }
  return config;
}

std::string format_fraction(const std::optional<double>& value) {
  if (!value) return "undefined";
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.2f", *value);
  return buffer;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-agent meta-judge selection pipeline"};
  app.require_subcommand(1);

  CommonFlags flags;

  auto* ingest = app.add_subcommand("ingest", "validate a dataset and print its manifest");
  add_common_flags(ingest, flags);

  auto* judge = app.add_subcommand("judge", "generate raw judgments over a dataset");
  add_common_flags(judge, flags);

  auto* metajudge_cmd =
      app.add_subcommand("metajudge", "score judgments with an agent panel");
  add_common_flags(metajudge_cmd, flags);

  auto* report = app.add_subcommand("select-report",
                                    "select by threshold and write precision reports");
  std::string run_id;
  report->add_option("--run", run_id, "run id (from metajudge)")->required();
  add_common_flags(report, flags);

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo synthetic-panel precision");
  std::vector<double> accuracies;
  double correlation = 0.0;
  double base_rate = 0.5;
  std::int64_t trials = 100000;
  simulate->add_option("--accuracy", accuracies, "per-agent accuracy p_i")
      ->delimiter(',')
      ->required();
  simulate->add_option("--correlation", correlation, "inter-agent correlation in [0,1]");
  simulate->add_option("--base-rate", base_rate, "P(judgment correct)");
  simulate->add_option("--trials", trials, "Monte Carlo trials");
  add_common_flags(simulate, flags);

  auto* export_rubric =
      app.add_subcommand("export-rubric", "write a builtin rubric variant to a file");
  std::string export_path;
  export_rubric->add_option("--file", export_path, "output file")->required();
  add_common_flags(export_rubric, flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (ingest->parsed()) {
      auto config = resolve_config(ingest, flags);
      if (config.dataset.empty()) throw metajudge::ValidationError("--dataset required");
      const auto outcome = metajudge::cmd_ingest(config.dataset, config.lenient);
      const auto& counts = outcome.manifest.category_counts;
      auto count_of = [&counts](metajudge::TaskCategory c) {
        auto it = counts.find(c);
        return it == counts.end() ? 0L : it->second;
      };
      std::cout << "pairs: " << outcome.manifest.pair_count << "\n";
      std::cout << "categories (Knowledge/Reasoning/Math/Coding): "
                << count_of(metajudge::TaskCategory::Knowledge) << "/"
                << count_of(metajudge::TaskCategory::Reasoning) << "/"
                << count_of(metajudge::TaskCategory::Math) << "/"
                << count_of(metajudge::TaskCategory::Coding) << "\n";
      if (!outcome.manifest.source.empty()) {
        std::cout << "source: " << outcome.manifest.source << "\n";
      }
      for (const auto& skip : outcome.skipped) {
        std::cout << "skipped line " << skip.line_number << ": " << skip.reason << "\n";
      }
      return outcome.skipped.empty() ? kExitOk : kExitPartial;
    }

    if (judge->parsed()) {
      auto config = resolve_config(judge, flags);
      const auto outcome = metajudge::cmd_judge(config, metajudge::default_transport_factory);
      std::cout << "judgments: " << outcome.generated << " -> "
                << outcome.judgment_file.string() << "\n";
      std::cout << "raw precision: " << format_fraction(outcome.raw_precision) << "\n";
      long transport_failures = 0;
      for (const auto& skip : outcome.skips) {
        std::cout << "skipped " << skip.pair_id << " (" << skip.kind << "): " << skip.reason
                  << "\n";
        if (skip.kind == "transport") ++transport_failures;
      }
      if (outcome.generated == 0 && transport_failures > 0) return kExitTransport;
      return outcome.skips.empty() ? kExitOk : kExitPartial;
    }

    if (metajudge_cmd->parsed()) {
      auto config = resolve_config(metajudge_cmd, flags);
      const auto outcome =
          metajudge::cmd_metajudge(config, metajudge::default_transport_factory);
      std::cout << "run: " << outcome.run_id << "\n";
      std::cout << "items: " << outcome.items << " (partial: " << outcome.partial_items
                << ", failed: " << outcome.failed_items.size() << ")\n";
      std::cout << "stored: " << outcome.run_dir.string() << "\n";
      return outcome.partial ? kExitPartial : kExitOk;
    }

    if (report->parsed()) {
      auto config = resolve_config(report, flags);
      const double threshold =
          report->count("--threshold") ? flags.threshold : config.plan.vote_threshold;
      const auto outcome = metajudge::cmd_select_report(config.out, run_id, threshold);
      std::cout << metajudge::render_report_text(outcome.report);
      std::cout << "text: " << outcome.text_path.string() << "\n";
      std::cout << "csv:  " << outcome.csv_path.string() << "\n";
      return kExitOk;
    }

    if (simulate->parsed()) {
      auto config = resolve_config(simulate, flags);
      metajudge::SimulationProfile profile;
      profile.agent_accuracies = accuracies;
      profile.correlation = correlation;
      profile.base_rate = base_rate;
      const auto result = metajudge::cmd_simulate(profile, config.plan.aggregation,
                                                  config.plan.vote_threshold, trials,
                                                  config.seed);
      char line[160];
      if (result.precision) {
        std::snprintf(line, sizeof(line), "precision: %.6f +/- %.6f (99%% CI)\n",
                      *result.precision, result.half_width_99);
        std::cout << line;
      } else {
        std::cout << "precision: undefined (nothing selected)\n";
      }
      std::cout << "selected: " << result.selected << "/" << result.trials << "\n";
      return kExitOk;
    }

    if (export_rubric->parsed()) {
      auto config = resolve_config(export_rubric, flags);
      const metajudge::Rubric rubric = metajudge::resolve_rubric(config.rubric_spec);
      std::ofstream out(export_path, std::ios::binary);
      if (!out) throw metajudge::Error("cannot write " + export_path);
      out << metajudge::to_json(rubric).dump(2) << "\n";
      std::cout << "wrote " << export_path << "\n";
      return kExitOk;
    }
  } catch (const metajudge::TransportError& error) {
    std::cerr << "transport error: " << error.what() << "\n";
    return kExitTransport;
  } catch (const metajudge::Error& error) {
    std::cerr << "error: " << error.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}
