#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "absinstruct/client.hpp"
#include "absinstruct/config.hpp"
#include "absinstruct/error.hpp"
#include "absinstruct/evaluation.hpp"
#include "absinstruct/jsonl.hpp"
#include "absinstruct/mock_service.hpp"
#include "absinstruct/pipeline.hpp"

namespace {

using nlohmann::json;
using namespace absinstruct;
namespace ev = absinstruct::evaluation;
namespace pl = absinstruct::pipeline;

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "Pipeline config JSON file (defaults apply when omitted)");
  cmd->add_option("--set", opts.sets, "Override one config key, as key=value (repeatable)");
}

PipelineConfig resolve_config(const CommonOpts& opts) {
  PipelineConfig base;
  if (!opts.config_path.empty()) base = load_config(opts.config_path);
  std::vector<std::pair<std::string, std::string>> overrides;
  overrides.reserve(opts.sets.size());
  for (const std::string& item : opts.sets) {
    const size_t eq = item.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("--set expects key=value, got: " + item);
    overrides.emplace_back(item.substr(0, eq), item.substr(eq + 1));
  }
  return with_overrides(base, overrides);
}

void write_json_file(const std::string& path, const json& j) {
  const std::filesystem::path parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << '\n';
}

json counts_json(const pl::StageCounts& counts) {
  json j = json::object();
  for (const auto& [group, counters] : counts) {
    json g = json::object();
    for (const auto& [name, value] : counters) g[name] = value;
    j[group] = std::move(g);
  }
  return j;
}

void print_stage(const pl::StageResult& result) {
  std::cout << json{{"stage", result.stage}, {"counts", counts_json(result.counts)}}.dump()
            << std::endl;
}

ClientOptions generator_client_options(const PipelineConfig& config) {
  ClientOptions options;
  options.endpoint = config.generator_endpoint;
  options.cache_dir = config.cache_dir;
  options.max_retries = config.max_retries;
  options.retry_backoff_ms = config.retry_backoff_ms;
  return options;
}

json metrics_json(const ev::RelationMetrics& metrics) {
  return json{{"accuracy", metrics.accuracy},
              {"macro_f1", metrics.macro_f1},
              {"n", metrics.n},
              {"undecided_rate", metrics.undecided_rate}};
}

json detection_report_json(const ev::MetricReport& report, double sample_temperature,
                           const std::string& config_digest) {
  json per_relation = json::object();
  for (const auto& [relation, metrics] : report.per_relation)
    per_relation[relation] = metrics_json(metrics);
  json j{{"mode", report.mode},
         {"config_hash", config_digest},
         {"model", report.model_id},
         {"self_consistency", report.self_consistency},
         {"decision_rule", report.self_consistency > 1 ? "majority_vote" : "single_sample"},
         {"seed", report.seed},
         {"aggregation", "pooled"},
         {"requested", report.requested},
         {"completed", report.completed},
         {"failures", report.failures},
         {"per_relation", per_relation},
         {"aggregate", metrics_json(report.aggregate)}};
  if (report.self_consistency > 1) j["sample_temperature"] = sample_temperature;
  return j;
}

std::vector<ev::GenerationTask> load_generation_tasks(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<ev::GenerationTask> tasks;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      ev::GenerationTask task;
      task.prompt = j.at("prompt").get<std::string>();
      task.reference = j.at("reference").get<std::string>();
      if (task.prompt.empty()) throw SchemaError("prompt must be non-empty");
      if (task.reference.empty()) throw SchemaError("reference must be non-empty");
      tasks.push_back(std::move(task));
    } catch (const json::exception& e) {
      throw SchemaError(path + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw SchemaError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return tasks;
}

std::string_view error_kind(const std::exception& e) {
  if (dynamic_cast<const SchemaError*>(&e)) return "schema";
  if (dynamic_cast<const ConfigError*>(&e)) return "config";
  if (dynamic_cast<const IoError*>(&e)) return "io";
  if (dynamic_cast<const TransportError*>(&e)) return "transport";
  if (dynamic_cast<const CapabilityError*>(&e)) return "capability";
  if (dynamic_cast<const ApiError*>(&e)) return "api";
  if (dynamic_cast<const Error*>(&e)) return "error";
  return "internal";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Curation and evaluation pipeline for abstraction-detection instruction data"};
  app.require_subcommand(1);

  // Stage subcommands share one artifact layout under --out:
  //   pool/ traces/ filtered/ scored/ selected/ dataset.jsonl manifest.json reports/
  struct {
    CommonOpts common;
    std::string tuples, general, out;
  } stage;

  auto add_stage = [&](const char* name, const char* help, bool wants_tuples,
                       bool wants_general) {
    CLI::App* cmd = app.add_subcommand(name, help);
    add_common(cmd, stage.common);
    if (wants_tuples)
      cmd->add_option("--tuples", stage.tuples, "Labeled abstraction tuples (JSONL)")->required();
    if (wants_general)
      cmd->add_option("--general", stage.general, "General instruction corpus (JSONL)")->required();
    cmd->add_option("--out", stage.out, "Run output directory")->required();
    return cmd;
  };

  add_stage("build-pool", "Sample a balanced candidate pool per relation", true, false)
      ->callback([&] {
        print_stage(pl::build_pool(resolve_config(stage.common), stage.tuples, stage.out));
      });
  add_stage("collect-traces", "Generate explanation traces for the pool", false, false)
      ->callback([&] {
        print_stage(pl::collect_traces(resolve_config(stage.common), stage.out));
      });
  add_stage("filter", "Apply prediction, keyword, and diversity filters", false, false)
      ->callback([&] {
        print_stage(pl::apply_filters(resolve_config(stage.common), stage.out));
      });
  add_stage("score", "Score candidates with mean token log-probability", false, false)
      ->callback([&] {
        print_stage(pl::score_candidates(resolve_config(stage.common), stage.out));
      });
  add_stage("select", "Pick the balanced top-k per relation", false, false)->callback([&] {
    print_stage(pl::select_candidates(resolve_config(stage.common), stage.out));
  });
  add_stage("render-dataset", "Render selected candidates as instruction records", false, false)
      ->callback([&] {
        print_stage(pl::render_dataset(resolve_config(stage.common), stage.out));
      });
  add_stage("mix", "Shuffle abstraction records into the general corpus", false, true)
      ->callback([&] {
        print_stage(pl::mix_into_dataset(resolve_config(stage.common), stage.general, stage.out));
      });
  add_stage("run-all", "Run every stage in order", true, true)->callback([&] {
    const PipelineConfig config = resolve_config(stage.common);
    pl::run_pipeline(config, stage.tuples, stage.general, stage.out);
    std::cout << json{{"status", "ok"},
                      {"dataset", pl::dataset_path(stage.out)},
                      {"manifest", pl::manifest_path(stage.out)}}
                     .dump()
              << std::endl;
  });

  struct {
    CommonOpts common;
    std::string tuples, exemplars, out;
    std::string mode = "zero_shot";
    int self_consistency = 1;
    int fewshot_n = 10;
    int max_tokens = 128;
    double temperature = 1.0;
  } eval_abs;
  {
    CLI::App* cmd = app.add_subcommand(
        "eval-abs", "Evaluate abstraction detection (accuracy, macro-F1) against a service");
    add_common(cmd, eval_abs.common);
    cmd->add_option("--tuples", eval_abs.tuples, "Labeled evaluation tuples (JSONL)")->required();
    cmd->add_option("--out", eval_abs.out, "Run output directory (report lands in reports/)")
        ->required();
    cmd->add_option("--mode", eval_abs.mode, "zero_shot | few_shot | tuned_prompt");
    cmd->add_option("--self-consistency", eval_abs.self_consistency,
                    "Samples per example; majority vote when > 1");
    cmd->add_option("--temperature", eval_abs.temperature,
                    "Sampling temperature when self-consistency > 1");
    cmd->add_option("--fewshot-n", eval_abs.fewshot_n, "Exemplars per prompt in few_shot mode");
    cmd->add_option("--exemplars", eval_abs.exemplars,
                    "Exemplar tuples (JSONL), required for few_shot mode");
    cmd->add_option("--max-tokens", eval_abs.max_tokens, "Completion budget per sample");
    cmd->callback([&] {
      const PipelineConfig config = resolve_config(eval_abs.common);
      ev::DetectionOptions options;
      options.mode = ev::eval_mode_from_string(eval_abs.mode);
      options.fewshot_n = eval_abs.fewshot_n;
      options.self_consistency = eval_abs.self_consistency;
      options.sample_temperature = eval_abs.temperature;
      options.max_tokens = eval_abs.max_tokens;
      options.seed = config.random_seed;
      options.model_id = config.generator_model;
      options.max_concurrency = config.max_concurrency;

      std::vector<AbstractionTuple> exemplars;
      if (options.mode == ev::EvalMode::FewShot) {
        if (eval_abs.exemplars.empty())
          throw ConfigError("few_shot mode requires --exemplars");
        exemplars = jsonl::load_tuples(eval_abs.exemplars);
      }
      const std::vector<AbstractionTuple> examples = jsonl::load_tuples(eval_abs.tuples);

      ServiceClient client(generator_client_options(config));
      const ev::MetricReport report = ev::evaluate_detection(client, examples, options, exemplars);

      std::cout << ev::render_detection_table(report);
      const std::string report_path =
          eval_abs.out + "/reports/detection_" + std::string(to_string(options.mode)) + ".json";
      write_json_file(report_path,
                      detection_report_json(report, eval_abs.temperature, config_hash(config)));

      pl::StageCounts counts;
      for (const auto& [relation, metrics] : report.per_relation)
        counts[relation]["n"] = metrics.n;
      counts["all"]["requested"] = report.requested;
      counts["all"]["completed"] = report.completed;
      pl::record_stage(config, eval_abs.out,
                       {"eval-abs:" + std::string(to_string(options.mode)), counts});
      std::cout << json{{"report", report_path}}.dump() << std::endl;
    });
  }

  struct {
    CommonOpts common;
    std::string tasks, out;
    int max_tokens = 256;
  } eval_gen;
  {
    CLI::App* cmd = app.add_subcommand(
        "eval-gen", "Evaluate free-form generation (ROUGE-L, BLEU-1/2, Meteor) against references");
    add_common(cmd, eval_gen.common);
    cmd->add_option("--tasks", eval_gen.tasks,
                    "JSONL tasks with \"prompt\" and \"reference\" fields")
        ->required();
    cmd->add_option("--out", eval_gen.out, "Run output directory (report lands in reports/)")
        ->required();
    cmd->add_option("--max-tokens", eval_gen.max_tokens, "Completion budget per task");
    cmd->callback([&] {
      const PipelineConfig config = resolve_config(eval_gen.common);
      const std::vector<ev::GenerationTask> tasks = load_generation_tasks(eval_gen.tasks);
      ServiceClient client(generator_client_options(config));
      const ev::GenerationReport report =
          ev::evaluate_generation(client, tasks, config.generator_model, eval_gen.max_tokens,
                                  config.max_concurrency);
      const json j{{"model", report.model_id},  {"config_hash", config_hash(config)},
                   {"n", report.n},             {"completed", report.completed},
                   {"failures", report.failures}, {"rouge_l", report.rouge_l},
                   {"bleu_1", report.bleu_1},   {"bleu_2", report.bleu_2},
                   {"meteor", report.meteor}};
      const std::string report_path = eval_gen.out + "/reports/generation.json";
      write_json_file(report_path, j);
      pl::StageCounts counts;
      counts["all"]["requested"] = report.n;
      counts["all"]["completed"] = report.completed;
      pl::record_stage(config, eval_gen.out, {"eval-gen", counts});
      std::cout << j.dump() << std::endl;
      std::cout << json{{"report", report_path}}.dump() << std::endl;
    });
  }

  struct {
    CommonOpts common;
    std::string candidates, out;
    std::string field = "head_event";
  } diversity;
  {
    CLI::App* cmd = app.add_subcommand(
        "report-diversity", "Pairwise ROUGE-L diversity statistics over a candidate file");
    add_common(cmd, diversity.common);
    cmd->add_option("--candidates", diversity.candidates, "Candidate examples (JSONL)")
        ->required();
    cmd->add_option("--field", diversity.field, "head_event | trace");
    cmd->add_option("--out", diversity.out, "Run output directory (report lands in reports/)")
        ->required();
    cmd->callback([&] {
      const PipelineConfig config = resolve_config(diversity.common);
      const std::vector<CandidateExample> candidates =
          jsonl::load_candidates(diversity.candidates);
      const ev::DiversityReport report = ev::diversity_report(candidates, diversity.field);
      const json j{{"field", diversity.field},
                   {"n", report.n},
                   {"mean_pairwise_rouge_l", report.mean_pairwise},
                   {"unique_fraction", report.unique_fraction},
                   {"max_similarity_histogram", report.histogram}};
      const std::string report_path =
          diversity.out + "/reports/diversity_" + diversity.field + ".json";
      write_json_file(report_path, j);
      pl::StageCounts counts;
      counts["all"]["n"] = report.n;
      pl::record_stage(config, diversity.out, {"report-diversity:" + diversity.field, counts});
      std::cout << j.dump() << std::endl;
      std::cout << json{{"report", report_path}}.dump() << std::endl;
    });
  }

  struct {
    std::string fixture, host = "127.0.0.1";
    int port = 0;
  } serve;
  {
    CLI::App* cmd = app.add_subcommand(
        "mock-serve", "Serve the deterministic mock completions service in the foreground");
    cmd->add_option("--fixture", serve.fixture, "Fixture JSON with planted prompt entries");
    cmd->add_option("--host", serve.host, "Bind address");
    cmd->add_option("--port", serve.port, "Port (0 picks a free one)");
    cmd->callback([&] {
      MockService service({serve.fixture, serve.host, serve.port});
      service.start();
      std::cout << json{{"endpoint", service.endpoint()}, {"port", service.port()}}.dump()
                << std::endl;
      service.wait();
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << json{{"error", e.what()}, {"type", error_kind(e)}}.dump() << std::endl;
    return 1;
  }
  return 0;
}
