#include <string>
#include <vector>

#include "absinstruct/config.hpp"
#include "absinstruct/jsonl.hpp"
#include "absinstruct/mock_service.hpp"
#include "absinstruct/pipeline.hpp"
#include "doctest.h"
#include "json.hpp"
#include "test_util.hpp"

using absinstruct::MockService;
using testutil::run_cli;

namespace {

std::vector<std::string> common_sets(const std::string& endpoint, const std::string& cache) {
  return {
      "--set", "pool_size_per_relation=40",
      "--set", "k_per_relation=4",
      "--set", "generator_endpoint=" + endpoint,
      "--set", "scorer_endpoint=" + endpoint,
      "--set", "cache_dir=" + cache,
      "--set", "max_retries=0",
  };
}

std::vector<std::string> with_sets(std::vector<std::string> args,
                                   const std::vector<std::string>& sets) {
  args.insert(args.end(), sets.begin(), sets.end());
  return args;
}

std::string tuples_fixture() { return (testutil::fixtures_dir() / "tuples_small.jsonl").string(); }
std::string general_fixture() { return (testutil::fixtures_dir() / "general_small.jsonl").string(); }

nlohmann::json last_json_line(const std::string& output) {
  size_t end = output.find_last_not_of("\r\n");
  REQUIRE(end != std::string::npos);
  size_t start = output.find_last_of('\n', end);
  start = start == std::string::npos ? 0 : start + 1;
  return nlohmann::json::parse(output.substr(start, end - start + 1));
}

}  // namespace

TEST_CASE("run-all equals the staged subcommands byte for byte") {
  testutil::TempDir tmp("cli");
  MockService service({""});
  service.start();
  auto sets = common_sets(service.endpoint(), tmp.str("cache"));

  auto all = run_cli(with_sets(
      {"run-all", "--tuples", tuples_fixture(), "--general", general_fixture(), "--out",
       tmp.str("all")},
      sets));
  INFO(all.output);
  REQUIRE(all.exit_code == 0);
  auto summary = last_json_line(all.output);
  CHECK(summary.at("status") == "ok");
  CHECK(summary.at("dataset") == tmp.str("all") + "/dataset.jsonl");
  CHECK(summary.at("manifest") == tmp.str("all") + "/manifest.json");

  const std::string staged = tmp.str("staged");
  auto build = run_cli(with_sets(
      {"build-pool", "--tuples", tuples_fixture(), "--out", staged}, sets));
  INFO(build.output);
  REQUIRE(build.exit_code == 0);
  auto stage_line = last_json_line(build.output);
  CHECK(stage_line.at("stage") == "pool");
  CHECK(stage_line.at("counts").at("noun-entail").at("out") == 40);

  for (const char* name : {"collect-traces", "filter", "score", "select", "render-dataset"}) {
    auto result = run_cli(with_sets({name, "--out", staged}, sets));
    INFO(name, ": ", result.output);
    REQUIRE(result.exit_code == 0);
  }
  auto mix = run_cli(with_sets(
      {"mix", "--general", general_fixture(), "--out", staged}, sets));
  INFO(mix.output);
  REQUIRE(mix.exit_code == 0);
  CHECK(last_json_line(mix.output).at("stage") == "mix");

  CHECK(testutil::snapshot_tree(tmp.str("all")) == testutil::snapshot_tree(staged));
  service.stop();
}

TEST_CASE("config file and --set overrides compose") {
  testutil::TempDir tmp("cli");
  auto config_path = tmp.str("config.json");
  testutil::write_file(config_path, R"({
  "pool_size_per_relation": 30,
  "k_per_relation": 6,
  "random_seed": 7
})");

  auto result = run_cli({"build-pool", "--config", config_path, "--set", "k_per_relation=4",
                         "--tuples", tuples_fixture(), "--out", tmp.str("out")});
  INFO(result.output);
  REQUIRE(result.exit_code == 0);

  auto manifest = nlohmann::json::parse(
      testutil::slurp(absinstruct::pipeline::manifest_path(tmp.str("out"))));
  CHECK(manifest.at("config").at("pool_size_per_relation") == 30);
  CHECK(manifest.at("config").at("k_per_relation") == 4);  // --set wins over the file
  CHECK(manifest.at("seed") == 7);

  auto pool = absinstruct::jsonl::load_tuples(
      absinstruct::pipeline::stage_file(tmp.str("out"), "pool", absinstruct::Relation::NounEntail));
  CHECK(pool.size() == 30);
}

TEST_CASE("config errors surface as a JSON line and a nonzero exit") {
  testutil::TempDir tmp("cli");

  auto odd = run_cli({"build-pool", "--set", "k_per_relation=5", "--tuples", tuples_fixture(),
                      "--out", tmp.str("odd")});
  CHECK(odd.exit_code == 1);
  auto odd_error = last_json_line(odd.output);
  CHECK(odd_error.at("type") == "config");
  CHECK(odd_error.at("error") == "k_per_relation must be even (selection is balanced across labels)");

  auto unknown = run_cli({"build-pool", "--set", "bogus_key=1", "--tuples", tuples_fixture(),
                          "--out", tmp.str("unknown")});
  CHECK(unknown.exit_code == 1);
  CHECK(last_json_line(unknown.output).at("error") == "unknown config key: bogus_key");

  auto malformed = run_cli({"build-pool", "--set", "k_per_relation", "--tuples",
                            tuples_fixture(), "--out", tmp.str("malformed")});
  CHECK(malformed.exit_code == 1);
  auto malformed_error = last_json_line(malformed.output);
  CHECK(malformed_error.at("type") == "config");
  CHECK(malformed_error.at("error").get<std::string>().find("--set expects key=value") !=
        std::string::npos);

  auto missing_out = run_cli({"build-pool", "--tuples", tuples_fixture()});
  CHECK(missing_out.exit_code != 0);

  auto missing_file = run_cli({"build-pool", "--tuples", tmp.str("absent.jsonl"), "--out",
                               tmp.str("missing")});
  CHECK(missing_file.exit_code == 1);
  CHECK(last_json_line(missing_file.output).at("type") == "io");
}

TEST_CASE("eval-abs writes a detection report and manifest entry") {
  testutil::TempDir tmp("cli");
  MockService service({""});
  service.start();
  auto out_dir = tmp.str("out");
  std::vector<std::string> args{
      "eval-abs", "--tuples", tuples_fixture(), "--out", out_dir,
      "--mode", "zero_shot",
      "--set", "generator_endpoint=" + service.endpoint(),
      "--set", "cache_dir=" + tmp.str("cache"),
  };
  auto result = run_cli(args);
  INFO(result.output);
  REQUIRE(result.exit_code == 0);
  CHECK(result.output.find("mode: zero_shot") != std::string::npos);
  CHECK(last_json_line(result.output).at("report") ==
        out_dir + "/reports/detection_zero_shot.json");

  auto report = nlohmann::json::parse(
      testutil::slurp(out_dir + "/reports/detection_zero_shot.json"));
  CHECK(report.at("mode") == "zero_shot");
  CHECK(report.at("aggregation") == "pooled");
  CHECK(report.at("decision_rule") == "single_sample");
  CHECK(report.at("self_consistency") == 1);
  CHECK(report.at("requested") == 144);
  CHECK(report.at("completed") == 144);
  CHECK(report.at("per_relation").size() == 3);
  double accuracy = report.at("aggregate").at("accuracy").get<double>();
  CHECK(accuracy >= 0.0);
  CHECK(accuracy <= 1.0);

  auto manifest = nlohmann::json::parse(
      testutil::slurp(absinstruct::pipeline::manifest_path(out_dir)));
  CHECK(manifest.at("stages").contains("eval-abs:zero_shot"));
  CHECK(manifest.at("stages").at("eval-abs:zero_shot").at("all").at("completed") == 144);
  CHECK(manifest.at("config_hash") == report.at("config_hash"));

  auto missing_exemplars = run_cli({"eval-abs", "--tuples", tuples_fixture(), "--out", out_dir,
                                    "--mode", "few_shot",
                                    "--set", "generator_endpoint=" + service.endpoint()});
  CHECK(missing_exemplars.exit_code == 1);
  CHECK(last_json_line(missing_exemplars.output).at("error") ==
        "few_shot mode requires --exemplars");

  auto majority = run_cli({"eval-abs", "--tuples", tuples_fixture(), "--out", out_dir,
                           "--mode", "zero_shot", "--self-consistency", "5",
                           "--temperature", "0.7",
                           "--set", "generator_endpoint=" + service.endpoint(),
                           "--set", "cache_dir=" + tmp.str("cache")});
  INFO(majority.output);
  REQUIRE(majority.exit_code == 0);
  auto majority_report = nlohmann::json::parse(
      testutil::slurp(out_dir + "/reports/detection_zero_shot.json"));
  CHECK(majority_report.at("decision_rule") == "majority_vote");
  CHECK(majority_report.at("sample_temperature") == 0.7);
  service.stop();
}

TEST_CASE("eval-gen and report-diversity write their reports") {
  testutil::TempDir tmp("cli");
  MockService service({""});
  service.start();
  auto out_dir = tmp.str("out");

  auto tasks_path = tmp.str("tasks.jsonl");
  testutil::write_file(tasks_path,
                       R"({"prompt": "Describe a sunrise.", "reference": "the sun rises slowly"})"
                       "\n"
                       R"({"prompt": "Describe rain.", "reference": "rain falls on the roof"})"
                       "\n");
  auto gen = run_cli({"eval-gen", "--tasks", tasks_path, "--out", out_dir,
                      "--set", "generator_endpoint=" + service.endpoint()});
  INFO(gen.output);
  REQUIRE(gen.exit_code == 0);
  auto gen_report = nlohmann::json::parse(testutil::slurp(out_dir + "/reports/generation.json"));
  CHECK(gen_report.at("n") == 2);
  CHECK(gen_report.at("completed") == 2);
  for (const char* key : {"rouge_l", "bleu_1", "bleu_2", "meteor"}) {
    double value = gen_report.at(key).get<double>();
    CHECK(value >= 0.0);
    CHECK(value <= 1.0);
  }

  // candidates for the diversity report come from a real selected stage file
  MockService pipeline_service({""});
  pipeline_service.start();
  auto sets = common_sets(pipeline_service.endpoint(), tmp.str("cache"));
  auto all = run_cli(with_sets({"run-all", "--tuples", tuples_fixture(), "--general",
                                general_fixture(), "--out", tmp.str("pipe")},
                               sets));
  REQUIRE(all.exit_code == 0);
  auto candidates_path = absinstruct::pipeline::stage_file(tmp.str("pipe"), "selected",
                                                           absinstruct::Relation::NounEntail);
  auto diversity = run_cli({"report-diversity", "--candidates", candidates_path, "--field",
                            "head_event", "--out", out_dir});
  INFO(diversity.output);
  REQUIRE(diversity.exit_code == 0);
  auto div_report = nlohmann::json::parse(
      testutil::slurp(out_dir + "/reports/diversity_head_event.json"));
  CHECK(div_report.at("n") == 4);
  CHECK(div_report.at("max_similarity_histogram").size() == 10);
  CHECK(div_report.at("unique_fraction").get<double>() >= 0.0);

  auto manifest = nlohmann::json::parse(
      testutil::slurp(absinstruct::pipeline::manifest_path(out_dir)));
  CHECK(manifest.at("stages").contains("eval-gen"));
  CHECK(manifest.at("stages").contains("report-diversity:head_event"));
  pipeline_service.stop();
  service.stop();
}
