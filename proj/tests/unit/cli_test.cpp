#include "commands.hpp"
#include "pipeline.hpp"

#include "laborscope/error.hpp"
#include "laborscope/factorization.hpp"
#include "laborscope/matrix.hpp"

#include "oracles.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using laborscope::cli::run;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string str(const fs::path& p) { return p.string(); }

void write_config(const fs::path& path, const nlohmann::json& doc) { std::ofstream(path) << doc.dump(2); }

/// Small three-year synthetic corpus shared by the CLI cases.
const fs::path& corpus() {
  static const fs::path dir = [] {
    auto d = oracle::scratch_dir("cli_corpus");
    REQUIRE(run({"--seed", "3", "synth", "--regions", "24", "--occupations", "50", "--topics", "4", "--years", "3",
                 "--noise", "0.02", "--local-fraction", "0.2", "--out", str(d)}) == 0);
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("year lists") {
  using laborscope::cli::parse_years;
  CHECK(parse_years("2014-2016") == std::vector<int>{2014, 2015, 2016});
  CHECK(parse_years("2018, 2014-2015") == std::vector<int>{2014, 2015, 2018});
  CHECK_THROWS_AS(parse_years("2016-2014"), laborscope::ConfigError);
  CHECK_THROWS_AS(parse_years("abc"), laborscope::ConfigError);
  CHECK_THROWS_AS(parse_years(""), laborscope::ConfigError);
}

TEST_CASE("usage errors exit with 2") {
  CHECK(run({}) == 2);
  CHECK(run({"fit"}) == 2);
  CHECK(run({"fit", "--in", "x.csv", "--out", "m", "--k", "two"}) == 2);
  CHECK(run({"run"}) == 2);
  CHECK(run({"--help"}) == 0);
}

TEST_CASE("missing inputs exit with 3") {
  const auto dir = oracle::scratch_dir("cli_missing");
  CHECK(run({"ingest", "--in", str(dir / "nope.csv"), "--out", str(dir / "t.csv")}) == 3);
  CHECK(run({"topics", "--model", str(dir / "nomodel"), "--out", "-"}) == 3);
}

TEST_CASE("subcommands chain end to end") {
  const auto& c = corpus();
  for (const auto* f : {"table.csv", "coordinates.csv", "sectors.csv", "crosswalk.csv", "planted_w_2014.csv", "planted_h_2016.csv"}) {
    CHECK(fs::exists(c / f));
  }
  const auto dir = oracle::scratch_dir("cli_chain");

  REQUIRE(run({"ingest", "--in", str(c / "table.csv"), "--crosswalk", str(c / "crosswalk.csv"), "--years", "2014-2016",
               "--out", str(dir / "table.bin"), "--matrix", str(dir / "raw.csv")}) == 0);
  CHECK(laborscope::read_table(dir / "table.bin").years() == std::vector<int>{2014, 2015, 2016});
  for (int y = 2014; y <= 2016; ++y) {
    const auto ys = std::to_string(y);
    REQUIRE(run({"ingest", "--in", str(c / "table.csv"), "--out", str(dir / ("t" + ys + ".csv")), "--matrix",
                 str(dir / ys / "raw.bin"), "--matrix-year", ys}) == 0);
    REQUIRE(run({"tfidf", "--in", str(dir / ys / "raw.bin"), "--out", str(dir / ys / "tfidf.csv")}) == 0);
    REQUIRE(run({"fit", "--in", str(dir / ys / "tfidf.csv"), "--k", "4", "--out", str(dir / ys / "model")}) == 0);
  }
  CHECK(run({"ingest", "--in", str(c / "table.csv"), "--out", str(dir / "x.csv"), "--matrix", str(dir / "x.bin"),
             "--matrix-year", "2014-2015"}) == 2);

  CHECK(run({"tfidf", "--in", str(dir / "raw.csv"), "--out", str(dir / "tfidf2.csv"), "--log-base", "2", "--prune-empty"}) == 0);
  CHECK(laborscope::read_matrix(dir / "tfidf2.csv").kind == laborscope::MatrixKind::tfidf);
  CHECK(run({"tfidf", "--in", str(dir / "tfidf2.csv"), "--out", str(dir / "again.csv")}) == 3);

  const auto model = str(dir / "2016" / "model");
  CHECK(run({"fit", "--in", str(dir / "2016" / "tfidf.csv"), "--k", "3", "--solver", "hals", "--max-iter", "50",
             "--out", str(dir / "hals")}) == 0);
  CHECK(run({"fit", "--in", str(dir / "2016" / "tfidf.csv"), "--k", "500", "--out", str(dir / "bad")}) == 2);
  CHECK(run({"fit", "--in", str(dir / "2016" / "tfidf.csv"), "--solver", "als", "--out", str(dir / "bad")}) == 2);

  REQUIRE(run({"topics", "--model", model, "--top-n", "5", "--out", str(dir / "topics.json")}) == 0);
  const auto topics = nlohmann::json::parse(slurp(dir / "topics.json"));
  CHECK(topics.size() == 4);
  CHECK(run({"compose", "--model", model, "--out", str(dir / "comp.csv")}) == 0);
  CHECK(slurp(dir / "comp.csv").rfind("region", 0) == 0);
  CHECK(run({"prevalence", "--model", model, "--topic", "2", "--out", str(dir / "prev.csv")}) == 0);
  CHECK(run({"prevalence", "--model", model, "--topic", "9", "--out", str(dir / "prev.csv")}) == 2);

  REQUIRE(run({"align", "--models", str(dir / "2014" / "model"), str(dir / "2015" / "model"), model, "--out",
               str(dir / "align.json")}) == 0);
  const auto align = nlohmann::json::parse(slurp(dir / "align.json"));
  CHECK(align["years"] == nlohmann::json::array({2014, 2015, 2016}));
  CHECK(align["persistent"].get<int>() >= 3);

  CHECK(run({"cluster", "--model", model, "--out", str(dir / "tree.json"), "--heatmap", str(dir / "heat.csv")}) == 0);
  CHECK(run({"cluster", "--model", model, "--top", "10", "--out", str(dir / "tree.json")}) == 2);
  REQUIRE(run({"cluster", "--model", model, "--top", "10", "--table", str(dir / "table.bin"), "--linkage", "complete",
               "--out", str(dir / "tree10.json")}) == 0);
  CHECK(nlohmann::json::parse(slurp(dir / "tree10.json"))["leaves"].size() == 10);

  CHECK(run({"moran", "--values", str(dir / "comp.csv"), "--coords", str(c / "coordinates.csv"), "--permutations", "49",
             "--out", str(dir / "moran.csv")}) == 0);
  CHECK(slurp(dir / "moran.csv").find("p_value") != std::string::npos);
  CHECK(run({"moran", "--values", str(dir / "comp.csv"), "--out", str(dir / "moran.csv")}) == 2);
  CHECK(run({"lq", "--in", str(dir / "raw.csv"), "--sectors", str(c / "sectors.csv"), "--out", str(dir / "lq.csv")}) == 0);
  CHECK(slurp(dir / "lq.csv").find("LOCAL") != std::string::npos);
}

TEST_CASE("output to stdout") {
  const auto dir = oracle::scratch_dir("cli_stdout");
  REQUIRE(run({"ingest", "--in", str(corpus() / "table.csv"), "--out", str(dir / "t.csv"), "--matrix",
               str(dir / "raw.csv"), "--matrix-year", "2014"}) == 0);
  REQUIRE(run({"tfidf", "--in", str(dir / "raw.csv"), "--out", str(dir / "x.csv")}) == 0);
  REQUIRE(run({"fit", "--in", str(dir / "x.csv"), "--k", "2", "--max-iter", "20", "--out", str(dir / "m")}) == 0);
  std::ostringstream captured;
  auto* old = std::cout.rdbuf(captured.rdbuf());
  const int rc = run({"topics", "--model", str(dir / "m"), "--top-n", "3", "--out", "-"});
  std::cout.rdbuf(old);
  CHECK(rc == 0);
  CHECK(nlohmann::json::parse(captured.str()).size() == 2);
}

TEST_CASE("pipeline runs and is deterministic") {
  const auto dir = oracle::scratch_dir("cli_pipeline");
  const auto& c = corpus();
  nlohmann::json cfg = {{"inputs", {str(c / "table.csv")}},
                        {"crosswalk", str(c / "crosswalk.csv")},
                        {"output_dir", str(dir / "out")},
                        {"fit", {{"k", 4}}},
                        {"clustering", {{"top_regions", 12}}},
                        {"spatial", {{"coordinates", str(c / "coordinates.csv")}, {"sectors", str(c / "sectors.csv")}}}};
  write_config(dir / "cfg.json", cfg);
  REQUIRE(run({"--config", str(dir / "cfg.json"), "run"}) == 0);
  const auto manifest = slurp(dir / "out" / "run-manifest.json");
  CHECK_FALSE(fs::exists(dir / "out" / ".partial"));
  for (const auto* f : {"table.csv", "pooled/tfidf.csv", "pooled/topics.json", "pooled/compositions.csv",
                        "alignment.json", "dendrogram.json", "heatmap.csv", "moran.csv", "lq.csv",
                        "years/2015/model/h.csv"}) {
    CHECK_MESSAGE(fs::exists(dir / "out" / f), f);
  }
  const auto topics = nlohmann::json::parse(slurp(dir / "out" / "pooled" / "topics.json"));
  CHECK(topics.size() == 4);

  REQUIRE(run({"--config", str(dir / "cfg.json"), "run", "--out", str(dir / "again")}) == 0);
  auto hashes = [](const std::string& text) { return nlohmann::json::parse(text)["outputs"]; };
  CHECK(hashes(manifest) == hashes(slurp(dir / "again" / "run-manifest.json")));
  REQUIRE_FALSE(slurp(dir / "out" / "pooled" / "model" / "h.csv").empty());
  CHECK(slurp(dir / "out" / "pooled" / "model" / "h.csv") == slurp(dir / "again" / "pooled" / "model" / "h.csv"));

  // Rerunning into a previous run's directory replaces it.
  REQUIRE(run({"--config", str(dir / "cfg.json"), "run"}) == 0);
  CHECK(hashes(manifest) == hashes(slurp(dir / "out" / "run-manifest.json")));
}

TEST_CASE("pipeline failures name the stage") {
  const auto dir = oracle::scratch_dir("cli_pipeline_fail");
  const auto& c = corpus();
  nlohmann::json cfg = {{"inputs", {str(c / "table.csv")}}, {"output_dir", str(dir / "out")}, {"fit", {{"k", 4}}}};
  write_config(dir / "cfg.json", cfg);
  CHECK(run({"--config", str(dir / "cfg.json"), "run"}) == 2);
  REQUIRE(fs::exists(dir / "out" / ".partial"));
  CHECK(slurp(dir / "out" / ".partial").find("crosswalk") != std::string::npos);

  laborscope::PipelineConfig pc = laborscope::PipelineConfig::from_json(cfg);
  try {
    laborscope::run_pipeline(pc);
    FAIL("expected a stage error");
  } catch (const laborscope::StageError& e) {
    CHECK(e.stage() == "crosswalk");
    CHECK(e.exit_code() == 2);
  }

  fs::create_directories(dir / "foreign");
  std::ofstream(dir / "foreign" / "keep.txt") << "x";
  cfg["output_dir"] = str(dir / "foreign");
  cfg["crosswalk"] = str(c / "crosswalk.csv");
  write_config(dir / "cfg2.json", cfg);
  CHECK(run({"--config", str(dir / "cfg2.json"), "run"}) == 2);
  CHECK(fs::exists(dir / "foreign" / "keep.txt"));
}

TEST_CASE("config round-trips through json") {
  nlohmann::json doc = {{"inputs", {"a.csv", "b.csv"}},
                        {"years", {2014, 2015}},
                        {"tfidf", {{"log_base", "10"}, {"prune_empty", true}}},
                        {"fit", {{"k", 7}, {"solver", "hals"}, {"init", "random"}, {"seed", 9}, {"mode", "pooled"}}},
                        {"dynamics", {{"alpha", 0.6}, {"matching", "hungarian"}}},
                        {"clustering", {{"linkage", "single"}, {"top_regions", 5}}},
                        {"spatial", {{"weights", {{"method", "idw"}, {"power", 2.0}}}, {"permutations", 9}}}};
  const auto a = laborscope::PipelineConfig::from_json(doc, "/base");
  CHECK(a.inputs.front() == fs::path("/base/a.csv"));
  CHECK(a.fit.k == 7);
  CHECK(a.fit.solver == laborscope::Solver::hals);
  CHECK(a.mode == laborscope::FitMode::pooled);
  CHECK(a.weights.kind == laborscope::WeightSource::Kind::inverse_distance);
  const auto b = laborscope::PipelineConfig::from_json(nlohmann::json::parse(a.to_json().dump()));
  CHECK(b.to_json() == a.to_json());
  doc["fit"]["solver"] = "bogus";
  CHECK_THROWS_AS(laborscope::PipelineConfig::from_json(doc), laborscope::ConfigError);
}
