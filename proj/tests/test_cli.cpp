// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "seq2graph/cli.hpp"
#include "seq2graph/data.hpp"
#include "test_util.hpp"

using namespace seq2graph;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "seq2graph");
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

// Small synthetic corpus plus a quick model trained on it, shared by several cases.
struct Fixture {
  static fs::path shared_dir() {
    static const fs::path d = test::temp_dir("cli");
    return d;
  }
  fs::path dir = shared_dir();
  fs::path csv = dir / "gen" / "synthetic.csv";
  fs::path ckpt = dir / "run" / "checkpoint.json";

  Fixture() {
    if (fs::exists(ckpt)) return;
    REQUIRE(run({"generate", "--seed", "1", "--length", "300", "--out-dir", (dir / "gen").string()})
                .code == 0);
    const auto r = run({"train", "--seed", "1", "--input", csv.string(), "--window", "4",
                        "--width", "4", "--epochs", "2", "--out-dir", (dir / "run").string()});
    INFO(r.err);
    REQUIRE(r.code == 0);
  }
};

}  // namespace

TEST_CASE("generate") {
  const auto dir = test::temp_dir("gen");
  const auto a = run({"generate", "--seed", "7", "--length", "200", "--out-dir", (dir / "a").string()});
  const auto b = run({"generate", "--seed", "7", "--length", "200", "--out-dir", (dir / "b").string()});
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(slurp(dir / "a" / "synthetic.csv") == slurp(dir / "b" / "synthetic.csv"));
  CHECK(slurp(dir / "a" / "synthetic_labels.csv") == slurp(dir / "b" / "synthetic_labels.csv"));
  CHECK(lines(slurp(dir / "a" / "synthetic.csv")) == 201);
  CHECK(fs::exists(dir / "a" / "run_config.json"));

  const auto c = run({"generate", "--seed", "8", "--length", "200", "--out-dir", (dir / "c").string()});
  CHECK(slurp(dir / "a" / "synthetic.csv") != slurp(dir / "c" / "synthetic.csv"));

  CHECK(run({"generate", "--length", "5", "--out-dir", (dir / "d").string()}).code == 2);
}

TEST_CASE("usage errors") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"train", "--epochs", "many"}).code == 2);
  const auto missing = run({"train", "--input", "/nonexistent/x.csv", "--out-dir",
                            test::temp_dir("missing").string()});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("/nonexistent/x.csv") != std::string::npos);
  CHECK(run({"train", "--help"}).code == 0);
}

TEST_CASE("config file with flag overrides") {
  const auto dir = test::temp_dir("config");
  cli::RunConfig base;
  base.synthetic.length = 120;
  base.seed = 3;
  {
    std::ofstream f(dir / "cfg.json");
    f << cli::run_config_to_json(base);
  }
  REQUIRE(run({"generate", "--config", (dir / "cfg.json").string(), "--out-dir",
               (dir / "a").string()})
              .code == 0);
  CHECK(lines(slurp(dir / "a" / "synthetic.csv")) == 121);
  REQUIRE(run({"generate", "--config", (dir / "cfg.json").string(), "--length", "80", "--out-dir",
               (dir / "b").string()})
              .code == 0);
  CHECK(lines(slurp(dir / "b" / "synthetic.csv")) == 81);

  const auto back = cli::run_config_from_json(slurp(dir / "b" / "run_config.json"));
  CHECK(back.synthetic.length == 80);
  CHECK(back.seed == 3);
  CHECK(run({"generate", "--config", (dir / "absent.json").string()}).code == 2);
}

TEST_CASE("train, evaluate, infer and baseline") {
  Fixture fx;
  const auto run_dir = fx.dir / "run";
  CHECK(fs::exists(run_dir / "train_log.jsonl"));
  CHECK(lines(slurp(run_dir / "train_log.jsonl")) == 2);
  const auto metrics = slurp(run_dir / "metrics.csv");
  CHECK(metrics.rfind("method,split,series,rmse,mae\n", 0) == 0);
  CHECK(lines(metrics) == 1 + 2 * 2);

  SUBCASE("evaluate") {
    const auto out = fx.dir / "eval";
    const auto r = run({"evaluate", "--input", fx.csv.string(), "--checkpoint", fx.ckpt.string(),
                        "--split", "dev", "--out-dir", out.string()});
    INFO(r.err);
    CHECK(r.code == 0);
    CHECK(lines(slurp(out / "metrics.csv")) == 3);
    CHECK(run({"evaluate", "--input", fx.csv.string(), "--checkpoint", fx.ckpt.string(), "--split",
               "holdout", "--out-dir", out.string()})
              .code == 2);
  }
  SUBCASE("infer on a single timestamp") {
    const auto out = fx.dir / "infer1";
    const auto r = run({"infer", "--input", fx.csv.string(), "--checkpoint", fx.ckpt.string(),
                        "--start", "100", "--end", "100", "--format", "json", "--out-dir",
                        out.string()});
    INFO(r.err);
    REQUIRE(r.code == 0);
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(out / "graphs")) {
      ++files;
      CHECK(e.path().extension() == ".json");
    }
    CHECK(files == 1);
    CHECK(lines(slurp(out / "forecasts.csv")) == 2);
    CHECK(lines(slurp(out / "lag_profiles.csv")) == 1 + 2);
  }
  SUBCASE("infer over a range in both formats") {
    const auto out = fx.dir / "infer3";
    REQUIRE(run({"infer", "--input", fx.csv.string(), "--checkpoint", fx.ckpt.string(), "--start",
                 "-3", "--out-dir", out.string()})
                .code == 0);
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(out / "graphs")) ++files;
    CHECK(files == 6);
    CHECK(run({"infer", "--input", fx.csv.string(), "--checkpoint", fx.ckpt.string(), "--format",
               "svg", "--out-dir", out.string()})
              .code == 2);
  }
  SUBCASE("series mismatch names both orderings") {
    const auto other = fx.dir / "other.csv";
    data::write_csv(data::TimeSeriesFrame({"P", "Q"}, std::vector<double>(2 * 50, 0.5)), other);
    const auto r = run({"infer", "--input", other.string(), "--checkpoint", fx.ckpt.string(),
                        "--out-dir", (fx.dir / "mismatch").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("SeriesA") != std::string::npos);
    CHECK(r.err.find("P") != std::string::npos);
  }
  SUBCASE("baselines") {
    const auto out = fx.dir / "base";
    REQUIRE(run({"baseline", "--input", fx.csv.string(), "--method", "var", "--lag-order", "3",
                 "--out-dir", out.string()})
                .code == 0);
    CHECK(lines(slurp(out / "var_metrics.csv")) == 1 + 2 * 2);
    REQUIRE(run({"baseline", "--input", fx.csv.string(), "--method", "granger", "--lag-order", "3",
                 "--out-dir", out.string()})
                .code == 0);
    const auto g = slurp(out / "granger.csv");
    CHECK(g.rfind("target,candidate,lag_order,f_statistic,p_value,df1,df2\n", 0) == 0);
    CHECK(lines(g) == 3);
    REQUIRE(run({"baseline", "--input", fx.csv.string(), "--method", "granger", "--target",
                 "SeriesA", "--candidate", "SeriesB", "--out-dir", out.string()})
                .code == 0);
    CHECK(lines(slurp(out / "granger.csv")) == 2);
    CHECK(run({"baseline", "--input", fx.csv.string(), "--method", "granger", "--target", "SeriesA",
               "--candidate", "SeriesA", "--out-dir", out.string()})
              .code == 2);
  }
}

TEST_CASE("run config json round trip") {
  cli::RunConfig c;
  c.seed = 42;
  c.model.window = 6;
  c.train.lr = 0.003;
  c.target_series = "SeriesB";
  c.range_end = -1;
  const auto back = cli::run_config_from_json(cli::run_config_to_json(c));
  CHECK(back.seed == 42);
  CHECK(back.model.window == 6);
  CHECK(back.train.lr == 0.003);
  CHECK(back.target_series == std::optional<std::string>("SeriesB"));
  CHECK(back.range_end == std::optional<std::int64_t>(-1));
  CHECK_FALSE(back.range_start.has_value());
}
