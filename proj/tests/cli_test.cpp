#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include "cli.hpp"
#include "handgen/file_util.hpp"
#include "support/fixtures.hpp"

using namespace handgen;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

// Quick demo: no fits, so no synthesis either.
Outcome quick_demo(const std::filesystem::path& dir, const std::string& seed = "3") {
  return run({"--output", dir.string(), "--seed", seed, "demo", "--fit-frames", "0"});
}

}  // namespace

TEST(Cli, VersionAndUsage) {
  const Outcome v = run({"--version"});
  EXPECT_EQ(v.code, cli::kExitOk);
  EXPECT_NE(v.out.find("handgen"), std::string::npos);
  EXPECT_EQ(run({}).code, cli::kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"annotate", "--no-such-flag"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"evaluate", "--split", "s.json", "--pred", "p.jsonl"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"annotate"}).code, cli::kExitUsage);
}

TEST(Cli, MissingInputIsIoError) {
  fixtures::TempDir dir("cli_io");
  EXPECT_EQ(run({"--input", (dir / "none.jsonl").string(), "--output", (dir / "l.jsonl").string(), "annotate"}).code,
            cli::kExitIo);
}

TEST(Cli, ConfigFileKeysAndPrecedence) {
  fixtures::TempDir dir("cli_cfg");
  write_file_atomic(dir / "bad.json", R"({"no-such-key": 1})");
  EXPECT_EQ(run({"--config", (dir / "bad.json").string(), "annotate"}).code, cli::kExitUsage);
  write_file_atomic(dir / "broken.json", "{");
  EXPECT_EQ(run({"--config", (dir / "broken.json").string(), "annotate"}).code, cli::kExitUsage);

  ASSERT_EQ(quick_demo(dir / "demo").code, cli::kExitOk);
  write_file_atomic(dir / "cfg.json", R"({"input": ")" + (dir / "demo" / "frames.jsonl").string() + R"(", "output": ")" +
                                          (dir / "cfg_labels.jsonl").string() + R"("})");
  EXPECT_EQ(run({"--config", (dir / "cfg.json").string(), "annotate"}).code, cli::kExitOk);
  EXPECT_EQ(read_file(dir / "cfg_labels.jsonl"), read_file(dir / "demo" / "labels.jsonl"));
  // The command line wins over the config file.
  EXPECT_EQ(run({"--config", (dir / "cfg.json").string(), "--output", (dir / "cli_labels.jsonl").string(), "annotate"})
                .code,
            cli::kExitOk);
  EXPECT_TRUE(std::filesystem::exists(dir / "cli_labels.jsonl"));
}

TEST(Cli, SplitVerifyEvaluatePipeline) {
  fixtures::TempDir dir("cli_pipe");
  ASSERT_EQ(quick_demo(dir / "demo").code, cli::kExitOk);
  const auto d = dir / "demo";
  ASSERT_EQ(run({"--input", (d / "frames.jsonl").string(), "--output", (dir / "labels.jsonl").string(), "annotate"}).code,
            cli::kExitOk);
  const Outcome s = run({"--input", (dir / "labels.jsonl").string(), "--output", (dir / "split.json").string(), "--seed",
                         "3", "split", "--spec", (d / "spec.json").string()});
  ASSERT_EQ(s.code, cli::kExitOk) << s.err;
  EXPECT_NE(s.out.find("train 320"), std::string::npos) << s.out;
  EXPECT_EQ(read_file(dir / "split.json"), read_file(d / "split.json"));

  const Outcome v = run({"--input", (dir / "labels.jsonl").string(), "verify", "--split", (dir / "split.json").string()});
  EXPECT_EQ(v.code, cli::kExitOk);
  EXPECT_NE(v.out.find("0 violations"), std::string::npos);

  const Outcome e = run({"--output", (dir / "report").string(), "evaluate", "--split", (dir / "split.json").string(),
                         "--truth", (d / "frames.jsonl").string(), "--labels", (dir / "labels.jsonl").string(), "--pred",
                         "steady=" + (d / "preds" / "steady.jsonl").string(), "--pred",
                         "fragile=" + (d / "preds" / "fragile.jsonl").string()});
  ASSERT_EQ(e.code, cli::kExitOk) << e.err;
  EXPECT_FALSE(e.out.empty());

  const Outcome r = run({"--input", (d / "preds" / "steady.jsonl").string(), "--output", (dir / "svd.jsonl").string(),
                         "refine", "--mode", "svd", "--basis", (d / "basis.json").string()});
  EXPECT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_EQ(read_file(dir / "svd.jsonl"), read_file(d / "preds" / "steady_svd.jsonl"));
}

TEST(Cli, EnvironmentOverridesDefaults) {
  fixtures::TempDir dir("cli_env");
  ASSERT_EQ(quick_demo(dir / "demo").code, cli::kExitOk);
  const auto d = dir / "demo";
  auto split_to = [&](const std::string& out, std::vector<std::string> extra) {
    std::vector<std::string> args = {"--input", (d / "labels.jsonl").string(), "--output", (dir / out).string()};
    args.insert(args.end(), extra.begin(), extra.end());
    args.insert(args.end(), {"split", "--spec", (d / "spec.json").string()});
    return run(args).code;
  };
  ASSERT_EQ(split_to("flag.json", {"--seed", "11"}), cli::kExitOk);
  ::setenv("HANDGEN_SEED", "11", 1);
  const int env_code = split_to("env.json", {});
  const int both_code = split_to("both.json", {"--seed", "0"});
  ::unsetenv("HANDGEN_SEED");
  ASSERT_EQ(env_code, cli::kExitOk);
  ASSERT_EQ(both_code, cli::kExitOk);
  ASSERT_EQ(split_to("zero.json", {}), cli::kExitOk);
  EXPECT_EQ(read_file(dir / "env.json"), read_file(dir / "flag.json"));
  EXPECT_EQ(read_file(dir / "both.json"), read_file(dir / "zero.json"));
  EXPECT_NE(read_file(dir / "flag.json"), read_file(dir / "zero.json"));
}

TEST(Cli, QuickDemoIsDeterministic) {
  fixtures::TempDir dir("cli_demo");
  const Outcome a = quick_demo(dir / "a");
  const Outcome b = quick_demo(dir / "b");
  ASSERT_EQ(a.code, cli::kExitOk) << a.out << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out.find("FAIL"), std::string::npos);
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir / "a")) {
    if (!entry.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(entry.path(), dir / "a");
    ASSERT_TRUE(std::filesystem::exists(dir / "b" / rel)) << rel;
    EXPECT_EQ(read_file(entry.path()), read_file(dir / "b" / rel)) << rel;
  }
}
