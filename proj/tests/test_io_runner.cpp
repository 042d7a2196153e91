#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <optional>

#include "aplab/battery.hpp"
#include "aplab/io.hpp"
#include "aplab/runner.hpp"

using namespace aplab;
using runner::json;
namespace fs = std::filesystem;

namespace {

template <class F>
std::optional<ErrorCode> code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("aplab_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

int cli(const std::string& args) {
  const std::string cmd = std::string(APLAB_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write(const fs::path& p, const std::string& text) { io::atomic_write(p, text); }

json harmonic_config(const std::string& name = "harmonic_run") {
  return json::parse(R"({
    "name": ")" + name + R"(",
    "operator": {"kind": "diagonal", "family": {"name": "harmonic"}, "space": "c"},
    "probes": [{"name": "one", "kind": "one"}],
    "diagnostics": {"epsilons": [0.5, 1.0], "horizons": [10, 20, 40], "tol": 1e-9, "seed": 3},
    "operations": [
      {"op": "compactness", "probe": "one", "expect": "growing"},
      {"op": "mean_ergodic", "expect": false},
      {"op": "jdlg", "cross_check": false}
    ]
  })");
}

json ladder_certificate(const std::vector<std::pair<int, int>>& pairs) {
  const DiagonalOperator T{DiagonalSymbol::from_family(SymbolFamily::harmonic()), SpaceTag::c};
  json p = json::array(), ladder = json::array();
  for (auto [s, t] : pairs) {
    p.push_back(json::array({s, t}));
    ladder.push_back(io::to_json(witness_entry(T, SeqVector::constant(1.0), s - t), runner::kCertificatePrefix));
  }
  return {{"format", runner::kCertificateFormat},
          {"version", runner::kCertificateVersion},
          {"tol", 1e-9},
          {"seed", 1},
          {"operator", {{"family", {{"name", "harmonic"}}}, {"space", "c"}}},
          {"probe", {{"name", "one"}, {"kind", "one"}}},
          {"delta", 2.0},
          {"M", 2.0},
          {"status", "complete"},
          {"pairs", p},
          {"ladder", ladder}};
}

}  // namespace

// ------------------------------------------------------------------ io

TEST(MatrixText, RoundTrip) {
  battery::Rng rng(1);
  const Eigen::MatrixXcd a = rng.gaussian_matrix(5);
  const auto b = io::parse_matrix_text(io::format_matrix_text(a));
  EXPECT_EQ((a - b).norm(), 0.0);
}

TEST(MatrixText, CommentsAndBlankLines) {
  const auto a = io::parse_matrix_text("# two by two\n2\n\n1,0 0,-1  # first row\n0.5,0.25 -2,0\n");
  EXPECT_EQ(a(0, 1), (Complex{0.0, -1.0}));
  EXPECT_EQ(a(1, 0), (Complex{0.5, 0.25}));
}

TEST(MatrixText, MalformedInputs) {
  for (const char* bad : {"", "# only a comment\n", "0\n", "2 3\n1,0 0,0\n0,0 1,0\n", "2\n1,0 0,0\n",
                          "1\n1\n", "1\n1,x\n", "1\n1,0 2,0\n", "2\n1,0\n0,0 1,0\n"})
    EXPECT_EQ(code_of([&] { (void)io::parse_matrix_text(bad); }), ErrorCode::parse_error) << bad;
}

TEST(Files, AtomicWriteCreatesDirectoriesAndReplaces) {
  TempDir dir;
  const auto path = dir / "nested/deeper/out.txt";
  io::atomic_write(path, "first");
  io::atomic_write(path, "second");
  EXPECT_EQ(io::read_file(path), "second");
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(path.parent_path())) ++entries;
  EXPECT_EQ(entries, 1u);
  EXPECT_EQ(code_of([&] { (void)io::read_file(dir / "missing"); }), ErrorCode::io_error);
  write(dir / "plain", "x");
  EXPECT_EQ(code_of([&] { io::atomic_write(dir / "plain/child.txt", "y"); }), ErrorCode::io_error);
}

TEST(Json, ComplexAndFamilyEncodings) {
  EXPECT_EQ(io::complex_from_json(json(2.5)), Complex{2.5});
  EXPECT_EQ(io::complex_from_json(json::array({1.0, -1.0})), (Complex{1.0, -1.0}));
  EXPECT_EQ(code_of([] { (void)io::complex_from_json(json::array({1.0})); }), ErrorCode::parse_error);
  const auto fam = io::family_from_json(io::to_json(SymbolFamily::root_perturbed(3, 2.0)));
  EXPECT_EQ(fam.kind, SymbolFamily::Kind::root_perturbed);
  EXPECT_EQ(fam.m, 3);
  EXPECT_DOUBLE_EQ(fam.rate, 2.0);
  EXPECT_EQ(code_of([] { (void)io::family_from_json(json{{"name", "mystery"}}); }), ErrorCode::invalid_family);
  EXPECT_EQ(code_of([] { (void)io::family_from_json(json{{"name", "constant"}}); }), ErrorCode::parse_error);
}

// ---------------------------------------------------------------- config

TEST(Config, ParsesAndEchoes) {
  const auto cfg = runner::parse_config(harmonic_config());
  EXPECT_EQ(cfg.name, "harmonic_run");
  EXPECT_EQ(cfg.horizons, (std::vector<int>{10, 20, 40}));
  EXPECT_EQ(cfg.seed, 3u);
  EXPECT_EQ(cfg.operations.size(), 3u);
  EXPECT_EQ(cfg.operations[2].params["cross_check"], false);
  EXPECT_EQ(cfg.echo["diagnostics"]["tol"], 1e-9);
}

TEST(Config, RejectsInvalidInput) {
  auto expect_parse_error = [](json j, const char* what) {
    EXPECT_EQ(code_of([&] { (void)runner::parse_config(j); }), ErrorCode::parse_error) << what;
  };
  auto j = harmonic_config();
  j["diagnostics"]["horizons"] = {40, 20, 10};
  expect_parse_error(j, "decreasing horizons");
  j = harmonic_config();
  j["diagnostics"]["horizons"] = {10, 20};
  expect_parse_error(j, "two horizons");
  j = harmonic_config();
  j["diagnostics"]["tol"] = -1.0;
  expect_parse_error(j, "negative tol");
  j = harmonic_config();
  j["diagnostics"]["epsilons"] = {0.0};
  expect_parse_error(j, "zero epsilon");
  j = harmonic_config();
  j["surprise"] = 1;
  expect_parse_error(j, "unknown key");
  j = harmonic_config();
  j["operations"][0]["op"] = "transmogrify";
  expect_parse_error(j, "unknown op");
  j = harmonic_config();
  j["operations"][0]["probe"] = "nobody";
  expect_parse_error(j, "unknown probe");
  j = harmonic_config();
  j["operations"] = json::array();
  expect_parse_error(j, "no operations");
  j = harmonic_config();
  j["probes"].push_back({{"name", "one"}, {"kind", "unit"}});
  expect_parse_error(j, "duplicate probe");
  j = harmonic_config();
  j["name"] = "../escape";
  expect_parse_error(j, "path in name");
  j = harmonic_config();
  j["operator"]["space"] = "l2";
  expect_parse_error(j, "bad space");
  j = harmonic_config();
  j["operator"] = {{"kind", "matrix"}};
  expect_parse_error(j, "matrix without entries");
}

TEST(Config, MatrixFileResolvesRelativeToConfig) {
  TempDir dir;
  battery::Rng rng(4);
  write(dir / "mats/t.txt", io::format_matrix_text(battery::contraction(rng, 4, 0).entries));
  json j{{"name", "m"},
         {"operator", {{"kind", "matrix"}, {"matrix_file", "mats/t.txt"}}},
         {"operations", json::array({{{"op", "halfsum"}}})}};
  write(dir / "cfg.json", j.dump());
  const auto cfg = runner::load_config(dir / "cfg.json");
  EXPECT_EQ(cfg.op.entries.rows(), 4);
  write(dir / "broken.json", "{ not json");
  EXPECT_EQ(code_of([&] { (void)runner::load_config(dir / "broken.json"); }), ErrorCode::parse_error);
  EXPECT_EQ(code_of([&] { (void)runner::load_config(dir / "absent.json"); }), ErrorCode::io_error);
}

// ---------------------------------------------------------------- runner

TEST(Runner, HarmonicConfigMeetsExpectations) {
  const auto out = runner::run_config(runner::parse_config(harmonic_config()));
  EXPECT_TRUE(out.pass) << out.report.dump(2);
  ASSERT_EQ(out.csv.size(), 1u);
  const auto& table = out.csv.begin()->second;
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 1 + 3 * 2);
  EXPECT_EQ(out.report["schema_version"], runner::kSchemaVersion);
  EXPECT_FALSE(out.report.contains("elapsed_seconds"));
  EXPECT_TRUE(out.timing.contains("elapsed_seconds"));
}

TEST(Runner, FailedExpectationFailsTheRun) {
  auto j = harmonic_config();
  j["operations"][0]["expect"] = "saturating";
  const auto out = runner::run_config(runner::parse_config(j));
  EXPECT_FALSE(out.pass);
  EXPECT_EQ(out.report["results"][0]["expect_met"], false);
}

TEST(Runner, ContractionHalfSumListsEveryEigenvalue) {
  battery::Rng rng(17);
  const auto T = battery::contraction(rng, 4, 1);
  json j{{"name", "hs"},
         {"operator", {{"kind", "matrix"}, {"entries", io::matrix_json(T.entries)}}},
         {"operations", json::array({{{"op", "halfsum"}, {"expect", true}}, {{"op", "spectrum"}}})}};
  const auto out = runner::run_config(runner::parse_config(j));
  EXPECT_TRUE(out.pass);
  EXPECT_EQ(out.report["results"][0]["result"]["spectrum"]["eigenvalues"].size(), 4u);
  EXPECT_EQ(out.report["results"][1]["result"]["power_bounded"], true);
}

TEST(Runner, MatrixOnlyOperationsRejectDiagonalOperators) {
  auto j = harmonic_config();
  j["operations"] = json::array({{{"op", "ktz"}}});
  EXPECT_EQ(code_of([&] { (void)runner::run_config(runner::parse_config(j)); }), ErrorCode::invalid_argument);
}

TEST(Runner, ReportsAreDeterministic) {
  const auto a = runner::run_config(runner::parse_config(harmonic_config()));
  const auto b = runner::run_config(runner::parse_config(harmonic_config()));
  EXPECT_EQ(a.report.dump(2), b.report.dump(2));
  EXPECT_EQ(a.csv, b.csv);
}

TEST(Runner, ExitCodeMapping) {
  EXPECT_EQ(runner::exit_code_for(ErrorCode::io_error), 3);
  EXPECT_EQ(runner::exit_code_for(ErrorCode::parse_error), 2);
  EXPECT_EQ(runner::exit_code_for(ErrorCode::invalid_family), 2);
  EXPECT_EQ(runner::exit_code_for(ErrorCode::not_power_bounded), 1);
}

// ----------------------------------------------------------- certificates

TEST(Certificate, LadderRoundTrip) {
  const auto check = runner::verify_certificate(ladder_certificate({{2, 1}, {5, 3}, {9, 6}}));
  EXPECT_EQ(check.ladder.size(), 3u);
  EXPECT_EQ(check.prefix_mismatch, 0.0);
  ASSERT_TRUE(check.test.has_value());
  EXPECT_TRUE(check.ladder_detected);
}

TEST(Certificate, TamperedPrefixIsRejected) {
  auto cert = ladder_certificate({{2, 1}, {5, 3}});
  cert["ladder"][1]["prefix"][1] = json::array({0.0, 0.0});  // true value is 2
  const auto check = runner::verify_certificate(cert);
  EXPECT_GT(check.prefix_mismatch, 1.0);
  EXPECT_FALSE(check.ladder_detected);
  EXPECT_FALSE(check.reason.empty());
}

TEST(Certificate, ShortOrMalformedCertificates) {
  const auto single = runner::verify_certificate(ladder_certificate({{2, 1}}));
  EXPECT_FALSE(single.ladder_detected);
  EXPECT_EQ(single.reason, "certificate holds fewer than two ladder entries");

  auto wrong = ladder_certificate({{2, 1}, {4, 3}});
  wrong["format"] = "something-else";
  EXPECT_EQ(code_of([&] { (void)runner::verify_certificate(wrong); }), ErrorCode::parse_error);
  auto reversed = ladder_certificate({{2, 1}, {4, 3}});
  reversed["pairs"][0] = json::array({1, 2});
  EXPECT_EQ(code_of([&] { (void)runner::verify_certificate(reversed); }), ErrorCode::parse_error);
  auto missing = ladder_certificate({{2, 1}, {4, 3}});
  missing.erase("tol");
  EXPECT_EQ(code_of([&] { (void)runner::verify_certificate(missing); }), ErrorCode::parse_error);
}

// -------------------------------------------------------------------- cli

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(cli(""), 2);
  EXPECT_EQ(cli("demo"), 2);
  EXPECT_EQ(cli("demo no_such_demo"), 2);
  EXPECT_EQ(cli("demo ktz --tol -1"), 2);
  EXPECT_EQ(cli("run"), 2);
  EXPECT_EQ(cli("verify-certificate x.json --samples 10"), 2);
  EXPECT_EQ(cli("--help"), 0);
}

TEST(Cli, DemoWritesReportAndTimingSidecar) {
  TempDir dir;
  EXPECT_EQ(cli("demo ktz --out-dir " + dir.path().string()), 0);
  EXPECT_TRUE(fs::exists(dir / "demo_ktz.json"));
  EXPECT_TRUE(fs::exists(dir / "demo_ktz.timing.json"));
  EXPECT_FALSE(fs::exists(dir / "demo_ktz.ktz.csv"));
  EXPECT_EQ(cli("demo ktz --csv --out-dir " + dir.path().string()), 0);
  bool any_csv = false;
  for (const auto& e : fs::directory_iterator(dir.path())) any_csv = any_csv || e.path().extension() == ".csv";
  EXPECT_TRUE(any_csv);
}

TEST(Cli, ConfigRunsAndExitCodes) {
  TempDir dir;
  const auto out = dir.path().string();
  // configs live apart from the reports, which share their file names
  const auto cfg_dir = dir / "cfg";
  auto cfg = [&](const char* f) { return (cfg_dir / f).string(); };
  write(cfg_dir / "ok.json", harmonic_config("ok").dump());
  EXPECT_EQ(cli("run --config " + cfg("ok.json") + " --csv --json --out-dir " + out), 0);
  EXPECT_TRUE(fs::exists(dir / "ok.json"));
  EXPECT_TRUE(fs::exists(dir / "ok.1_compactness_one.csv"));

  auto failing = harmonic_config("failing");
  failing["operations"][1]["expect"] = true;
  write(cfg_dir / "failing_cfg.json", failing.dump());
  EXPECT_EQ(cli("run --config " + cfg("failing_cfg.json") + " --out-dir " + out), 1);

  auto bad = harmonic_config("bad");
  bad["diagnostics"]["horizons"] = {400, 200, 100};
  write(cfg_dir / "bad.json", bad.dump());
  EXPECT_EQ(cli("run --config " + cfg("bad.json") + " --out-dir " + out), 2);

  EXPECT_EQ(cli("run --config " + cfg("absent.json") + " --out-dir " + out), 3);
  write(dir / "blocker", "x");
  EXPECT_EQ(cli("run --config " + cfg("ok.json") + " --out-dir " + (dir / "blocker/sub").string()), 3);
}

TEST(Cli, VerifyCertificateExitCodes) {
  TempDir dir;
  write(dir / "good.json", ladder_certificate({{2, 1}, {5, 3}}).dump());
  write(dir / "short.json", ladder_certificate({{2, 1}}).dump());
  write(dir / "junk.json", "{]");
  const auto out = " --out-dir " + dir.path().string();
  EXPECT_EQ(cli("verify-certificate " + (dir / "good.json").string() + out), 0);
  EXPECT_TRUE(fs::exists(dir / "verify_certificate.json"));
  EXPECT_EQ(cli("verify-certificate " + (dir / "short.json").string() + out), 1);
  EXPECT_EQ(cli("verify-certificate " + (dir / "junk.json").string() + out), 2);
  EXPECT_EQ(cli("verify-certificate " + (dir / "none.json").string() + out), 3);
}

TEST(Cli, RerunsAreByteIdentical) {
  TempDir a, b;
  write(a / "cfg.json", harmonic_config("det").dump());
  for (const auto* d : {&a, &b}) {
    ASSERT_EQ(cli("run --config " + (a / "cfg.json").string() + " --json --csv --out-dir " + d->path().string()), 0);
    ASSERT_EQ(cli("demo halfsum --seed 9 --out-dir " + d->path().string()), 0);
  }
  for (const char* f : {"det.json", "det.1_compactness_one.csv", "demo_halfsum.json"})
    EXPECT_EQ(io::read_file(a / f), io::read_file(b / f)) << f;
  EXPECT_EQ(cli("demo halfsum --seed 10 --out-dir " + b.path().string()), 0);
  EXPECT_NE(io::read_file(a / "demo_halfsum.json"), io::read_file(b / "demo_halfsum.json"));
}
