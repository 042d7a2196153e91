// aplab: demo | run | verify-certificate
//
// Exit codes: 0 success, 1 assertion failure, 2 usage or config error, 3 I/O error.

#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "aplab/io.hpp"
#include "aplab/runner.hpp"

namespace {

using aplab::runner::json;

struct Common {
  std::string out_dir = ".";
  std::uint64_t seed = 1;
  bool seed_set = false;
  double tol = 0.0;
  bool want_json = false;
  bool want_csv = false;
};

aplab::runner::OutputOptions output_options(const Common& c) {
  aplab::runner::OutputOptions o;
  o.out_dir = c.out_dir;
  o.csv = c.want_csv;
  o.json = c.want_json || !c.want_csv;
  return o;
}

int emit(const aplab::runner::Outcome& out, const std::string& stem, const Common& c) {
  for (const auto& path : aplab::runner::write_outcome(out, stem, output_options(c))) std::cout << path.string() << '\n';
  std::cout << (out.pass ? "PASS " : "FAIL ") << stem << '\n';
  return out.pass ? 0 : 1;
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--out-dir", c.out_dir, "Directory for reports")->capture_default_str();
  cmd->add_option("--seed", c.seed, "Random seed")->each([&c](const std::string&) { c.seed_set = true; });
  cmd->add_option("--tol", c.tol, "Tolerance (must be positive)")->check(CLI::PositiveNumber);
  cmd->add_flag("--json", c.want_json, "Write the JSON report (default)");
  cmd->add_flag("--csv", c.want_csv, "Write CSV tables");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Almost periodic operator lab"};
  app.require_subcommand(1);

  Common common;
  std::string demo_name;
  std::string config_path;
  std::string certificate_path;
  int samples = 200;

  auto* demo = app.add_subcommand("demo", "Run a packaged scenario");
  demo->add_option("name", demo_name, "example33 | example43 | witness | ktz | halfsum")
      ->required()
      ->check(CLI::IsMember(aplab::runner::demo_names()));
  add_common(demo, common);

  auto* run = app.add_subcommand("run", "Run the operations listed in a config file");
  run->add_option("--config", config_path, "JSON config file")->required();
  add_common(run, common);

  auto* verify = app.add_subcommand("verify-certificate", "Re-run the ladder test on a witness certificate");
  verify->add_option("certificate", certificate_path, "Certificate file")->required();
  verify->add_option("--samples", samples, "Subset samples (>= 100)")->check(CLI::Range(100, 1'000'000));
  add_common(verify, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (demo->parsed()) {
      aplab::runner::DemoOptions o;
      o.seed = common.seed;
      if (common.tol > 0.0) o.tol = common.tol;
      return emit(aplab::runner::run_demo(demo_name, o), "demo_" + demo_name, common);
    }
    if (run->parsed()) {
      auto cfg = aplab::runner::load_config(config_path);
      if (common.seed_set) {
        cfg.seed = common.seed;
        cfg.echo["diagnostics"]["seed"] = common.seed;
      }
      if (common.tol > 0.0) {
        cfg.tol = common.tol;
        cfg.echo["diagnostics"]["tol"] = common.tol;
      }
      return emit(aplab::runner::run_config(cfg), cfg.name, common);
    }
    const json cert = [&] {
      try {
        return json::parse(aplab::io::read_file(certificate_path));
      } catch (const nlohmann::json::parse_error& e) {
        throw aplab::Error(aplab::ErrorCode::parse_error, std::string("certificate is not valid JSON: ") + e.what());
      }
    }();
    const auto check = aplab::runner::verify_certificate(cert, samples);
    aplab::runner::Outcome out;
    out.report = aplab::runner::report_header("verify-certificate", "verify_certificate",
                                              cert.value("seed", std::uint64_t{0}), cert.value("tol", 0.0));
    out.report["config"] = {{"certificate", std::filesystem::path(certificate_path).filename().string()},
                            {"samples", samples}};
    out.report["results"] = aplab::runner::to_json(check);
    out.report["pass"] = check.ladder_detected;
    out.pass = check.ladder_detected;
    return emit(out, "verify_certificate", common);
  } catch (const aplab::Error& e) {
    std::cerr << "error [" << aplab::to_string(e.code()) << "]: " << e.what() << '\n';
    return aplab::runner::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
