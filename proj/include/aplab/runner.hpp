#pragma once

// Config-driven experiment runner behind the command-line tool: builds
// operators and probes from JSON, runs the requested diagnostics, and packages
// deterministic reports, CSV tables and witness certificates.

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aplab/battery.hpp"
#include "aplab/ergodic.hpp"
#include "aplab/error.hpp"
#include "aplab/gallery.hpp"
#include "aplab/io.hpp"
#include "aplab/jdlg.hpp"
#include "aplab/operators.hpp"
#include "aplab/orbits.hpp"

namespace aplab::runner {

using io::json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kCertificateFormat = "aplab-witness-certificate";
inline constexpr int kCertificateVersion = 1;
inline constexpr std::int64_t kCertificatePrefix = 32;

// ------------------------------------------------------------------ specs

/// Named probe. Kinds: one, constant, unit, prefix, one_minus_symbol (diagonal
/// operators) and vector (matrices).
struct ProbeSpec {
  std::string name;
  std::string kind = "one";
  std::int64_t index = 1;
  Complex value{1.0};
  std::vector<Complex> coords;  // prefix or vector entries
  Complex limit{};
};

struct OperatorSpec {
  std::string kind = "diagonal";  // diagonal | matrix
  SymbolFamily family;
  SpaceTag space = SpaceTag::c;
  NormTag norm = NormTag::euclidean;
  std::optional<std::string> matrix_file;
  Eigen::MatrixXcd entries;
};

struct OperationSpec {
  std::string op;
  std::string probe;
  json params = json::object();
  std::optional<json> expect;
};

struct RunConfig {
  std::string name = "run";
  OperatorSpec op;
  std::vector<ProbeSpec> probes;
  std::vector<double> epsilons{1.0};
  std::vector<int> horizons{100, 200, 400};
  double tol = 1e-9;
  std::uint64_t seed = 1;
  std::vector<OperationSpec> operations;
  json echo;  // normalized config written back into the report
};

namespace detail {

[[noreturn]] inline void config_error(const std::string& what) { throw Error(ErrorCode::parse_error, what); }

template <class T>
T get(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    config_error(std::string("config key '") + key + "' has the wrong type");
  }
}

inline void only_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) config_error(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) config_error("unknown key '" + key + "' in " + where);
  }
}

inline std::vector<Complex> complex_vector(const json& j, const std::string& where) {
  if (!j.is_array()) config_error(where + " must be an array of [re, im]");
  std::vector<Complex> out;
  for (const auto& z : j) out.push_back(io::complex_from_json(z));
  return out;
}

}  // namespace detail

inline json to_json(const ProbeSpec& p) {
  json j{{"name", p.name}, {"kind", p.kind}};
  if (p.kind == "unit") j["index"] = p.index;
  if (p.kind == "constant") j["value"] = io::complex_json(p.value);
  if (p.kind == "prefix") {
    j["prefix"] = io::complex_list(p.coords);
    j["limit"] = io::complex_json(p.limit);
  }
  if (p.kind == "vector") j["coords"] = io::complex_list(p.coords);
  return j;
}

inline ProbeSpec probe_from_json(const json& j) {
  detail::only_keys(j, {"name", "kind", "index", "value", "prefix", "limit", "coords"}, "probe");
  ProbeSpec p;
  p.kind = detail::get<std::string>(j, "kind", "one");
  p.name = detail::get<std::string>(j, "name", p.kind);
  if (p.kind == "unit") {
    p.index = detail::get<std::int64_t>(j, "index", 1);
    if (p.index < 1) detail::config_error("unit probe index must be >= 1");
  } else if (p.kind == "constant") {
    if (!j.contains("value")) detail::config_error("constant probe needs a value");
    p.value = io::complex_from_json(j["value"]);
  } else if (p.kind == "prefix") {
    if (!j.contains("prefix")) detail::config_error("prefix probe needs a prefix");
    p.coords = detail::complex_vector(j["prefix"], "prefix");
    p.limit = j.contains("limit") ? io::complex_from_json(j["limit"]) : Complex{};
  } else if (p.kind == "vector") {
    if (!j.contains("coords")) detail::config_error("vector probe needs coords");
    p.coords = detail::complex_vector(j["coords"], "coords");
    if (p.coords.empty()) detail::config_error("vector probe needs at least one coordinate");
  } else if (p.kind != "one" && p.kind != "one_minus_symbol") {
    detail::config_error("unknown probe kind '" + p.kind + "'");
  }
  return p;
}

inline SpaceTag space_from_string(const std::string& s) {
  if (s == "c") return SpaceTag::c;
  if (s == "c0") return SpaceTag::c0;
  detail::config_error("space must be 'c' or 'c0'");
}

inline NormTag norm_from_string(const std::string& s) {
  if (s == "sup") return NormTag::sup;
  if (s == "euclidean") return NormTag::euclidean;
  detail::config_error("norm must be 'sup' or 'euclidean'");
}

/// Relative matrix paths are resolved against `base_dir`.
inline OperatorSpec operator_from_json(const json& j, const std::filesystem::path& base_dir) {
  detail::only_keys(j, {"kind", "family", "space", "norm", "matrix_file", "entries"}, "operator");
  OperatorSpec s;
  s.kind = detail::get<std::string>(j, "kind", "diagonal");
  if (s.kind == "diagonal") {
    if (!j.contains("family")) detail::config_error("diagonal operator needs a family");
    s.family = io::family_from_json(j["family"]);
    s.space = space_from_string(detail::get<std::string>(j, "space", "c"));
  } else if (s.kind == "matrix") {
    s.norm = norm_from_string(detail::get<std::string>(j, "norm", "euclidean"));
    if (j.contains("matrix_file")) {
      auto path = std::filesystem::path(detail::get<std::string>(j, "matrix_file", ""));
      if (path.is_relative()) path = base_dir / path;
      s.matrix_file = path.string();
      s.entries = io::read_matrix_file(path);
    } else if (j.contains("entries")) {
      s.entries = io::matrix_from_json(j["entries"]);
    } else {
      detail::config_error("matrix operator needs matrix_file or entries");
    }
  } else {
    detail::config_error("operator kind must be 'diagonal' or 'matrix'");
  }
  return s;
}

inline json to_json(const OperatorSpec& s) {
  if (s.kind == "diagonal")
    return {{"kind", s.kind}, {"family", io::to_json(s.family)}, {"space", std::string(to_string(s.space))}};
  json j{{"kind", s.kind}, {"norm", std::string(to_string(s.norm))}};
  if (s.matrix_file) j["matrix_file"] = std::filesystem::path(*s.matrix_file).filename().string();
  j["entries"] = io::matrix_json(s.entries);
  return j;
}

inline const std::vector<std::string>& known_operations() {
  static const std::vector<std::string> ops{"compactness", "difference_compactness", "mean_ergodic", "projection",
                                            "decomposition", "jdlg", "ktz", "halfsum", "spectrum", "witness"};
  return ops;
}

inline RunConfig parse_config(const json& j, const std::filesystem::path& base_dir = ".") {
  detail::only_keys(j, {"name", "operator", "probes", "diagnostics", "operations"}, "config");
  RunConfig cfg;
  cfg.name = detail::get<std::string>(j, "name", "run");
  if (cfg.name.empty() || cfg.name.find_first_of("/\\") != std::string::npos)
    detail::config_error("name must be a plain file stem");
  if (!j.contains("operator")) detail::config_error("config needs an operator");
  cfg.op = operator_from_json(j["operator"], base_dir);

  if (j.contains("probes")) {
    if (!j["probes"].is_array()) detail::config_error("probes must be an array");
    for (const auto& p : j["probes"]) cfg.probes.push_back(probe_from_json(p));
  }
  for (std::size_t a = 0; a < cfg.probes.size(); ++a)
    for (std::size_t b = a + 1; b < cfg.probes.size(); ++b)
      if (cfg.probes[a].name == cfg.probes[b].name) detail::config_error("duplicate probe name " + cfg.probes[a].name);

  if (j.contains("diagnostics")) {
    const auto& d = j["diagnostics"];
    detail::only_keys(d, {"epsilons", "horizons", "tol", "seed"}, "diagnostics");
    cfg.epsilons = detail::get<std::vector<double>>(d, "epsilons", cfg.epsilons);
    cfg.horizons = detail::get<std::vector<int>>(d, "horizons", cfg.horizons);
    cfg.tol = detail::get<double>(d, "tol", cfg.tol);
    cfg.seed = detail::get<std::uint64_t>(d, "seed", cfg.seed);
  }
  if (cfg.epsilons.empty()) detail::config_error("need at least one epsilon");
  for (double e : cfg.epsilons)
    if (!(e > 0.0)) detail::config_error("epsilons must be positive");
  if (cfg.horizons.size() < 3) detail::config_error("need at least three horizons");
  if (cfg.horizons.front() < 1) detail::config_error("horizons must be positive");
  for (std::size_t i = 0; i + 1 < cfg.horizons.size(); ++i)
    if (cfg.horizons[i + 1] <= cfg.horizons[i]) detail::config_error("horizons must be strictly increasing");
  if (!(cfg.tol > 0.0)) detail::config_error("tol must be positive");

  if (!j.contains("operations") || !j["operations"].is_array() || j["operations"].empty())
    detail::config_error("config needs a nonempty operations array");
  for (const auto& o : j["operations"]) {
    if (!o.is_object() || !o.contains("op") || !o["op"].is_string()) detail::config_error("operation needs an op name");
    OperationSpec spec;
    spec.op = o["op"].get<std::string>();
    const auto& ops = known_operations();
    if (std::find(ops.begin(), ops.end(), spec.op) == ops.end()) detail::config_error("unknown operation " + spec.op);
    spec.probe = detail::get<std::string>(o, "probe", "");
    if (!spec.probe.empty() && std::none_of(cfg.probes.begin(), cfg.probes.end(),
                                            [&](const ProbeSpec& p) { return p.name == spec.probe; }))
      detail::config_error("operation refers to unknown probe " + spec.probe);
    if (o.contains("expect")) spec.expect = o["expect"];
    for (const auto& [key, value] : o.items())
      if (key != "op" && key != "probe" && key != "expect") spec.params[key] = value;
    cfg.operations.push_back(std::move(spec));
  }

  json probes = json::array();
  for (const auto& p : cfg.probes) probes.push_back(to_json(p));
  json ops = json::array();
  for (const auto& o : cfg.operations) {
    json e{{"op", o.op}};
    if (!o.probe.empty()) e["probe"] = o.probe;
    for (const auto& [k, v] : o.params.items()) e[k] = v;
    if (o.expect) e["expect"] = *o.expect;
    ops.push_back(std::move(e));
  }
  cfg.echo = {{"name", cfg.name},
              {"operator", to_json(cfg.op)},
              {"probes", std::move(probes)},
              {"diagnostics", {{"epsilons", cfg.epsilons}, {"horizons", cfg.horizons}, {"tol", cfg.tol}, {"seed", cfg.seed}}},
              {"operations", std::move(ops)}};
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  const std::string text = io::read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::parse_error, std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

// ----------------------------------------------------------- construction

inline DiagonalOperator build_diagonal(const OperatorSpec& s) {
  return {DiagonalSymbol::from_family(s.family), s.space};
}

inline MatrixOperator build_matrix(const OperatorSpec& s) { return MatrixOperator(s.entries, s.norm); }

inline SeqVector build_sequence(const ProbeSpec& p, const DiagonalOperator& op) {
  SeqVector v = SeqVector::zero();
  if (p.kind == "one") v = SeqVector::constant(1.0);
  else if (p.kind == "constant") v = SeqVector::constant(p.value);
  else if (p.kind == "unit") v = SeqVector::unit(p.index, SpaceTag::c);
  else if (p.kind == "prefix") v = SeqVector::from_prefix(p.coords, p.limit, SpaceTag::c);
  else if (p.kind == "one_minus_symbol") {
    const SeqVector one = SeqVector::constant(1.0);
    v = difference(one, apply(DiagonalOperator{op.symbol, SpaceTag::c}, one));
  } else {
    throw Error(ErrorCode::invalid_argument, "probe '" + p.name + "' is not a sequence probe");
  }
  if (op.space == SpaceTag::c0) return v.as_c0(0.0);
  return v.limit() == Complex{} ? v.as_c0(0.0) : v.as_c();
}

inline FiniteVector build_finite(const ProbeSpec& p, const MatrixOperator& op) {
  if (p.kind != "vector") throw Error(ErrorCode::invalid_argument, "probe '" + p.name + "' is not a vector probe");
  if (static_cast<Eigen::Index>(p.coords.size()) != op.dim())
    throw Error(ErrorCode::dimension_mismatch, "probe '" + p.name + "' length differs from N");
  Eigen::VectorXcd v(op.dim());
  for (Eigen::Index i = 0; i < op.dim(); ++i) v(i) = p.coords[static_cast<std::size_t>(i)];
  return FiniteVector(v, op.norm_tag);
}

// ---------------------------------------------------------------- outcome

struct Outcome {
  json report;
  std::map<std::string, std::string> csv;  // file suffix -> table
  std::optional<json> certificate;
  json timing = json::object();
  bool pass = true;
};

class Assertions {
 public:
  void check(const std::string& name, bool ok) {
    items_.push_back({{"name", name}, {"pass", ok}});
    pass_ = pass_ && ok;
  }
  bool pass() const { return pass_; }
  json to_json() const { return items_; }

 private:
  json items_ = json::array();
  bool pass_ = true;
};

inline std::string decay_csv(const std::vector<double>& curve) {
  std::ostringstream out;
  out.precision(17);
  out << "n,norm\n";
  for (std::size_t n = 0; n < curve.size(); ++n) out << n << ',' << curve[n] << '\n';
  return out.str();
}

// ------------------------------------------------------------ certificates

inline json make_certificate(const WitnessAudit& audit, const SymbolFamily& family, const ProbeSpec& probe,
                             double tol, std::uint64_t seed) {
  json pairs = json::array();
  for (const auto& s : audit.selection_log) pairs.push_back(json::array({s.s, s.t}));
  json ladder = json::array();
  for (const auto& e : audit.ladder) ladder.push_back(io::to_json(e, kCertificatePrefix));
  return {{"format", kCertificateFormat},
          {"version", kCertificateVersion},
          {"tol", tol},
          {"seed", seed},
          {"operator", {{"family", io::to_json(family)}, {"space", "c"}}},
          {"probe", to_json(probe)},
          {"delta", audit.delta},
          {"M", audit.M},
          {"status", to_string(audit.status)},
          {"pairs", std::move(pairs)},
          {"ladder", std::move(ladder)}};
}

struct CertificateCheck {
  std::vector<SeqVector> ladder;
  double prefix_mismatch = 0.0;
  std::optional<LadderTest> test;
  std::string reason;
  bool ladder_detected = false;
};

/// Rebuilds every ladder entry x - T^{S-T} x from the recorded family, probe
/// and pairs, compares it with the stored prefixes, and runs bp_test.
inline CertificateCheck verify_certificate(const json& cert, int samples = 200) {
  CertificateCheck out;
  try {
    if (cert.value("format", std::string{}) != kCertificateFormat)
      throw Error(ErrorCode::parse_error, "not a witness certificate");
    if (cert.value("version", 0) != kCertificateVersion)
      throw Error(ErrorCode::parse_error, "unsupported certificate version");
    const double tol = cert.at("tol").get<double>();
    const auto seed = cert.at("seed").get<std::uint64_t>();
    const DiagonalOperator op{DiagonalSymbol::from_family(io::family_from_json(cert.at("operator").at("family"))),
                              SpaceTag::c};
    const ProbeSpec probe = probe_from_json(cert.at("probe"));
    const SeqVector x = build_sequence(probe, op);
    const auto& pairs = cert.at("pairs");
    const auto& stored = cert.at("ladder");
    if (!pairs.is_array() || !stored.is_array() || pairs.size() != stored.size())
      throw Error(ErrorCode::parse_error, "pairs and ladder lengths differ");
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto s = pairs[i].at(0).get<std::int64_t>();
      const auto t = pairs[i].at(1).get<std::int64_t>();
      if (s <= t) throw Error(ErrorCode::parse_error, "pair exponents must satisfy S > T");
      SeqVector entry = witness_entry(op, x, s - t);
      const auto prefix = detail::complex_vector(stored[i].at("prefix"), "prefix");
      for (std::size_t k = 0; k < prefix.size(); ++k)
        out.prefix_mismatch = std::max(out.prefix_mismatch, std::abs(prefix[k] - entry.coord(static_cast<std::int64_t>(k + 1))));
      out.ladder.push_back(std::move(entry));
    }
    if (out.ladder.size() < 2) {
      out.reason = "certificate holds fewer than two ladder entries";
      return out;
    }
    out.test = bp_test(out.ladder, samples, tol, seed);
    out.ladder_detected = out.test->ladder_detected && out.prefix_mismatch <= 1e-12;
    if (out.prefix_mismatch > 1e-12) out.reason = "stored prefixes disagree with the rebuilt ladder";
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("malformed certificate: ") + e.what());
  }
  return out;
}

inline json to_json(const CertificateCheck& c) {
  json j{{"ladder_length", c.ladder.size()},
         {"prefix_mismatch", c.prefix_mismatch},
         {"ladder_detected", c.ladder_detected},
         {"reason", c.reason}};
  if (c.test) j["bp_test"] = io::to_json(*c.test);
  return j;
}

// ---------------------------------------------------------------- reports

inline json report_header(const std::string& command, const std::string& name, std::uint64_t seed, double tol) {
  return {{"schema_version", kSchemaVersion}, {"command", command}, {"name", name}, {"seed", seed}, {"tol", tol}};
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline Outcome finish(json report, Assertions asserts, json results, double seconds) {
  Outcome out;
  report["results"] = std::move(results);
  report["assertions"] = asserts.to_json();
  report["pass"] = asserts.pass();
  out.report = std::move(report);
  out.pass = asserts.pass();
  out.timing = {{"elapsed_seconds", seconds}};
  return out;
}

// ------------------------------------------------------------------ demos

inline const std::vector<std::string>& demo_names() {
  static const std::vector<std::string> names{"example33", "example43", "witness", "ktz", "halfsum"};
  return names;
}

struct DemoOptions {
  std::uint64_t seed = 1;
  double tol = 1e-9;
  int witness_count = 20;
  int witness_horizon = 10'000;
};

inline Outcome demo_example33(const DemoOptions& o) {
  Stopwatch clock;
  const auto fam = SymbolFamily::harmonic();
  const auto op = example_3_3(fam);
  const std::array<int, 3> horizons{100, 200, 400};
  const auto r = example_3_3_report(op, 1.0, horizons, 1000, o.tol);
  Assertions a;
  a.check("isometry", r.isometry_defect <= 2.0 * o.tol);
  a.check("invertible", r.inverse_defect <= 1e-12);
  a.check("fix_trivial", r.fix_trivial);
  a.check("not_mean_ergodic_on_c", !r.mean_ergodic.is_mean_ergodic);
  a.check("differences_in_c0", r.difference_limit <= o.tol);
  a.check("orbit_of_one_growing", r.one_orbit.report.verdict == CompactnessVerdict::growing);
  a.check("c0_probe_saturating", r.c0_orbit.report.verdict == CompactnessVerdict::saturating);
  json cfg{{"family", io::to_json(fam)}, {"epsilon", 1.0}, {"horizons", horizons}, {"max_power", 1000}};
  auto report = report_header("demo", "example33", o.seed, o.tol);
  report["config"] = cfg;
  auto out = finish(std::move(report), a, io::to_json(r), clock.seconds());
  out.csv["one_orbit"] = r.one_orbit.report.csv();
  out.csv["c0_orbit"] = r.c0_orbit.report.csv();
  return out;
}

inline Outcome demo_example43(const DemoOptions& o) {
  Stopwatch clock;
  const auto fam = SymbolFamily::root_perturbed(2, 1.0);
  const auto op = example_4_3(fam);
  const std::array<int, 3> horizons{100, 200, 400};
  const auto r = example_4_3_report(op, 0.1, 1.0, horizons, o.tol);
  Assertions a;
  a.check("range_m_limit_zero", std::abs(r.range_m_probe.limit) <= o.tol);
  a.check("range_m_saturating", r.range_m_probe.report.verdict == CompactnessVerdict::saturating);
  a.check("one_minus_symbol_limit_two", std::abs(r.range_one_probe.limit - Complex{2.0}) <= o.tol);
  a.check("one_minus_symbol_growing", r.range_one_probe.report.verdict == CompactnessVerdict::growing);
  json cfg{{"family", io::to_json(fam)}, {"saturating_epsilon", 0.1}, {"growing_epsilon", 1.0}, {"horizons", horizons}};
  auto report = report_header("demo", "example43", o.seed, o.tol);
  report["config"] = cfg;
  auto out = finish(std::move(report), a, io::to_json(r), clock.seconds());
  out.csv["range_m_orbit"] = r.range_m_probe.report.csv();
  out.csv["one_minus_symbol_orbit"] = r.range_one_probe.report.csv();
  return out;
}

/// Witness audit plus bp_test on the certificate it emits.
inline Outcome witness_outcome(const SymbolFamily& fam, const ProbeSpec& probe, int count, int horizon,
                               double tol, std::uint64_t seed, const std::string& command, const std::string& name,
                               json cfg) {
  Stopwatch clock;
  const DiagonalOperator op{DiagonalSymbol::from_family(fam), SpaceTag::c};
  const SeqVector x = build_sequence(probe, op);
  WitnessOptions options;
  options.seed = seed;
  const auto audit = c0_witness(op, x, count, horizon, tol, options);
  const auto cert = make_certificate(audit, fam, probe, tol, seed);
  const auto check = verify_certificate(cert);
  Assertions a;
  a.check("status_complete", audit.status == WitnessStatus::complete);
  a.check("entries_bounded_below", audit.entries_bounded_below);
  a.check("subset_sums_bounded", !audit.subset_sums.empty() && audit.subsets_over_bound == 0);
  a.check("ladder_detected", check.ladder_detected);
  json results{{"audit", io::to_json(audit)}, {"certificate_check", to_json(check)}};
  auto report = report_header(command, name, seed, tol);
  report["config"] = std::move(cfg);
  auto out = finish(std::move(report), a, std::move(results), clock.seconds());
  out.certificate = cert;
  return out;
}

inline Outcome demo_witness(const DemoOptions& o) {
  const auto fam = SymbolFamily::harmonic();
  ProbeSpec probe;
  probe.name = "one";
  probe.kind = "one";
  json cfg{{"family", io::to_json(fam)}, {"probe", to_json(probe)}, {"count", o.witness_count},
           {"horizon", o.witness_horizon}};
  return witness_outcome(fam, probe, o.witness_count, o.witness_horizon, o.tol, o.seed, "demo", "witness",
                         std::move(cfg));
}

inline Outcome demo_ktz(const DemoOptions& o) {
  Stopwatch clock;
  const int horizon = 200;
  const auto op = MatrixOperator::diagonal({Complex{1.0}, Complex{0.9}});
  const auto r = ktz_check(op, horizon, o.tol);
  double closed_form_error = 0.0;
  for (int n = 0; n <= horizon; ++n)
    closed_form_error = std::max(closed_form_error, std::abs(r.decay_curve[static_cast<std::size_t>(n)] - 0.1 * std::pow(0.9, n)));
  Eigen::MatrixXcd jordan(2, 2);
  jordan << 1.0, 1.0, 0.0, 1.0;
  std::string rejection = "accepted";
  try {
    (void)ktz_check(MatrixOperator(jordan), horizon, o.tol);
  } catch (const Error& e) {
    rejection = std::string(to_string(e.code()));
  }
  Assertions a;
  a.check("closed_form_decay", closed_form_error <= 1e-12);
  a.check("limit_projection", r.limit_error <= o.tol);
  a.check("jordan_block_rejected", rejection == "not-power-bounded");
  json results{{"ktz", io::to_json(r)}, {"closed_form_error", closed_form_error}, {"jordan_block", rejection}};
  auto report = report_header("demo", "ktz", o.seed, o.tol);
  report["config"] = {{"matrix", io::matrix_json(op.entries)}, {"horizon", horizon}};
  auto out = finish(std::move(report), a, std::move(results), clock.seconds());
  out.csv["decay"] = decay_csv(r.decay_curve);
  return out;
}

inline Outcome demo_halfsum(const DemoOptions& o) {
  Stopwatch clock;
  const int samples = 100;
  const Eigen::Index n = 10;
  battery::Rng rng(o.seed);
  Assertions a;
  json battery = json::array();
  bool all = true;
  std::ostringstream table;
  table.precision(17);
  table << "sample,max_modulus_off_one,peripheral_at_one\n";
  for (int i = 0; i < samples; ++i) {
    const auto T = battery::contraction(rng, n, i);
    const auto h = half_sum(T, o.tol);
    double off_one = 0.0;
    for (Complex z : h.spectrum.eigenvalues)
      if (std::abs(z - Complex{1.0}) > o.tol) off_one = std::max(off_one, std::abs(z));
    all = all && h.peripheral_at_one;
    table << i << ',' << off_one << ',' << (h.peripheral_at_one ? 1 : 0) << '\n';
    battery.push_back({{"norm", T.norm()}, {"max_modulus_off_one", off_one}, {"peripheral_at_one", h.peripheral_at_one}});
  }
  a.check("matrix_battery_peripheral_at_one", all);
  const auto dh = half_sum(DiagonalOperator{DiagonalSymbol::from_family(SymbolFamily::harmonic()), SpaceTag::c}, 1000, o.tol);
  a.check("harmonic_symbol_peripheral_at_one", dh.peripheral_at_one);
  json results{{"matrices", std::move(battery)}, {"harmonic_symbol", io::to_json(dh)}};
  auto report = report_header("demo", "halfsum", o.seed, o.tol);
  report["config"] = {{"samples", samples}, {"dimension", n}};
  auto out = finish(std::move(report), a, std::move(results), clock.seconds());
  out.csv["battery"] = table.str();
  return out;
}

inline Outcome run_demo(const std::string& name, const DemoOptions& o) {
  if (name == "example33") return demo_example33(o);
  if (name == "example43") return demo_example43(o);
  if (name == "witness") return demo_witness(o);
  if (name == "ktz") return demo_ktz(o);
  if (name == "halfsum") return demo_halfsum(o);
  throw Error(ErrorCode::invalid_argument, "unknown demo '" + name + "'");
}

// -------------------------------------------------------------------- run

namespace detail {

inline bool expect_matches(const json& expect, const json& actual) { return expect == actual; }

inline const ProbeSpec& find_probe(const RunConfig& cfg, const std::string& name) {
  for (const auto& p : cfg.probes)
    if (p.name == name) return p;
  throw Error(ErrorCode::parse_error, "operation needs a probe");
}

template <class T>
T param(const json& params, const char* key, T fallback) {
  return get<T>(params, key, fallback);
}

}  // namespace detail

inline Outcome run_config(const RunConfig& cfg) {
  Stopwatch clock;
  Assertions asserts;
  json results = json::array();
  std::map<std::string, std::string> csv;
  std::optional<json> certificate;
  const bool diagonal = cfg.op.kind == "diagonal";
  std::optional<DiagonalOperator> dop;
  std::optional<MatrixOperator> mop;
  if (diagonal) dop = build_diagonal(cfg.op);
  else mop = build_matrix(cfg.op);

  int index = 0;
  for (const auto& o : cfg.operations) {
    ++index;
    const std::string label = std::to_string(index) + "_" + o.op + (o.probe.empty() ? "" : "_" + o.probe);
    json entry{{"op", o.op}};
    if (!o.probe.empty()) entry["probe"] = o.probe;
    json value;      // the quantity compared against "expect"
    json result;
    if (o.op == "compactness" || o.op == "difference_compactness") {
      const auto& p = detail::find_probe(cfg, o.probe);
      CompactnessReport r;
      const int h = cfg.horizons.back();
      if (diagonal) {
        const SeqVector x = build_sequence(p, *dop);
        const auto cloud = o.op == "compactness" ? orbit(*dop, x, h, cfg.tol) : difference_orbit(*dop, x, h, cfg.tol);
        r = compactness_report(cloud, cfg.epsilons, cfg.horizons);
      } else {
        const FiniteVector x = build_finite(p, *mop);
        const auto cloud = o.op == "compactness" ? orbit(*mop, x, h) : difference_orbit(*mop, x, h);
        r = compactness_report(cloud, cfg.epsilons, cfg.horizons);
      }
      result = io::to_json(r);
      value = to_string(r.verdict);
      csv[label] = r.csv();
    } else if (o.op == "mean_ergodic") {
      const auto v = diagonal ? diagonal_mean_ergodic_verdict(*dop, cfg.tol) : fix_separation_check(*mop, cfg.tol);
      result = io::to_json(v);
      value = v.is_mean_ergodic;
    } else if (o.op == "projection") {
      if (diagonal) throw Error(ErrorCode::invalid_argument, "projection needs a matrix operator");
      const auto d = mean_ergodic_projection(*mop, cfg.tol);
      result = io::to_json(d);
      asserts.check(label + ".residual", d.residual <= std::sqrt(cfg.tol));
      value = d.residual <= std::sqrt(cfg.tol);
    } else if (o.op == "decomposition") {
      if (diagonal) throw Error(ErrorCode::invalid_argument, "decomposition needs a matrix operator");
      const auto parts = decomposition_check(*mop, build_finite(detail::find_probe(cfg, o.probe), *mop), cfg.tol);
      result = {{"fix_part", io::to_json(parts.fix_part)},
                {"range_part", io::to_json(parts.range_part)},
                {"residual", parts.residual}};
      value = parts.residual;
    } else if (o.op == "jdlg") {
      if (diagonal) {
        const auto d = diagonal_jdlg(*dop, detail::param<bool>(o.params, "cross_check", true), cfg.tol);
        result = io::to_json(d);
        value = d.p_is_identity_on_aap;
      } else {
        const auto s = jdlg_split(*mop, cfg.tol, detail::param<int>(o.params, "group_horizon", 1000));
        result = io::to_json(s);
        value = s.residual <= std::sqrt(cfg.tol);
      }
    } else if (o.op == "ktz") {
      if (diagonal) throw Error(ErrorCode::invalid_argument, "ktz needs a matrix operator");
      const auto r = ktz_check(*mop, detail::param<int>(o.params, "horizon", 200), cfg.tol);
      result = io::to_json(r);
      value = r.pass;
      csv[label] = decay_csv(r.decay_curve);
    } else if (o.op == "halfsum") {
      if (diagonal) {
        const auto h = half_sum(*dop, detail::param<std::int64_t>(o.params, "count", 1000), cfg.tol);
        result = io::to_json(h);
        value = h.peripheral_at_one;
      } else {
        const auto h = half_sum(*mop, cfg.tol);
        result = io::to_json(h);
        value = h.peripheral_at_one;
      }
      asserts.check(label + ".peripheral_at_one", value.get<bool>());
    } else if (o.op == "spectrum") {
      if (diagonal) throw Error(ErrorCode::invalid_argument, "spectrum needs a matrix operator");
      const auto s = linalg::spectrum(mop->entries, cfg.tol);
      result = io::to_json(s);
      value = s.power_bounded();
    } else if (o.op == "witness") {
      if (!diagonal) throw Error(ErrorCode::invalid_argument, "witness needs a diagonal operator");
      const auto& p = detail::find_probe(cfg, o.probe);
      const int count = detail::param<int>(o.params, "count", 20);
      const int horizon = detail::param<int>(o.params, "horizon", 10'000);
      auto w = witness_outcome(cfg.op.family, p, count, horizon, cfg.tol, cfg.seed, "run", cfg.name, json::object());
      result = w.report["results"];
      value = w.report["results"]["audit"]["status"];
      certificate = w.certificate;
    }
    entry["result"] = std::move(result);
    if (o.expect) {
      const bool ok = detail::expect_matches(*o.expect, value);
      entry["expect"] = *o.expect;
      entry["expect_met"] = ok;
      asserts.check(label + ".expect", ok);
    }
    results.push_back(std::move(entry));
  }
  auto report = report_header("run", cfg.name, cfg.seed, cfg.tol);
  report["config"] = cfg.echo;
  auto out = finish(std::move(report), asserts, std::move(results), clock.seconds());
  out.csv = std::move(csv);
  out.certificate = std::move(certificate);
  return out;
}

// ----------------------------------------------------------------- output

struct OutputOptions {
  std::filesystem::path out_dir = ".";
  bool json = true;
  bool csv = false;
};

/// Writes <stem>.json, <stem>.timing.json, <stem>.<table>.csv and
/// <stem>.certificate.json as requested; returns the written paths.
inline std::vector<std::filesystem::path> write_outcome(const Outcome& out, const std::string& stem,
                                                        const OutputOptions& opts) {
  std::vector<std::filesystem::path> written;
  auto put = [&](const std::string& file, const std::string& content) {
    const auto path = opts.out_dir / file;
    io::atomic_write(path, content);
    written.push_back(path);
  };
  if (opts.json) put(stem + ".json", out.report.dump(2) + "\n");
  if (opts.csv)
    for (const auto& [suffix, table] : out.csv) put(stem + "." + suffix + ".csv", table);
  if (out.certificate) put(stem + ".certificate.json", out.certificate->dump(2) + "\n");
  put(stem + ".timing.json", out.timing.dump(2) + "\n");
  return written;
}

/// 0 success, 1 assertion failure, 2 usage or config, 3 I/O.
inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::io_error: return 3;
    case ErrorCode::parse_error:
    case ErrorCode::invalid_argument:
    case ErrorCode::invalid_family:
    case ErrorCode::unsupported_symbol:
    case ErrorCode::dimension_mismatch:
    case ErrorCode::tag_mismatch: return 2;
    default: return 1;
  }
}

}  // namespace aplab::runner
