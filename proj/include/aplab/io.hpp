#pragma once

// JSON encodings of the library's reports, the plain-text complex matrix
// format, and atomic file output.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

#include "json.hpp"

#include "aplab/ergodic.hpp"
#include "aplab/error.hpp"
#include "aplab/gallery.hpp"
#include "aplab/jdlg.hpp"
#include "aplab/linalg.hpp"
#include "aplab/operators.hpp"
#include "aplab/orbits.hpp"
#include "aplab/seqspace.hpp"

namespace aplab::io {

using json = nlohmann::ordered_json;

// ------------------------------------------------------------------ files

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::io_error, "cannot read " + path.string());
  return buf.str();
}

/// Writes `content` to a sibling temporary file and renames it over `path`.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create directory " + path.parent_path().string());
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io_error, "cannot open " + tmp.string());
    out << content;
    out.flush();
    if (!out) {
      std::filesystem::remove(tmp, ec);
      throw Error(ErrorCode::io_error, "cannot write " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::io_error, "cannot rename onto " + path.string());
  }
}

// --------------------------------------------------------- matrix format
//
//   # comment
//   N
//   re,im re,im ...   (N pairs per row, N rows)

inline Eigen::MatrixXcd parse_matrix_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    rows.push_back(line);
  }
  if (rows.empty()) throw Error(ErrorCode::parse_error, "matrix file is empty");
  long long n = 0;
  {
    std::istringstream head(rows.front());
    std::string extra;
    if (!(head >> n) || (head >> extra) || n < 1)
      throw Error(ErrorCode::parse_error, "matrix header must be a single positive N");
  }
  if (static_cast<long long>(rows.size()) - 1 != n)
    throw Error(ErrorCode::parse_error, "expected " + std::to_string(n) + " matrix rows");
  Eigen::MatrixXcd a(n, n);
  for (long long i = 0; i < n; ++i) {
    std::istringstream row(rows[static_cast<std::size_t>(i + 1)]);
    std::string token;
    long long j = 0;
    while (row >> token) {
      if (j >= n) throw Error(ErrorCode::parse_error, "too many entries in row " + std::to_string(i + 1));
      const auto comma = token.find(',');
      if (comma == std::string::npos) throw Error(ErrorCode::parse_error, "entry '" + token + "' is not re,im");
      try {
        std::size_t used_re = 0, used_im = 0;
        const std::string re = token.substr(0, comma), im = token.substr(comma + 1);
        const double x = std::stod(re, &used_re);
        const double y = std::stod(im, &used_im);
        if (used_re != re.size() || used_im != im.size()) throw std::invalid_argument(token);
        a(i, j) = {x, y};
      } catch (const std::logic_error&) {
        throw Error(ErrorCode::parse_error, "entry '" + token + "' is not re,im");
      }
      ++j;
    }
    if (j != n) throw Error(ErrorCode::parse_error, "row " + std::to_string(i + 1) + " has " + std::to_string(j) + " entries");
  }
  return a;
}

inline std::string format_matrix_text(const Eigen::MatrixXcd& a) {
  std::ostringstream out;
  out.precision(17);
  out << a.rows() << '\n';
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out << (j ? " " : "") << a(i, j).real() << ',' << a(i, j).imag();
    out << '\n';
  }
  return out.str();
}

inline Eigen::MatrixXcd read_matrix_file(const std::filesystem::path& path) {
  return parse_matrix_text(read_file(path));
}

// ------------------------------------------------------------ encodings

inline json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

inline Complex complex_from_json(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw Error(ErrorCode::parse_error, "complex numbers are [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline json complex_list(const std::vector<Complex>& zs) {
  json out = json::array();
  for (Complex z : zs) out.push_back(complex_json(z));
  return out;
}

inline json matrix_json(const Eigen::MatrixXcd& a) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < a.cols(); ++j) row.push_back(complex_json(a(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Eigen::MatrixXcd matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw Error(ErrorCode::parse_error, "matrix entries must be a nonempty array");
  const auto n = static_cast<Eigen::Index>(j.size());
  Eigen::MatrixXcd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n)
      throw Error(ErrorCode::parse_error, "matrix entries must be square");
    for (Eigen::Index k = 0; k < n; ++k) a(i, k) = complex_from_json(row[static_cast<std::size_t>(k)]);
  }
  return a;
}

inline json to_json(const NormEstimate& e) { return {{"value", e.value}, {"error_bound", e.error_bound}}; }

inline json to_json(const TailCertificate& t) { return {{"constant", t.constant}, {"exponent", t.exponent}}; }

inline json to_json(const SymbolFamily& f) {
  json j{{"name", to_string(f.kind)}};
  switch (f.kind) {
    case SymbolFamily::Kind::harmonic: break;
    case SymbolFamily::Kind::root_perturbed:
      j["m"] = f.m;
      j["rate"] = f.rate;
      break;
    case SymbolFamily::Kind::constant: j["angle"] = f.angle; break;
    case SymbolFamily::Kind::custom: break;
  }
  return j;
}

inline SymbolFamily family_from_json(const json& j) {
  if (!j.is_object() || !j.contains("name") || !j["name"].is_string())
    throw Error(ErrorCode::parse_error, "symbol family needs a name");
  const auto name = j["name"].get<std::string>();
  try {
    if (name == "harmonic") return SymbolFamily::harmonic();
    if (name == "root_perturbed") return SymbolFamily::root_perturbed(j.at("m").get<int>(), j.value("rate", 1.0));
    if (name == "constant") return SymbolFamily::constant(j.at("angle").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("symbol family: ") + e.what());
  }
  throw Error(ErrorCode::invalid_family, "unknown symbol family '" + name + "'");
}

/// Prefix of coordinates 1..length with the limit and tail certificate.
inline json to_json(const SeqVector& v, std::int64_t length) {
  json prefix = json::array();
  for (std::int64_t k = 1; k <= length; ++k) prefix.push_back(complex_json(v.coord(k)));
  return {{"space", std::string(to_string(v.space()))},
          {"prefix", std::move(prefix)},
          {"limit", complex_json(v.limit())},
          {"tail", to_json(v.tail())}};
}

inline json to_json(const FiniteVector& v) {
  json coords = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) coords.push_back(complex_json(v.coords(i)));
  return {{"norm", std::string(to_string(v.norm_tag))}, {"coords", std::move(coords)}};
}

inline json to_json(const CompactnessReport& r) {
  json per_eps = json::array();
  for (std::size_t e = 0; e < r.epsilons.size(); ++e)
    per_eps.push_back({{"epsilon", r.epsilons[e]},
                       {"packing", r.packing[e]},
                       {"covering", r.covering[e]},
                       {"growth_per_doubling", r.growth_per_doubling[e]}});
  return {{"horizons", r.horizons}, {"series", std::move(per_eps)}, {"verdict", to_string(r.verdict)}};
}

inline json to_json(const linalg::SpectrumReport& s) {
  json clusters = json::array();
  for (const auto& c : s.clusters)
    clusters.push_back({{"center", complex_json(c.center)},
                        {"algebraic", c.algebraic},
                        {"geometric", c.geometric},
                        {"semisimple", c.semisimple},
                        {"peripheral", c.peripheral}});
  return {{"tol", s.tol},
          {"eigenvalues", complex_list(s.eigenvalues)},
          {"spectral_radius", s.spectral_radius},
          {"clusters", std::move(clusters)},
          {"power_bounded", s.power_bounded()}};
}

inline json to_json(const MeanErgodicVerdict& v) {
  json evidence = json::object();
  for (const auto& [k, x] : v.evidence) evidence[k] = x;
  return {{"is_mean_ergodic", v.is_mean_ergodic}, {"reason", to_string(v.reason)}, {"evidence", std::move(evidence)}};
}

inline json to_json(const ErgodicDecomposition& d) {
  return {{"projection", matrix_json(d.projection.entries)},
          {"fix_dimension", d.fix_basis.size()},
          {"range_dimension", d.range_basis.size()},
          {"residual", d.residual},
          {"rate_constant", d.rate_constant},
          {"basis_condition", d.basis_condition}};
}

inline json to_json(const JdlgSplit& s) {
  return {{"projection", matrix_json(s.projection.entries)},
          {"rev_dimension", s.rev_basis.size()},
          {"aws_dimension", s.aws_basis.size()},
          {"aws_spectral_radius", s.aws_spectral_radius},
          {"group_bound", s.group_bound},
          {"group_horizon", s.group_horizon},
          {"residual", s.residual},
          {"basis_condition", s.basis_condition}};
}

inline json to_json(const DiagonalJdlg& d) {
  json j{{"aap_description", d.aap_description},
         {"rev_equals_aap", d.rev_equals_aap},
         {"p_is_identity_on_aap", d.p_is_identity_on_aap},
         {"aap_is_c0", d.aap_is_c0},
         {"aap_is_whole_space", d.aap_is_whole_space},
         {"cross_checked", d.cross_checked}};
  if (d.cross_checked) {
    j["c0_probe_verdict"] = to_string(d.c0_probe_verdict);
    j["one_probe_verdict"] = to_string(d.one_probe_verdict);
  }
  return j;
}

inline json to_json(const KtzResult& r) {
  return {{"decay_curve", r.decay_curve},
          {"limit_projection", matrix_json(r.limit_projection.entries)},
          {"limit_error", r.limit_error},
          {"pass", r.pass}};
}

inline json to_json(const HalfSum& h) {
  return {{"S", matrix_json(h.S.entries)}, {"spectrum", to_json(h.spectrum)}, {"peripheral_at_one", h.peripheral_at_one}};
}

inline json to_json(const DiagonalHalfSum& h) {
  double max_modulus = 0.0;
  for (Complex z : h.sampled) max_modulus = std::max(max_modulus, std::abs(z));
  return {{"sampled_count", h.sampled.size()},
          {"max_sampled_modulus", max_modulus},
          {"limit", complex_json(h.limit)},
          {"peripheral_at_one", h.peripheral_at_one}};
}

inline json to_json(const GalleryProbe& p) {
  return {{"probe", p.name}, {"limit", complex_json(p.limit)}, {"diagnostic", to_json(p.report)}};
}

inline json to_json(const Example33Report& r) {
  return {{"isometry_defect", r.isometry_defect},
          {"inverse_defect", r.inverse_defect},
          {"fix_trivial", r.fix_trivial},
          {"mean_ergodic", to_json(r.mean_ergodic)},
          {"difference_limit", r.difference_limit},
          {"one_orbit", to_json(r.one_orbit)},
          {"c0_orbit", to_json(r.c0_orbit)},
          {"pass", r.pass}};
}

inline json to_json(const Example43Report& r) {
  return {{"m", r.m},
          {"range_m_probe", to_json(r.range_m_probe)},
          {"range_one_probe", to_json(r.range_one_probe)},
          {"pass", r.pass}};
}

inline json to_json(const LadderTest& t) {
  return {{"unconditional_bound", t.unconditional_bound},
          {"cauchy_defect", t.cauchy_defect},
          {"first_partial_sum", t.first_partial_sum},
          {"ladder_detected", t.ladder_detected},
          {"samples", t.subset_norms.size()}};
}

inline json to_json(const WitnessAudit& a) {
  json log = json::array();
  for (const auto& s : a.selection_log)
    log.push_back({{"S", s.s}, {"T", s.t}, {"threshold", s.threshold}, {"products_checked", s.products_checked}});
  json norms = json::array();
  for (const auto& n : a.entry_norms) norms.push_back(to_json(n));
  double max_sum = 0.0;
  for (double s : a.subset_sums) max_sum = std::max(max_sum, s);
  return {{"status", to_string(a.status)},
          {"reason", a.reason},
          {"delta", a.delta},
          {"half_delta", a.half_delta},
          {"M", a.M},
          {"x_norm", a.x_norm},
          {"pool_size", a.pool_size},
          {"index_zero_reading", a.index_zero_reading},
          {"ladder_length", a.ladder.size()},
          {"entry_norms", std::move(norms)},
          {"entries_bounded_below", a.entries_bounded_below},
          {"non_convergent", a.non_convergent},
          {"selection_log", std::move(log)},
          {"subset_samples", a.subset_sums.size()},
          {"subset_bound", a.subset_bound},
          {"max_subset_sum", max_sum},
          {"subsets_over_bound", a.subsets_over_bound},
          {"subset_histogram", a.subset_histogram}};
}

}  // namespace aplab::io
