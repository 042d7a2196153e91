#pragma once

// Cesaro means A_n = (1/n) sum_{k<n} T^k, mean-ergodic projections onto
// fix(T) along rg(I - T), and mean-ergodicity verdicts for matrices and for
// unimodular diagonal operators on c / c0.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aplab/error.hpp"
#include "aplab/linalg.hpp"
#include "aplab/operators.hpp"
#include "aplab/seqspace.hpp"

namespace aplab {

inline FiniteVector cesaro(const MatrixOperator& op, const FiniteVector& x, int n) {
  if (n < 1) throw Error(ErrorCode::invalid_argument, "Cesaro index must be >= 1");
  if (x.size() != op.dim()) throw Error(ErrorCode::dimension_mismatch, "vector length differs from N");
  Eigen::VectorXcd term = x.coords;
  Eigen::VectorXcd sum = term;
  for (int k = 1; k < n; ++k) {
    term = op.entries * term;
    sum += term;
  }
  return FiniteVector(sum / static_cast<double>(n), x.norm_tag);
}

/// The operators A_n for each n in `ns` (ascending), from one pass of powers.
inline std::vector<Eigen::MatrixXcd> cesaro_matrices(const MatrixOperator& op, std::span<const int> ns) {
  std::vector<Eigen::MatrixXcd> out;
  if (ns.empty()) return out;
  if (!std::is_sorted(ns.begin(), ns.end()) || ns.front() < 1)
    throw Error(ErrorCode::invalid_argument, "Cesaro indices must be ascending and >= 1");
  const auto N = op.dim();
  Eigen::MatrixXcd power = Eigen::MatrixXcd::Identity(N, N);
  Eigen::MatrixXcd sum = power;
  std::size_t next = 0;
  for (int k = 1; next < ns.size(); ++k) {
    while (next < ns.size() && ns[next] == k) out.push_back(sum / static_cast<double>(k)), ++next;
    power = op.entries * power;
    sum += power;
  }
  return out;
}

/// Closed form per coordinate: x_k if a_k = 1, else x_k (1 - a_k^n) / (n (1 - a_k)).
inline SeqVector cesaro(const DiagonalOperator& op, const SeqVector& x, std::int64_t n) {
  if (n < 1) throw Error(ErrorCode::invalid_argument, "Cesaro index must be >= 1");
  const DiagonalSymbol sym = op.symbol;
  auto factor = [n](double angle, Complex a_n) -> Complex {
    if (angle == 0.0) return {1.0, 0.0};
    const Complex a = std::polar(1.0, angle);
    return (Complex{1.0} - a_n) / (static_cast<double>(n) * (Complex{1.0} - a));
  };
  const Complex limit = x.limit() * factor(sym.power_limit_angle(1), sym.power_limit(n));
  TailCertificate tail = x.tail();
  const double extra = std::abs(x.limit()) * 0.5 * static_cast<double>(n - 1) * sym.tail().constant;
  if (extra > 0.0) {
    tail.exponent = tail.constant > 0.0 ? std::min(tail.exponent, sym.tail().exponent) : sym.tail().exponent;
    tail.constant += extra;
  }
  auto oracle = [sym, x, n, factor](std::int64_t k) {
    return x.coord(k) * factor(sym.power_angle(1, k), sym.power(n, k));
  };
  return SeqVector(std::move(oracle), x.space() == SpaceTag::c0 ? Complex{} : limit, tail,
                   x.norm_bound(), x.space());
}

struct ErgodicDecomposition {
  MatrixOperator projection;
  std::vector<FiniteVector> fix_basis;
  std::vector<FiniteVector> range_basis;
  double residual = 0.0;       // max of ||P^2 - P||, ||TP - P||, ||PT - P||
  double rate_constant = 0.0;  // max over sampled n of n ||A_n - P||
  double basis_condition = 1.0;
};

namespace detail {

inline std::vector<FiniteVector> columns(const Eigen::MatrixXcd& basis, NormTag tag) {
  std::vector<FiniteVector> out;
  for (Eigen::Index j = 0; j < basis.cols(); ++j) out.emplace_back(basis.col(j), tag);
  return out;
}

inline linalg::SpectrumReport require_power_bounded(const MatrixOperator& op, double tol) {
  auto spec = linalg::spectrum(op.entries, tol);
  if (!spec.power_bounded())
    throw Error(ErrorCode::not_power_bounded,
                "spectral radius above 1 or a defective peripheral eigenvalue");
  return spec;
}

}  // namespace detail

/// Spectral projection onto ker(I - T) along rg(I - T) for a power-bounded matrix.
inline ErgodicDecomposition mean_ergodic_projection(const MatrixOperator& op, double tol = 1e-9) {
  const auto spec = detail::require_power_bounded(op, tol);
  const auto N = op.dim();
  const auto* at_one = spec.cluster_at(Complex{1.0});
  const int fix_dim = at_one ? at_one->algebraic : 0;
  const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(N, N);
  const auto split = linalg::kernel_range_split(I - op.entries, fix_dim);

  ErgodicDecomposition dec;
  dec.projection = MatrixOperator(split.projection, op.norm_tag);
  dec.fix_basis = detail::columns(split.kernel_basis, op.norm_tag);
  dec.range_basis = detail::columns(split.range_basis, op.norm_tag);
  dec.basis_condition = split.basis_condition;
  const auto& P = split.projection;
  const auto& T = op.entries;
  dec.residual = std::max({linalg::operator_norm(P * P - P, op.norm_tag),
                           linalg::operator_norm(T * P - P, op.norm_tag),
                           linalg::operator_norm(P * T - P, op.norm_tag)});
  if (dec.residual > std::sqrt(tol))
    throw Error(ErrorCode::unreachable_tolerance, "projection identities fail at the requested tolerance");

  static constexpr int kSampled[] = {16, 64, 256};
  const auto means = cesaro_matrices(op, kSampled);
  for (std::size_t i = 0; i < means.size(); ++i)
    dec.rate_constant = std::max(dec.rate_constant,
                                 kSampled[i] * linalg::operator_norm(means[i] - P, op.norm_tag));
  return dec;
}

enum class MeanErgodicReason { fix_separates, limit_functional_obstruction, finite_dim, cesaro_converged };

inline std::string to_string(MeanErgodicReason r) {
  switch (r) {
    case MeanErgodicReason::fix_separates: return "fix-separates";
    case MeanErgodicReason::limit_functional_obstruction: return "limit-functional-obstruction";
    case MeanErgodicReason::finite_dim: return "finite-dim";
    case MeanErgodicReason::cesaro_converged: return "cesaro-converged";
  }
  return "unknown";
}

struct MeanErgodicVerdict {
  bool is_mean_ergodic = false;
  MeanErgodicReason reason = MeanErgodicReason::finite_dim;
  std::vector<std::pair<std::string, double>> evidence;

  double evidence_value(const std::string& key) const {
    for (const auto& [k, v] : evidence)
      if (k == key) return v;
    throw Error(ErrorCode::invalid_argument, "no evidence entry " + key);
  }
};

/// dim ker(I - T) against dim ker(I - T'), cross-checked with ||A_n - P||.
inline MeanErgodicVerdict fix_separation_check(const MatrixOperator& op, double tol = 1e-9) {
  const auto spec = detail::require_power_bounded(op, tol);
  const auto N = op.dim();
  const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(N, N);
  const double rank_tol = std::sqrt(tol);
  const int dim_fix = static_cast<int>(N) - linalg::numerical_rank(I - op.entries, rank_tol);
  const int dim_fix_adjoint = static_cast<int>(N) - linalg::numerical_rank(I - op.entries.adjoint(), rank_tol);
  const auto dec = mean_ergodic_projection(op, tol);
  static constexpr int kCheck[] = {1000};
  const double cesaro_error =
      linalg::operator_norm(cesaro_matrices(op, kCheck).front() - dec.projection.entries, op.norm_tag);

  MeanErgodicVerdict v;
  v.is_mean_ergodic = dim_fix == dim_fix_adjoint;
  v.reason = MeanErgodicReason::fix_separates;
  v.evidence = {{"dim_fix", dim_fix},
                {"dim_fix_adjoint", dim_fix_adjoint},
                {"cesaro_error_n1000", cesaro_error},
                {"rate_constant", dec.rate_constant},
                {"spectral_radius", spec.spectral_radius}};
  return v;
}

/// Symbolic verdict for a unimodular multiplication operator, with numeric
/// Cesaro evidence.
inline MeanErgodicVerdict diagonal_mean_ergodic_verdict(const DiagonalOperator& op, double tol = 1e-9) {
  const auto& sym = op.symbol;
  const bool limit_is_one = sym.power_limit_angle(1) == 0.0;
  MeanErgodicVerdict v;
  static constexpr std::int64_t kNs[] = {10, 100, 1000};

  if (op.space == SpaceTag::c0) {
    // On c0 the means converge coordinatewise with uniform tail control; evidence
    // on the probe a_inf 1 - a, whose limit is 0.
    const SeqVector one = SeqVector::constant(1.0);
    const DiagonalOperator on_c{sym, SpaceTag::c};
    const SeqVector probe = lin_comb({sym.limit_value(), Complex{-1.0}}, {one, apply(on_c, one)}).as_c0(tol);
    v.is_mean_ergodic = true;
    v.reason = MeanErgodicReason::cesaro_converged;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto n : kNs) {
      const double norm = sup_norm(cesaro(op, probe, n), tol).value;
      v.evidence.emplace_back("probe_cesaro_norm_n" + std::to_string(n), norm);
      const double lx = std::log(static_cast<double>(n)), ly = std::log(std::max(norm, 1e-300));
      sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
    }
    const double cnt = static_cast<double>(std::size(kNs));
    v.evidence.emplace_back("fitted_exponent", (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx));
    return v;
  }

  if (limit_is_one) {
    const auto fam = sym.family();
    const bool identity = fam && fam->kind == SymbolFamily::Kind::constant;
    if (identity) {
      v.is_mean_ergodic = true;
      v.reason = MeanErgodicReason::fix_separates;
      v.evidence.emplace_back("fix_is_whole_space", 1.0);
      return v;
    }
    if (!sym.avoids_limit())
      throw Error(ErrorCode::unsupported_symbol, "cannot decide whether a_k = 1 infinitely often");
    // fix(T) = {0}, yet the limit functional is a nonzero fixed point of T'.
    v.is_mean_ergodic = false;
    v.reason = MeanErgodicReason::limit_functional_obstruction;
    v.evidence.emplace_back("dim_fix", 0.0);
    const SeqVector one = SeqVector::constant(1.0);
    for (auto n : kNs) {
      const SeqVector mean = cesaro(op, one, n);
      v.evidence.emplace_back("limit_functional_of_mean_n" + std::to_string(n), std::abs(mean.limit()));
      v.evidence.emplace_back("sup_norm_of_mean_n" + std::to_string(n), sup_norm(mean, tol).value);
    }
    return v;
  }

  // a_inf != 1: distance of 1 from the closed symbol range, certified through the tail.
  const double gap_limit = std::abs(Complex{1.0} - sym.limit_value());
  const auto K = sym.tail().index_for(gap_limit / 2.0);
  if (K > kMaxScanIndex) throw Error(ErrorCode::unreachable_tolerance, "symbol tail too slow");
  double dist = gap_limit - sym.tail().bound(static_cast<double>(K));
  for (std::int64_t k = 1; k <= K; ++k) {
    if (sym.power_angle(1, k) == 0.0) continue;
    dist = std::min(dist, std::abs(Complex{1.0} - sym.value(k)));
  }
  v.is_mean_ergodic = true;
  v.reason = MeanErgodicReason::cesaro_converged;
  v.evidence.emplace_back("symbol_distance_from_one", dist);
  const SeqVector one = SeqVector::constant(1.0);
  for (auto n : kNs) {
    v.evidence.emplace_back("operator_bound_n" + std::to_string(n), 2.0 / (static_cast<double>(n) * dist));
    v.evidence.emplace_back("sup_norm_of_mean_n" + std::to_string(n), sup_norm(cesaro(op, one, n), tol).value);
  }
  return v;
}

struct DecompositionParts {
  FiniteVector fix_part;
  FiniteVector range_part;
  double residual = 0.0;
};

/// x = Px + (x - Px), with T(Px) = Px and x - Px in span(range_basis).
inline DecompositionParts decomposition_check(const MatrixOperator& op, const FiniteVector& x, double tol = 1e-9) {
  if (x.size() != op.dim()) throw Error(ErrorCode::dimension_mismatch, "vector length differs from N");
  const auto dec = mean_ergodic_projection(op, tol);
  DecompositionParts parts;
  parts.fix_part = FiniteVector(dec.projection.entries * x.coords, x.norm_tag);
  parts.range_part = FiniteVector(x.coords - parts.fix_part.coords, x.norm_tag);
  Eigen::MatrixXcd range(op.dim(), static_cast<Eigen::Index>(dec.range_basis.size()));
  for (std::size_t j = 0; j < dec.range_basis.size(); ++j)
    range.col(static_cast<Eigen::Index>(j)) = dec.range_basis[j].coords;
  const double fixed_defect = (op.entries * parts.fix_part.coords - parts.fix_part.coords).norm();
  const double span_defect = linalg::span_residual(range, parts.range_part.coords);
  parts.residual = std::max(fixed_defect, span_defect);
  if (parts.residual > tol * std::max(1.0, x.coords.norm()))
    throw Error(ErrorCode::decomposition_failure, "x - Px is not in rg(I - T) or Px is not fixed");
  return parts;
}

}  // namespace aplab
