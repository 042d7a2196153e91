#pragma once

// Splitting E = E_rev (+) E_aws of a power-bounded matrix, peripheral-spectrum
// checks, the half-sum transform S = (I + T)/2, and the symbolic splitting of
// the supported diagonal families.

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "aplab/ergodic.hpp"
#include "aplab/error.hpp"
#include "aplab/linalg.hpp"
#include "aplab/operators.hpp"
#include "aplab/orbits.hpp"

namespace aplab {

using linalg::SpectrumReport;

struct JdlgSplit {
  MatrixOperator projection;  // onto E_rev along E_aws
  std::vector<FiniteVector> rev_basis;
  std::vector<FiniteVector> aws_basis;
  Eigen::MatrixXcd rev_action;  // T restricted to E_rev, in rev_basis coordinates
  double aws_spectral_radius = 0.0;
  double group_bound = 1.0;  // sup_{|n| <= group_horizon} ||rev_action^n||
  int group_horizon = 0;
  double residual = 0.0;     // max of ||P^2 - P||, ||TP - PT||
  double basis_condition = 1.0;
};

/// Group surrogate: rev_action is checked for unimodular eigenvalues and its
/// positive and negative powers are bounded up to `group_horizon`.
inline JdlgSplit jdlg_split(const MatrixOperator& op, double tol = 1e-9, int group_horizon = 1000) {
  const auto spec = detail::require_power_bounded(op, tol);
  const auto N = op.dim();
  const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(N, N);
  Eigen::MatrixXcd annihilator = I;
  for (const auto& c : spec.clusters)
    if (c.peripheral) annihilator = annihilator * (op.entries - c.center * I);
  const int rev_dim = spec.peripheral_dimension();
  const auto split = linalg::kernel_range_split(annihilator, rev_dim);

  JdlgSplit out;
  out.projection = MatrixOperator(split.projection, op.norm_tag);
  out.rev_basis = detail::columns(split.kernel_basis, op.norm_tag);
  out.aws_basis = detail::columns(split.range_basis, op.norm_tag);
  out.basis_condition = split.basis_condition;
  const auto& P = split.projection;
  out.residual = std::max(linalg::operator_norm(P * P - P, op.norm_tag),
                          linalg::operator_norm(op.entries * P - P * op.entries, op.norm_tag));
  if (out.residual > std::sqrt(tol))
    throw Error(ErrorCode::unreachable_tolerance, "splitting identities fail at the requested tolerance");
  for (const auto& c : spec.clusters)
    if (!c.peripheral) out.aws_spectral_radius = std::max(out.aws_spectral_radius, std::abs(c.center));

  // Kernel basis from the SVD is orthonormal, so V^H T V is the restriction.
  const Eigen::MatrixXcd& V = split.kernel_basis;
  out.rev_action = V.adjoint() * op.entries * V;
  out.group_horizon = group_horizon;
  if (rev_dim > 0) {
    for (Complex lambda : linalg::eigenvalues(out.rev_action))
      if (std::abs(std::abs(lambda) - 1.0) > std::sqrt(tol))
        throw Error(ErrorCode::decomposition_failure, "reversible part has a non-unimodular eigenvalue");
    const Eigen::MatrixXcd inverse = out.rev_action.inverse();
    Eigen::MatrixXcd forward = Eigen::MatrixXcd::Identity(rev_dim, rev_dim);
    Eigen::MatrixXcd backward = forward;
    for (int n = 1; n <= group_horizon; ++n) {
      forward = out.rev_action * forward;
      backward = inverse * backward;
      out.group_bound = std::max({out.group_bound, linalg::operator_norm(forward, NormTag::euclidean),
                                  linalg::operator_norm(backward, NormTag::euclidean)});
    }
  }
  return out;
}

struct KtzResult {
  std::vector<double> decay_curve;  // n -> ||T^n (I - T)||, n = 0..horizon
  MatrixOperator limit_projection;
  double limit_error = 0.0;  // ||T^horizon - P||
  bool pass = false;
};

/// Requires sigma(T) on the unit circle to be contained in {1}. Passes when the
/// curve is nonincreasing over its last tenth and both the curve and
/// ||T^n - P|| end at or below tol.
inline KtzResult ktz_check(const MatrixOperator& op, int horizon, double tol = 1e-9) {
  if (horizon < 1) throw Error(ErrorCode::invalid_argument, "horizon must be >= 1");
  const auto spec = detail::require_power_bounded(op, tol);
  for (const auto& c : spec.clusters)
    if (c.peripheral && std::abs(c.center - Complex{1.0}) > std::sqrt(tol))
      throw Error(ErrorCode::peripheral_spectrum, "peripheral spectrum is not contained in {1}");
  const auto dec = mean_ergodic_projection(op, tol);
  const auto N = op.dim();
  KtzResult r;
  r.limit_projection = dec.projection;
  Eigen::MatrixXcd term = Eigen::MatrixXcd::Identity(N, N) - op.entries;
  Eigen::MatrixXcd power = Eigen::MatrixXcd::Identity(N, N);
  r.decay_curve.push_back(linalg::operator_norm(term, op.norm_tag));
  for (int n = 1; n <= horizon; ++n) {
    term = op.entries * term;
    power = op.entries * power;
    r.decay_curve.push_back(linalg::operator_norm(term, op.norm_tag));
  }
  r.limit_error = linalg::operator_norm(power - dec.projection.entries, op.norm_tag);
  const std::size_t tail_start = r.decay_curve.size() - std::max<std::size_t>(2, r.decay_curve.size() / 10);
  bool decreasing = true;
  for (std::size_t i = tail_start; i + 1 < r.decay_curve.size(); ++i)
    if (r.decay_curve[i + 1] > r.decay_curve[i] * (1.0 + 1e-12) + 1e-300) decreasing = false;
  r.pass = decreasing && r.decay_curve.back() <= tol && r.limit_error <= tol;
  return r;
}

struct PeripheralCheck {
  bool almost_periodic = false;
  JdlgSplit split;
  std::vector<CompactnessVerdict> probe_verdicts;
};

/// Orbit compactness through the splitting: E_rev (+) E_aws spans, T^n -> 0 on
/// E_aws, and orbit diagnostics on random probes saturate.
inline PeripheralCheck countable_peripheral_check(const MatrixOperator& op, double tol = 1e-9,
                                                  unsigned seed = 1, int probes = 3) {
  PeripheralCheck out;
  out.split = jdlg_split(op, tol);
  const auto N = op.dim();
  const bool spans = static_cast<Eigen::Index>(out.split.rev_basis.size() + out.split.aws_basis.size()) == N &&
                     std::isfinite(out.split.basis_condition);
  const bool stable = out.split.aws_spectral_radius < 1.0;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  bool saturating = true;
  static constexpr std::array<int, 3> kHorizons{100, 200, 400};
  for (int p = 0; p < probes; ++p) {
    Eigen::VectorXcd v(N);
    for (Eigen::Index i = 0; i < N; ++i) v(i) = {gauss(rng), gauss(rng)};
    const FiniteVector x(v, op.norm_tag);
    const std::array<double, 1> eps{0.5 * x.norm()};
    const auto report = compactness_diagnostic(op, x, eps, kHorizons, 1e-12);
    out.probe_verdicts.push_back(report.verdict);
    saturating = saturating && report.verdict == CompactnessVerdict::saturating;
  }
  out.almost_periodic = spans && stable && saturating;
  return out;
}

struct HalfSum {
  MatrixOperator S;
  SpectrumReport spectrum;
  bool peripheral_at_one = false;  // sigma(S) on the unit circle is contained in {1}
};

inline HalfSum half_sum(const MatrixOperator& op, double tol = 1e-9) {
  if (op.norm() > 1.0 + tol) throw Error(ErrorCode::not_contraction, "||T|| exceeds 1");
  const auto N = op.dim();
  HalfSum out;
  out.S = MatrixOperator(0.5 * (Eigen::MatrixXcd::Identity(N, N) + op.entries), op.norm_tag);
  out.spectrum = linalg::spectrum(out.S.entries, tol);
  out.peripheral_at_one = true;
  for (Complex lambda : out.spectrum.eigenvalues) {
    if (std::abs(lambda) >= 1.0 + tol) out.peripheral_at_one = false;
    if (std::abs(lambda) >= 1.0 - tol && std::abs(lambda - Complex{1.0}) > std::sqrt(tol))
      out.peripheral_at_one = false;
  }
  return out;
}

struct DiagonalHalfSum {
  std::vector<Complex> sampled;  // (1 + a_k)/2 for k = 1..count
  Complex limit;
  bool peripheral_at_one = false;
};

/// The multiplication operator (I + T)/2 has symbol (1 + a_k)/2, of modulus |cos(theta_k / 2)|.
inline DiagonalHalfSum half_sum(const DiagonalOperator& op, std::int64_t count = 1000, double tol = 1e-9) {
  DiagonalHalfSum out;
  const Complex one{1.0};
  for (std::int64_t k = 1; k <= count; ++k) out.sampled.push_back(0.5 * (one + op.symbol.value(k)));
  out.limit = 0.5 * (one + op.symbol.limit_value());
  auto ok = [tol](Complex z) { return std::abs(z) < 1.0 - tol || std::abs(z - Complex{1.0}) <= std::sqrt(tol); };
  out.peripheral_at_one = ok(out.limit) && std::all_of(out.sampled.begin(), out.sampled.end(), ok);
  return out;
}

struct DiagonalJdlg {
  std::string aap_description;
  bool rev_equals_aap = false;
  bool p_is_identity_on_aap = false;
  bool aap_is_c0 = false;
  bool aap_is_whole_space = false;
  // Numeric cross-check at epsilon = 1, horizons (50, 100, 200).
  bool cross_checked = false;
  CompactnessVerdict c0_probe_verdict = CompactnessVerdict::inconclusive;
  CompactnessVerdict one_probe_verdict = CompactnessVerdict::inconclusive;
};

/// Only the declared families are analysed; anything else is reported as unsupported.
inline DiagonalJdlg diagonal_jdlg(const DiagonalOperator& op, bool cross_check = true, double tol = 1e-9) {
  const auto& fam = op.symbol.family();
  if (!fam || fam->kind == SymbolFamily::Kind::custom)
    throw Error(ErrorCode::unsupported_symbol, "diagonal splitting only covers the declared symbol families");
  DiagonalJdlg out;
  if (fam->kind == SymbolFamily::Kind::constant) {
    out.aap_description = "whole space: T is the rotation by a single angle";
    out.rev_equals_aap = true;
    out.p_is_identity_on_aap = true;
    out.aap_is_whole_space = true;
    out.aap_is_c0 = op.space == SpaceTag::c0;
    return out;
  }
  // a_k -> xi with a_k != xi: E_aap = E_rev = c0 and P is the identity there.
  out.rev_equals_aap = true;
  out.p_is_identity_on_aap = true;
  out.aap_is_c0 = true;
  out.aap_is_whole_space = op.space == SpaceTag::c0;
  out.aap_description = op.space == SpaceTag::c0 ? "E_aap = E_rev = c0 (the whole space)"
                                                 : "E_aap = E_rev = c0, a proper subspace of c";
  if (cross_check) {
    const std::array<double, 1> eps{1.0};
    const std::array<int, 3> horizons{50, 100, 200};
    const DiagonalOperator on_c{op.symbol, SpaceTag::c};
    const SeqVector one = SeqVector::constant(1.0);
    // a - xi 1 lies in c0.
    const SeqVector probe = lin_comb({Complex{1.0}, -op.symbol.limit_value()}, {apply(on_c, one), one}).as_c0(tol);
    const DiagonalOperator on_c0{op.symbol, SpaceTag::c0};
    out.c0_probe_verdict = compactness_diagnostic(on_c0, probe, eps, horizons, tol).verdict;
    if (op.space == SpaceTag::c)
      out.one_probe_verdict = compactness_diagnostic(on_c, one, eps, horizons, tol).verdict;
    out.cross_checked = true;
  }
  return out;
}

}  // namespace aplab
