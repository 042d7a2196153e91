#pragma once

// Seeded random operators: power-bounded matrices with a prescribed
// semisimple unimodular part, contractions, and commuting families.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "aplab/operators.hpp"

namespace aplab::battery {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  int integer(int lo, int hi) { return lo + static_cast<int>(engine_() % static_cast<std::uint64_t>(hi - lo + 1)); }

  /// Box-Muller from the engine's raw output, so the stream does not depend
  /// on the standard library's distribution implementations.
  double gaussian() {
    const double u = std::max(uniform(), 0x1.0p-60);
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * uniform());
  }
  Complex complex_gaussian() { return {gaussian(), gaussian()}; }

  Eigen::MatrixXcd gaussian_matrix(Eigen::Index n) {
    Eigen::MatrixXcd g(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i) g(i, j) = complex_gaussian();
    return g;
  }

  Eigen::VectorXcd gaussian_vector(Eigen::Index n) {
    Eigen::VectorXcd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = complex_gaussian();
    return v;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Similarity I + c G / ||G|| with c < 1, so the condition number stays below (1 + c)/(1 - c).
inline Eigen::MatrixXcd well_conditioned(Rng& rng, Eigen::Index n, double c = 0.5) {
  const Eigen::MatrixXcd g = rng.gaussian_matrix(n);
  return Eigen::MatrixXcd::Identity(n, n) + c * g / linalg::operator_norm(g, NormTag::euclidean);
}

struct PowerBoundedSample {
  MatrixOperator op;
  Eigen::MatrixXcd similarity;
  Eigen::VectorXcd eigenvalues;
  int unimodular = 0;  // leading entries of `eigenvalues` on the unit circle
  bool has_one = false;
};

/// T = V D V^{-1}; D holds `unimodular` points on the circle (the first is 1
/// when include_one) and the rest in the disc of radius max_inner.
inline PowerBoundedSample power_bounded_matrix(Rng& rng, Eigen::Index n, int unimodular, bool include_one,
                                               double max_inner = 0.9) {
  PowerBoundedSample s;
  s.eigenvalues.resize(n);
  s.unimodular = unimodular;
  s.has_one = include_one && unimodular > 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i < unimodular) {
      // Distinct angles spaced at least 0.3 apart keep the clusters separated.
      const double angle = (i == 0 && include_one) ? 0.0 : 0.3 + (kTwoPi - 0.6) * (static_cast<double>(i) + rng.uniform(0.0, 0.5)) / (unimodular + 1.0);
      s.eigenvalues(i) = std::polar(1.0, angle);
    } else {
      s.eigenvalues(i) = std::polar(rng.uniform(0.0, max_inner), rng.uniform(0.0, kTwoPi));
    }
  }
  s.similarity = well_conditioned(rng, n);
  const Eigen::MatrixXcd d = s.eigenvalues.asDiagonal();
  s.op = MatrixOperator(s.similarity * d * s.similarity.inverse());
  return s;
}

/// Battery member i: unimodular count cycles through 0..3, 1 is included on odd i.
inline PowerBoundedSample battery_member(Rng& rng, Eigen::Index n, int i) {
  return power_bounded_matrix(rng, n, i % 4, i % 2 == 1);
}

/// Gaussian matrix scaled to spectral norm `target` <= 1; every third sample
/// is a unitary, whose whole spectrum is peripheral.
inline MatrixOperator contraction(Rng& rng, Eigen::Index n, int i) {
  const Eigen::MatrixXcd g = rng.gaussian_matrix(n);
  if (i % 3 == 2) {
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
    return MatrixOperator(qr.householderQ() * Eigen::MatrixXcd::Identity(n, n));
  }
  const double target = rng.uniform(0.5, 1.0);
  return MatrixOperator(target * g / linalg::operator_norm(g, NormTag::euclidean));
}

/// m commuting matrices V D_j V^{-1} with |D_j| <= 1 entrywise.
inline std::vector<MatrixOperator> commuting_family(Rng& rng, Eigen::Index n, int m) {
  const Eigen::MatrixXcd v = well_conditioned(rng, n);
  const Eigen::MatrixXcd vinv = v.inverse();
  std::vector<MatrixOperator> out;
  for (int j = 0; j < m; ++j) {
    Eigen::VectorXcd d(n);
    for (Eigen::Index i = 0; i < n; ++i) d(i) = std::polar(std::sqrt(rng.uniform()), rng.uniform(0.0, kTwoPi));
    const Eigen::MatrixXcd dm = d.asDiagonal();
    out.emplace_back(v * dm * vinv);
  }
  return out;
}

}  // namespace aplab::battery
