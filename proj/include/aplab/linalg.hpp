#pragma once

// Dense spectral helpers for the matrix model: operator norms, numerical rank,
// eigenvalue clusters with semisimplicity flags, and oblique projections onto
// ker(A) along rg(A).

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "aplab/error.hpp"
#include "aplab/seqspace.hpp"

namespace aplab::linalg {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline double operator_norm(const Matrix& a, NormTag tag) {
  if (a.size() == 0) return 0.0;
  if (tag == NormTag::sup) return a.cwiseAbs().rowwise().sum().maxCoeff();
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

inline Matrix identity(Eigen::Index n) { return Matrix::Identity(n, n); }

/// Number of singular values above rel_tol * max(1, sigma_max).
inline int numerical_rank(const Matrix& a, double rel_tol) {
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(a);
  const auto& s = svd.singularValues();
  const double cutoff = rel_tol * std::max(1.0, s(0));
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > cutoff) ++rank;
  return rank;
}

inline Matrix matrix_power(const Matrix& a, long long n) {
  if (n < 0) throw Error(ErrorCode::invalid_argument, "negative matrix power");
  Matrix result = identity(a.rows());
  Matrix base = a;
  while (n > 0) {
    if (n & 1) result = result * base;
    n >>= 1;
    if (n > 0) base = base * base;
  }
  return result;
}

/// Eigenvalues within `radius` of each other, as one spectral point.
struct EigenCluster {
  Complex center;
  int algebraic = 0;
  int geometric = 0;
  bool semisimple = true;
  bool peripheral = false;
};

struct SpectrumReport {
  std::vector<Complex> eigenvalues;
  std::vector<Complex> peripheral;
  std::vector<bool> semisimple_flags;  // one per peripheral entry
  std::vector<EigenCluster> clusters;
  double spectral_radius = 0.0;
  double tol = 0.0;

  int peripheral_dimension() const {
    int dim = 0;
    for (const auto& c : clusters)
      if (c.peripheral) dim += c.algebraic;
    return dim;
  }

  const EigenCluster* cluster_at(Complex z) const {
    const double radius = std::sqrt(tol);
    for (const auto& c : clusters)
      if (std::abs(c.center - z) <= radius) return &c;
    return nullptr;
  }

  /// Spectral radius at most 1 + tol and every peripheral point semisimple.
  bool power_bounded() const {
    for (const auto& c : clusters) {
      if (std::abs(c.center) > 1.0 + tol) return false;
      if (c.peripheral && !c.semisimple) return false;
    }
    return true;
  }
};

inline std::vector<Complex> eigenvalues(const Matrix& a) {
  Eigen::ComplexSchur<Matrix> schur(a, /*computeU=*/false);
  const Matrix& t = schur.matrixT();
  std::vector<Complex> values(static_cast<std::size_t>(t.rows()));
  for (Eigen::Index i = 0; i < t.rows(); ++i) values[static_cast<std::size_t>(i)] = t(i, i);
  return values;
}

/// Clustering radius and rank threshold are sqrt(tol); peripheral means
/// |center| >= 1 - tol.
inline SpectrumReport spectrum(const Matrix& a, double tol) {
  if (!(tol > 0.0)) throw Error(ErrorCode::invalid_argument, "tolerance must be positive");
  SpectrumReport report;
  report.tol = tol;
  report.eigenvalues = eigenvalues(a);
  std::sort(report.eigenvalues.begin(), report.eigenvalues.end(), [](Complex x, Complex y) {
    if (std::abs(x) != std::abs(y)) return std::abs(x) > std::abs(y);
    return std::arg(x) < std::arg(y);
  });

  const double radius = std::sqrt(tol);
  std::vector<std::vector<Complex>> groups;
  for (Complex z : report.eigenvalues) {
    bool placed = false;
    for (auto& g : groups) {
      Complex mean{};
      for (Complex w : g) mean += w;
      mean /= static_cast<double>(g.size());
      if (std::abs(mean - z) <= radius) {
        g.push_back(z);
        placed = true;
        break;
      }
    }
    if (!placed) groups.push_back({z});
  }

  const Eigen::Index n = a.rows();
  for (const auto& g : groups) {
    EigenCluster c;
    for (Complex w : g) c.center += w;
    c.center /= static_cast<double>(g.size());
    c.algebraic = static_cast<int>(g.size());
    c.geometric = static_cast<int>(n) - numerical_rank(a - c.center * identity(n), radius);
    c.semisimple = c.geometric >= c.algebraic;
    c.peripheral = std::abs(c.center) >= 1.0 - tol;
    report.spectral_radius = std::max(report.spectral_radius, std::abs(c.center));
    report.clusters.push_back(c);
    if (c.peripheral) {
      for (Complex w : g) {
        report.peripheral.push_back(w);
        report.semisimple_flags.push_back(c.semisimple);
      }
    }
  }
  return report;
}

/// Bases of ker(A) and rg(A) together with the projection onto ker(A) along
/// rg(A). Requires ker(A) and rg(A) to be complementary, which holds when the
/// eigenvalue 0 of A is semisimple with the given multiplicity.
struct KernelRangeSplit {
  Matrix kernel_basis;
  Matrix range_basis;
  Matrix projection;
  double basis_condition = 1.0;
};

inline KernelRangeSplit kernel_range_split(const Matrix& a, int kernel_dim) {
  const Eigen::Index n = a.rows();
  if (kernel_dim < 0 || kernel_dim > n)
    throw Error(ErrorCode::invalid_argument, "kernel dimension out of range");
  KernelRangeSplit split;
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Index range_dim = n - kernel_dim;
  split.kernel_basis = svd.matrixV().rightCols(kernel_dim);
  split.range_basis = svd.matrixU().leftCols(range_dim);
  if (kernel_dim == 0) {
    split.projection = Matrix::Zero(n, n);
    return split;
  }
  if (range_dim == 0) {
    split.projection = identity(n);
    return split;
  }
  Matrix q(n, n);
  q << split.kernel_basis, split.range_basis;
  Eigen::JacobiSVD<Matrix> qsvd(q);
  const auto& s = qsvd.singularValues();
  split.basis_condition = s(0) / s(n - 1);
  if (!(s(n - 1) > 1e-12 * s(0)))
    throw Error(ErrorCode::decomposition_failure, "kernel and range are not complementary");
  Matrix selector = Matrix::Zero(n, n);
  selector.topLeftCorner(kernel_dim, kernel_dim).setIdentity();
  split.projection = q * selector * q.inverse();
  return split;
}

/// Least-squares residual of y against the column span of basis.
inline double span_residual(const Matrix& basis, const Vector& y) {
  if (basis.cols() == 0) return y.norm();
  const Vector coeffs = basis.colPivHouseholderQr().solve(y);
  return (basis * coeffs - y).norm();
}

}  // namespace aplab::linalg
