#pragma once

// Unimodular diagonal (multiplication) operators on c / c0, dense matrices,
// formal words over commuting generators and the telescoping expansion
//   I - prod_j T_j^{k_j} = sum_j prod_{i<j} T_i^{k_i} sum_{l<k_j} T_j^l (I - T_j).

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "aplab/error.hpp"
#include "aplab/linalg.hpp"
#include "aplab/seqspace.hpp"

namespace aplab {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Reduces an angle to [0, 2*pi).
inline double reduce_angle(long double angle) {
  long double r = std::fmod(angle, static_cast<long double>(kTwoPi));
  if (r < 0) r += static_cast<long double>(kTwoPi);
  double out = static_cast<double>(r);
  return out >= kTwoPi ? 0.0 : out;
}

inline std::int64_t floor_mod(std::int64_t n, std::int64_t q) {
  const std::int64_t r = n % q;
  return r < 0 ? r + q : r;
}

/// Named symbol families a_k = exp(i theta_k).
///   root_perturbed: theta_k = 2 pi / m + pi / k^rate, converging to the m-th root exp(2 pi i / m)
///   harmonic:       root_perturbed with m = 1, rate = 1 (theta_k = pi / k)
///   constant:       theta_k = angle for every k
struct SymbolFamily {
  enum class Kind { harmonic, root_perturbed, constant, custom };
  Kind kind = Kind::harmonic;
  int m = 1;
  double rate = 1.0;
  double angle = 0.0;

  static SymbolFamily harmonic() { return {}; }
  static SymbolFamily root_perturbed(int m, double rate = 1.0) {
    return {Kind::root_perturbed, m, rate, 0.0};
  }
  static SymbolFamily constant(double angle) { return {Kind::constant, 1, 1.0, angle}; }

  int root_order() const { return kind == Kind::harmonic ? 1 : m; }
  double decay_rate() const { return kind == Kind::harmonic ? 1.0 : rate; }
};

inline std::string to_string(SymbolFamily::Kind kind) {
  switch (kind) {
    case SymbolFamily::Kind::harmonic: return "harmonic";
    case SymbolFamily::Kind::root_perturbed: return "root_perturbed";
    case SymbolFamily::Kind::constant: return "constant";
    case SymbolFamily::Kind::custom: return "custom";
  }
  return "custom";
}

/// Unimodular sequence a_k = exp(i theta_k) stored through its angles, so
/// powers are computed as reduced angle multiples and |a_k^n| = 1 exactly.
class DiagonalSymbol {
 public:
  using AngleFn = std::function<double(std::int64_t k)>;
  using PowerAngleFn = std::function<double(std::int64_t n, std::int64_t k)>;
  using PowerLimitFn = std::function<double(std::int64_t n)>;

  /// Custom symbol; `tail` must bound |exp(i theta_k) - exp(i theta_inf)| for k > K.
  DiagonalSymbol(AngleFn angle, double limit_angle, TailCertificate tail, bool avoids_limit = false)
      : angle_(std::move(angle)), limit_angle_(reduce_angle(limit_angle)), tail_(tail),
        avoids_limit_(avoids_limit) {
    power_angle_ = [f = angle_](std::int64_t n, std::int64_t k) {
      return reduce_angle(static_cast<long double>(n) * static_cast<long double>(f(k)));
    };
    const double lim = limit_angle_;
    power_limit_ = [lim](std::int64_t n) {
      return reduce_angle(static_cast<long double>(n) * static_cast<long double>(lim));
    };
  }

  static DiagonalSymbol from_family(const SymbolFamily& family) {
    using Kind = SymbolFamily::Kind;
    if (family.kind == Kind::custom)
      throw Error(ErrorCode::invalid_family, "custom families need explicit angles");
    if (family.kind == Kind::constant) {
      const double a = reduce_angle(family.angle);
      DiagonalSymbol s([a](std::int64_t) { return a; }, a, TailCertificate{0.0, 1.0}, false);
      s.family_ = family;
      return s;
    }
    const int m = family.root_order();
    const double p = family.decay_rate();
    if (m < 1) throw Error(ErrorCode::invalid_family, "root order must be positive");
    if (!(p > 0.0)) throw Error(ErrorCode::invalid_family, "decay rate must be positive");
    const double root = kTwoPi / m;
    const bool integral_rate = p == std::floor(p) && p <= 8.0;
    const int ip = static_cast<int>(p);
    // k^p as an exact integer when it fits.
    auto int_power = [integral_rate, ip](std::int64_t k) -> std::optional<std::int64_t> {
      if (!integral_rate) return std::nullopt;
      __int128 acc = 1;
      for (int i = 0; i < ip; ++i) {
        acc *= k;
        if (acc > static_cast<__int128>(1) << 60) return std::nullopt;
      }
      return static_cast<std::int64_t>(acc);
    };
    auto perturbation = [p](std::int64_t k) {
      return std::numbers::pi / std::pow(static_cast<double>(k), p);
    };
    DiagonalSymbol s([root, perturbation](std::int64_t k) { return reduce_angle(root + perturbation(k)); },
                     root, TailCertificate{std::numbers::pi, p}, true);
    s.power_angle_ = [m, int_power, p](std::int64_t n, std::int64_t k) {
      const long double root_part =
          static_cast<long double>(kTwoPi) * static_cast<long double>(floor_mod(n, m)) / m;
      long double pert;
      if (auto q = int_power(k)) {
        // n * pi / q reduced exactly through n mod 2q.
        pert = std::numbers::pi_v<long double> * static_cast<long double>(floor_mod(n, 2 * *q)) /
               static_cast<long double>(*q);
      } else {
        pert = static_cast<long double>(n) * std::numbers::pi_v<long double> /
               std::pow(static_cast<long double>(k), static_cast<long double>(p));
      }
      return reduce_angle(root_part + pert);
    };
    s.power_limit_ = [m](std::int64_t n) {
      return reduce_angle(static_cast<long double>(kTwoPi) * static_cast<long double>(floor_mod(n, m)) / m);
    };
    s.family_ = family;
    return s;
  }

  double angle(std::int64_t k) const { return angle_(k); }
  double limit_angle() const { return limit_angle_; }
  double power_angle(std::int64_t n, std::int64_t k) const { return power_angle_(n, k); }
  double power_limit_angle(std::int64_t n) const { return power_limit_(n); }

  Complex value(std::int64_t k) const { return power(1, k); }
  Complex limit_value() const { return power_limit(1); }
  Complex power(std::int64_t n, std::int64_t k) const { return std::polar(1.0, power_angle(n, k)); }
  Complex power_limit(std::int64_t n) const { return std::polar(1.0, power_limit_angle(n)); }

  const TailCertificate& tail() const { return tail_; }
  bool avoids_limit() const { return avoids_limit_; }
  const std::optional<SymbolFamily>& family() const { return family_; }

  /// Symbol of the inverse operator (negated angles).
  DiagonalSymbol inverse() const {
    DiagonalSymbol s = *this;
    s.angle_ = [f = angle_](std::int64_t k) { return reduce_angle(-static_cast<long double>(f(k))); };
    s.limit_angle_ = reduce_angle(-static_cast<long double>(limit_angle_));
    s.power_angle_ = [f = power_angle_](std::int64_t n, std::int64_t k) { return f(-n, k); };
    s.power_limit_ = [f = power_limit_](std::int64_t n) { return f(-n); };
    s.family_.reset();
    return s;
  }

 private:
  AngleFn angle_;
  double limit_angle_;
  TailCertificate tail_;
  bool avoids_limit_;
  PowerAngleFn power_angle_;
  PowerLimitFn power_limit_;
  std::optional<SymbolFamily> family_;
};

/// (Tx)_k = a_k x_k on c or c0; an invertible isometry.
struct DiagonalOperator {
  DiagonalSymbol symbol;
  SpaceTag space = SpaceTag::c;

  DiagonalOperator inverse() const { return {symbol.inverse(), space}; }
};

struct MatrixOperator {
  Eigen::MatrixXcd entries;
  NormTag norm_tag = NormTag::euclidean;

  MatrixOperator() = default;
  MatrixOperator(Eigen::MatrixXcd a, NormTag tag = NormTag::euclidean)
      : entries(std::move(a)), norm_tag(tag) {
    if (entries.rows() < 1 || entries.rows() != entries.cols())
      throw Error(ErrorCode::dimension_mismatch, "matrix operator must be square with N >= 1");
    if (!entries.allFinite()) throw Error(ErrorCode::invalid_argument, "matrix entries must be finite");
  }

  Eigen::Index dim() const { return entries.rows(); }
  double norm() const { return linalg::operator_norm(entries, norm_tag); }

  static MatrixOperator identity(Eigen::Index n, NormTag tag = NormTag::euclidean) {
    return {Eigen::MatrixXcd::Identity(n, n), tag};
  }
  static MatrixOperator diagonal(std::span<const Complex> values, NormTag tag = NormTag::euclidean) {
    Eigen::VectorXcd d(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) d(static_cast<Eigen::Index>(i)) = values[i];
    return {d.asDiagonal().toDenseMatrix(), tag};
  }
  static MatrixOperator diagonal(std::initializer_list<Complex> values, NormTag tag = NormTag::euclidean) {
    return diagonal(std::span<const Complex>(values.begin(), values.size()), tag);
  }
};

// ---------------------------------------------------------------- actions

/// T^n v for a diagonal operator, n of either sign (T is invertible).
inline SeqVector power_apply(const DiagonalOperator& op, std::int64_t n, const SeqVector& v) {
  if (op.space == SpaceTag::c0 && v.space() == SpaceTag::c)
    throw Error(ErrorCode::tag_mismatch, "operator on c0 applied to a vector of c");
  if (n == 0) return v;
  const DiagonalSymbol& sym = op.symbol;
  const Complex limit = sym.power_limit(n) * v.limit();
  // |a_k^n x_k - a^n x| <= |x_k - x| + |x| |n| |a_k - a|
  TailCertificate tail = v.tail();
  const double extra = std::abs(v.limit()) * static_cast<double>(n < 0 ? -n : n) * sym.tail().constant;
  if (extra > 0.0) {
    tail.exponent = tail.constant > 0.0 ? std::min(tail.exponent, sym.tail().exponent) : sym.tail().exponent;
    tail.constant += extra;
  }
  auto oracle = [sym, n, v](std::int64_t k) { return sym.power(n, k) * v.coord(k); };
  return SeqVector(std::move(oracle), limit, tail, v.norm_bound(), v.space());
}

inline SeqVector apply(const DiagonalOperator& op, const SeqVector& v) { return power_apply(op, 1, v); }

inline FiniteVector apply(const MatrixOperator& op, const FiniteVector& v) {
  if (v.size() != op.dim()) throw Error(ErrorCode::dimension_mismatch, "vector length differs from N");
  return FiniteVector(op.entries * v.coords, v.norm_tag);
}

inline FiniteVector power_apply(const MatrixOperator& op, std::int64_t n, const FiniteVector& v) {
  if (n < 0) throw Error(ErrorCode::invalid_argument, "matrix powers need n >= 0");
  if (v.size() != op.dim()) throw Error(ErrorCode::dimension_mismatch, "vector length differs from N");
  return FiniteVector(linalg::matrix_power(op.entries, n) * v.coords, v.norm_tag);
}

inline MatrixOperator power(const MatrixOperator& op, std::int64_t n) {
  return {linalg::matrix_power(op.entries, n), op.norm_tag};
}

// ----------------------------------------------------------------- words

/// prod_j T_j^{exponents[j]} over an ordered generator list.
struct OperatorWord {
  std::vector<int> exponents;

  int degree() const {
    int d = 0;
    for (int e : exponents) d += e;
    return d;
  }

  /// Graded order: total degree first, then larger leading exponents first.
  friend bool graded_less(const OperatorWord& a, const OperatorWord& b) {
    if (a.degree() != b.degree()) return a.degree() < b.degree();
    return std::lexicographical_compare(b.exponents.begin(), b.exponents.end(),
                                        a.exponents.begin(), a.exponents.end());
  }

  friend bool operator==(const OperatorWord&, const OperatorWord&) = default;

  std::string str() const {
    std::string s = "(";
    for (std::size_t i = 0; i < exponents.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(exponents[i]);
    }
    return s + ")";
  }
};

/// All words over `generators` letters of total degree in [min_degree, max_degree], graded order.
inline std::vector<OperatorWord> enumerate_words(std::size_t generators, int min_degree, int max_degree) {
  std::vector<OperatorWord> out;
  std::vector<int> current(generators, 0);
  // Compositions of d into `generators` parts, leading exponent descending.
  std::function<void(std::size_t, int)> fill = [&](std::size_t pos, int remaining) {
    if (pos + 1 == generators) {
      current[pos] = remaining;
      out.push_back({current});
      return;
    }
    for (int e = remaining; e >= 0; --e) {
      current[pos] = e;
      fill(pos + 1, remaining - e);
    }
  };
  if (generators == 0) return out;
  for (int d = min_degree; d <= max_degree; ++d) fill(0, d);
  return out;
}

inline Eigen::MatrixXcd evaluate(const OperatorWord& word, std::span<const MatrixOperator> generators) {
  if (word.exponents.size() != generators.size())
    throw Error(ErrorCode::dimension_mismatch, "word length differs from generator count");
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(generators.front().dim(), generators.front().dim());
  for (std::size_t j = 0; j < generators.size(); ++j)
    if (word.exponents[j] > 0) out = out * linalg::matrix_power(generators[j].entries, word.exponents[j]);
  return out;
}

inline SeqVector apply_word(const OperatorWord& word, std::span<const DiagonalOperator> generators,
                            const SeqVector& v) {
  if (word.exponents.size() != generators.size())
    throw Error(ErrorCode::dimension_mismatch, "word length differs from generator count");
  SeqVector out = v;
  for (std::size_t j = 0; j < generators.size(); ++j)
    if (word.exponents[j] != 0) out = power_apply(generators[j], word.exponents[j], out);
  return out;
}

struct TelescopeTerm {
  OperatorWord word;
  std::size_t generator = 0;  // zero-based index j of the factor (I - T_j)
};

/// Terms (W, j) with I - prod_j T_j^{k_j} = sum W (I - T_j); one term per unit of
/// total degree.
inline std::vector<TelescopeTerm> telescope_expand(std::span<const int> exponents) {
  if (std::any_of(exponents.begin(), exponents.end(), [](int e) { return e < 0; }))
    throw Error(ErrorCode::invalid_argument, "exponents must be nonnegative");
  if (std::all_of(exponents.begin(), exponents.end(), [](int e) { return e == 0; }))
    throw Error(ErrorCode::empty_word, "at least one exponent must be positive");
  std::vector<TelescopeTerm> terms;
  std::vector<int> prefix(exponents.size(), 0);
  for (std::size_t j = 0; j < exponents.size(); ++j) {
    for (int l = 0; l < exponents[j]; ++l) {
      OperatorWord w{prefix};
      w.exponents[j] = l;
      terms.push_back({std::move(w), j});
    }
    prefix[j] = exponents[j];
  }
  return terms;
}

inline std::vector<TelescopeTerm> telescope_expand(std::initializer_list<int> exponents) {
  return telescope_expand(std::span<const int>(exponents.begin(), exponents.size()));
}

// ------------------------------------------------------ commuting families

inline double commutation_defect(std::span<const MatrixOperator> generators,
                                 std::span<const FiniteVector> probes) {
  if (probes.empty()) throw Error(ErrorCode::invalid_argument, "need at least one probe");
  double defect = 0.0;
  for (std::size_t i = 0; i < generators.size(); ++i)
    for (std::size_t j = i + 1; j < generators.size(); ++j) {
      const Eigen::MatrixXcd c = generators[i].entries * generators[j].entries -
                                 generators[j].entries * generators[i].entries;
      for (const auto& x : probes)
        defect = std::max(defect, FiniteVector(c * x.coords, x.norm_tag).norm());
    }
  return defect;
}

/// Multiplication operators commute symbolically; the defect is measured on the
/// coordinates k <= prefix and on the limit.
inline double commutation_defect(std::span<const DiagonalOperator> generators,
                                 std::span<const SeqVector> probes, std::int64_t prefix = 10'000) {
  if (probes.empty()) throw Error(ErrorCode::invalid_argument, "need at least one probe");
  double defect = 0.0;
  for (std::size_t i = 0; i < generators.size(); ++i)
    for (std::size_t j = i + 1; j < generators.size(); ++j)
      for (const auto& x : probes) {
        const auto ij = apply(generators[i], apply(generators[j], x));
        const auto ji = apply(generators[j], apply(generators[i], x));
        defect = std::max(defect, std::abs(ij.limit() - ji.limit()));
        for (std::int64_t k = 1; k <= prefix; ++k) defect = std::max(defect, std::abs(ij.coord(k) - ji.coord(k)));
      }
  return defect;
}

/// Commuting generators with M = sup_S ||S|| + 1 over the generated semigroup.
template <class Op>
struct CommutingFamily {
  std::vector<Op> generators;
  double bound_M = 2.0;
};

/// Matrix family; bound_M is estimated over all words up to `degree`.
inline CommutingFamily<MatrixOperator> make_commuting_family(std::vector<MatrixOperator> generators,
                                                             std::span<const FiniteVector> probes,
                                                             double tol, int degree = 24) {
  if (generators.empty()) throw Error(ErrorCode::invalid_argument, "family needs a generator");
  if (commutation_defect(generators, probes) > tol)
    throw Error(ErrorCode::invalid_argument, "generators do not commute on the probes");
  double sup = 1.0;
  for (const auto& w : enumerate_words(generators.size(), 1, degree))
    sup = std::max(sup, linalg::operator_norm(evaluate(w, generators), generators.front().norm_tag));
  return {std::move(generators), sup + 1.0};
}

/// Diagonal unimodular family: every word is an isometry, so M = 2.
inline CommutingFamily<DiagonalOperator> make_commuting_family(std::vector<DiagonalOperator> generators) {
  if (generators.empty()) throw Error(ErrorCode::invalid_argument, "family needs a generator");
  return {std::move(generators), 2.0};
}

// ---------------------------------------------------------- power bounds

struct PowerBoundReport {
  int horizon = 0;
  double sup_power_norm = 0.0;              // sup_{n <= horizon} ||T^n||
  std::vector<double> inf_orbit_norms;      // per probe: inf_{n <= horizon} ||T^n x||
  bool power_bounded = false;
};

inline PowerBoundReport power_bound_estimate(const MatrixOperator& op, int horizon,
                                             std::span<const FiniteVector> probes = {},
                                             double tol = 1e-9) {
  if (horizon < 1) throw Error(ErrorCode::invalid_argument, "horizon must be >= 1");
  PowerBoundReport report;
  report.horizon = horizon;
  Eigen::MatrixXcd p = Eigen::MatrixXcd::Identity(op.dim(), op.dim());
  report.sup_power_norm = linalg::operator_norm(p, op.norm_tag);
  std::vector<Eigen::VectorXcd> orbit;
  for (const auto& x : probes) {
    orbit.push_back(x.coords);
    report.inf_orbit_norms.push_back(x.norm());
  }
  for (int n = 1; n <= horizon; ++n) {
    p = op.entries * p;
    report.sup_power_norm = std::max(report.sup_power_norm, linalg::operator_norm(p, op.norm_tag));
    for (std::size_t i = 0; i < probes.size(); ++i) {
      orbit[i] = op.entries * orbit[i];
      report.inf_orbit_norms[i] =
          std::min(report.inf_orbit_norms[i], FiniteVector(orbit[i], probes[i].norm_tag).norm());
    }
  }
  report.power_bounded = linalg::spectrum(op.entries, tol).power_bounded();
  return report;
}

inline PowerBoundReport power_bound_estimate(const DiagonalOperator& /*op*/, int horizon,
                                             std::span<const SeqVector> probes = {},
                                             double tol = 1e-9) {
  if (horizon < 1) throw Error(ErrorCode::invalid_argument, "horizon must be >= 1");
  PowerBoundReport report;
  report.horizon = horizon;
  report.sup_power_norm = 1.0;
  for (const auto& x : probes) report.inf_orbit_norms.push_back(sup_norm(x, tol).value);
  report.power_bounded = true;
  return report;
}

}  // namespace aplab
