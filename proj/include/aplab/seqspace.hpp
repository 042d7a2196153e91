#pragma once

// Vectors of the sequence spaces c and c0 (sup-norm) given by coordinate
// oracles with closed-form tail certificates, plus finite coordinate vectors
// for the matrix model.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "aplab/error.hpp"

namespace aplab {

using Complex = std::complex<double>;

enum class SpaceTag { c, c0 };
enum class NormTag { sup, euclidean };

inline std::string_view to_string(SpaceTag tag) { return tag == SpaceTag::c ? "c" : "c0"; }
inline std::string_view to_string(NormTag tag) { return tag == NormTag::sup ? "sup" : "euclidean"; }

/// Scans never look past this coordinate index.
inline constexpr std::int64_t kMaxScanIndex = 400'000'000;

/// bound(K) = constant * K^(-exponent), valid for every coordinate k > K.
struct TailCertificate {
  double constant = 0.0;
  double exponent = 1.0;

  double bound(double K) const {
    if (constant == 0.0) return 0.0;
    if (K <= 0.0) return std::numeric_limits<double>::infinity();
    return constant * std::pow(K, -exponent);
  }

  /// Smallest K >= 0 with bound(K) <= level; saturates at int64 max.
  std::int64_t index_for(double level) const {
    if (constant == 0.0) return 0;
    if (!(exponent > 0.0))
      throw Error(ErrorCode::unreachable_tolerance, "tail certificate exponent must be positive");
    if (!(level > 0.0))
      throw Error(ErrorCode::unreachable_tolerance, "tail level must be positive");
    const double guess = std::ceil(std::pow(constant / level, 1.0 / exponent));
    if (!(guess < 4.0e18)) return std::numeric_limits<std::int64_t>::max();
    auto K = std::max<std::int64_t>(1, static_cast<std::int64_t>(guess));
    while (bound(static_cast<double>(K)) > level) ++K;
    while (K > 1 && bound(static_cast<double>(K - 1)) <= level) --K;
    return K;
  }
};

struct NormEstimate {
  double value = 0.0;
  double error_bound = 0.0;

  double lower() const { return value; }
  double upper() const { return value + error_bound; }
};

/// Element of c or c0. Coordinates are indexed from 1. Besides the tail
/// certificate, every vector carries an a-priori bound on sup_k |x_k| so that
/// norms attained in the limit are certified without scanning to tolerance.
class SeqVector {
 public:
  using Oracle = std::function<Complex(std::int64_t)>;

  SeqVector(Oracle coord, Complex limit, TailCertificate tail, double norm_bound,
            SpaceTag tag)
      : coord_(std::make_shared<const Oracle>(std::move(coord))),
        limit_(limit),
        tail_(tail),
        norm_bound_(std::max(norm_bound, std::abs(limit))),
        tag_(tag) {
    if (tag_ == SpaceTag::c0 && limit_ != Complex{})
      throw Error(ErrorCode::tag_mismatch, "c0 vector must have limit 0");
    if (!(tail_.constant >= 0.0))
      throw Error(ErrorCode::invalid_argument, "tail constant must be nonnegative");
    if (!std::isfinite(limit_.real()) || !std::isfinite(limit_.imag()))
      throw Error(ErrorCode::invalid_argument, "limit must be finite");
  }

  Complex coord(std::int64_t k) const { return (*coord_)(k); }
  Complex operator()(std::int64_t k) const { return (*coord_)(k); }
  Complex limit() const { return limit_; }
  const TailCertificate& tail() const { return tail_; }
  double norm_bound() const { return norm_bound_; }
  SpaceTag space() const { return tag_; }

  /// Same vector viewed in c0; requires |limit| <= tol and snaps the limit to 0.
  SeqVector as_c0(double tol) const {
    if (std::abs(limit_) > tol)
      throw Error(ErrorCode::tag_mismatch, "vector does not converge to 0");
    auto copy = *this;
    copy.limit_ = Complex{};
    copy.tag_ = SpaceTag::c0;
    return copy;
  }

  SeqVector as_c() const {
    auto copy = *this;
    copy.tag_ = SpaceTag::c;
    return copy;
  }

  /// Certificate for |x_k - L| <= deviation on k <= length and 0 beyond:
  /// deviation * (length / K)^16 dominates both.
  static TailCertificate finite_support_tail(double deviation, std::int64_t length) {
    if (deviation == 0.0 || length == 0) return {};
    constexpr double kSteep = 16.0;
    return {deviation * std::pow(static_cast<double>(length), kSteep), kSteep};
  }

  static SeqVector constant(Complex value) {
    return SeqVector([value](std::int64_t) { return value; }, value, {}, std::abs(value),
                     value == Complex{} ? SpaceTag::c0 : SpaceTag::c);
  }

  static SeqVector zero(SpaceTag tag = SpaceTag::c0) {
    return SeqVector([](std::int64_t) { return Complex{}; }, Complex{}, {}, 0.0, tag);
  }

  /// The unit vector e_index.
  static SeqVector unit(std::int64_t index, SpaceTag tag = SpaceTag::c0) {
    if (index < 1) throw Error(ErrorCode::invalid_argument, "unit vector index starts at 1");
    return SeqVector(
        [index](std::int64_t k) { return k == index ? Complex{1.0, 0.0} : Complex{}; },
        Complex{}, finite_support_tail(1.0, index), 1.0, tag);
  }

  /// Finitely many explicit coordinates followed by the limit value.
  static SeqVector from_prefix(std::vector<Complex> prefix, Complex limit, SpaceTag tag) {
    double deviation = 0.0;
    double norm = std::abs(limit);
    for (const Complex& z : prefix) {
      deviation = std::max(deviation, std::abs(z - limit));
      norm = std::max(norm, std::abs(z));
    }
    const auto length = static_cast<std::int64_t>(prefix.size());
    auto data = std::make_shared<const std::vector<Complex>>(std::move(prefix));
    return SeqVector(
        [data, limit](std::int64_t k) {
          return k >= 1 && static_cast<std::size_t>(k) <= data->size()
                     ? (*data)[static_cast<std::size_t>(k - 1)]
                     : limit;
        },
        limit, finite_support_tail(deviation, length), norm, tag);
  }

 private:
  std::shared_ptr<const Oracle> coord_;
  Complex limit_;
  TailCertificate tail_;
  double norm_bound_;
  SpaceTag tag_;
};

namespace detail {

// Running maximum of |x_k| over k = 1, 2, ... until either the tail
// certificate (or the a-priori norm bound) pins the supremum, the tail drops
// below tol, or `stop(running_max)` fires.
template <class Stop>
NormEstimate scan_sup(const SeqVector& v, double tol, Stop stop) {
  if (!(tol > 0.0)) throw Error(ErrorCode::invalid_argument, "tolerance must be positive");
  const TailCertificate& tail = v.tail();
  const double lim = std::abs(v.limit());
  const double cap = v.norm_bound();
  const std::int64_t k_final = tail.index_for(tol);

  double best = lim;
  auto upper_after = [&](std::int64_t scanned) {
    return std::min(cap, lim + tail.bound(static_cast<double>(scanned)));
  };
  auto finish = [&](std::int64_t scanned) {
    return NormEstimate{best, std::max(0.0, upper_after(scanned) - best)};
  };
  if (stop(best) || best >= cap) return finish(0);

  auto exit_index = [&]() -> std::int64_t {
    if (best >= cap) return 0;
    if (best <= lim) return k_final;
    return std::min(k_final, tail.index_for(best - lim));
  };
  std::int64_t k_exit = exit_index();
  std::int64_t k = 1;
  for (; k <= k_exit; ++k) {
    if (k > kMaxScanIndex)
      throw Error(ErrorCode::unreachable_tolerance, "tail certificate too slow for tolerance");
    const double a = std::abs(v.coord(k));
    if (a > best) {
      best = a;
      if (stop(best)) return finish(k);
      k_exit = exit_index();
    }
  }
  return finish(k - 1);
}

}  // namespace detail

/// Sup-norm with |value - ||v||| <= error_bound <= tol.
inline NormEstimate sup_norm(const SeqVector& v, double tol) {
  return detail::scan_sup(v, tol, [](double) { return false; });
}

/// True when ||v|| > threshold is certified; stops at the first witness coordinate.
inline bool certified_above(const SeqVector& v, double threshold, double tol) {
  const auto est = detail::scan_sup(v, tol, [threshold](double m) { return m > threshold; });
  return est.value > threshold;
}

/// True when ||v|| <= threshold is certified.
inline bool certified_at_most(const SeqVector& v, double threshold, double tol) {
  const auto est = detail::scan_sup(v, tol, [threshold](double m) { return m > threshold; });
  return est.upper() <= threshold;
}

inline SeqVector lin_comb(std::span<const Complex> coeffs, std::span<const SeqVector> vectors) {
  if (coeffs.empty() || coeffs.size() != vectors.size())
    throw Error(ErrorCode::invalid_argument, "lin_comb needs equally many coefficients and vectors");
  const SpaceTag tag = vectors.front().space();
  std::vector<std::pair<Complex, SeqVector>> terms;
  Complex limit{};
  double constant = 0.0;
  double exponent = std::numeric_limits<double>::infinity();
  double norm = 0.0;
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    const SeqVector& v = vectors[i];
    if (v.space() != tag) throw Error(ErrorCode::tag_mismatch, "lin_comb mixes c and c0");
    if (coeffs[i] == Complex{}) continue;
    const double mag = std::abs(coeffs[i]);
    limit += coeffs[i] * v.limit();
    norm += mag * v.norm_bound();
    if (v.tail().constant > 0.0) {
      constant += mag * v.tail().constant;
      exponent = std::min(exponent, v.tail().exponent);
    }
    terms.emplace_back(coeffs[i], v);
  }
  if (!std::isfinite(exponent)) exponent = 1.0;
  if (tag == SpaceTag::c0) limit = Complex{};
  auto oracle = [terms = std::move(terms)](std::int64_t k) {
    Complex sum{};
    for (const auto& [c, v] : terms) sum += c * v.coord(k);
    return sum;
  };
  return SeqVector(std::move(oracle), limit, TailCertificate{constant, exponent}, norm, tag);
}

inline SeqVector lin_comb(std::initializer_list<Complex> coeffs,
                          std::initializer_list<SeqVector> vectors) {
  return lin_comb(std::span<const Complex>(coeffs.begin(), coeffs.size()),
                  std::span<const SeqVector>(vectors.begin(), vectors.size()));
}

inline SeqVector difference(const SeqVector& u, const SeqVector& v) {
  return lin_comb({Complex{1.0}, Complex{-1.0}}, {u, v});
}

inline NormEstimate distance(const SeqVector& u, const SeqVector& v, double tol) {
  return sup_norm(difference(u, v), tol);
}

/// Coordinate vector of the matrix model.
struct FiniteVector {
  Eigen::VectorXcd coords;
  NormTag norm_tag = NormTag::sup;

  FiniteVector() = default;
  FiniteVector(Eigen::VectorXcd c, NormTag tag = NormTag::sup) : coords(std::move(c)), norm_tag(tag) {
    if (coords.size() < 1) throw Error(ErrorCode::invalid_argument, "finite vector needs length >= 1");
  }

  Eigen::Index size() const { return coords.size(); }

  double norm() const {
    return norm_tag == NormTag::sup ? coords.cwiseAbs().maxCoeff() : coords.norm();
  }
};

inline NormEstimate norm_estimate(const FiniteVector& v) {
  const double value = v.norm();
  return {value, 4.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(v.size()) * value};
}

inline NormEstimate distance(const FiniteVector& u, const FiniteVector& v, double /*tol*/ = 0.0) {
  if (u.size() != v.size()) throw Error(ErrorCode::dimension_mismatch, "vector lengths differ");
  if (u.norm_tag != v.norm_tag) throw Error(ErrorCode::tag_mismatch, "norm tags differ");
  return norm_estimate(FiniteVector(u.coords - v.coords, u.norm_tag));
}

}  // namespace aplab
