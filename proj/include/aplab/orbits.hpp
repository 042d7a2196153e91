#pragma once

// Orbit clouds {T^n x}, difference clouds {T^n (I - T) x} and word clouds
// {S x : S a word of bounded degree}, with certified packing and covering
// counts used to tell saturating (relatively compact) orbits from growing ones.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "aplab/error.hpp"
#include "aplab/operators.hpp"
#include "aplab/seqspace.hpp"

namespace aplab {

template <class Vec>
class OrbitCloud {
 public:
  using Metric = std::function<NormEstimate(const Vec&, const Vec&)>;

  struct Point {
    OperatorWord label;
    Vec vector;
  };

  OrbitCloud(std::vector<Point> points, Metric metric, double tol, int horizon)
      : points_(std::move(points)), metric_(std::move(metric)), tol_(tol), horizon_(horizon),
        cache_(points_.size() * (points_.size() > 0 ? points_.size() - 1 : 0) / 2, unset()) {}

  std::size_t size() const { return points_.size(); }
  const Point& point(std::size_t i) const { return points_[i]; }
  double tol() const { return tol_; }
  int horizon() const { return horizon_; }

  /// Cached and symmetric; not safe to call concurrently with itself.
  NormEstimate distance(std::size_t i, std::size_t j) const {
    if (i == j) return {0.0, 0.0};
    if (i > j) std::swap(i, j);
    NormEstimate& slot = cache_[index(i, j)];
    if (std::isnan(slot.value)) slot = metric_(points_[i].vector, points_[j].vector);
    return slot;
  }

  /// Fills the whole distance matrix; rows are split over `threads` workers
  /// writing disjoint cache slots.
  void fill_distances(unsigned threads = 0) const {
    const std::size_t n = points_.size();
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    auto work = [this, n, threads](unsigned worker) {
      for (std::size_t i = worker; i < n; i += threads)
        for (std::size_t j = i + 1; j < n; ++j) {
          NormEstimate& slot = cache_[index(i, j)];
          if (std::isnan(slot.value)) slot = metric_(points_[i].vector, points_[j].vector);
        }
    };
    if (threads == 1) {
      work(0);
      return;
    }
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
  }

  double diameter() const {
    double d = 0.0;
    for (std::size_t i = 0; i < size(); ++i)
      for (std::size_t j = i + 1; j < size(); ++j) d = std::max(d, distance(i, j).upper());
    return d;
  }

 private:
  static NormEstimate unset() { return {std::numeric_limits<double>::quiet_NaN(), 0.0}; }
  std::size_t index(std::size_t i, std::size_t j) const {
    // row-major upper triangle, i < j
    return i * points_.size() - i * (i + 1) / 2 + (j - i - 1);
  }

  std::vector<Point> points_;
  Metric metric_;
  double tol_;
  int horizon_;
  mutable std::vector<NormEstimate> cache_;
};

namespace detail {

inline auto seq_metric(double tol) {
  return [tol](const SeqVector& u, const SeqVector& v) { return distance(u, v, tol); };
}

inline auto finite_metric() {
  return [](const FiniteVector& u, const FiniteVector& v) { return distance(u, v); };
}

inline OperatorWord exponent_label(int n) { return OperatorWord{{n}}; }

inline void require_horizon(int horizon) {
  if (horizon < 1) throw Error(ErrorCode::invalid_argument, "horizon must be >= 1");
}

inline SeqVector snap_to_c0(SeqVector v) {
  return v.limit() == Complex{} && v.space() == SpaceTag::c ? v.as_c0(0.0) : v;
}

}  // namespace detail

// ------------------------------------------------------------ clouds

inline OrbitCloud<SeqVector> orbit(const DiagonalOperator& op, const SeqVector& x, int horizon,
                                   double tol = 1e-9) {
  detail::require_horizon(horizon);
  std::vector<OrbitCloud<SeqVector>::Point> pts;
  pts.reserve(static_cast<std::size_t>(horizon));
  for (int n = 1; n <= horizon; ++n) pts.push_back({detail::exponent_label(n), power_apply(op, n, x)});
  return {std::move(pts), detail::seq_metric(tol), tol, horizon};
}

inline OrbitCloud<FiniteVector> orbit(const MatrixOperator& op, const FiniteVector& x, int horizon,
                                      double tol = 1e-12) {
  detail::require_horizon(horizon);
  std::vector<OrbitCloud<FiniteVector>::Point> pts;
  FiniteVector current = x;
  for (int n = 1; n <= horizon; ++n) {
    current = apply(op, current);
    pts.push_back({detail::exponent_label(n), current});
  }
  return {std::move(pts), detail::finite_metric(), tol, horizon};
}

/// Points T^n (I - T) x for 1 <= n <= horizon.
inline OrbitCloud<SeqVector> difference_orbit(const DiagonalOperator& op, const SeqVector& x,
                                              int horizon, double tol = 1e-9) {
  detail::require_horizon(horizon);
  const SeqVector y = detail::snap_to_c0(difference(x, apply(op, x)));
  return orbit(op, y, horizon, tol);
}

inline OrbitCloud<FiniteVector> difference_orbit(const MatrixOperator& op, const FiniteVector& x,
                                                 int horizon, double tol = 1e-12) {
  detail::require_horizon(horizon);
  const FiniteVector y(x.coords - op.entries * x.coords, x.norm_tag);
  return orbit(op, y, horizon, tol);
}

/// {S x} over all words S of total degree 1..max_degree, graded order.
inline OrbitCloud<SeqVector> word_orbit(std::span<const DiagonalOperator> generators, const SeqVector& x,
                                        int max_degree, double tol = 1e-9) {
  detail::require_horizon(max_degree);
  std::vector<OrbitCloud<SeqVector>::Point> pts;
  for (auto& w : enumerate_words(generators.size(), 1, max_degree))
    pts.push_back({w, apply_word(w, generators, x)});
  return {std::move(pts), detail::seq_metric(tol), tol, max_degree};
}

inline OrbitCloud<FiniteVector> word_orbit(std::span<const MatrixOperator> generators,
                                           const FiniteVector& x, int max_degree, double tol = 1e-12) {
  detail::require_horizon(max_degree);
  std::vector<OrbitCloud<FiniteVector>::Point> pts;
  for (auto& w : enumerate_words(generators.size(), 1, max_degree))
    pts.push_back({w, FiniteVector(evaluate(w, generators) * x.coords, x.norm_tag)});
  return {std::move(pts), detail::finite_metric(), tol, max_degree};
}

// ------------------------------------------------- packing and covering

namespace detail {

template <class Vec>
void check_epsilon(const OrbitCloud<Vec>& cloud, double epsilon) {
  if (!(epsilon > 4.0 * cloud.tol()))
    throw Error(ErrorCode::unreachable_tolerance, "epsilon must exceed 4 * metric tolerance");
}

template <class Vec>
std::size_t prefix_size(const OrbitCloud<Vec>& cloud, std::size_t count) {
  return std::min(count, cloud.size());
}

}  // namespace detail

/// Greedy first-fit set of points with certified pairwise distance > epsilon,
/// scanning the first `count` points in label order.
template <class Vec>
std::vector<std::size_t> packing_set(const OrbitCloud<Vec>& cloud, double epsilon,
                                     std::size_t count = std::numeric_limits<std::size_t>::max()) {
  detail::check_epsilon(cloud, epsilon);
  std::vector<std::size_t> chosen;
  const std::size_t n = detail::prefix_size(cloud, count);
  for (std::size_t i = 0; i < n; ++i) {
    bool separated = true;
    for (std::size_t c : chosen) {
      const auto d = cloud.distance(i, c);
      if (!(d.value - d.error_bound > epsilon)) {
        separated = false;
        break;
      }
    }
    if (separated) chosen.push_back(i);
  }
  return chosen;
}

template <class Vec>
int packing_number(const OrbitCloud<Vec>& cloud, double epsilon,
                   std::size_t count = std::numeric_limits<std::size_t>::max()) {
  return static_cast<int>(packing_set(cloud, epsilon, count).size());
}

/// Size of an epsilon-net built from the cloud's own points: the smaller of a
/// greedy set cover and the first-fit packing (which is itself a net).
template <class Vec>
int covering_estimate(const OrbitCloud<Vec>& cloud, double epsilon,
                      std::size_t count = std::numeric_limits<std::size_t>::max()) {
  detail::check_epsilon(cloud, epsilon);
  const std::size_t n = detail::prefix_size(cloud, count);
  if (n == 0) return 0;
  std::vector<std::vector<std::size_t>> ball(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const auto d = cloud.distance(i, j);
      if (d.value - d.error_bound <= epsilon) ball[i].push_back(j);
    }
  std::vector<bool> covered(n, false);
  std::size_t remaining = n;
  int centers = 0;
  while (remaining > 0) {
    std::size_t best = 0, best_gain = 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t gain = 0;
      for (std::size_t j : ball[i]) gain += covered[j] ? 0 : 1;
      if (gain > best_gain) {
        best_gain = gain;
        best = i;
      }
    }
    for (std::size_t j : ball[best])
      if (!covered[j]) {
        covered[j] = true;
        --remaining;
      }
    ++centers;
  }
  return std::min(centers, packing_number(cloud, epsilon, n));
}

// ------------------------------------------------ compactness diagnostic

enum class CompactnessVerdict { saturating, growing, inconclusive };

inline std::string to_string(CompactnessVerdict v) {
  switch (v) {
    case CompactnessVerdict::saturating: return "saturating";
    case CompactnessVerdict::growing: return "growing";
    case CompactnessVerdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

struct CompactnessReport {
  std::vector<double> epsilons;
  std::vector<int> horizons;
  std::vector<std::vector<int>> packing;   // [epsilon][horizon]
  std::vector<std::vector<int>> covering;  // [epsilon][horizon]
  std::vector<std::vector<double>> growth_per_doubling;  // [epsilon][step]
  CompactnessVerdict verdict = CompactnessVerdict::inconclusive;

  /// Rows "horizon,epsilon,packing,covering".
  std::string csv() const {
    std::ostringstream out;
    out.precision(17);
    out << "horizon,epsilon,packing,covering\n";
    for (std::size_t e = 0; e < epsilons.size(); ++e)
      for (std::size_t h = 0; h < horizons.size(); ++h)
        out << horizons[h] << ',' << epsilons[e] << ',' << packing[e][h] << ',' << covering[e][h] << '\n';
    return out.str();
  }
};

/// Packing counts on the prefixes of length `horizons`. Saturating when every
/// epsilon's count is constant over the last two horizon steps; growing when
/// some epsilon grows by at least 10% per doubling at every step.
template <class Vec>
CompactnessReport compactness_report(const OrbitCloud<Vec>& cloud, std::span<const double> epsilons,
                                     std::span<const int> horizons) {
  if (horizons.size() < 3) throw Error(ErrorCode::invalid_argument, "need at least three horizons");
  for (std::size_t i = 0; i + 1 < horizons.size(); ++i)
    if (horizons[i + 1] <= horizons[i])
      throw Error(ErrorCode::invalid_argument, "horizons must be strictly increasing");
  if (horizons.front() < 1 || static_cast<std::size_t>(horizons.back()) > cloud.size())
    throw Error(ErrorCode::invalid_argument, "horizon exceeds the cloud");
  if (epsilons.empty()) throw Error(ErrorCode::invalid_argument, "need at least one epsilon");

  CompactnessReport r;
  r.epsilons.assign(epsilons.begin(), epsilons.end());
  r.horizons.assign(horizons.begin(), horizons.end());
  bool all_flat = true;
  bool any_growing = false;
  for (double eps : epsilons) {
    // First-fit is prefix-stable: the centres among the first h points are
    // the ones a run on that prefix would pick.
    const auto centres = packing_set(cloud, eps, static_cast<std::size_t>(horizons.back()));
    std::vector<int> pack, cover;
    std::vector<double> growth;
    for (int h : horizons) {
      pack.push_back(static_cast<int>(std::count_if(centres.begin(), centres.end(),
                                                    [h](std::size_t i) { return i < static_cast<std::size_t>(h); })));
      cover.push_back(covering_estimate(cloud, eps, static_cast<std::size_t>(h)));
    }
    bool growing = true;
    for (std::size_t i = 0; i + 1 < horizons.size(); ++i) {
      const double doublings = std::log2(static_cast<double>(horizons[i + 1]) / horizons[i]);
      const double g = std::pow(static_cast<double>(pack[i + 1]) / pack[i], 1.0 / doublings);
      growth.push_back(g);
      if (!(g >= 1.1)) growing = false;
    }
    const std::size_t n = pack.size();
    if (!(pack[n - 3] == pack[n - 2] && pack[n - 2] == pack[n - 1])) all_flat = false;
    any_growing = any_growing || growing;
    r.packing.push_back(std::move(pack));
    r.covering.push_back(std::move(cover));
    r.growth_per_doubling.push_back(std::move(growth));
  }
  r.verdict = all_flat ? CompactnessVerdict::saturating
                       : (any_growing ? CompactnessVerdict::growing : CompactnessVerdict::inconclusive);
  return r;
}

template <class Op, class Vec>
CompactnessReport compactness_diagnostic(const Op& op, const Vec& x, std::span<const double> epsilons,
                                         std::span<const int> horizons, double tol) {
  if (horizons.empty()) throw Error(ErrorCode::invalid_argument, "need horizons");
  const auto cloud = orbit(op, x, horizons.back(), tol);
  return compactness_report(cloud, epsilons, horizons);
}

}  // namespace aplab
