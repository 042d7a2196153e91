#pragma once

// Counterexample operators on c, the c0-witness ladder extractor for diagonal
// isometries, and the ladder test on finite families of sequences.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "aplab/ergodic.hpp"
#include "aplab/error.hpp"
#include "aplab/jdlg.hpp"
#include "aplab/operators.hpp"
#include "aplab/orbits.hpp"
#include "aplab/seqspace.hpp"

namespace aplab {

// ------------------------------------------------------------ gallery operators

inline DiagonalOperator example_3_3(const SymbolFamily& family) {
  if (family.kind == SymbolFamily::Kind::constant || family.kind == SymbolFamily::Kind::custom ||
      family.root_order() != 1)
    throw Error(ErrorCode::invalid_family, "example_3_3 needs a perturbed family with root order m = 1");
  return {DiagonalSymbol::from_family(family), SpaceTag::c};
}

inline DiagonalOperator example_4_3(const SymbolFamily& family) {
  if (family.kind != SymbolFamily::Kind::root_perturbed)
    throw Error(ErrorCode::invalid_family, "example_4_3 needs a root_perturbed family");
  if (family.m < 2)
    throw Error(ErrorCode::invalid_family, "example_4_3 needs m >= 2; use example_3_3 for m = 1");
  return {DiagonalSymbol::from_family(family), SpaceTag::c};
}

struct GalleryProbe {
  std::string name;
  Complex limit;
  CompactnessReport report;
};

inline constexpr std::int64_t kInverseCheckPrefix = 10'000;

struct Example33Report {
  double isometry_defect = 0.0;   // max | ||T^n v|| - ||v|| | over probes and sampled n
  double inverse_defect = 0.0;    // max |(T^{-1} T v - v)_k| over k <= kInverseCheckPrefix and the limit
  bool fix_trivial = false;       // a_k != 1 for every k
  MeanErgodicVerdict mean_ergodic;
  double difference_limit = 0.0;  // max |lim (I - T^n) 1| over sampled n
  GalleryProbe one_orbit;         // orbit of 1
  GalleryProbe c0_orbit;          // orbit of (I - T) 1
  bool pass = false;
};

namespace detail {

inline std::vector<SeqVector> gallery_probes() {
  return {SeqVector::constant(1.0), SeqVector::unit(1, SpaceTag::c), SeqVector::unit(3, SpaceTag::c),
          SeqVector::from_prefix({Complex{0.5, -0.5}, Complex{2.0}, Complex{0.0, 1.0}}, Complex{-0.25}, SpaceTag::c)};
}

}  // namespace detail

/// Sampled exponents n in [1, max_power]; epsilon and horizons drive the two
/// orbit diagnostics.
inline Example33Report example_3_3_report(const DiagonalOperator& op, double epsilon = 1.0,
                                          std::span<const int> horizons = std::array<int, 3>{100, 200, 400},
                                          int max_power = 1000, double tol = 1e-9) {
  Example33Report r;
  const auto probes = detail::gallery_probes();
  const DiagonalOperator inv = op.inverse();
  for (const auto& v : probes) {
    const double base = sup_norm(v, tol).value;
    for (int n : {1, 2, 3, 7, 10, 99, 100, 500, max_power}) {
      if (n > max_power) continue;
      const double moved = sup_norm(power_apply(op, n, v), tol).value;
      r.isometry_defect = std::max(r.isometry_defect, std::abs(moved - base));
    }
    // a_k^{-1} a_k = 1 symbolically; numerically on a coordinate prefix and the limit
    const SeqVector back = apply(inv, apply(op, v));
    r.inverse_defect = std::max(r.inverse_defect, std::abs(back.limit() - v.limit()));
    for (std::int64_t k = 1; k <= kInverseCheckPrefix; ++k)
      r.inverse_defect = std::max(r.inverse_defect, std::abs(back.coord(k) - v.coord(k)));
  }
  r.fix_trivial = op.symbol.avoids_limit() && std::abs(op.symbol.limit_value() - Complex{1.0}) < tol;
  r.mean_ergodic = diagonal_mean_ergodic_verdict(op, tol);
  const SeqVector one = SeqVector::constant(1.0);
  for (int n : {1, 2, 5, 50}) r.difference_limit = std::max(r.difference_limit, std::abs(difference(one, power_apply(op, n, one)).limit()));

  const std::array<double, 1> eps{epsilon};
  r.one_orbit = {"one", one.limit(), compactness_diagnostic(op, one, eps, horizons, tol)};
  const SeqVector y = detail::snap_to_c0(difference(one, apply(op, one)));
  const DiagonalOperator on_c0{op.symbol, SpaceTag::c0};
  r.c0_orbit = {"one_minus_symbol", y.limit(), compactness_diagnostic(on_c0, y, eps, horizons, tol)};
  r.pass = r.isometry_defect <= 2.0 * tol && r.inverse_defect <= 1e-12 && r.fix_trivial &&
           !r.mean_ergodic.is_mean_ergodic && r.difference_limit <= tol &&
           r.one_orbit.report.verdict == CompactnessVerdict::growing &&
           r.c0_orbit.report.verdict == CompactnessVerdict::saturating;
  return r;
}

struct Example43Report {
  int m = 0;
  GalleryProbe range_m_probe;    // (I - T^m) 1, limit 0
  GalleryProbe range_one_probe;  // 1 - (a_k) = (I - T) 1, limit 1 - xi
  bool pass = false;
};

inline Example43Report example_4_3_report(const DiagonalOperator& op, double saturating_epsilon = 0.1,
                                          double growing_epsilon = 1.0,
                                          std::span<const int> horizons = std::array<int, 3>{100, 200, 400},
                                          double tol = 1e-9) {
  const auto& fam = op.symbol.family();
  if (!fam || fam->kind != SymbolFamily::Kind::root_perturbed || fam->m < 2)
    throw Error(ErrorCode::invalid_family, "operator was not built by example_4_3");
  Example43Report r;
  r.m = fam->m;
  const SeqVector one = SeqVector::constant(1.0);
  const SeqVector z = detail::snap_to_c0(difference(one, power_apply(op, r.m, one)));
  const DiagonalOperator on_c0{op.symbol, SpaceTag::c0};
  const std::array<double, 1> sat{saturating_epsilon};
  const std::array<double, 1> grow{growing_epsilon};
  r.range_m_probe = {"one_minus_power_m", z.limit(),
                     z.space() == SpaceTag::c0 ? compactness_diagnostic(on_c0, z, sat, horizons, tol)
                                               : compactness_diagnostic(op, z, sat, horizons, tol)};
  const SeqVector w = difference(one, apply(op, one));
  r.range_one_probe = {"one_minus_symbol", w.limit(), compactness_diagnostic(op, w, grow, horizons, tol)};
  r.pass = std::abs(r.range_m_probe.limit) <= tol &&
           r.range_m_probe.report.verdict == CompactnessVerdict::saturating &&
           std::abs(r.range_one_probe.limit) > tol &&
           r.range_one_probe.report.verdict == CompactnessVerdict::growing;
  return r;
}

// ------------------------------------------------------------ ladder test

struct LadderTest {
  double unconditional_bound = 0.0;
  double cauchy_defect = 0.0;
  double first_partial_sum = 0.0;
  bool ladder_detected = false;
  std::vector<double> subset_norms;  // in sample order
};

namespace detail {

/// Subsets of {0..count-1}, sizes uniform in 1..count, drawn from a seeded generator.
inline std::vector<std::vector<std::size_t>> sample_subsets(std::size_t count, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> indices(count);
  std::vector<std::vector<std::size_t>> out;
  out.reserve(static_cast<std::size_t>(samples));
  for (int s = 0; s < samples; ++s) {
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    // explicit modular draws instead of std distributions, whose output is
    // implementation-defined
    const std::size_t size = 1 + static_cast<std::size_t>(rng() % count);
    for (std::size_t i = 0; i < size; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng() % (count - i));
      std::swap(indices[i], indices[j]);
    }
    std::vector<std::size_t> subset(indices.begin(), indices.begin() + static_cast<std::ptrdiff_t>(size));
    std::sort(subset.begin(), subset.end());
    out.push_back(std::move(subset));
  }
  return out;
}

/// Upper ends of certified norms of the subset sums, evaluated on worker threads.
inline std::vector<double> subset_sum_norms(const std::vector<SeqVector>& vectors,
                                            const std::vector<std::vector<std::size_t>>& subsets, double tol) {
  std::vector<double> norms(subsets.size());
  auto work = [&](std::size_t worker, std::size_t workers) {
    for (std::size_t s = worker; s < subsets.size(); s += workers) {
      std::vector<Complex> coeffs(subsets[s].size(), Complex{1.0});
      std::vector<SeqVector> terms;
      for (std::size_t i : subsets[s]) terms.push_back(vectors[i]);
      norms[s] = sup_norm(lin_comb(coeffs, terms), tol).upper();
    }
  };
  const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
  }
  return norms;
}

}  // namespace detail

inline LadderTest bp_test(const std::vector<SeqVector>& vectors, int subset_samples = 200, double tol = 1e-9,
                          std::uint64_t seed = 1) {
  if (vectors.size() < 2) throw Error(ErrorCode::invalid_argument, "bp_test needs at least two vectors");
  if (subset_samples < 100) throw Error(ErrorCode::invalid_argument, "bp_test needs at least 100 subset samples");
  LadderTest r;
  const auto subsets = detail::sample_subsets(vectors.size(), subset_samples, seed);
  r.subset_norms = detail::subset_sum_norms(vectors, subsets, tol);
  r.unconditional_bound = *std::max_element(r.subset_norms.begin(), r.subset_norms.end());
  r.cauchy_defect = std::numeric_limits<double>::infinity();
  for (const auto& v : vectors) r.cauchy_defect = std::min(r.cauchy_defect, sup_norm(v, tol).value);
  r.first_partial_sum = sup_norm(vectors.front(), tol).value;
  r.ladder_detected = r.unconditional_bound < 10.0 * r.first_partial_sum && r.cauchy_defect > tol;
  return r;
}

// ------------------------------------------------------------ c0 witness

enum class WitnessStatus { complete, horizon_exhausted, not_applicable };

inline std::string to_string(WitnessStatus s) {
  switch (s) {
    case WitnessStatus::complete: return "complete";
    case WitnessStatus::horizon_exhausted: return "horizon-exhausted";
    case WitnessStatus::not_applicable: return "not-applicable";
  }
  return "not-applicable";
}

/// Exponents of S_m = T^s and T_m = T^t; the ladder entry is x - T^{s-t} x.
struct SelectionStep {
  std::int64_t s = 0;
  std::int64_t t = 0;
  double threshold = 0.0;  // 1 / (2^{m+1} M)
  std::size_t products_checked = 0;
};

struct WitnessOptions {
  std::uint64_t seed = 1;
  int subset_samples = 200;
  int histogram_bins = 10;
  std::array<int, 3> growth_horizons{50, 100, 200};
};

struct WitnessAudit {
  WitnessStatus status = WitnessStatus::not_applicable;
  std::string reason;
  double delta = 0.0;        // certified minimal separation of the exponent pool
  double half_delta = 0.0;  // delta / 2, the pool is 2 * half_delta separated
  double M = 0.0;
  double x_norm = 0.0;
  std::size_t pool_size = 0;
  std::string index_zero_reading = "empty product included";
  std::vector<SeqVector> ladder;
  std::vector<NormEstimate> entry_norms;
  std::vector<SelectionStep> selection_log;
  std::vector<double> subset_sums;
  double subset_bound = 0.0;  // 1 + 2 M ||x||
  std::vector<int> subset_histogram;  // bins of width subset_bound / histogram_bins over [0, subset_bound]
  int subsets_over_bound = 0;
  bool entries_bounded_below = false;  // every ||x_m|| >= delta / M - tol
  bool non_convergent = false;         // bounded below with at least two entries
};

/// Ladder entry x - T^d x.
inline SeqVector witness_entry(const DiagonalOperator& op, const SeqVector& x, std::int64_t d) {
  return detail::snap_to_c0(difference(x, power_apply(op, d, x)));
}

/// Runs the inductive construction with exponent pool {1..horizon}. Preconditions:
/// symbolic splitting with P = I on E_aap, (I - T) x in c0, and a growing orbit of x.
inline WitnessAudit c0_witness(const DiagonalOperator& op, const SeqVector& x, int count, int horizon,
                               double tol = 1e-9, const WitnessOptions& options = {}) {
  if (count < 1) throw Error(ErrorCode::invalid_argument, "count must be >= 1");
  if (horizon < 2) throw Error(ErrorCode::invalid_argument, "horizon must be >= 2");
  WitnessAudit audit;
  audit.M = 2.0;  // sup ||S|| + 1 over the isometric semigroup
  try {
    const auto split = diagonal_jdlg(op, false, tol);
    if (!split.p_is_identity_on_aap) {
      audit.reason = "P is not certified to be the identity on E_aap";
      return audit;
    }
  } catch (const Error& e) {
    audit.reason = e.what();
    return audit;
  }
  if (x.space() == SpaceTag::c0 || std::abs(x.limit()) <= tol) {
    audit.reason = "x lies in c0, where orbits are relatively compact";
    return audit;
  }
  const DiagonalOperator on_c{op.symbol, SpaceTag::c};
  if (std::abs(difference(x, apply(on_c, x)).limit()) > tol) {
    audit.reason = "(I - T) x has nonzero limit";
    return audit;
  }
  const auto x_est = sup_norm(x, tol);
  audit.x_norm = x_est.value;
  {
    const std::array<double, 1> eps{audit.x_norm};
    const auto growth = compactness_diagnostic(on_c, x, eps, options.growth_horizons, tol);
    if (growth.verdict != CompactnessVerdict::growing) {
      audit.reason = "orbit of x does not grow at epsilon = ||x||";
      return audit;
    }
  }

  // Isometry: ||T^s x - T^t x|| = ||x - T^{|s-t|} x||, so separations depend on |s - t| only.
  std::vector<NormEstimate> gap(static_cast<std::size_t>(horizon), NormEstimate{-1.0, 0.0});
  auto separation = [&](std::int64_t d) -> const NormEstimate& {
    auto& slot = gap[static_cast<std::size_t>(d)];
    if (slot.value < 0.0) slot = sup_norm(witness_entry(on_c, x, d), tol);
    return slot;
  };
  std::vector<std::int64_t> pool;
  for (std::int64_t n = 1; n <= horizon; ++n) {
    bool separated = true;
    for (std::int64_t p : pool) {
      const auto& g = separation(n - p);
      if (!(g.value - g.error_bound > audit.x_norm)) {
        separated = false;
        break;
      }
    }
    if (separated) pool.push_back(n);
  }
  audit.pool_size = pool.size();
  audit.delta = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pool.size(); ++i)
    for (std::size_t j = i + 1; j < pool.size(); ++j) {
      const auto& g = separation(pool[j] - pool[i]);
      audit.delta = std::min(audit.delta, g.value - g.error_bound);
    }
  if (pool.size() < 2) {
    audit.status = WitnessStatus::horizon_exhausted;
    audit.reason = "exponent pool has fewer than two points";
    audit.delta = 0.0;
    return audit;
  }
  audit.half_delta = audit.delta / 2.0;

  // Products prod S_i - prod T_i over subsets of chosen pairs equal
  // T^{sum t_i} (T^D - I) with D the subset sum of the d_i; the empty product
  // (D = 0) contributes the zero vector.
  std::set<std::int64_t> sums{0};
  std::size_t next_t = 0;
  for (int m = 0; m < count; ++m) {
    const double threshold = 1.0 / (std::ldexp(1.0, m + 1) * audit.M);
    bool found = false;
    // Differences from the first unused t already cover every d the pool allows.
    const std::size_t ti = next_t;
    for (std::size_t si = ti + 1; si < pool.size() && !found; ++si) {
      const std::int64_t d = pool[si] - pool[ti];
      const SeqVector step = witness_entry(on_c, x, d);
      bool ok = true;
      std::size_t checked = 0;
      for (std::int64_t D : sums) {
        ++checked;
        if (D == 0) continue;
        const SeqVector combined = detail::snap_to_c0(difference(power_apply(on_c, D, step), step));
        if (!certified_at_most(combined, threshold, tol)) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      audit.selection_log.push_back({pool[si], pool[ti], threshold, checked});
      audit.ladder.push_back(step);
      std::set<std::int64_t> next = sums;
      for (std::int64_t D : sums) next.insert(D + d);
      sums = std::move(next);
      next_t = si + 1;
      found = true;
    }
    if (!found) break;
  }
  audit.status = static_cast<int>(audit.ladder.size()) == count ? WitnessStatus::complete
                                                                : WitnessStatus::horizon_exhausted;
  if (audit.status == WitnessStatus::horizon_exhausted)
    audit.reason = "no admissible pair within the exponent horizon for step " +
                   std::to_string(audit.ladder.size() + 1);

  audit.entries_bounded_below = !audit.ladder.empty();
  for (const auto& e : audit.ladder) {
    audit.entry_norms.push_back(sup_norm(e, tol));
    if (audit.entry_norms.back().value < audit.delta / audit.M - tol) audit.entries_bounded_below = false;
  }
  audit.non_convergent = audit.entries_bounded_below && audit.ladder.size() >= 2;

  audit.subset_bound = 1.0 + 2.0 * audit.M * audit.x_norm;
  audit.subset_histogram.assign(static_cast<std::size_t>(std::max(1, options.histogram_bins)) + 1, 0);
  if (!audit.ladder.empty()) {
    const auto subsets = detail::sample_subsets(audit.ladder.size(), options.subset_samples, options.seed);
    audit.subset_sums = detail::subset_sum_norms(audit.ladder, subsets, tol);
    const double width = audit.subset_bound / options.histogram_bins;
    for (double s : audit.subset_sums) {
      if (s > audit.subset_bound + tol) ++audit.subsets_over_bound;
      const auto bin = std::min<std::size_t>(static_cast<std::size_t>(s / width), audit.subset_histogram.size() - 1);
      ++audit.subset_histogram[bin];
    }
  }
  return audit;
}

}  // namespace aplab
