#include <gtest/gtest.h>

#include <numbers>
#include <numeric>
#include <optional>

#include "aplab/gallery.hpp"

using namespace aplab;

namespace {

template <class F>
std::optional<ErrorCode> code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

std::vector<SeqVector> scaled_units(int count, double ratio) {
  std::vector<SeqVector> out;
  for (int m = 1; m <= count; ++m) out.push_back(lin_comb({Complex{std::pow(ratio, m)}}, {SeqVector::unit(m)}));
  return out;
}

constexpr std::array<int, 3> kShortHorizons{25, 50, 100};

}  // namespace

TEST(GalleryOperators, FamilyValidation) {
  EXPECT_NO_THROW((void)example_3_3(SymbolFamily::harmonic()));
  EXPECT_NO_THROW((void)example_3_3(SymbolFamily::root_perturbed(1, 2.0)));
  EXPECT_EQ(code_of([] { (void)example_3_3(SymbolFamily::constant(0.5)); }), ErrorCode::invalid_family);
  EXPECT_EQ(code_of([] { (void)example_3_3(SymbolFamily::root_perturbed(2)); }), ErrorCode::invalid_family);

  EXPECT_NO_THROW((void)example_4_3(SymbolFamily::root_perturbed(3)));
  EXPECT_EQ(code_of([] { (void)example_4_3(SymbolFamily::harmonic()); }), ErrorCode::invalid_family);
  try {
    (void)example_4_3(SymbolFamily::root_perturbed(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_family);
    EXPECT_NE(std::string(e.what()).find("example_3_3"), std::string::npos);
  }
}

TEST(Example33, HarmonicReportPasses) {
  const auto T = example_3_3(SymbolFamily::harmonic());
  const auto r = example_3_3_report(T, 1.0, std::array<int, 3>{100, 200, 400}, 100);
  EXPECT_LE(r.isometry_defect, 2e-9);
  EXPECT_LE(r.inverse_defect, 1e-12);
  EXPECT_TRUE(r.fix_trivial);
  EXPECT_FALSE(r.mean_ergodic.is_mean_ergodic);
  EXPECT_LE(r.difference_limit, 1e-9);
  EXPECT_EQ(r.one_orbit.report.packing[0], (std::vector<int>{100, 200, 400}));
  EXPECT_EQ(r.c0_orbit.report.verdict, CompactnessVerdict::saturating);
  EXPECT_EQ(r.c0_orbit.limit, Complex{});
  EXPECT_TRUE(r.pass);
}

TEST(Example33, UnitVectorProbeIsInvariantUpToPhase) {
  const auto T = example_3_3(SymbolFamily::harmonic());
  // a_1 = -1, so T e_1 = -e_1 and the orbit has two points
  const auto e1 = SeqVector::unit(1, SpaceTag::c);
  EXPECT_NEAR(std::abs(apply(T, e1).coord(1) - Complex{-1.0}), 0.0, 1e-15);
  const std::array<double, 1> eps{1.0};
  const auto rep = compactness_diagnostic(T, e1, eps, kShortHorizons, 1e-9);
  EXPECT_EQ(rep.packing[0], (std::vector<int>{2, 2, 2}));
  EXPECT_EQ(rep.verdict, CompactnessVerdict::saturating);
}

TEST(Example43, ProbeLimitsAndGrowth) {
  const auto T = example_4_3(SymbolFamily::root_perturbed(2));
  const auto r = example_4_3_report(T, 0.1, 1.0, kShortHorizons);
  EXPECT_EQ(r.m, 2);
  EXPECT_EQ(r.range_m_probe.limit, Complex{});
  EXPECT_NEAR(std::abs(r.range_one_probe.limit - Complex{2.0}), 0.0, 1e-12);
  EXPECT_EQ(r.range_one_probe.report.verdict, CompactnessVerdict::growing);
  EXPECT_EQ(code_of([] {
              (void)example_4_3_report(example_3_3(SymbolFamily::harmonic()));
            }),
            ErrorCode::invalid_family);
}

TEST(LadderTest, UnitVectorsAreALadder) {
  std::vector<SeqVector> units;
  for (int m = 1; m <= 12; ++m) units.push_back(SeqVector::unit(m));
  const auto r = bp_test(units);
  EXPECT_DOUBLE_EQ(r.unconditional_bound, 1.0);
  EXPECT_DOUBLE_EQ(r.cauchy_defect, 1.0);
  EXPECT_TRUE(r.ladder_detected);
  EXPECT_EQ(r.subset_norms.size(), 200u);
}

TEST(LadderTest, GeometricSeriesIsNotALadder) {
  const auto r = bp_test(scaled_units(40, 0.5));
  EXPECT_LE(r.unconditional_bound, 0.5 + 1e-9);
  EXPECT_LT(r.cauchy_defect, 1e-9);
  EXPECT_FALSE(r.ladder_detected);
}

TEST(LadderTest, UnboundedSubsetSumsAreNotALadder) {
  std::vector<SeqVector> v;
  for (int m = 1; m <= 10; ++m) v.push_back(lin_comb({Complex{static_cast<double>(m)}}, {SeqVector::unit(1)}));
  const auto r = bp_test(v);
  EXPECT_GE(r.unconditional_bound, 10.0);
  EXPECT_FALSE(r.ladder_detected);
}

TEST(LadderTest, RejectsSmallInputs) {
  EXPECT_EQ(code_of([] { (void)bp_test({SeqVector::unit(1)}); }), ErrorCode::invalid_argument);
  EXPECT_EQ(code_of([] { (void)bp_test({SeqVector::unit(1), SeqVector::unit(2)}, 99); }), ErrorCode::invalid_argument);
}

TEST(LadderTest, SubsetSamplingIsSeededAndWellFormed) {
  const auto a = detail::sample_subsets(7, 150, 42);
  const auto b = detail::sample_subsets(7, 150, 42);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, detail::sample_subsets(7, 150, 43));
  for (const auto& s : a) {
    ASSERT_FALSE(s.empty());
    EXPECT_LE(s.size(), 7u);
    EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
    EXPECT_EQ(std::adjacent_find(s.begin(), s.end()), s.end());
    EXPECT_LT(s.back(), 7u);
  }
}

TEST(Witness, EntryClosedForm) {
  const auto T = example_3_3(SymbolFamily::harmonic());
  for (std::int64_t d : {1, 4, 9}) {
    const auto e = witness_entry(T, SeqVector::constant(1.0), d);
    EXPECT_EQ(e.space(), SpaceTag::c0);
    for (std::int64_t k = 1; k <= 50; ++k) {
      const Complex expected = Complex{1.0} - std::polar(1.0, std::numbers::pi * static_cast<double>(d) / static_cast<double>(k));
      EXPECT_NEAR(std::abs(e.coord(k) - expected), 0.0, 1e-12);
    }
  }
}

TEST(Witness, PreconditionsYieldNotApplicable) {
  const auto T = example_3_3(SymbolFamily::harmonic());
  const auto in_c0 = c0_witness(T, SeqVector::unit(2, SpaceTag::c), 3, 100);
  EXPECT_EQ(in_c0.status, WitnessStatus::not_applicable);
  EXPECT_FALSE(in_c0.reason.empty());

  const auto T43 = example_4_3(SymbolFamily::root_perturbed(2));
  const auto shifted = c0_witness(T43, SeqVector::constant(1.0), 3, 100);
  EXPECT_EQ(shifted.status, WitnessStatus::not_applicable);
  EXPECT_NE(shifted.reason.find("nonzero limit"), std::string::npos);

  const DiagonalSymbol custom([](std::int64_t k) { return 1.0 / static_cast<double>(k); }, 0.0,
                              TailCertificate{1.0, 1.0}, true);
  EXPECT_EQ(c0_witness({custom, SpaceTag::c}, SeqVector::constant(1.0), 3, 100).status, WitnessStatus::not_applicable);

  EXPECT_EQ(code_of([&] { (void)c0_witness(T, SeqVector::constant(1.0), 0, 100); }), ErrorCode::invalid_argument);
  EXPECT_EQ(code_of([&] { (void)c0_witness(T, SeqVector::constant(1.0), 2, 1); }), ErrorCode::invalid_argument);
}

TEST(Witness, HarmonicAuditInvariants) {
  const auto T = example_3_3(SymbolFamily::harmonic());
  const auto a = c0_witness(T, SeqVector::constant(1.0), 4, 200);
  ASSERT_NE(a.status, WitnessStatus::not_applicable) << a.reason;
  EXPECT_DOUBLE_EQ(a.x_norm, 1.0);
  EXPECT_DOUBLE_EQ(a.M, 2.0);
  EXPECT_EQ(a.pool_size, 200u);
  EXPECT_NEAR(a.delta, 2.0, 1e-9);
  EXPECT_DOUBLE_EQ(a.half_delta, a.delta / 2.0);
  ASSERT_FALSE(a.ladder.empty());
  EXPECT_EQ(a.ladder.size(), a.selection_log.size());
  EXPECT_EQ(a.ladder.size(), a.entry_norms.size());
  for (std::size_t m = 0; m < a.ladder.size(); ++m) {
    EXPECT_EQ(a.ladder[m].space(), SpaceTag::c0);
    EXPECT_GE(a.entry_norms[m].value, a.delta / a.M - 1e-9);
    EXPECT_DOUBLE_EQ(a.selection_log[m].threshold, 1.0 / (std::ldexp(1.0, static_cast<int>(m) + 1) * a.M));
    EXPECT_GT(a.selection_log[m].s, a.selection_log[m].t);
  }
  EXPECT_TRUE(a.entries_bounded_below);
  EXPECT_DOUBLE_EQ(a.subset_bound, 5.0);
  EXPECT_EQ(a.subsets_over_bound, 0);
  EXPECT_EQ(std::accumulate(a.subset_histogram.begin(), a.subset_histogram.end(), 0), 200);
  EXPECT_EQ(a.status == WitnessStatus::complete, a.ladder.size() == 4u);
  if (a.status == WitnessStatus::horizon_exhausted) {
    EXPECT_FALSE(a.reason.empty());
  }
}
