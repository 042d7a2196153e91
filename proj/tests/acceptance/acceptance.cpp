// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "aplab/battery.hpp"
#include "aplab/gallery.hpp"
#include "aplab/io.hpp"
#include "aplab/runner.hpp"

using namespace aplab;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream evidence;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      evidence << " [failed: " << what << "]";
    }
  }
};

using Criterion = std::function<void(Verdict&)>;

bool report(int id, const char* title, double budget_seconds, const Criterion& body) {
  Verdict v;
  v.evidence.precision(4);
  const auto start = std::chrono::steady_clock::now();
  try {
    body(v);
  } catch (const std::exception& e) {
    v.pass = false;
    v.evidence << " [exception: " << e.what() << "]";
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (seconds > budget_seconds) {
    v.pass = false;
    v.evidence << " [over budget " << budget_seconds << " s]";
  }
  std::printf("%s %2d %s:%s (%.2f s)\n", v.pass ? "PASS" : "FAIL", id, title, v.evidence.str().c_str(), seconds);
  std::fflush(stdout);
  return v.pass;
}

DiagonalOperator harmonic() { return {DiagonalSymbol::from_family(SymbolFamily::harmonic()), SpaceTag::c}; }

double opnorm(const Eigen::MatrixXcd& a) { return linalg::operator_norm(a, NormTag::euclidean); }

constexpr std::array<int, 3> kHorizons{100, 200, 400};
constexpr std::uint64_t kBatterySeed = 20240601;

// ------------------------------------------------------------ criteria

void telescoping_identity(Verdict& v) {
  battery::Rng rng(101);
  double worst = 0.0;
  for (int family = 0; family < 50; ++family) {
    const int m = rng.integer(1, 3);
    const auto gens = battery::commuting_family(rng, 8, m);
    std::vector<int> k(static_cast<std::size_t>(m));
    do {
      for (auto& e : k) e = rng.integer(0, 5);
    } while (std::all_of(k.begin(), k.end(), [](int e) { return e == 0; }));
    OperatorWord full{k};
    const Eigen::MatrixXcd product = evaluate(full, gens);
    const auto terms = telescope_expand(k);
    const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(8, 8);
    for (int p = 0; p < 20; ++p) {
      const Eigen::VectorXcd x = rng.gaussian_vector(8);
      const Eigen::VectorXcd lhs = (I - product) * x;
      Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(8);
      for (const auto& t : terms) rhs += evaluate(t.word, gens) * ((I - gens[t.generator].entries) * x);
      worst = std::max(worst, (lhs - rhs).norm());
    }
  }
  v.evidence << " max residual " << worst;
  v.require(worst <= 1e-9, "residual <= 1e-9");
}

void separation(Verdict& v) {
  const auto T = harmonic();
  const std::array<double, 1> one_eps{1.0};
  const auto cloud = orbit(T, SeqVector::constant(1.0), kHorizons.back(), 1e-9);
  const auto r = compactness_report(cloud, one_eps, kHorizons);
  v.evidence << " packing(1) " << r.packing[0][0] << "/" << r.packing[0][1] << "/" << r.packing[0][2];
  for (std::size_t h = 0; h < kHorizons.size(); ++h) v.require(r.packing[0][h] == kHorizons[h], "packing equals horizon");
  double worst = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i)
    for (std::size_t j = i + 1; j < cloud.size(); ++j) {
      const auto d = cloud.distance(i, j);
      worst = std::max({worst, std::abs(d.value - 2.0), d.error_bound});
    }
  v.evidence << ", max |d - 2| + err " << worst;
  v.require(worst <= 1e-8, "distances 2 within 1e-8");

  const std::array<double, 1> small{0.1};
  const auto diff = difference_orbit(T, SeqVector::constant(1.0), kHorizons.back(), 1e-9);
  const auto dr = compactness_report(diff, small, kHorizons);
  v.evidence << ", difference packing(0.1) " << dr.packing[0][0] << "/" << dr.packing[0][1] << "/" << dr.packing[0][2];
  v.require(dr.packing[0][1] == dr.packing[0][2], "difference packing constant over last doubling");
}

void mean_ergodic_dichotomy(Verdict& v) {
  const auto on_c = diagonal_mean_ergodic_verdict(harmonic());
  v.require(!on_c.is_mean_ergodic, "not mean ergodic on c");
  for (int n : {10, 100, 1000}) {
    const double s = on_c.evidence_value("sup_norm_of_mean_n" + std::to_string(n));
    v.require(std::abs(s - 1.0) <= 1e-8, "sup_norm(A_n 1) = 1 at n = " + std::to_string(n));
  }
  const auto on_c0 = diagonal_mean_ergodic_verdict({harmonic().symbol, SpaceTag::c0});
  v.require(on_c0.is_mean_ergodic, "mean ergodic on c0");
  double C = 0.0;
  for (int n : {10, 100, 1000}) C = std::max(C, n * on_c0.evidence_value("probe_cesaro_norm_n" + std::to_string(n)));
  const double slope = on_c0.evidence_value("fitted_exponent");
  v.evidence << " c: not mean ergodic; c0: C = " << C << ", fitted exponent " << slope;
  v.require(std::isfinite(C) && std::abs(slope + 1.0) <= 0.05, "C/n fit");
}

void matrix_projection(Verdict& v) {
  battery::Rng rng(kBatterySeed);
  double identities = 0.0, rate_ratio = 0.0, residual = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto s = battery::battery_member(rng, 10, i);
    const auto dec = mean_ergodic_projection(s.op);
    const auto& P = dec.projection.entries;
    const auto& T = s.op.entries;
    const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(10, 10);
    identities = std::max({identities, opnorm(P * P - P), opnorm(T * P - P), opnorm(P * T - P)});
    const double M = power_bound_estimate(s.op, 1000).sup_power_norm;
    const double oblique = opnorm((I - T + P).inverse() * (I - P));
    static constexpr std::array<int, 3> ns{10, 100, 1000};
    const auto means = cesaro_matrices(s.op, ns);
    for (std::size_t j = 0; j < ns.size(); ++j)
      rate_ratio = std::max(rate_ratio, opnorm(means[j] - P) / (2.0 * M / ns[j] * oblique));
    const FiniteVector x(rng.gaussian_vector(10), NormTag::euclidean);
    residual = std::max(residual, decomposition_check(s.op, x).residual);
  }
  v.evidence << " identities " << identities << ", max ||A_n - P|| / (2M/n oblique) " << rate_ratio
             << ", decomposition residual " << residual;
  v.require(identities <= 1e-8, "projection identities within 1e-8");
  v.require(rate_ratio <= 1.0, "rate bound");
  v.require(residual <= 1e-8, "decomposition residual <= 1e-8");
}

void splitting(Verdict& v) {
  battery::Rng rng(kBatterySeed);
  double worst_rate = 0.0, worst_group = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto s = battery::battery_member(rng, 10, i);
    const auto split = jdlg_split(s.op);
    const auto& T = s.op.entries;
    const Eigen::MatrixXcd Q = Eigen::MatrixXcd::Identity(10, 10) - split.projection.entries;
    // (I - P) commutes with T; reapplying it keeps rounding in E_rev from accumulating
    Eigen::VectorXcd y = Q * rng.gaussian_vector(10);
    std::vector<double> logs;
    for (int n = 0; n <= 200 && y.norm() > 1e-250; ++n) {
      logs.push_back(std::log(y.norm()));
      y = Q * (T * y);
    }
    const std::size_t from = logs.size() / 2;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t n = from; n < logs.size(); ++n) {
      const double x = static_cast<double>(n);
      sx += x, sy += logs[n], sxx += x * x, sxy += x * logs[n];
    }
    const double cnt = static_cast<double>(logs.size() - from);
    const double r = std::exp((cnt * sxy - sx * sy) / (cnt * sxx - sx * sx));
    worst_rate = std::max(worst_rate, std::abs(r - split.aws_spectral_radius));
    const double cond = opnorm(s.similarity) * opnorm(s.similarity.inverse());
    worst_group = std::max(worst_group, split.group_bound / cond);
    v.require(split.group_horizon == 1000 && std::isfinite(split.group_bound), "rev_action powers bounded");
  }
  v.evidence << " max |r - aws radius| " << worst_rate << ", max group bound / cond(V) " << worst_group;
  v.require(worst_rate <= 0.05, "fitted r within 0.05");
  v.require(worst_group <= 1.0 + 1e-6, "group bound <= cond(V)");
}

void decay_at_one(Verdict& v) {
  const auto r = ktz_check(MatrixOperator::diagonal({Complex{1.0}, Complex{0.9}}), 400);
  double worst = 0.0;
  for (int n = 0; n <= 200; ++n) worst = std::max(worst, std::abs(r.decay_curve[n] - 0.1 * std::pow(0.9, n)));
  Eigen::MatrixXcd P = Eigen::MatrixXcd::Zero(2, 2);
  P(0, 0) = 1.0;
  const double projection_error = (r.limit_projection.entries - P).norm();
  v.evidence << " max curve error " << worst << ", ||T^400 - P|| " << r.limit_error;
  v.require(worst <= 1e-12, "curve within 1e-12");
  v.require(projection_error <= 1e-12 && r.limit_error <= 1e-12 && r.pass, "T^n -> diag(1, 0)");
  Eigen::MatrixXcd jordan(2, 2);
  jordan << 1.0, 1.0, 0.0, 1.0;
  bool rejected = false;
  try {
    (void)ktz_check(MatrixOperator(jordan), 50);
  } catch (const Error& e) {
    rejected = e.code() == ErrorCode::not_power_bounded;
  }
  v.evidence << ", Jordan block " << (rejected ? "rejected" : "accepted");
  v.require(rejected, "Jordan block rejected");
}

void half_sum_transform(Verdict& v) {
  battery::Rng rng(303);
  double closest_inner = 0.0, worst_at_one = 0.0;
  int bad = 0;
  for (int i = 0; i < 100; ++i) {
    const auto T = battery::contraction(rng, 10, i);
    v.require(T.norm() <= 1.0 + 1e-12, "norm <= 1");
    const auto h = half_sum(T);
    for (Complex z : h.spectrum.eigenvalues) {
      const bool inner = std::abs(z) < 1.0 - 1e-12;
      const bool at_one = std::abs(z - Complex{1.0}) <= 1e-9;
      if (inner) closest_inner = std::max(closest_inner, std::abs(z));
      if (at_one) worst_at_one = std::max(worst_at_one, std::abs(z - Complex{1.0}));
      if (!inner && !at_one) ++bad;
    }
  }
  v.evidence << " largest inner modulus " << closest_inner << ", eigenvalues violating " << bad;
  v.require(bad == 0, "every eigenvalue inside or at 1");
}

void asymmetry(Verdict& v) {
  const auto T = example_4_3(SymbolFamily::root_perturbed(2));
  const auto r = example_4_3_report(T, 0.1, 1.0, kHorizons);
  const auto& sat = r.range_m_probe.report.packing[0];
  const auto& grow = r.range_one_probe.report.packing[0];
  v.evidence << " (I - T^2)1 packing(0.1) " << sat[0] << "/" << sat[1] << "/" << sat[2] << ", 1 - a packing(1) "
             << grow[0] << "/" << grow[1] << "/" << grow[2] << ", limit " << r.range_one_probe.limit.real();
  v.require(std::abs(r.range_m_probe.limit) == 0.0, "(I - T^2)1 in c0");
  v.require(sat[1] == sat[2], "(I - T^2)1 saturates");
  v.require(grow[2] >= 2 * grow[1] * 9 / 10 && r.range_one_probe.report.verdict == CompactnessVerdict::growing,
            "1 - a grows linearly");
  v.require(std::abs(r.range_one_probe.limit - Complex{2.0}) <= 1e-12, "limit coordinate 2");
}

void witness(Verdict& v) {
  const auto T = harmonic();
  runner::ProbeSpec probe;
  probe.name = "one";
  const auto audit = c0_witness(T, SeqVector::constant(1.0), 20, 10'000);
  double smallest = std::numeric_limits<double>::infinity();
  for (const auto& e : audit.entry_norms) smallest = std::min(smallest, e.value);
  double largest_sum = 0.0;
  for (double s : audit.subset_sums) largest_sum = std::max(largest_sum, s);
  const auto cert = runner::make_certificate(audit, SymbolFamily::harmonic(), probe, 1e-9, 1);
  const auto check = runner::verify_certificate(cert);
  v.evidence << " status " << to_string(audit.status) << ", ladder length " << audit.ladder.size() << ", delta "
             << audit.delta << ", min ||x_m|| " << smallest << ", subset sums " << audit.subset_sums.size()
             << " max " << largest_sum << ", certificate: "
             << (check.reason.empty() ? std::string(check.ladder_detected ? "ladder detected" : "no ladder")
                                      : check.reason);
  v.require(!audit.ladder.empty() && smallest >= 1.0 - 1e-6, "every ||x_m|| >= 1 - 1e-6");
  v.require(audit.subset_sums.size() == 200 && largest_sum <= 5.0 + 1e-6, "200 subset sums <= 5");
  v.require(check.ladder_detected, "bp_test reports ladder_detected");
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(APLAB_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void determinism(Verdict& v) {
  const fs::path root = fs::temp_directory_path() / ("aplab_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  int compared = 0;
  for (const auto& name : runner::demo_names()) {
    for (const char* run : {"a", "b"}) {
      const int rc = run_cli("demo " + name + " --seed 7 --json --csv --out-dir " + (root / run).string());
      v.require(rc == 0 || rc == 1, "demo " + name + " ran");
    }
  }
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    const auto file = entry.path().filename().string();
    if (file.find(".timing.") != std::string::npos) continue;
    const auto other = root / "b" / file;
    v.require(fs::exists(other), file + " present in both runs");
    if (fs::exists(other)) {
      ++compared;
      v.require(io::read_file(entry.path()) == io::read_file(other), file + " identical");
    }
  }
  fs::remove_all(root);
  v.evidence << " " << compared << " files byte-identical across reruns";
  v.require(compared > 0, "outputs written");
}

}  // namespace

int main() {
  bool all = true;
  all &= report(1, "telescoping identity on commuting families", 5, telescoping_identity);
  all &= report(2, "harmonic orbit separation", 60, separation);
  all &= report(3, "mean ergodicity on c versus c0", 10, mean_ergodic_dichotomy);
  all &= report(4, "matrix mean ergodic projection", 10, matrix_projection);
  all &= report(5, "reversible and stable splitting", 20, splitting);
  all &= report(6, "decay with peripheral spectrum at 1", 2, decay_at_one);
  all &= report(7, "half-sum transform of contractions", 5, half_sum_transform);
  all &= report(8, "range asymmetry for m = 2", 60, asymmetry);
  all &= report(9, "c0 witness ladder", 120, witness);
  all &= report(10, "demo determinism", 120, determinism);
  return all ? 0 : 1;
}
