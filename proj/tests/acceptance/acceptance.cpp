/*
 * Copyright 2026 The embsense Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Acceptance suite: one PASS/FAIL line per criterion, each timed against its
// runtime limit. Exit status is non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "embsense/downstream.hpp"
#include "embsense/effects.hpp"
#include "embsense/error.hpp"
#include "embsense/fileio.hpp"
#include "embsense/numstats.hpp"
#include "embsense/pipeline.hpp"
#include "embsense/projection.hpp"
#include "embsense/sensitivity.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

namespace {

namespace fs = std::filesystem;
using embsense::TrajectorySet;
using embsense::stats::Matrix;
using embsense::stats::Vector;
using nlohmann::json;
namespace dsp = embsense::dsp;
namespace ds = embsense::downstream;
namespace proj = embsense::projection;
namespace sens = embsense::sensitivity;
namespace stats = embsense::stats;
namespace pl = embsense::pipeline;
namespace t = embsense::testing;

// Tolerances.
constexpr double kSpearmanTol = 1e-12;
constexpr double kAucTol = 1e-12;
constexpr double kCca2dTol = 1e-6;
constexpr double kPcaCosTol = 1e-6;
constexpr double kUnitR2Tol = 1e-6;
constexpr double kRecoveryCos = 0.999;
constexpr double kPostProjectionRho = 0.1;
constexpr double kCollapseRatio = 1e-6;
constexpr double kFlatTol = 1e-6;
constexpr double kRhoOneTol = 1e-6;
constexpr double kStopbandDb = -59.5;
constexpr double kGainCompositionTol = 1e-6;
constexpr double kGainR2Min = 0.95;
constexpr double kLogisticGradTol = 1e-6;
constexpr double kFiniteDiffRelTol = 1e-4;

// Runtime limits in seconds.
constexpr double kOracleLimit = 30;
constexpr double kRecoveryLimit = 10;
constexpr double kHighDimLimit = 10;
constexpr double kRhoOneLimit = 10;
constexpr double kDspLimit = 60;
constexpr double kEndToEndLimit = 300;
constexpr double kLogisticLimit = 30;

const fs::path kDataDir = EMBSENSE_TEST_DATA_DIR;

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void Check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!ok || notes.size() < 32) notes.push_back((ok ? "" : "FAILED ") + what);
  }
};

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            fmt::format("embsense_acceptance_{}{}", rd(), rd());
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::vector<double> Std(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

// ---------------------------------------------------------------------------

Outcome OracleEquivalence() {
  Outcome o;
  std::mt19937_64 rng(101);
  std::normal_distribution<double> g;
  std::uniform_int_distribution<int> small(0, 6);

  double worst = 0;
  for (int c = 0; c < 200; ++c) {
    const int n = 5 + c % 60;
    std::vector<double> a(n), b(n);
    for (int i = 0; i < n; ++i) {
      // Every fourth case draws from a small integer set (ties).
      a[i] = c % 4 == 0 ? small(rng) : g(rng);
      b[i] = c % 4 == 1 ? small(rng) : 0.4 * a[i] + g(rng);
    }
    if (std::all_of(a.begin(), a.end(), [&](double v) { return v == a[0]; }) ||
        std::all_of(b.begin(), b.end(), [&](double v) { return v == b[0]; })) {
      a[0] += 1;
      b[1] += 1;
    }
    const double oracle = t::OraclePearson(t::OracleRanks(a), t::OracleRanks(b));
    worst = std::max(worst, std::abs(stats::Spearman(a, b) - oracle));
  }
  o.Check(worst <= kSpearmanTol,
          fmt::format("spearman vs rank-pearson: max err {:.2e}", worst));

  worst = 0;
  for (int c = 0; c < 200; ++c) {
    const int n = 4 + c % 80;
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
      y[i] = i % 3 == 0;
      s[i] = c % 3 == 0 ? small(rng) : g(rng) + 0.8 * y[i];
    }
    worst = std::max(worst, std::abs(ds::RocAuc(s, y) - t::OracleAuc(s, y)));
  }
  o.Check(worst <= kAucTol, fmt::format("roc_auc vs pair counting: max err {:.2e}",
                                        worst));

  worst = 0;
  for (int c = 0; c < 50; ++c) {
    const int n = 12 + c;
    Matrix x = t::RandomGaussian(n, 2, rng);
    x.col(1) = 0.3 * x.col(0) + (0.2 + 0.05 * c) * x.col(1);
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i) y[i] = std::sin(0.3 * c) * x(i, 0) + x(i, 1) + g(rng);
    const double got = stats::CcaSingleTarget(x, y).rho;
    worst = std::max(worst, std::abs(got - t::AngleSearchRho(x, y)));
  }
  o.Check(worst <= kCca2dTol,
          fmt::format("2-D CCA vs angle search: max err {:.2e}", worst));

  // Top principal component of trajectory displacements against a direct
  // eigendecomposition of their covariance.
  double worst_cos = 0;
  for (int c = 0; c < 20; ++c) {
    const auto dc = t::MakeDeformedClasses(12, 10, 6, 1.0, 1.0, 200 + c);
    Matrix disp(0, 10);
    const TrajectorySet& tr = dc.traj;
    const Matrix clean = tr.clean.ToDouble();
    std::mt19937_64 noise(300 + c);
    for (const auto& e : tr.effected) {
      Matrix d = e.ToDouble() - clean;
      d += 0.3 * t::RandomGaussian(d.rows(), d.cols(), noise);
      disp.conservativeResize(disp.rows() + d.rows(), Eigen::NoChange);
      disp.bottomRows(d.rows()) = d;
    }
    const Vector top = stats::Pca(disp).components.row(0).transpose();
    const Matrix centered = disp.rowwise() - disp.colwise().mean();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(centered.transpose() * centered);
    const Vector ref = eig.eigenvectors().col(eig.eigenvectors().cols() - 1);
    worst_cos = std::max(worst_cos, 1 - std::abs(top.dot(ref)));
  }
  o.Check(worst_cos <= kPcaCosTol,
          fmt::format("displacement PCA vs eigensolver: max 1-|cos| {:.2e}",
                      worst_cos));
  return o;
}

double MaxSpread(const std::vector<Matrix>& pts, Eigen::Index i) {
  double worst = 0;
  for (const Matrix& a : pts) {
    for (const Matrix& b : pts) worst = std::max(worst, (a.row(i) - b.row(i)).norm());
  }
  return worst;
}

std::vector<Matrix> AllConditions(const TrajectorySet& tr) {
  std::vector<Matrix> out{tr.clean.ToDouble()};
  for (const auto& m : tr.effected) out.push_back(m.ToDouble());
  return out;
}

Outcome LinearRecovery() {
  Outcome o;
  const auto sl = t::MakeSharedLinear(40, 128, 12, 2026);
  const auto global = sens::GlobalCca(sl.traj, "c0");
  o.Check(std::abs(global.r2 - 1) <= kUnitR2Tol,
          fmt::format("global r2 = {:.9f}", global.r2));

  const std::vector<proj::Method> methods{
      {proj::MethodKind::kGlobalCca},
      {proj::MethodKind::kSamplewiseCcaSvd, 0.5},
      {proj::MethodKind::kPcaAbsolute},
      {proj::MethodKind::kPcaRelative},
      {proj::MethodKind::kAvgDisplacement},
      {proj::MethodKind::kLda}};
  for (const auto& m : methods) {
    const proj::Projector p = proj::Estimate(m, sl.traj, "c0");
    const double cos = p.size() > 0 ? std::abs(p.basis.row(0).dot(sl.v)) : 0.0;
    o.Check(cos > kRecoveryCos, fmt::format("{}: |cos| = {:.9f}", m.Name(), cos));
  }

  const auto dims = sens::SamplewiseDirectionSpectrum(sl.traj, "c0");
  o.Check(dims.k90_cca == 1, fmt::format("sample-wise k90 = {}", dims.k90_cca));

  const proj::Projector p = proj::EstimateGlobalCca(sl.traj, "c0");
  TrajectorySet projected = sl.traj;
  projected.clean = proj::ApplyProjector(p, sl.traj.clean);
  for (auto& m : projected.effected) m = proj::ApplyProjector(p, m);
  try {
    const double rho = sens::GlobalCca(projected, "c0").rho;
    o.Check(rho < kPostProjectionRho, fmt::format("post-projection rho = {:.3e}", rho));
  } catch (const embsense::Error& e) {
    // Every trajectory collapsed to a point: no residual deformation at all.
    const auto before = AllConditions(sl.traj), after = AllConditions(projected);
    double ratio = 0;
    for (Eigen::Index i = 0; i < sl.traj.clean.rows(); ++i) {
      ratio = std::max(ratio, MaxSpread(after, i) / MaxSpread(before, i));
    }
    o.Check(e.code() == embsense::ErrorCode::kDegenerateGeometry &&
                ratio < kCollapseRatio,
            fmt::format("post-projection trajectories collapsed, spread ratio {:.2e}",
                        ratio));
  }
  return o;
}

Outcome HighDimensionalDetection() {
  Outcome o;
  const int n = 8;
  const auto ps = t::MakePerSampleOrthogonal(n, 64, 12, 77);
  const auto dims = sens::SamplewiseDirectionSpectrum(ps.traj, "c0");
  double dev = 0;
  for (double v : dims.cca_spectrum.normalized) dev = std::max(dev, std::abs(v - 1));
  o.Check(dims.cca_spectrum.normalized.size() == static_cast<std::size_t>(n) &&
              dev <= kFlatTol,
          fmt::format("spectrum flat: max |s_k/s_1 - 1| = {:.2e}", dev));
  o.Check(dims.k90_cca == n, fmt::format("k90 = {} (N = {})", dims.k90_cca, n));
  double worst = 0;
  for (const auto& id : ps.traj.clean.sample_ids) {
    worst = std::max(worst, std::abs(sens::SamplewiseCca(ps.traj, id).r2 - 1));
  }
  o.Check(worst <= kUnitR2Tol, fmt::format("per-sample max |r2 - 1| = {:.2e}", worst));
  return o;
}

Outcome SamplewiseRhoOne() {
  Outcome o;
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> pick(2, 40);
  double worst = 0;
  for (int c = 0; c < 100; ++c) {
    const int p = pick(rng);
    const int d = std::max(p - 1, pick(rng));
    const Matrix x = t::RandomGaussian(p, d, rng);
    std::vector<double> y(p);
    for (int i = 0; i < p; ++i) y[i] = i + 1;
    worst = std::max(worst, std::abs(stats::CcaSingleTarget(x, y).rho - 1));
  }
  o.Check(worst <= kRhoOneTol, fmt::format("100 trajectories, max |rho - 1| = {:.2e}",
                                           worst));
  return o;
}

dsp::AudioClip NoiseClip(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  dsp::AudioClip c;
  c.sample_rate = 44100;
  for (std::size_t i = 0; i < n; ++i) c.samples.push_back(u(rng));
  return c;
}

Outcome DspContracts() {
  Outcome o;
  const double fs = 44100;
  for (double cutoff : {1600.0, 5000.0, 18333.0}) {
    const auto sos = dsp::DesignCheby2LowPass(cutoff, fs, 8, 60);
    double worst = -1e9;
    for (double f = std::ceil(cutoff); f <= fs / 2; f += 1.0) {
      worst = std::max(worst, t::OracleMagnitudeDb(sos, f, fs));
    }
    o.Check(worst <= kStopbandDb,
            fmt::format("cutoff {} Hz: stopband max {:.2f} dB", cutoff, worst));
  }

  const dsp::AudioClip clip = NoiseClip(44100, 1);
  double rel = 0;
  for (auto [a, b] : {std::pair{-12.0, 3.5}, {-40.0, 5.0}, {2.0, -7.25}}) {
    const auto two = dsp::ApplyGain(dsp::ApplyGain(clip, a), b);
    const auto one = dsp::ApplyGain(clip, a + b);
    for (std::size_t i = 0; i < one.samples.size(); ++i) {
      if (one.samples[i] == 0) continue;
      rel = std::max(rel, std::abs(double(two.samples[i]) - one.samples[i]) /
                              std::abs(double(one.samples[i])));
    }
  }
  o.Check(rel <= kGainCompositionTol,
          fmt::format("gain composition: max rel err {:.2e}", rel));

  bool idem = true;
  for (int b = 4; b <= 15; ++b) {
    const auto once = dsp::ApplyBitcrush(NoiseClip(8192, 10 + b), b);
    idem = idem && dsp::ApplyBitcrush(once, b).samples == once.samples;
  }
  o.Check(idem, "bitcrush idempotent bit-exact at depths 4..15");

  dsp::AudioClip imp{std::vector<float>(64, 0.0f), 44100};
  imp.samples[0] = 1.0f;
  std::vector<double> tails;
  for (double room : {0.01, 0.5, 1.0}) {
    const auto out = dsp::ApplyReverbPadded(imp, room, 2 * 44100);
    double e = 0;
    for (std::size_t i = 1; i < out.samples.size(); ++i) {
      e += double(out.samples[i]) * out.samples[i];
    }
    tails.push_back(e);
  }
  o.Check(tails[0] < tails[1] && tails[1] < tails[2],
          fmt::format("reverb tail energy {:.4g} < {:.4g} < {:.4g}", tails[0],
                      tails[1], tails[2]));
  return o;
}

std::map<std::string, std::string> Snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), root).generic_string();
    if (rel == "run.log") continue;
    out[rel] = embsense::ReadFileBytes(e.path());
  }
  return out;
}

Outcome EndToEnd(double& single_thread_seconds) {
  Outcome o;
  const json golden =
      json::parse(embsense::ReadFileBytes(kDataDir / "golden_config.json"));
  o.Check(golden.at("expect").at("gain_global_r2_min").get<double>() == kGainR2Min,
          fmt::format("golden r2 threshold pinned at {}", kGainR2Min));
  pl::PipelineConfig cfg = pl::PipelineConfig::FromJson(golden.at("config"));
  o.Check(cfg.ExpandedMethods().size() == 8 && cfg.effects.size() == 4 &&
              cfg.synth.n_classes * cfg.synth.n_per_class == 20 &&
              cfg.synth.duration_s == 3.0 && cfg.synth.sample_rate == 22050,
          "golden config: 20 clips, 3 s, 22.05 kHz, four effects, all methods");

  TempDir tmp;
  auto run = [&](const std::string& name, int workers) {
    pl::PipelineConfig c = cfg;
    c.output_dir = tmp.path() / name;
    c.workers = workers;
    return pl::Pipeline(c).RunAll();
  };
  const auto start = std::chrono::steady_clock::now();
  const auto results = run("a", 1);
  single_thread_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::size_t failed = 0;
  for (const auto& r : results) failed += r.failed_cells;
  o.Check(failed == 0, fmt::format("{} failed cells", failed));
  o.Check(single_thread_seconds < kEndToEndLimit,
          fmt::format("single-threaded run {:.1f} s", single_thread_seconds));

  run("b", 1);
  run("c", 4);
  const auto a = Snapshot(tmp.path() / "a");
  o.Check(a == Snapshot(tmp.path() / "b"),
          fmt::format("two runs byte-identical ({} files)", a.size()));
  o.Check(a == Snapshot(tmp.path() / "c"), "workers 1 and 4 byte-identical");

  const json sensitivity = json::parse(a.at("analysis/sensitivity.json"));
  int n_gain = 0;
  for (const json& r : sensitivity.at("reports")) {
    if (r.at("scope") != "global" || r.at("effect") != "gain") continue;
    ++n_gain;
    const double r2 = r.at("r2").get<double>();
    o.Check(r2 > kGainR2Min,
            fmt::format("gain global r2 [{}] = {:.5f}", r.at("class").get<std::string>(),
                        r2));
  }
  o.Check(n_gain == cfg.synth.n_classes, "one gain global report per class");
  return o;
}

Outcome LogisticTraining() {
  Outcome o;
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0, 1);
  double worst_grad = 0, worst_fd = 0;
  for (int c = 0; c < 20; ++c) {
    const int n = 30 + 5 * c, d = 2 + c % 7;
    const Matrix x = t::RandomGaussian(n, d, rng);
    const Vector w_true = t::RandomGaussian(d, 1, rng).col(0);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
      y[i] = u(rng) < 1 / (1 + std::exp(-x.row(i).dot(w_true))) ? 1 : 0;
    }
    y[0] = 0;
    y[1] = 1;
    const double lambda = c % 2 == 0 ? 1.0 : 0.1;
    const ds::LogisticModel m = ds::TrainLogistic(x, y, lambda);
    worst_grad = std::max(worst_grad, m.gradient_norm);

    const Matrix z = ds::Standardize(m, x);
    const Vector w = t::RandomGaussian(d, 1, rng).col(0);
    const double b = g(rng);
    const auto at = ds::EvaluateLoss(z, y, lambda, w, b);
    const double h = 1e-6;
    auto rel = [](double a, double f) {
      return std::abs(a - f) / std::max(1.0, std::abs(f));
    };
    for (int k = 0; k < d; ++k) {
      Vector wp = w, wm = w;
      wp[k] += h;
      wm[k] -= h;
      const double fd = (ds::EvaluateLoss(z, y, lambda, wp, b).value -
                         ds::EvaluateLoss(z, y, lambda, wm, b).value) /
                        (2 * h);
      worst_fd = std::max(worst_fd, rel(at.grad_w[k], fd));
    }
    const double fd_b = (ds::EvaluateLoss(z, y, lambda, w, b + h).value -
                         ds::EvaluateLoss(z, y, lambda, w, b - h).value) /
                        (2 * h);
    worst_fd = std::max(worst_fd, rel(at.grad_b, fd_b));
  }
  o.Check(worst_grad < kLogisticGradTol,
          fmt::format("converged gradient inf-norm max {:.2e}", worst_grad));
  o.Check(worst_fd <= kFiniteDiffRelTol,
          fmt::format("analytic vs finite difference max rel err {:.2e}", worst_fd));
  return o;
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  struct Criterion {
    std::string name;
    double limit_s;
    std::function<Outcome()> run;
  };
  double e2e_single = 0;
  const std::vector<Criterion> criteria = {
      {"oracle-equivalence", kOracleLimit, OracleEquivalence},
      {"linear-deformation-recovery", kRecoveryLimit, LinearRecovery},
      {"high-dimensional-deformation-detection", kHighDimLimit,
       HighDimensionalDetection},
      {"samplewise-rho-one-regime", kRhoOneLimit, SamplewiseRhoOne},
      {"dsp-contracts", kDspLimit, DspContracts},
      // The limit applies to the single-threaded run; the repeat runs for the
      // determinism checks are not part of the budget.
      {"end-to-end-pipeline", std::numeric_limits<double>::infinity(),
       [&] { return EndToEnd(e2e_single); }},
      {"logistic-training", kLogisticLimit, LogisticTraining},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& ex) {
      o.Check(false, fmt::format("exception: {}", ex.what()));
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (std::isfinite(c.limit_s)) {
      o.Check(secs < c.limit_s, fmt::format("runtime {:.2f} s < {} s", secs, c.limit_s));
    }
    if (!o.pass) ++failures;
    std::cout << fmt::format("{} {} ({:.2f} s)", o.pass ? "PASS" : "FAIL", c.name,
                             secs)
              << "\n";
    for (const auto& n : o.notes) std::cout << "    " << n << "\n";
    std::cout.flush();
  }
  std::cout << fmt::format("{} of {} criteria passed\n",
                           criteria.size() - failures, criteria.size());
  return failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
