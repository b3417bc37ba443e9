// Acceptance checks. One PASS/FAIL line per criterion; exit status is
// nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include <Eigen/Cholesky>
#include <fmt/format.h>

#include "helpers.hpp"
#include "xsense/classify.hpp"
#include "xsense/experiment.hpp"
#include "xsense/kmeans.hpp"
#include "xsense/mapping.hpp"
#include "xsense/metrics.hpp"
#include "xsense/representation.hpp"

using namespace xsense;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, std::string what) {
    if (!ok) pass = false;
    notes.push_back(fmt::format("{}{}", ok ? "" : "FAILED ", what));
  }
};

int failures = 0;

void report(int id, const std::string& title, const Outcome& o) {
  fmt::print("[{}] criterion {}: {}\n", o.pass ? "PASS" : "FAIL", id, title);
  for (const auto& n : o.notes) fmt::print("       {}\n", n);
  if (!o.pass) ++failures;
  std::fflush(stdout);
}

/// Four activities over six actions. The test sensor S1 sees actions 0 and
/// 1 well and the rest at 0.2, so A/B and C/D look alike to it; S2 sees
/// actions 2..5, which tell each pair apart.
SyntheticSpec pair_confusion_spec(std::uint64_t seed) {
  SyntheticSpec s;
  s.n_subjects = 4;
  s.n_sensors = 2;
  s.n_actions = 6;
  s.activities = {{"A", {0, 2}}, {"B", {0, 3}}, {"C", {1, 4}}, {"D", {1, 5}}};
  s.observability = {{1, 1, 0.2, 0.2, 0.2, 0.2}, {0.3, 0.3, 1, 1, 1, 1}};
  s.noise_std = 3.5;
  s.samples_per_action = 100;
  s.channels_per_sensor = 6;
  s.repetitions = 12;
  s.labeled_repetitions = 1;
  s.subject_variability = 0.2;
  s.seed = RngSeed{seed};
  return s;
}

/// Same layout, every occurrence labelled, lower noise.
SyntheticSpec boosting_spec(std::uint64_t seed) {
  SyntheticSpec s = pair_confusion_spec(seed);
  s.noise_std = 0.5;
  s.repetitions = 4;
  s.labeled_repetitions = -1;
  return s;
}

ExperimentConfig config_for(const SyntheticSpec& spec, Variant v) {
  ExperimentConfig c;
  c.dataset.synthetic = spec;
  c.window = {2.0, 1.0};
  c.test_sensor = "S1";
  c.variant = v;
  return c;
}

// ---------------------------------------------------------------- oracles

/// Fraction of each window covered by each latent action.
Matrix action_histograms(const FeatureTable& t, const SyntheticSpec& spec) {
  const auto spans = synthetic_action_spans(spec);
  Matrix h = Matrix::Zero(static_cast<Eigen::Index>(t.num_rows()), spec.n_actions);
  for (std::size_t i = 0; i < t.num_rows(); ++i) {
    const auto& w = t.window_meta[i];
    for (const auto& s : spans) {
      if (s.subject != t.subject_of_row[i]) continue;
      const double overlap = std::min(w.end, s.end) - std::max(w.start, s.start);
      if (overlap > 0) h(static_cast<Eigen::Index>(i), s.action) += overlap / (w.end - w.start);
    }
  }
  return h;
}

using Featurizer = std::function<Matrix(const Matrix& train_x, const std::vector<std::size_t>& train_rows,
                                        const Matrix& x)>;

/// LOSO nearest class centroid; `features(all, train_idx, all)` may learn
/// from every training row but centroids use labelled training rows only.
double loso_nearest_centroid(const FeatureTable& t, const Matrix& x, const Featurizer& features) {
  std::size_t hit = 0, total = 0;
  const auto k = static_cast<Eigen::Index>(t.num_classes());
  for (const auto& held : t.subjects()) {
    std::vector<std::size_t> train;
    for (std::size_t i = 0; i < t.num_rows(); ++i) {
      if (t.subject_of_row[i] != held) train.push_back(i);
    }
    const Matrix z = features(x, train, x);
    Matrix centroid = Matrix::Zero(k, z.cols());
    Vector count = Vector::Zero(k);
    for (std::size_t i : train) {
      if (t.label_of_row[i] == kUnlabeled) continue;
      centroid.row(t.label_of_row[i]) += z.row(static_cast<Eigen::Index>(i));
      count[t.label_of_row[i]] += 1;
    }
    for (Eigen::Index c = 0; c < k; ++c) centroid.row(c) /= std::max(1.0, count[c]);
    for (std::size_t i = 0; i < t.num_rows(); ++i) {
      if (t.subject_of_row[i] != held || t.label_of_row[i] == kUnlabeled) continue;
      Eigen::Index best = 0;
      (centroid.rowwise() - z.row(static_cast<Eigen::Index>(i))).rowwise().squaredNorm().minCoeff(&best);
      hit += best == t.label_of_row[i] ? 1 : 0;
      ++total;
    }
  }
  return static_cast<double>(hit) / static_cast<double>(total);
}

Matrix standardize_on(const Matrix& x, const std::vector<std::size_t>& rows) {
  Vector mean = Vector::Zero(x.cols());
  for (std::size_t i : rows) mean += x.row(static_cast<Eigen::Index>(i)).transpose();
  mean /= static_cast<double>(rows.size());
  Vector var = Vector::Zero(x.cols());
  for (std::size_t i : rows) var += (x.row(static_cast<Eigen::Index>(i)).transpose() - mean).cwiseAbs2();
  const Vector sd = (var / static_cast<double>(rows.size())).cwiseSqrt().cwiseMax(1e-12);
  return (x.rowwise() - mean.transpose()).array().rowwise() / sd.transpose().array();
}

/// Ridge regression from x to y on the given rows, solved by normal
/// equations with an explicit intercept column.
Matrix ridge_predict(const Matrix& x, const Matrix& y, const std::vector<std::size_t>& rows, double lambda) {
  Matrix a(static_cast<Eigen::Index>(rows.size()), x.cols() + 1);
  Matrix b(static_cast<Eigen::Index>(rows.size()), y.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    a.row(static_cast<Eigen::Index>(r)) << x.row(static_cast<Eigen::Index>(rows[r])), 1.0;
    b.row(static_cast<Eigen::Index>(r)) = y.row(static_cast<Eigen::Index>(rows[r]));
  }
  Matrix gram = a.transpose() * a;
  gram.diagonal().head(x.cols()).array() += lambda;
  const Matrix coef = gram.ldlt().solve(a.transpose() * b);
  Matrix xa(x.rows(), x.cols() + 1);
  xa << x, Matrix::Ones(x.rows(), 1);
  return xa * coef;
}

// --------------------------------------------------------------- criteria

void criterion_mechanism() {
  Outcome o;
  const auto t0 = Clock::now();
  const SyntheticSpec spec = pair_confusion_spec(1);
  const auto base = config_for(spec, Variant::Trad);
  const PreparedData data = prepare_data(base.dataset, base.window);

  const std::vector<std::string> s1{"S1"};
  const FeatureTable single = select_sensor_columns(data.table, s1);
  const Matrix hist = action_histograms(data.table, spec);
  const double latent = loso_nearest_centroid(data.table, hist, [](const Matrix& x, auto&, const Matrix&) { return x; });
  const double nc_single = loso_nearest_centroid(
      data.table, single.rows, [](const Matrix& x, const auto& rows, const Matrix&) { return standardize_on(x, rows); });
  const double nc_mapped =
      loso_nearest_centroid(data.table, single.rows, [&](const Matrix& x, const auto& rows, const Matrix&) {
        return ridge_predict(standardize_on(x, rows), hist, rows, 1e-3);
      });
  o.notes.push_back(fmt::format("oracle NC: latent actions {:.4f}, S1 features {:.4f}, S1 mapped to actions {:.4f}",
                                latent, nc_single, nc_mapped));
  o.require(nc_mapped - nc_single >= 0.05,
            fmt::format("oracle margin (mapped - single) {:+.1f} pp >= 5 pp", 100 * (nc_mapped - nc_single)));

  std::map<Variant, double> f1;
  for (Variant v : {Variant::Trad, Variant::Clusters, Variant::LinR}) {
    f1[v] = run_experiment(config_for(spec, v), data).pooled_micro_f1;
  }
  const double elapsed = seconds_since(t0);
  o.notes.push_back(fmt::format("pooled micro-F1: Trad {:.4f}, Clusters {:.4f}, LinR {:.4f}", f1[Variant::Trad],
                                f1[Variant::Clusters], f1[Variant::LinR]));
  o.require(f1[Variant::Clusters] > f1[Variant::LinR], "Clusters > LinR");
  o.require(f1[Variant::LinR] > f1[Variant::Trad], "LinR > Trad");
  o.require(f1[Variant::LinR] - f1[Variant::Trad] >= 0.05,
            fmt::format("LinR - Trad = {:+.1f} pp >= 5 pp", 100 * (f1[Variant::LinR] - f1[Variant::Trad])));
  o.require(elapsed < 60.0, fmt::format("runtime {:.1f} s < 60 s", elapsed));
  report(1, "Clusters > LinR > Trad with LinR - Trad >= 5 pp on the pair-confusion data", o);
}

void criterion_boosting() {
  Outcome o;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const SyntheticSpec spec = boosting_spec(seed);
    const auto base = config_for(spec, Variant::LinR);
    const PreparedData data = prepare_data(base.dataset, base.window);
    const double linr = run_experiment(base, data).pooled_micro_f1;
    const double linb = run_experiment(config_for(spec, Variant::LinB), data).pooled_micro_f1;
    o.require(linb >= linr - 0.005, fmt::format("seed {}: LinR {:.4f}, LinB {:.4f} (LinB >= LinR - 0.005)", seed,
                                                linr, linb));
    if (seed == 1) o.require(linb > linr, "seed 1: LinB > LinR");
  }
  report(2, "boosting with the single-sensor learner never hurts and helps on the seeded instance", o);
}

void criterion_external_datasets() {
  fmt::print("[SKIP] criterion 3: reference scores on Cooking/OPP/PAMAP need external CSVs (not part of CI)\n");
}

void criterion_exactness() {
  Outcome o;
  std::mt19937_64 rng(2024);

  // micro-F1 and accuracy.
  {
    bool ok = true;
    for (int trial = 0; trial < 1000; ++trial) {
      const int k = 2 + trial % 7;
      std::uniform_int_distribution<int> cls(0, k - 1);
      const int n = 1 + trial % 97;
      std::vector<ClassIndex> t(n), p(n);
      for (int i = 0; i < n; ++i) {
        t[i] = cls(rng);
        p[i] = cls(rng);
      }
      ok = ok && micro_f1(t, p) == accuracy(t, p);
    }
    o.require(ok, "micro-F1 == accuracy on 1000 random instances");
  }

  // Affine mapping recovery.
  {
    const Matrix x = test::random_matrix(300, 10, rng);
    const Matrix a = test::random_matrix(9, 10, rng);
    Matrix t = x * a.transpose();
    t.rowwise() += test::random_matrix(1, 9, rng).row(0);
    FeatureTable single = test::make_table({{"S1", 10}}, 300);
    single.rows = x;
    const auto m = fit_mapping(single, t, MappingOptions::linear(0.0));
    const double mse = (apply_mapping(m, x) - t).squaredNorm() / static_cast<double>(t.size());
    o.require(mse < 1e-8, fmt::format("zero-noise affine mapping MSE {:.3g} < 1e-8", mse));
  }

  // SAMME.
  {
    const double a0 = samme_alpha(0.5, 2);
    const double a1 = samme_alpha(0.25, 5);
    o.require(a0 == 0.0, fmt::format("alpha(0.5, 2) = {}", a0));
    o.require(std::abs(a1 - std::log(12.0)) <= 1e-12, fmt::format("|alpha(0.25, 5) - ln 12| = {:.3g}",
                                                                   std::abs(a1 - std::log(12.0))));
  }

  // k-means inertia history.
  {
    int bad = 0;
    for (int trial = 0; trial < 100; ++trial) {
      std::uniform_int_distribution<int> rows(8, 80), dims(1, 6), ks(2, 6);
      const int k = ks(rng);
      const Matrix pts = test::random_matrix(rows(rng), dims(rng), rng);
      const auto r = kmeans_once(pts, {k, 300, 0.0, 1}, RngSeed{static_cast<std::uint64_t>(trial)});
      for (std::size_t i = 1; i < r.inertia_history.size(); ++i) {
        if (r.inertia_history[i] > r.inertia_history[i - 1] * (1 + 1e-12)) ++bad;
      }
    }
    o.require(bad == 0, fmt::format("k-means inertia non-increasing on 100 instances ({} increases)", bad));
  }

  // Gradients.
  {
    double worst_logistic = 0.0, worst_softmax = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
      const Matrix x = test::random_matrix(40, 5, rng);
      std::vector<double> t(40);
      std::vector<ClassIndex> y(40);
      std::vector<double> w(40);
      std::uniform_real_distribution<double> u(0.2, 2.0);
      for (int i = 0; i < 40; ++i) {
        t[i] = x(i, 0) - x(i, 3) > 0 ? 1.0 : 0.0;
        y[i] = static_cast<ClassIndex>(i % 3);
        w[i] = u(rng);
      }
      const BinaryLogisticObjective lo(x, t, 0.5);
      const Vector p = test::random_matrix(6, 1, rng).col(0);
      const Vector g = lo.gradient(p);
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        const double fd = test::finite_difference([&](const Vector& v) { return lo.value(v); }, p, i);
        worst_logistic = std::max(worst_logistic, test::relative_error(fd, g[i]));
      }
      const SoftmaxObjective so(x, y, w, 3, 0.2);
      const Vector q = test::random_matrix(static_cast<Eigen::Index>(so.num_params()), 1, rng).col(0);
      const Vector h = so.gradient(q);
      for (Eigen::Index i = 0; i < q.size(); ++i) {
        const double fd = test::finite_difference([&](const Vector& v) { return so.value(v); }, q, i);
        worst_softmax = std::max(worst_softmax, test::relative_error(fd, h[i]));
      }
    }
    o.require(worst_logistic < 1e-4, fmt::format("logistic gradient max relative error {:.3g}", worst_logistic));
    o.require(worst_softmax < 1e-4, fmt::format("classifier gradient max relative error {:.3g}", worst_softmax));
  }
  report(4, "exactness suite", o);
}

void criterion_protocol() {
  Outcome o;
  SyntheticSpec spec = boosting_spec(3);
  spec.repetitions = 2;
  for (Variant v : kAllVariants) {
    const auto c = config_for(spec, v);
    std::size_t events = 0;
    bool clean = true;
    RunHooks hooks;
    hooks.on_fold = [&](const LeakAudit& audit) {
      for (const auto& e : audit.events()) {
        ++events;
        clean = clean && std::find(e.subjects.begin(), e.subjects.end(), audit.held_out()) == e.subjects.end();
      }
    };
    const PreparedData data = prepare_data(c.dataset, c.window);
    std::string first;
    try {
      first = run_experiment(c, data, hooks).to_json().dump();
    } catch (const LeakError& e) {
      clean = false;
      o.notes.push_back(e.what());
    }
    const std::string second = run_experiment(c, data).to_json().dump();
    const std::string fresh = run_experiment(c).to_json().dump();
    o.require(clean && events > 0, fmt::format("{}: {} audited fitting stages, no held-out rows", to_string(v), events));
    o.require(first == second && second == fresh,
              fmt::format("{}: three runs give identical report bytes ({} bytes)", to_string(v), first.size()));
  }
  report(5, "leave-one-subject-out leak check and run determinism", o);
}

void criterion_dimensions() {
  Outcome o;
  std::mt19937_64 rng(5);
  for (std::size_t groups : {5u, 3u}) {
    std::vector<test::GroupSpec> specs;
    for (std::size_t g = 0; g < groups; ++g) specs.push_back({fmt::format("S{}", g + 1), 12});
    FeatureTable t = test::make_table(specs, 60);
    t.rows = test::random_matrix(60, static_cast<Eigen::Index>(12 * groups), rng);
    const auto rep = learn_representation(t, {}, RngSeed{1});
    const Matrix enc = encode(rep, t);
    const std::size_t want = 3 * groups;
    o.require(rep.dim() == want && static_cast<std::size_t>(enc.cols()) == want,
              fmt::format("{} groups x k=3: d = {} (encoding has {} columns)", groups, rep.dim(), enc.cols()));
  }
  report(6, "representation dimension is the sum of per-sensor cluster counts", o);
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  const std::vector<std::pair<const char*, std::function<void()>>> criteria = {
      {"1", criterion_mechanism}, {"2", criterion_boosting}, {"3", criterion_external_datasets},
      {"4", criterion_exactness}, {"5", criterion_protocol},  {"6", criterion_dimensions}};
  for (const auto& [id, run] : criteria) {
    try {
      run();
    } catch (const std::exception& e) {
      fmt::print("[FAIL] criterion {}: exception: {}\n", id, e.what());
      ++failures;
    }
  }
  fmt::print("{} criteria failed; total {:.1f} s\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
