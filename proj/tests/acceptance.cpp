// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pecnet/dataset.hpp"
#include "pecnet/dataset_csv.hpp"
#include "pecnet/eval.hpp"
#include "pecnet/layers.hpp"
#include "pecnet/losses.hpp"
#include "pecnet/model.hpp"
#include "pecnet/scenarios.hpp"
#include "support/finite_difference.hpp"

namespace {

using namespace pecnet;
using testing::max_relative_error;
using testing::numeric_gradient;
using testing::random_away_from_zero;
using testing::random_tensor;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void report(int id, const std::string& name, Outcome& o) {
  std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << name << " |" << o.detail.str()
            << std::endl;
  if (!o.pass) ++failures;
}

// L = sum(r * y) + sum(y^2) / 2, dL/dy = r + y.
double probe(const Tensor& y, const Tensor& r) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += r[i] * y[i] + 0.5 * y[i] * y[i];
  return s;
}

// ---------------------------------------------------------------------------

void gradient_correctness() {
  const auto t0 = Clock::now();
  Outcome o;
  constexpr int kSeeds = 20;
  constexpr double kLayerTol = 1e-4, kModelTol = 1e-3;
  double worst_layer = 0.0, worst_model = 0.0;
  auto track = [&](double e, double& worst) { worst = std::max(worst, e); };

  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(1000 + seed);

    Conv1D conv(2, 3, 3);
    conv.kernels() = random_tensor({3, 2, 3}, rng);
    conv.bias() = random_tensor({3}, rng);
    Tensor x = random_tensor({2, 11}, rng);
    Tensor r = random_tensor({3, 9}, rng);
    {
      const Tensor y = conv.forward(x);
      const Conv1DGradients g = conv.backward(r + y);
      auto f = [&] { return probe(conv.infer(x), r); };
      track(max_relative_error(g.input, numeric_gradient(f, x)), worst_layer);
      track(max_relative_error(g.kernels, numeric_gradient(f, conv.kernels())), worst_layer);
      track(max_relative_error(g.bias, numeric_gradient(f, conv.bias())), worst_layer);
    }

    Tensor xr = random_away_from_zero({3, 8}, rng);
    Tensor rr = random_tensor({3, 8}, rng);
    {
      const Tensor g = relu_backward(rr + relu_forward(xr), xr);
      auto f = [&] { return probe(relu_forward(xr), rr); };
      track(max_relative_error(g, numeric_gradient(f, xr)), worst_layer);
    }

    Tensor xp = random_tensor({2, 12}, rng);
    Tensor rp = random_tensor({2, 4}, rng);
    {
      const PoolResult res = maxpool_forward(PoolSpec(3), xp);
      const Tensor g = maxpool_backward(rp + res.output, res.indices);
      auto f = [&] { return probe(maxpool_forward(PoolSpec(3), xp).output, rp); };
      track(max_relative_error(g, numeric_gradient(f, xp)), worst_layer);
    }

    Tensor xg = random_tensor({3, 7}, rng);
    Tensor rg = random_tensor({3}, rng);
    {
      const Tensor g = gap_backward(rg + gap_forward(xg), 7);
      auto f = [&] { return probe(gap_forward(xg), rg); };
      track(max_relative_error(g, numeric_gradient(f, xg)), worst_layer);
    }

    Dense fc(5, 4);
    fc.weights() = random_tensor({4, 5}, rng);
    fc.bias() = random_tensor({4}, rng);
    Tensor xf = random_tensor({5}, rng);
    Tensor rf = random_tensor({4}, rng);
    {
      const DenseGradients g = fc.backward(rf + fc.forward(xf));
      auto f = [&] { return probe(fc.infer(xf), rf); };
      track(max_relative_error(g.input, numeric_gradient(f, xf)), worst_layer);
      track(max_relative_error(g.weights, numeric_gradient(f, fc.weights())), worst_layer);
      track(max_relative_error(g.bias, numeric_gradient(f, fc.bias())), worst_layer);
    }

    Tensor logits = random_tensor({6}, rng, 2.0);
    const Tensor label = one_hot(static_cast<std::size_t>(seed) % 6, 6);
    {
      auto f = [&] { return cross_entropy(softmax(logits), label); };
      track(max_relative_error(cross_entropy_softmax_grad(logits, label), numeric_gradient(f, logits)), worst_layer);
    }

    const Tensor target = random_tensor({4}, rng);
    Tensor pred = target + random_away_from_zero({4}, rng, 0.05);
    {
      auto f = [&] { return mae(pred, target); };
      track(max_relative_error(mae_grad(pred, target), numeric_gradient(f, pred)), worst_layer);
    }

    // Whole tiny model: blocks of two width-2 convs with 2 kernels, T = 12.
    ModelConfig tiny;
    tiny.signal_length = 12;
    tiny.block1 = {2, 2, 2};
    tiny.block2 = {2, 2, 2};
    tiny.regression_hidden_units = 4;
    tiny.classification_classes = 3;
    tiny.regression_outputs = 1;
    Model m = Model::build(tiny, seed);
    for (Tensor* p : m.parameters()) *p = random_tensor(p->shape(), rng, 0.5);
    const Tensor batch = random_tensor({4, 1, 12}, rng);
    Tensor cls({4, 3}, 0.0);
    for (std::size_t b = 0; b < 4; ++b) cls.at(b, b % 3) = 1.0;
    const Tensor depth = random_tensor({4, 1}, rng, 3.0);
    const LossWeights w(1.0, 1.0);
    m.compute_gradients(batch, cls, depth, w);
    std::vector<Tensor> analytic;
    for (const Tensor* g : m.gradients()) analytic.push_back(*g);
    auto params = m.parameters();
    auto f = [&] { return m.loss(batch, cls, depth, w).total; };
    for (std::size_t i = 0; i < params.size(); ++i)
      track(max_relative_error(analytic[i], numeric_gradient(f, *params[i])), worst_model);
  }
  const double elapsed = seconds_since(t0);
  o.require(worst_layer <= kLayerTol, "layer error");
  o.require(worst_model <= kModelTol, "model error");
  o.require(elapsed < 60.0, "runtime");
  o.detail << " seeds=" << kSeeds << " worst_layer_rel_err=" << worst_layer << " worst_model_rel_err=" << worst_model
           << " time=" << elapsed << "s";
  report(1, "gradient correctness", o);
}

void loss_identities() {
  Outcome o;
  double worst = 0.0;
  for (std::size_t m = 2; m <= 64; ++m) {
    const Tensor p({m}, 1.0 / static_cast<double>(m));
    for (std::size_t c = 0; c < m; ++c)
      worst = std::max(worst, std::abs(cross_entropy(p, one_hot(c, m)) - std::log(static_cast<double>(m))));
  }
  o.require(worst <= 1e-9, "uniform ce");
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  bool exact = true;
  for (int i = 0; i < 10000; ++i) {
    const double ce = u(rng), m = u(rng);
    exact = exact && combined_loss(ce, m, LossWeights(1.0, 1.0)) == ce + m;
  }
  o.require(exact, "combined loss");
  o.detail << " max|ce-ln(M)|=" << worst << " combined_exact=" << (exact ? "yes" : "no");
  report(2, "loss identities", o);
}

double adam_scalar(double w0, double lr, int steps, const std::function<double(double)>& grad) {
  Tensor w = Tensor::vector({w0}), g = Tensor::vector({0.0});
  const std::vector<Shape> shapes{w.shape()};
  AdamConfig cfg;
  cfg.learning_rate = lr;
  AdamState st(cfg, shapes);
  Tensor* const params[] = {&w};
  const Tensor* const grads[] = {&g};
  for (int i = 0; i < steps; ++i) {
    g[0] = grad(w[0]);
    st.step(params, grads);
  }
  return w[0];
}

void adam_behavior() {
  Outcome o;
  const double w = adam_scalar(0.0, 0.1, 200, [](double x) { return 2.0 * (x - 3.0); });
  o.require(std::abs(w - 3.0) < 0.05, "quadratic");
  double worst = 0.0;
  for (double mag : {1e-3, 1e-2, 0.1, 1.0, 10.0, 1e3, 1e6})
    for (double sign : {-1.0, 1.0}) {
      const double step = adam_scalar(0.0, 0.001, 1, [&](double) { return sign * mag; });
      worst = std::max(worst, std::abs(step + sign * 0.001));
    }
  o.require(worst <= 1e-6, "first step");
  o.detail << " w_200=" << w << " max|first_step+lr*sign(g)|=" << worst;
  report(3, "adam behavior", o);
}

// ---------------------------------------------------------------------------

constexpr double kDepthScale = 10.0;
constexpr std::uint64_t kSpecimenASeed = 1;
constexpr std::size_t kJointEpochs = 100;

TrainConfig specimen_a_training(std::size_t epochs) {
  TrainConfig tc;
  tc.epochs = epochs;
  tc.seed = kSpecimenASeed;
  tc.batch_size = 64;  // batch 32 oscillates between epochs on this set
  tc.metrics_every = epochs;  // only the final epoch is evaluated
  return tc;
}

std::pair<Dataset, Dataset> specimen_a_data(bool airgap) {
  scenarios::SpecimenAOptions o;
  o.per_class = 200;
  o.noise_sigma = 0.01;
  o.airgap = airgap;
  o.seed = kSpecimenASeed;
  auto [train, test] = scenarios::specimen_a(o);
  return {scale_labels(train, kDepthScale), scale_labels(test, kDepthScale)};
}

void specimen_a_and_airgap() {
  const auto [train, test] = specimen_a_data(false);
  const auto [gap_train, gap_test] = specimen_a_data(true);

  Outcome o4;
  const auto t0 = Clock::now();
  Model model = Model::build(ModelConfig{}, kSpecimenASeed);
  pecnet::train(model, train, &test, specimen_a_training(200));
  const double elapsed = seconds_since(t0);
  const double acc = *evaluate(model, test).accuracy;
  o4.require(acc >= 0.90, "test accuracy");
  o4.require(elapsed < 600.0, "runtime");
  o4.detail << " train=" << train.size() << " test=" << test.size() << " epochs=200 test_acc=" << acc
            << " time=" << elapsed << "s";
  report(4, "specimen-A classification", o4);

  Outcome o6;
  const double gap_acc = *evaluate(model, gap_test).accuracy;
  o6.require(acc >= 0.90, "in-distribution");
  o6.require(gap_acc <= 0.60, "airgap drop");

  Model joint = Model::build(ModelConfig{}, kSpecimenASeed);
  pecnet::train(joint, concat(train, gap_train), nullptr, specimen_a_training(kJointEpochs));
  const double joint_clean = *evaluate(joint, test).accuracy;
  const double joint_gap = *evaluate(joint, gap_test).accuracy;
  o6.require(joint_clean >= 0.85 && joint_gap >= 0.85, "joint recovery");
  o6.detail << " clean_model: clean=" << acc << " airgap=" << gap_acc << " | joint_model(" << kJointEpochs
            << " epochs): clean=" << joint_clean << " airgap=" << joint_gap;
  report(6, "airgap sensitivity", o6);
}

// ---------------------------------------------------------------------------

double linear_mse(const Dataset& train, const Dataset& test, double lambda) {
  const Tensor x_train = feature_matrix(train), x_test = feature_matrix(test);
  const Tensor y_train = depth_matrix(train), y_test = depth_matrix(test);
  Tensor y({train.size()});
  for (std::size_t i = 0; i < train.size(); ++i) y[i] = y_train.at(i, 0);
  const Tensor pred = fit_ridge(x_train, y, lambda).predict(x_test);
  Tensor target({test.size()});
  for (std::size_t i = 0; i < test.size(); ++i) target[i] = y_test.at(i, 0);
  return mse(pred, target);
}

void specimen_b_regression() {
  Outcome o;
  int wins = 0;
  for (std::uint64_t seed : {1, 2, 3}) {
    scenarios::SpecimenBOptions opts;
    opts.seed = seed;
    const auto [train_grid, test_grid] = scenarios::specimen_b(opts);
    constexpr double kThicknessScale = 1000.0;
    const Dataset train = scale_labels(usable_records(to_dataset(train_grid)), kThicknessScale);
    const Dataset test = scale_labels(usable_records(to_dataset(test_grid)), kThicknessScale);

    ModelConfig cfg;
    cfg.signal_length = train.signal_length;
    cfg.classification_classes = 0;
    cfg.regression_outputs = 1;
    Model model = Model::build(cfg, seed);
    TrainConfig tc;
    tc.epochs = 100;
    tc.batch_size = 16;  // the regression fit is step-limited at 100 epochs
    tc.seed = seed;
    tc.loss_weights = LossWeights(0.0, 1.0);
    tc.metrics_every = tc.epochs;
    pecnet::train(model, train, nullptr, tc);

    const double cnn = *evaluate(model, test).mse;
    const double ols = linear_mse(train, test, 0.0);
    const double ridge = linear_mse(train, test, 1.0);
    const bool win = cnn < ols && cnn < ridge;
    wins += win;
    o.detail << " seed" << seed << "(n=" << train.size() << "/" << test.size() << "): cnn=" << cnn << " ols=" << ols
             << " ridge=" << ridge << (win ? " ok" : " lost") << ";";
  }
  o.require(wins >= 2, "ordering");
  o.detail << " wins=" << wins << "/3";
  report(5, "specimen-B regression ordering", o);
}

// ---------------------------------------------------------------------------

std::vector<std::uint8_t> brute_force_mask(const Tensor& truth, double threshold, int dilation) {
  const long h = static_cast<long>(truth.dim(0)), w = static_cast<long>(truth.dim(1)), radius = dilation / 2;
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(h * w), 1);
  for (long r = 0; r < h; ++r)
    for (long c = 0; c < w; ++c)
      for (long rr = std::max(0L, r - radius); rr <= std::min(h - 1, r + radius); ++rr)
        for (long cc = std::max(0L, c - radius); cc <= std::min(w - 1, c + radius); ++cc)
          if (truth.at(rr, cc) < threshold) mask[static_cast<std::size_t>(r * w + c)] = 0;
  return mask;
}

void preprocessing_oracles() {
  Outcome o;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int rivet_matches = 0;
  for (int trial = 0; trial < 50; ++trial) {
    ScanGrid g;
    g.height = g.width = 20;
    g.truth_map = Tensor({20, 20});
    for (double& v : g.truth_map.values()) v = u(rng) < 0.01 ? 0.01 + 0.03 * u(rng) : 0.05 + 0.05 * u(rng);
    g.mask.assign(400, 1);
    g.signals.assign(400, Signal{Tensor({1, 2}, 0.0), std::nullopt, std::nullopt});
    const int dilation = 1 + trial % 14;
    rivet_matches += remove_rivets(g, 0.05, dilation).mask == brute_force_mask(g.truth_map, 0.05, dilation);
  }
  o.require(rivet_matches == 50, "rivets");

  int split_ok = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Dataset d;
    d.signal_length = 1;
    d.num_classes = 10;
    for (std::size_t c = 0; c < 10; ++c)
      for (std::size_t i = 0; i < 2 * (1 + c); ++i) {
        Record r;
        r.row = c;
        r.col = i;
        r.signal.values = Tensor({1, 1}, 0.0);
        r.signal.class_label = c;
        d.records.push_back(r);
      }
    const auto [train, test] = split_specimen_a(d, seed);
    std::vector<std::vector<int>> seen(10);
    for (std::size_t c = 0; c < 10; ++c) seen[c].assign(2 * (1 + c), 0);
    std::vector<std::size_t> train_count(10, 0), test_count(10, 0);
    for (const Record& r : train.records) ++seen[r.row][r.col], ++train_count[*r.signal.class_label];
    for (const Record& r : test.records) ++seen[r.row][r.col], ++test_count[*r.signal.class_label];
    bool ok = true;
    for (std::size_t c = 0; c < 10; ++c) {
      ok = ok && train_count[c] == 1 + c && test_count[c] == 1 + c;
      for (int n : seen[c]) ok = ok && n == 1;
    }
    split_ok += ok;
  }
  o.require(split_ok == 100, "split");
  o.detail << " rivet_grids_matching=" << rivet_matches << "/50 splits_ok=" << split_ok << "/100";
  report(7, "preprocessing oracles", o);
}

void determinism_and_round_trips() {
  Outcome o;
  scenarios::SpecimenAOptions opts;
  opts.per_class = 20;
  opts.seed = 5;
  auto [raw_train, raw_test] = scenarios::specimen_a(opts);
  const Dataset train = scale_labels(raw_train, kDepthScale), test = scale_labels(raw_test, kDepthScale);
  ModelConfig cfg;
  cfg.block1.num_kernels = 16;
  cfg.block2.num_kernels = 8;
  TrainConfig tc;
  tc.epochs = 5;
  tc.seed = 5;
  std::string histories[2];
  std::optional<Model> trained;
  for (int run = 0; run < 2; ++run) {
    Model m = Model::build(cfg, 5);
    histories[run] = pecnet::train(m, train, &test, tc).to_csv();
    trained = std::move(m);
  }
  const bool same_history = histories[0] == histories[1];
  o.require(same_history, "history");

  std::stringstream bytes;
  save_model(*trained, bytes);
  const Model loaded = load_model(bytes);
  std::mt19937_64 rng(5);
  const Tensor signals = random_tensor({100, 1, 100}, rng);
  const BatchOutput a = trained->forward_batch(signals), b = loaded.forward_batch(signals);
  const bool bit_identical = a.probabilities == b.probabilities && a.depths == b.depths;
  o.require(bit_identical, "model round trip");

  std::ostringstream csv;
  write_dataset_csv(raw_train, csv);
  std::istringstream csv_in(csv.str());
  const bool csv_ok = read_dataset_csv(csv_in) == raw_train;
  o.require(csv_ok, "csv round trip");
  o.detail << " history_identical=" << same_history << " forward_bit_identical=" << bit_identical
           << " csv_lossless=" << csv_ok;
  report(8, "determinism and round trips", o);
}

}  // namespace

int main() {
  std::cout.precision(6);
  gradient_correctness();
  loss_identities();
  adam_behavior();
  preprocessing_oracles();
  determinism_and_round_trips();
  specimen_b_regression();
  specimen_a_and_airgap();
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
