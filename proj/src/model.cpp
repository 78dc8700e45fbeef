#include "pecnet/model.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "pecnet/errors.hpp"
#include "pecnet/eval.hpp"

namespace pecnet {

// ---------------------------------------------------------------------------
// ModelConfig

ModelConfig::TrunkLengths ModelConfig::trunk_lengths() const {
  auto shrink = [](std::size_t length, const ConvBlockConfig& block) -> std::size_t {
    const std::size_t loss = block.count * (block.width - 1);
    return length > loss ? length - loss : 0;
  };
  TrunkLengths out{};
  out.after_block1 = shrink(signal_length, block1);
  out.after_pool = pool_size ? out.after_block1 / pool_size : 0;
  out.after_block2 = shrink(out.after_pool, block2);
  return out;
}

void ModelConfig::validate() const {
  if (input_channels == 0) throw ConfigError("input_channels must be >= 1");
  for (const ConvBlockConfig* b : {&block1, &block2}) {
    if (b->num_kernels == 0 || b->width == 0 || b->count == 0) {
      throw ConfigError("conv blocks need at least one kernel, width >= 1 and count >= 1");
    }
  }
  if (pool_size == 0) throw ConfigError("pool_size must be >= 1");
  if (!has_classifier() && !has_regressor()) throw ConfigError("at least one head must be enabled");
  if (has_classifier() && classification_classes < 2) throw ConfigError("classifier needs >= 2 classes");
  if (has_regressor() && regression_hidden_units == 0) throw ConfigError("regression_hidden_units must be >= 1");
  const TrunkLengths lengths = trunk_lengths();
  if (lengths.after_block1 == 0 || lengths.after_pool == 0 || lengths.after_block2 == 0) {
    throw ConfigError("signal_length " + std::to_string(signal_length) +
                      " is too short for the convolution and pooling stages");
  }
}

// ---------------------------------------------------------------------------
// Model

Model::Model(const ModelConfig& config) : config_(config), pool_(config.pool_size) {
  config_.validate();
  std::size_t channels = config_.input_channels;
  for (std::size_t i = 0; i < config_.block1.count; ++i) {
    block1_.emplace_back(channels, config_.block1.num_kernels, config_.block1.width);
    channels = config_.block1.num_kernels;
  }
  for (std::size_t i = 0; i < config_.block2.count; ++i) {
    block2_.emplace_back(channels, config_.block2.num_kernels, config_.block2.width);
    channels = config_.block2.num_kernels;
  }
  if (config_.has_regressor()) {
    regression_.emplace_back(channels, config_.regression_hidden_units);
    regression_.emplace_back(config_.regression_hidden_units, config_.regression_outputs);
  }
  if (config_.has_classifier()) classifier_.emplace_back(channels, config_.classification_classes);
  for (const Shape& s : parameter_shapes()) grads_.emplace_back(s, 0.0);
}

Model Model::zeros(const ModelConfig& config) { return Model(config); }

Model Model::build(const ModelConfig& config, std::uint64_t seed) {
  Model model(config);
  std::mt19937_64 rng(seed);
  for (Conv1D& conv : model.block1_) conv.he_init(rng);
  for (Conv1D& conv : model.block2_) conv.he_init(rng);
  for (Dense& fc : model.regression_) fc.he_init(rng);
  for (Dense& fc : model.classifier_) fc.he_init(rng);
  return model;
}

void Model::set_label_scale(double scale) {
  if (!(scale > 0.0)) throw ConfigError("label scale must be positive");
  label_scale_ = scale;
}

std::vector<Tensor*> Model::parameters() {
  std::vector<Tensor*> out;
  for (Conv1D& c : block1_) out.insert(out.end(), {&c.kernels(), &c.bias()});
  for (Conv1D& c : block2_) out.insert(out.end(), {&c.kernels(), &c.bias()});
  for (Dense& d : regression_) out.insert(out.end(), {&d.weights(), &d.bias()});
  for (Dense& d : classifier_) out.insert(out.end(), {&d.weights(), &d.bias()});
  return out;
}

std::vector<const Tensor*> Model::parameters() const {
  std::vector<const Tensor*> out;
  for (Tensor* t : const_cast<Model*>(this)->parameters()) out.push_back(t);
  return out;
}

std::vector<const Tensor*> Model::gradients() const {
  std::vector<const Tensor*> out;
  for (const Tensor& g : grads_) out.push_back(&g);
  return out;
}

std::vector<Shape> Model::parameter_shapes() const {
  std::vector<Shape> out;
  for (const Tensor* t : parameters()) out.push_back(t->shape());
  return out;
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor* t : parameters()) n += t->size();
  return n;
}

void Model::check_batch(const Tensor& batch) const {
  if (batch.rank() != 3 || batch.dim(1) != config_.input_channels || batch.dim(2) != config_.signal_length) {
    throw ShapeError("model expects [B," + std::to_string(config_.input_channels) + "," +
                     std::to_string(config_.signal_length) + "] input, got " + to_string(batch.shape()));
  }
}

Tensor Model::features(const Tensor& batch) const {
  check_batch(batch);
  Tensor x = batch;
  for (const Conv1D& conv : block1_) x = relu_forward(conv.infer(x));
  x = maxpool_forward(pool_, x).output;
  for (const Conv1D& conv : block2_) x = relu_forward(conv.infer(x));
  return gap_forward(x);
}

BatchOutput Model::forward_batch(const Tensor& batch) const {
  const Tensor feats = features(batch);
  BatchOutput out;
  if (config_.has_regressor()) {
    out.depths = regression_[1].infer(relu_forward(regression_[0].infer(feats)));
  }
  if (config_.has_classifier()) out.probabilities = softmax(classifier_[0].infer(feats));
  return out;
}

MultiTaskOutput Model::forward(const Tensor& signal) const {
  if (signal.rank() != 2) throw ShapeError("forward expects a [C, T] signal, got " + to_string(signal.shape()));
  Shape batched{1, signal.dim(0), signal.dim(1)};
  const BatchOutput out = forward_batch(signal.reshaped(batched));
  MultiTaskOutput result;
  if (config_.has_classifier()) result.class_probabilities = out.probabilities.reshaped({config_.classification_classes});
  if (config_.has_regressor()) result.depth_estimates = out.depths.reshaped({config_.regression_outputs});
  return result;
}

namespace {

void check_targets(const ModelConfig& config, std::size_t batch, const Tensor& class_targets,
                   const Tensor& depth_targets) {
  if (config.has_classifier() && class_targets.shape() != Shape{batch, config.classification_classes}) {
    throw DataError("classification targets must be [" + std::to_string(batch) + "," +
                    std::to_string(config.classification_classes) + "], got " + to_string(class_targets.shape()));
  }
  if (config.has_regressor() && depth_targets.shape() != Shape{batch, config.regression_outputs}) {
    throw DataError("depth targets must be [" + std::to_string(batch) + "," +
                    std::to_string(config.regression_outputs) + "], got " + to_string(depth_targets.shape()));
  }
}

LossBreakdown combine(const ModelConfig& config, const BatchOutput& out, const Tensor& class_targets,
                      const Tensor& depth_targets, const LossWeights& weights) {
  LossBreakdown loss;
  if (config.has_classifier()) loss.cross_entropy = cross_entropy(out.probabilities, class_targets);
  if (config.has_regressor()) loss.mae = mae(out.depths, depth_targets);
  loss.total = combined_loss(loss.cross_entropy, loss.mae, weights);
  return loss;
}

}  // namespace

LossBreakdown Model::loss(const Tensor& batch, const Tensor& class_targets, const Tensor& depth_targets,
                          const LossWeights& weights) const {
  check_batch(batch);
  check_targets(config_, batch.dim(0), class_targets, depth_targets);
  return combine(config_, forward_batch(batch), class_targets, depth_targets, weights);
}

Tensor Model::trunk_forward_cached(const Tensor& batch) {
  block1_pre_.clear();
  block2_pre_.clear();
  Tensor x = batch;
  for (Conv1D& conv : block1_) {
    block1_pre_.push_back(conv.forward(x));
    x = relu_forward(block1_pre_.back());
  }
  PoolResult pooled = maxpool_forward(pool_, x);
  pool_indices_ = std::move(pooled.indices);
  x = std::move(pooled.output);
  for (Conv1D& conv : block2_) {
    block2_pre_.push_back(conv.forward(x));
    x = relu_forward(block2_pre_.back());
  }
  return gap_forward(x);
}

LossBreakdown Model::compute_gradients(const Tensor& batch, const Tensor& class_targets, const Tensor& depth_targets,
                                       const LossWeights& weights, BatchOutput* outputs) {
  check_batch(batch);
  const std::size_t b = batch.dim(0);
  check_targets(config_, b, class_targets, depth_targets);

  const Tensor feats = trunk_forward_cached(batch);
  BatchOutput out;
  if (config_.has_regressor()) {
    hidden_pre_ = regression_[0].forward(feats);
    out.depths = regression_[1].forward(relu_forward(hidden_pre_));
  }
  if (config_.has_classifier()) out.probabilities = softmax(classifier_[0].forward(feats));
  const LossBreakdown result = combine(config_, out, class_targets, depth_targets, weights);

  std::size_t slot = grads_.size();
  auto store = [&](std::size_t index, Tensor&& g) { grads_[index] = std::move(g); };

  // Walk the heads in reverse declaration order so `slot` counts down.
  Tensor grad_feats(feats.shape(), 0.0);
  if (config_.has_classifier()) {
    Tensor g_logits = out.probabilities - class_targets;
    for (double& x : g_logits.values()) x *= weights.alpha / static_cast<double>(b);
    DenseGradients g = classifier_[0].backward(g_logits);
    store(--slot, std::move(g.bias));
    store(--slot, std::move(g.weights));
    grad_feats = grad_feats + g.input;
  }
  if (config_.has_regressor()) {
    Tensor g_out = mae_grad(out.depths, depth_targets);
    for (double& x : g_out.values()) x *= weights.beta;
    DenseGradients g2 = regression_[1].backward(g_out);
    store(--slot, std::move(g2.bias));
    store(--slot, std::move(g2.weights));
    DenseGradients g1 = regression_[0].backward(relu_backward(g2.input, hidden_pre_));
    store(--slot, std::move(g1.bias));
    store(--slot, std::move(g1.weights));
    grad_feats = grad_feats + g1.input;
  }

  Tensor g = gap_backward(grad_feats, config_.trunk_lengths().after_block2);
  for (std::size_t i = block2_.size(); i-- > 0;) {
    Conv1DGradients cg = block2_[i].backward(relu_backward(g, block2_pre_[i]));
    store(--slot, std::move(cg.bias));
    store(--slot, std::move(cg.kernels));
    g = std::move(cg.input);
  }
  g = maxpool_backward(g, pool_indices_);
  for (std::size_t i = block1_.size(); i-- > 0;) {
    Conv1DGradients cg = block1_[i].backward(relu_backward(g, block1_pre_[i]), i > 0);
    store(--slot, std::move(cg.bias));
    store(--slot, std::move(cg.kernels));
    g = std::move(cg.input);
  }

  if (outputs) *outputs = std::move(out);
  return result;
}

// ---------------------------------------------------------------------------
// Batching helpers

Tensor gather_signals(const Dataset& dataset, std::span<const std::size_t> indices) {
  if (indices.empty()) throw DataError("cannot gather an empty batch");
  const Shape& s = dataset.records.at(indices.front()).signal.values.shape();
  if (s.size() != 2) throw ShapeError("record signals must be [C, T]");
  const std::size_t per = s[0] * s[1];
  Tensor out({indices.size(), s[0], s[1]});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const Tensor& v = dataset.records.at(indices[i]).signal.values;
    if (v.shape() != s) throw ShapeError("records differ in signal shape");
    std::copy(v.data(), v.data() + per, out.data() + i * per);
  }
  return out;
}

Tensor gather_one_hot(const Dataset& dataset, std::span<const std::size_t> indices, std::size_t num_classes) {
  Tensor out({indices.size(), num_classes}, 0.0);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto& label = dataset.records.at(indices[i]).signal.class_label;
    if (!label) throw DataError("record " + std::to_string(indices[i]) + " has no class label");
    if (*label >= num_classes) {
      throw IndexError("class label " + std::to_string(*label) + " out of range for " +
                       std::to_string(num_classes) + " classes");
    }
    out.at(i, *label) = 1.0;
  }
  return out;
}

Tensor gather_depths(const Dataset& dataset, std::span<const std::size_t> indices, std::size_t outputs) {
  Tensor out({indices.size(), outputs}, 0.0);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto& depth = dataset.records.at(indices[i]).signal.depth_labels;
    if (!depth) throw DataError("record " + std::to_string(indices[i]) + " has no depth labels");
    if (depth->size() < outputs) {
      throw DataError("record " + std::to_string(indices[i]) + " has " + std::to_string(depth->size()) +
                      " depth labels, model needs " + std::to_string(outputs));
    }
    for (std::size_t j = 0; j < outputs; ++j) out.at(i, j) = (*depth)[j];
  }
  return out;
}

BatchOutput predict_dataset(const Model& model, const Dataset& dataset, std::size_t chunk) {
  const ModelConfig& cfg = model.config();
  if (dataset.signal_length != cfg.signal_length) {
    throw ShapeError("dataset signal length " + std::to_string(dataset.signal_length) + " does not match model " +
                     std::to_string(cfg.signal_length));
  }
  const std::size_t n = dataset.size();
  BatchOutput all;
  if (n == 0) return all;
  if (cfg.has_classifier()) all.probabilities = Tensor({n, cfg.classification_classes});
  if (cfg.has_regressor()) all.depths = Tensor({n, cfg.regression_outputs});
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < n; start += chunk) {
    const std::size_t stop = std::min(n, start + chunk);
    idx.resize(stop - start);
    std::iota(idx.begin(), idx.end(), start);
    const BatchOutput part = model.forward_batch(gather_signals(dataset, idx));
    if (cfg.has_classifier())
      std::copy(part.probabilities.data(), part.probabilities.data() + part.probabilities.size(),
                all.probabilities.data() + start * cfg.classification_classes);
    if (cfg.has_regressor())
      std::copy(part.depths.data(), part.depths.data() + part.depths.size(),
                all.depths.data() + start * cfg.regression_outputs);
  }
  return all;
}

// ---------------------------------------------------------------------------
// Training

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (metrics_every < 1) throw ConfigError("metrics_every must be >= 1");
  adam.validate();
}

namespace {

void require_labels(const Model& model, const Dataset& data, const char* which) {
  const ModelConfig& cfg = model.config();
  if (data.signal_length != cfg.signal_length) {
    throw ShapeError(std::string(which) + " signal length " + std::to_string(data.signal_length) +
                     " does not match model length " + std::to_string(cfg.signal_length));
  }
  if (cfg.has_classifier() && !data.has_class_labels()) {
    throw DataError(std::string(which) + " set lacks class labels required by the classification head");
  }
  if (cfg.has_regressor() && (!data.has_depth_labels() || data.depth_outputs() < cfg.regression_outputs)) {
    throw DataError(std::string(which) + " set lacks depth labels required by the regression head");
  }
}

}  // namespace

TrainingHistory train(Model& model, const Dataset& train_set, const Dataset* test_set, const TrainConfig& config) {
  config.validate();
  if (train_set.size() == 0) throw DataError("training set is empty");
  require_labels(model, train_set, "training");
  if (test_set && test_set->size() > 0) require_labels(model, *test_set, "test");
  model.set_label_scale(train_set.label_scale);

  const ModelConfig& cfg = model.config();
  AdamState adam(config.adam, model.parameter_shapes());
  std::mt19937_64 shuffle_rng(config.seed);

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  TrainingHistory history;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    if (config.shuffle) std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, stop - start);
      const Tensor batch = gather_signals(train_set, idx);
      const Tensor cls = cfg.has_classifier() ? gather_one_hot(train_set, idx, cfg.classification_classes) : Tensor();
      const Tensor dep = cfg.has_regressor() ? gather_depths(train_set, idx, cfg.regression_outputs) : Tensor();
      const LossBreakdown l = model.compute_gradients(batch, cls, dep, config.loss_weights);
      loss_sum += l.total * static_cast<double>(idx.size());
      std::vector<Tensor*> params = model.parameters();
      std::vector<const Tensor*> grads = model.gradients();
      adam.step(params, grads);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(train_set.size());
    if (epoch % config.metrics_every == 0 || epoch == config.epochs) {
      const EvalReport tr = evaluate(model, train_set);
      rec.train_acc = tr.accuracy;
      rec.train_mse = tr.mse;
      if (test_set && test_set->size() > 0) {
        const EvalReport te = evaluate(model, *test_set);
        rec.test_acc = te.accuracy;
        rec.test_mse = te.mse;
      }
    }
    history.epochs.push_back(rec);
  }
  return history;
}

namespace {

void write_optional(std::ostream& os, const std::optional<double>& v) {
  os << ',';
  if (v) os << *v;
}

}  // namespace

void TrainingHistory::write_csv(std::ostream& os) const {
  const auto old_precision = os.precision(17);
  os << "epoch,train_loss,train_acc,test_acc,train_mse,test_mse\n";
  for (const EpochRecord& r : epochs) {
    os << r.epoch << ',' << r.train_loss;
    write_optional(os, r.train_acc);
    write_optional(os, r.test_acc);
    write_optional(os, r.train_mse);
    write_optional(os, r.test_mse);
    os << '\n';
  }
  os.precision(old_precision);
}

std::string TrainingHistory::to_csv() const {
  std::ostringstream os;
  write_csv(os);
  return os.str();
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr std::array<char, 4> kMagic{'P', 'E', 'C', 'N'};

class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}

  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }

 private:
  void put(std::uint64_t v, int bytes) {
    char buf[8];
    for (int i = 0; i < bytes; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
    os_.write(buf, bytes);
  }
  std::ostream& os_;
};

class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }

 private:
  std::uint64_t get(int bytes) {
    unsigned char buf[8];
    if (!is_.read(reinterpret_cast<char*>(buf), bytes)) throw FormatError("model file is truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
  }
  std::istream& is_;
};

std::size_t as_size(std::uint64_t v) {
  if (v > (1ull << 32)) throw FormatError("model file field out of range");
  return static_cast<std::size_t>(v);
}

}  // namespace

void save_model(const Model& model, std::ostream& os) {
  const ModelConfig& c = model.config();
  os.write(kMagic.data(), kMagic.size());
  Writer w(os);
  w.u32(kModelFormatVersion);
  for (std::size_t v : {c.input_channels, c.signal_length, c.block1.num_kernels, c.block1.width, c.block1.count,
                        c.pool_size, c.block2.num_kernels, c.block2.width, c.block2.count,
                        c.classification_classes, c.regression_hidden_units, c.regression_outputs}) {
    w.u64(v);
  }
  w.f64(model.label_scale());
  const std::vector<const Tensor*> params = model.parameters();
  w.u64(params.size());
  for (const Tensor* t : params) {
    w.u32(static_cast<std::uint32_t>(t->rank()));
    for (std::size_t d : t->shape()) w.u64(d);
    for (double x : t->values()) w.f64(x);
  }
  if (!os) throw IoError("failed writing model");
}

void save_model(const Model& model, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  save_model(model, os);
}

Model load_model(std::istream& is) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size())) throw FormatError("model file is truncated");
  if (magic != kMagic) throw FormatError("not a PECN model file");
  Reader r(is);
  const std::uint32_t version = r.u32();
  if (version != kModelFormatVersion) {
    throw FormatError("unsupported model format version " + std::to_string(version));
  }
  ModelConfig c;
  c.input_channels = as_size(r.u64());
  c.signal_length = as_size(r.u64());
  c.block1.num_kernels = as_size(r.u64());
  c.block1.width = as_size(r.u64());
  c.block1.count = as_size(r.u64());
  c.pool_size = as_size(r.u64());
  c.block2.num_kernels = as_size(r.u64());
  c.block2.width = as_size(r.u64());
  c.block2.count = as_size(r.u64());
  c.classification_classes = as_size(r.u64());
  c.regression_hidden_units = as_size(r.u64());
  c.regression_outputs = as_size(r.u64());
  const double label_scale = r.f64();

  Model model = [&] {
    try {
      return Model::zeros(c);
    } catch (const ConfigError& e) {
      throw FormatError(std::string("model file holds an invalid config: ") + e.what());
    }
  }();
  if (!(label_scale > 0.0)) throw FormatError("model file holds a non-positive label scale");
  model.set_label_scale(label_scale);

  std::vector<Tensor*> params = model.parameters();
  const std::uint64_t count = r.u64();
  if (count != params.size()) {
    throw FormatError("model file has " + std::to_string(count) + " tensors, config implies " +
                      std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::uint32_t rank = r.u32();
    if (rank == 0 || rank > Tensor::kMaxRank) throw FormatError("tensor " + std::to_string(i) + " has bad rank");
    Shape shape(rank);
    for (std::size_t& d : shape) d = as_size(r.u64());
    if (shape != params[i]->shape()) {
      throw FormatError("tensor " + std::to_string(i) + " has shape " + to_string(shape) + ", config implies " +
                        to_string(params[i]->shape()));
    }
    for (double& x : params[i]->values()) x = r.f64();
  }
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after model parameters");
  return model;
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open model '" + path.string() + "'");
  return load_model(is);
}

}  // namespace pecnet
