#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pecnet/adam.hpp"
#include "pecnet/dataset.hpp"
#include "pecnet/layers.hpp"
#include "pecnet/losses.hpp"
#include "pecnet/tensor.hpp"

namespace pecnet {

struct ConvBlockConfig {
  std::size_t num_kernels = 128;
  std::size_t width = 3;
  std::size_t count = 2;

  friend bool operator==(const ConvBlockConfig&, const ConvBlockConfig&) = default;
};

// Trunk: block1 convs -> max pool -> block2 convs -> global average pool.
// Heads: softmax classifier over the pooled features, and a two-layer
// regressor (hidden ReLU layer, linear output). A head with zero
// classes/outputs is disabled.
struct ModelConfig {
  std::size_t input_channels = 1;
  std::size_t signal_length = 100;
  ConvBlockConfig block1{128, 3, 2};
  std::size_t pool_size = 3;
  ConvBlockConfig block2{64, 3, 2};
  std::size_t classification_classes = 10;
  std::size_t regression_hidden_units = 32;
  std::size_t regression_outputs = 2;

  bool has_classifier() const noexcept { return classification_classes > 0; }
  bool has_regressor() const noexcept { return regression_outputs > 0; }
  std::size_t feature_size() const noexcept { return block2.num_kernels; }

  // Sequence lengths after block1, the pool and block2.
  struct TrunkLengths {
    std::size_t after_block1;
    std::size_t after_pool;
    std::size_t after_block2;
  };
  TrunkLengths trunk_lengths() const;

  // Throws ConfigError on impossible geometry or with both heads disabled.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct MultiTaskOutput {
  std::optional<Tensor> class_probabilities;  // [M]
  std::optional<Tensor> depth_estimates;      // [R], scaled-label units
};

// Batched counterpart of MultiTaskOutput; empty tensors for disabled heads.
struct BatchOutput {
  Tensor probabilities;  // [B, M]
  Tensor depths;         // [B, R]
};

struct LossBreakdown {
  double cross_entropy = 0.0;
  double mae = 0.0;
  double total = 0.0;
};

class Model {
 public:
  // Builds the network and He-initialises it from `seed`. Parameters are
  // drawn in declaration order: trunk, regression head, classification
  // head.
  static Model build(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }

  // Factor depth labels were multiplied by during training; predictions are
  // divided by it when reported in original units.
  double label_scale() const noexcept { return label_scale_; }
  void set_label_scale(double scale);

  MultiTaskOutput forward(const Tensor& signal) const;
  BatchOutput forward_batch(const Tensor& batch) const;

  // Pooled trunk features for a [B, C, T] batch.
  Tensor features(const Tensor& batch) const;

  // Combined loss on a batch without touching gradients or caches.
  // `class_targets` is [B, M] one-hot, `depth_targets` is [B, R]; either may
  // be empty when the matching head is disabled.
  LossBreakdown loss(const Tensor& batch, const Tensor& class_targets, const Tensor& depth_targets,
                     const LossWeights& weights) const;

  // Forward + backward; stores parameter gradients of the batch-mean
  // combined loss, retrievable via gradients().
  LossBreakdown compute_gradients(const Tensor& batch, const Tensor& class_targets, const Tensor& depth_targets,
                                  const LossWeights& weights, BatchOutput* outputs = nullptr);

  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  std::vector<const Tensor*> gradients() const;
  std::vector<Shape> parameter_shapes() const;
  std::size_t parameter_count() const;

  // Skeleton with zero parameters; used by the loader.
  static Model zeros(const ModelConfig& config);

 private:
  explicit Model(const ModelConfig& config);

  Tensor trunk_forward_cached(const Tensor& batch);
  void check_batch(const Tensor& batch) const;

  ModelConfig config_;
  double label_scale_ = 1.0;
  std::vector<Conv1D> block1_;
  std::vector<Conv1D> block2_;
  PoolSpec pool_;
  std::vector<Dense> regression_;  // hidden, output (or empty)
  std::vector<Dense> classifier_;  // single layer (or empty)

  // Training caches.
  std::vector<Tensor> block1_pre_;
  std::vector<Tensor> block2_pre_;
  PoolIndices pool_indices_;
  Tensor hidden_pre_;
  std::vector<Tensor> grads_;
};

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  std::size_t epochs = 500;
  std::size_t batch_size = 32;
  LossWeights loss_weights{1.0, 1.0};
  AdamConfig adam;
  std::uint64_t seed = 0;
  bool shuffle = true;
  // Post-epoch metrics on the full train/test sets every this many epochs
  // (the final epoch is always evaluated).
  std::size_t metrics_every = 1;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::optional<double> train_acc;
  std::optional<double> test_acc;
  std::optional<double> train_mse;
  std::optional<double> test_mse;
};

struct TrainingHistory {
  std::vector<EpochRecord> epochs;

  void write_csv(std::ostream& os) const;
  std::string to_csv() const;
};

// Inference over every record of `dataset`, in order, in chunks.
BatchOutput predict_dataset(const Model& model, const Dataset& dataset, std::size_t chunk = 256);

// Stacks record signals into a [B, C, T] batch.
Tensor gather_signals(const Dataset& dataset, std::span<const std::size_t> indices);
Tensor gather_one_hot(const Dataset& dataset, std::span<const std::size_t> indices, std::size_t num_classes);
Tensor gather_depths(const Dataset& dataset, std::span<const std::size_t> indices, std::size_t outputs);

// Mini-batch Adam on the combined loss. Labels must be present for every
// enabled head (DataError otherwise). Depth labels are used as given
// (scaled units); the model records the dataset's label scale.
TrainingHistory train(Model& model, const Dataset& train_set, const Dataset* test_set, const TrainConfig& config);

// ---------------------------------------------------------------------------
// Serialization ("PECN" binary, little-endian)

inline constexpr std::uint32_t kModelFormatVersion = 1;

void save_model(const Model& model, std::ostream& os);
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(std::istream& is);
Model load_model(const std::filesystem::path& path);

}  // namespace pecnet
