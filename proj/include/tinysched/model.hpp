#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "tinysched/features.hpp"
#include "tinysched/nn.hpp"

namespace tinysched::model {

struct EmptyDataset : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct WidthMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CheckpointMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModelConfig {
  int feature_width = features::kWidth;
  double dropout = 0.225;
  /// Replaces the recursive loop embedding with one LSTM over the leaf
  /// sequence (architecture ablation).
  bool flat_ablation = false;
};

struct TrainConfig {
  int epochs = 700;
  int batch_size = 32;
  double max_lr = 1e-3;
  double weight_decay = 0.0075;
  std::uint64_t seed = 0;
  bool verbose = false;
};

struct TrainExample {
  features::ProgramTree tree;
  double target = 1.0;   // measured speedup
  std::string group;     // program uid + fused-structure key
};

struct EpochStats {
  double train_mape = 0;
  double val_mape = 0;
  double lr = 0;
};

/// Computation embedding MLP (D-600-350-200-180), a shared loop embedding
/// unit (two LSTMs + merge MLP), and a regression head (180-200-180-1).
/// Output is clamped to at least 0.01.
class CostModel {
 public:
  CostModel(ModelConfig cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }

  /// All rows share one tree shape; leaf_rows[k] is the batch x width matrix
  /// for leaf k. Returns predictions as a batch x 1 graph value.
  nn::Value forward_batch(const ir::LoopTree& shape,
                          const std::vector<Eigen::MatrixXd>& leaf_rows, bool training,
                          std::mt19937_64* rng) const;

  double predict(const features::ProgramTree& tree) const;
  std::vector<double> predict_many(const std::vector<TrainExample>& examples) const;

  /// Deterministic for a fixed config seed; keeps the parameters with the
  /// best validation MAPE. An empty validation set falls back to selecting
  /// on training MAPE.
  std::vector<EpochStats> train(const std::vector<TrainExample>& train_set,
                                const std::vector<TrainExample>& val_set,
                                const TrainConfig& tc);

  void save(const std::string& path) const;
  static CostModel load(const std::string& path);

 private:
  ModelConfig cfg_;
  nn::ParamStore params_;

  nn::Value embed(const nn::Value& x, bool training, std::mt19937_64* rng) const;
  nn::Value merge(const nn::Value& x, bool training, std::mt19937_64* rng) const;
  nn::Value regress(const nn::Value& x, bool training, std::mt19937_64* rng) const;
};

}  // namespace tinysched::model
