#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace tinysched::nn {

struct ShapeMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonPositiveTarget : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Handle to a node of the reverse-mode graph. Copies share the node.
class Value {
 public:
  Value() = default;
  static Value constant(Eigen::MatrixXd data);
  static Value param(Eigen::MatrixXd data);

  bool defined() const { return node_ != nullptr; }
  const Eigen::MatrixXd& data() const;
  Eigen::MatrixXd& mutable_data();
  const Eigen::MatrixXd& grad() const;
  bool requires_grad() const;
  /// Times the backward pass accumulated into this node (single-visit check).
  int backward_visits() const;
  void zero_grad();

  Eigen::Index rows() const { return data().rows(); }
  Eigen::Index cols() const { return data().cols(); }

  struct Node;
  const std::shared_ptr<Node>& node() const { return node_; }
  explicit Value(std::shared_ptr<Node> n) : node_(std::move(n)) {}

 private:
  std::shared_ptr<Node> node_;
};

Value matmul(const Value& a, const Value& b);
Value add(const Value& a, const Value& b);
Value sub(const Value& a, const Value& b);
Value cmul(const Value& a, const Value& b);  // elementwise
Value scale(const Value& a, double s);
/// y = x + bias with bias broadcast over rows; bias is 1 x C.
Value add_rowwise(const Value& x, const Value& bias);
Value sigmoid(const Value& a);
Value tanh_op(const Value& a);
/// x for x >= 0, exp(x) - 1 below.
Value elu(const Value& a);
Value concat_cols(const Value& a, const Value& b);
Value slice_cols(const Value& a, Eigen::Index begin, Eigen::Index count);
/// Inverted dropout: zero with probability p, scale survivors by 1/(1-p).
/// Identity when training is false (rng may then be null).
Value dropout(const Value& a, double p, bool training, std::mt19937_64* rng);
Value clamp_min(const Value& a, double floor);
/// mean over the batch of |y - pred| / y; preds is B x 1.
Value mape_loss(const Eigen::VectorXd& targets, const Value& preds);

/// Reverse topological sweep from a 1x1 loss; each node visited once.
void backward(const Value& loss);

/// Gate layout in the fused weight matrices: input, forget, cell, output.
struct LstmParams {
  Value wx;  // input_size  x 4*hidden
  Value wh;  // hidden_size x 4*hidden
  Value b;   // 1 x 4*hidden
};

std::pair<Value, Value> lstm_step(const Value& x, const Value& h, const Value& c,
                                  const LstmParams& params);

/// Uniform on [-a, a] with a = sqrt(6 / (fan_in + fan_out)).
Eigen::MatrixXd glorot_init(int fan_in, int fan_out, std::mt19937_64& rng);

/// Cosine warmup from max_lr/div to max_lr over pct_warmup of the run, then
/// cosine decay to max_lr/final_div.
double one_cycle_lr(std::int64_t step, std::int64_t total_steps, double max_lr = 1e-3,
                    double pct_warmup = 0.3, double div = 25.0, double final_div = 1e4);

/// Named parameters plus AdamW moment state.
class ParamStore {
 public:
  Value create(const std::string& name, int rows, int cols, std::mt19937_64& rng);
  Value create_zeros(const std::string& name, int rows, int cols);
  Value at(const std::string& name) const;
  bool contains(const std::string& name) const;
  std::vector<std::string> names() const;
  std::int64_t step_count() const { return step_; }

  void zero_grad();
  /// Decoupled update: p -= lr * (mhat / (sqrt(vhat) + eps) + wd * p).
  void adamw_step(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8,
                  double weight_decay = 0.0075);

  std::map<std::string, Eigen::MatrixXd> snapshot() const;
  void restore(const std::map<std::string, Eigen::MatrixXd>& snap);

  struct AdamState {
    Eigen::MatrixXd m, v;
  };
  const AdamState& adam_state(const std::string& name) const;
  void set_adam_state(const std::string& name, AdamState state);
  void set_step_count(std::int64_t t) { step_ = t; }

 private:
  struct Entry {
    Value value;
    AdamState adam;
  };
  std::map<std::string, Entry> entries_;
  std::int64_t step_ = 0;
};

}  // namespace tinysched::nn
