#include "tinysched/nn.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace tinysched::nn {

struct Value::Node {
  Eigen::MatrixXd data;
  Eigen::MatrixXd grad;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(const Node&)> backprop;  // reads this->grad, feeds parents
  bool requires_grad = false;
  int visits = 0;

  void accumulate(const Eigen::MatrixXd& g) {
    if (grad.size() == 0) grad = Eigen::MatrixXd::Zero(data.rows(), data.cols());
    grad += g;
  }
};

Value Value::constant(Eigen::MatrixXd data) {
  auto n = std::make_shared<Node>();
  n->data = std::move(data);
  return Value(std::move(n));
}

Value Value::param(Eigen::MatrixXd data) {
  auto n = std::make_shared<Node>();
  n->data = std::move(data);
  n->requires_grad = true;
  return Value(std::move(n));
}

const Eigen::MatrixXd& Value::data() const {
  return node_->data;
}
Eigen::MatrixXd& Value::mutable_data() {
  return node_->data;
}
const Eigen::MatrixXd& Value::grad() const {
  return node_->grad;
}
bool Value::requires_grad() const {
  return node_ && node_->requires_grad;
}
int Value::backward_visits() const {
  return node_->visits;
}
void Value::zero_grad() {
  node_->grad = Eigen::MatrixXd::Zero(node_->data.rows(), node_->data.cols());
  node_->visits = 0;
}

namespace {

using NodePtr = std::shared_ptr<Value::Node>;

Value make_op(Eigen::MatrixXd data, std::vector<Value> parents,
              std::function<void(const Value::Node&)> backprop) {
  auto n = std::make_shared<Value::Node>();
  n->data = std::move(data);
  for (const Value& p : parents) {
    n->parents.push_back(p.node());
    n->requires_grad = n->requires_grad || p.requires_grad();
  }
  if (n->requires_grad) n->backprop = std::move(backprop);
  return Value(std::move(n));
}

void check(bool ok, const char* what) {
  if (!ok) throw ShapeMismatch(what);
}

}  // namespace

Value matmul(const Value& a, const Value& b) {
  check(a.cols() == b.rows(), "matmul: inner dimensions differ");
  NodePtr an = a.node(), bn = b.node();
  return make_op(a.data() * b.data(), {a, b}, [an, bn](const Value::Node& self) {
    if (an->requires_grad) an->accumulate(self.grad * bn->data.transpose());
    if (bn->requires_grad) bn->accumulate(an->data.transpose() * self.grad);
  });
}

Value add(const Value& a, const Value& b) {
  check(a.rows() == b.rows() && a.cols() == b.cols(), "add: shapes differ");
  NodePtr an = a.node(), bn = b.node();
  return make_op(a.data() + b.data(), {a, b}, [an, bn](const Value::Node& self) {
    if (an->requires_grad) an->accumulate(self.grad);
    if (bn->requires_grad) bn->accumulate(self.grad);
  });
}

Value sub(const Value& a, const Value& b) {
  check(a.rows() == b.rows() && a.cols() == b.cols(), "sub: shapes differ");
  NodePtr an = a.node(), bn = b.node();
  return make_op(a.data() - b.data(), {a, b}, [an, bn](const Value::Node& self) {
    if (an->requires_grad) an->accumulate(self.grad);
    if (bn->requires_grad) bn->accumulate(-self.grad);
  });
}

Value cmul(const Value& a, const Value& b) {
  check(a.rows() == b.rows() && a.cols() == b.cols(), "cmul: shapes differ");
  NodePtr an = a.node(), bn = b.node();
  return make_op(a.data().cwiseProduct(b.data()), {a, b}, [an, bn](const Value::Node& self) {
    if (an->requires_grad) an->accumulate(self.grad.cwiseProduct(bn->data));
    if (bn->requires_grad) bn->accumulate(self.grad.cwiseProduct(an->data));
  });
}

Value scale(const Value& a, double s) {
  NodePtr an = a.node();
  return make_op(a.data() * s, {a}, [an, s](const Value::Node& self) {
    an->accumulate(self.grad * s);
  });
}

Value add_rowwise(const Value& x, const Value& bias) {
  check(bias.rows() == 1 && bias.cols() == x.cols(), "add_rowwise: bias must be 1 x cols");
  NodePtr xn = x.node(), bn = bias.node();
  Eigen::MatrixXd out = x.data();
  out.rowwise() += bias.data().row(0);
  return make_op(std::move(out), {x, bias}, [xn, bn](const Value::Node& self) {
    if (xn->requires_grad) xn->accumulate(self.grad);
    if (bn->requires_grad) bn->accumulate(self.grad.colwise().sum());
  });
}

Value sigmoid(const Value& a) {
  NodePtr an = a.node();
  Eigen::MatrixXd y = a.data().unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  auto yn = std::make_shared<Eigen::MatrixXd>(y);
  return make_op(std::move(y), {a}, [an, yn](const Value::Node& self) {
    an->accumulate(self.grad.cwiseProduct(
        yn->cwiseProduct((1.0 - yn->array()).matrix())));
  });
}

Value tanh_op(const Value& a) {
  NodePtr an = a.node();
  Eigen::MatrixXd y = a.data().array().tanh().matrix();
  auto yn = std::make_shared<Eigen::MatrixXd>(y);
  return make_op(std::move(y), {a}, [an, yn](const Value::Node& self) {
    an->accumulate(self.grad.cwiseProduct((1.0 - yn->array().square()).matrix()));
  });
}

Value elu(const Value& a) {
  NodePtr an = a.node();
  Eigen::MatrixXd y =
      a.data().unaryExpr([](double v) { return v >= 0 ? v : std::expm1(v); });
  return make_op(std::move(y), {a}, [an](const Value::Node& self) {
    Eigen::MatrixXd g = self.grad;
    for (Eigen::Index j = 0; j < g.cols(); ++j)
      for (Eigen::Index i = 0; i < g.rows(); ++i)
        if (an->data(i, j) < 0) g(i, j) *= std::exp(an->data(i, j));
    an->accumulate(g);
  });
}

Value concat_cols(const Value& a, const Value& b) {
  check(a.rows() == b.rows(), "concat_cols: row counts differ");
  NodePtr an = a.node(), bn = b.node();
  Eigen::MatrixXd out(a.rows(), a.cols() + b.cols());
  out << a.data(), b.data();
  const Eigen::Index ac = a.cols();
  return make_op(std::move(out), {a, b}, [an, bn, ac](const Value::Node& self) {
    if (an->requires_grad) an->accumulate(self.grad.leftCols(ac));
    if (bn->requires_grad) bn->accumulate(self.grad.rightCols(self.grad.cols() - ac));
  });
}

Value slice_cols(const Value& a, Eigen::Index begin, Eigen::Index count) {
  check(begin >= 0 && begin + count <= a.cols(), "slice_cols: out of range");
  NodePtr an = a.node();
  return make_op(a.data().middleCols(begin, count), {a},
                 [an, begin, count](const Value::Node& self) {
                   Eigen::MatrixXd g = Eigen::MatrixXd::Zero(an->data.rows(), an->data.cols());
                   g.middleCols(begin, count) = self.grad;
                   an->accumulate(g);
                 });
}

Value dropout(const Value& a, double p, bool training, std::mt19937_64* rng) {
  if (!training || p <= 0.0) return a;
  check(p < 1.0, "dropout: probability must be below 1");
  const double keep_scale = 1.0 / (1.0 - p);
  auto mask = std::make_shared<Eigen::MatrixXd>(a.rows(), a.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      const double u = static_cast<double>((*rng)() >> 11) * 0x1.0p-53;
      (*mask)(i, j) = u < p ? 0.0 : keep_scale;
    }
  NodePtr an = a.node();
  return make_op(a.data().cwiseProduct(*mask), {a}, [an, mask](const Value::Node& self) {
    an->accumulate(self.grad.cwiseProduct(*mask));
  });
}

Value clamp_min(const Value& a, double floor) {
  NodePtr an = a.node();
  Eigen::MatrixXd y = a.data().cwiseMax(floor);
  return make_op(std::move(y), {a}, [an, floor](const Value::Node& self) {
    // Exact gradient above the floor. At the floor, let gradients that
    // would raise the output through so training can leave the clamp.
    Eigen::MatrixXd g = self.grad;
    for (Eigen::Index j = 0; j < g.cols(); ++j)
      for (Eigen::Index i = 0; i < g.rows(); ++i)
        if (an->data(i, j) <= floor && g(i, j) > 0) g(i, j) = 0.0;
    an->accumulate(g);
  });
}

Value mape_loss(const Eigen::VectorXd& targets, const Value& preds) {
  check(preds.cols() == 1 && preds.rows() == targets.size(), "mape: preds must be B x 1");
  for (Eigen::Index i = 0; i < targets.size(); ++i)
    if (targets[i] <= 0) throw NonPositiveTarget("target speedups must be positive");
  const Eigen::Index n = targets.size();
  double total = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    total += std::abs(targets[i] - preds.data()(i, 0)) / targets[i];
  Eigen::MatrixXd out(1, 1);
  out(0, 0) = total / static_cast<double>(n);
  NodePtr pn = preds.node();
  auto y = std::make_shared<Eigen::VectorXd>(targets);
  return make_op(std::move(out), {preds}, [pn, y](const Value::Node& self) {
    const double g0 = self.grad(0, 0);
    const Eigen::Index b = y->size();
    Eigen::MatrixXd g(b, 1);
    for (Eigen::Index i = 0; i < b; ++i) {
      const double diff = pn->data(i, 0) - (*y)[i];
      const double sign = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
      g(i, 0) = g0 * sign / ((*y)[i] * static_cast<double>(b));
    }
    pn->accumulate(g);
  });
}

void backward(const Value& loss) {
  check(loss.rows() == 1 && loss.cols() == 1, "backward: loss must be 1x1");
  // Iterative post-order topological sort over the reachable graph.
  std::vector<Value::Node*> order;
  std::set<Value::Node*> seen;
  std::vector<std::pair<Value::Node*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Value::Node* parent = node->parents[next++].get();
      if (parent->requires_grad && !seen.count(parent)) {
        seen.insert(parent);
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss.node()->grad = Eigen::MatrixXd::Ones(1, 1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Value::Node* node = *it;
    ++node->visits;
    if (node->backprop && node->grad.size() != 0) node->backprop(*node);
  }
}

std::pair<Value, Value> lstm_step(const Value& x, const Value& h, const Value& c,
                                  const LstmParams& params) {
  const Eigen::Index hidden = h.cols();
  check(params.wx.rows() == x.cols() && params.wx.cols() == 4 * hidden,
        "lstm_step: wx shape");
  check(params.wh.rows() == hidden && params.wh.cols() == 4 * hidden, "lstm_step: wh shape");
  check(c.rows() == h.rows() && c.cols() == hidden, "lstm_step: cell shape");

  const Value gates =
      add_rowwise(add(matmul(x, params.wx), matmul(h, params.wh)), params.b);
  const Value i = sigmoid(slice_cols(gates, 0, hidden));
  const Value f = sigmoid(slice_cols(gates, hidden, hidden));
  const Value g = tanh_op(slice_cols(gates, 2 * hidden, hidden));
  const Value o = sigmoid(slice_cols(gates, 3 * hidden, hidden));
  const Value c_next = add(cmul(f, c), cmul(i, g));
  const Value h_next = cmul(o, tanh_op(c_next));
  return {h_next, c_next};
}

Eigen::MatrixXd glorot_init(int fan_in, int fan_out, std::mt19937_64& rng) {
  const double a = std::sqrt(6.0 / (static_cast<double>(fan_in) + fan_out));
  Eigen::MatrixXd m(fan_in, fan_out);
  for (int i = 0; i < fan_in; ++i)
    for (int j = 0; j < fan_out; ++j) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      m(i, j) = (2.0 * u - 1.0) * a;
    }
  return m;
}

double one_cycle_lr(std::int64_t step, std::int64_t total_steps, double max_lr,
                    double pct_warmup, double div, double final_div) {
  if (total_steps <= 0) return max_lr;
  const double start = max_lr / div;
  const double final_lr = max_lr / final_div;
  const double warm = pct_warmup * static_cast<double>(total_steps);
  const double s = static_cast<double>(std::clamp<std::int64_t>(step, 0, total_steps));
  if (s <= warm) {
    const double t = warm > 0 ? s / warm : 1.0;
    return start + (max_lr - start) * 0.5 * (1.0 - std::cos(M_PI * t));
  }
  const double t = (s - warm) / (static_cast<double>(total_steps) - warm);
  return final_lr + (max_lr - final_lr) * 0.5 * (1.0 + std::cos(M_PI * t));
}

Value ParamStore::create(const std::string& name, int rows, int cols, std::mt19937_64& rng) {
  Value v = Value::param(glorot_init(rows, cols, rng));
  entries_[name] = Entry{v, {Eigen::MatrixXd::Zero(rows, cols), Eigen::MatrixXd::Zero(rows, cols)}};
  return v;
}

Value ParamStore::create_zeros(const std::string& name, int rows, int cols) {
  Value v = Value::param(Eigen::MatrixXd::Zero(rows, cols));
  entries_[name] = Entry{v, {Eigen::MatrixXd::Zero(rows, cols), Eigen::MatrixXd::Zero(rows, cols)}};
  return v;
}

Value ParamStore::at(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::out_of_range("no parameter named " + name);
  return it->second.value;
}

bool ParamStore::contains(const std::string& name) const {
  return entries_.count(name) > 0;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  for (const auto& [name, entry] : entries_) out.push_back(name);
  return out;
}

void ParamStore::zero_grad() {
  for (auto& [name, entry] : entries_) entry.value.zero_grad();
}

void ParamStore::adamw_step(double lr, double beta1, double beta2, double eps,
                            double weight_decay) {
  ++step_;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_));
  for (auto& [name, entry] : entries_) {
    Eigen::MatrixXd& theta = entry.value.mutable_data();
    Eigen::MatrixXd g = entry.value.grad();
    if (g.size() == 0) g = Eigen::MatrixXd::Zero(theta.rows(), theta.cols());
    entry.adam.m = beta1 * entry.adam.m + (1.0 - beta1) * g;
    entry.adam.v = beta2 * entry.adam.v + (1.0 - beta2) * g.cwiseProduct(g);
    const Eigen::MatrixXd mhat = entry.adam.m / bc1;
    const Eigen::MatrixXd vhat = entry.adam.v / bc2;
    theta -= lr * (mhat.array() / (vhat.array().sqrt() + eps) + weight_decay * theta.array())
                 .matrix();
  }
}

std::map<std::string, Eigen::MatrixXd> ParamStore::snapshot() const {
  std::map<std::string, Eigen::MatrixXd> out;
  for (const auto& [name, entry] : entries_) out[name] = entry.value.data();
  return out;
}

void ParamStore::restore(const std::map<std::string, Eigen::MatrixXd>& snap) {
  for (auto& [name, entry] : entries_) entry.value.mutable_data() = snap.at(name);
}

const ParamStore::AdamState& ParamStore::adam_state(const std::string& name) const {
  return entries_.at(name).adam;
}

void ParamStore::set_adam_state(const std::string& name, AdamState state) {
  entries_.at(name).adam = std::move(state);
}

}  // namespace tinysched::nn
