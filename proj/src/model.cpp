#include "tinysched/model.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>

namespace tinysched::model {

using nn::Value;

namespace {

constexpr int kEmbed = 180;
constexpr int kHidden = 180;
constexpr std::array<int, 3> kEmbedLayers = {600, 350, 200};
constexpr int kMergeHidden = 200;
constexpr std::array<int, 2> kRegLayers = {200, 180};
constexpr double kOutputFloor = 0.01;

}  // namespace

CostModel::CostModel(ModelConfig cfg, std::uint64_t seed) : cfg_(cfg) {
  std::mt19937_64 rng(seed);
  const int d = cfg_.feature_width;

  int in = d;
  for (std::size_t i = 0; i < kEmbedLayers.size(); ++i) {
    params_.create("embed.w" + std::to_string(i), in, kEmbedLayers[i], rng);
    params_.create_zeros("embed.b" + std::to_string(i), 1, kEmbedLayers[i]);
    in = kEmbedLayers[i];
  }
  params_.create("embed.w3", in, kEmbed, rng);
  params_.create_zeros("embed.b3", 1, kEmbed);

  if (cfg_.flat_ablation) {
    params_.create("flat.wx", kEmbed, 4 * kHidden, rng);
    params_.create("flat.wh", kHidden, 4 * kHidden, rng);
    params_.create_zeros("flat.b", 1, 4 * kHidden);
  } else {
    for (const char* cell : {"comps", "loops"}) {
      params_.create(std::string(cell) + ".wx", kEmbed, 4 * kHidden, rng);
      params_.create(std::string(cell) + ".wh", kHidden, 4 * kHidden, rng);
      params_.create_zeros(std::string(cell) + ".b", 1, 4 * kHidden);
    }
    params_.create("merge.w0", 2 * kHidden, kMergeHidden, rng);
    params_.create_zeros("merge.b0", 1, kMergeHidden);
    params_.create("merge.w1", kMergeHidden, kEmbed, rng);
    params_.create_zeros("merge.b1", 1, kEmbed);
  }

  in = kEmbed;
  for (std::size_t i = 0; i < kRegLayers.size(); ++i) {
    params_.create("reg.w" + std::to_string(i), in, kRegLayers[i], rng);
    params_.create_zeros("reg.b" + std::to_string(i), 1, kRegLayers[i]);
    in = kRegLayers[i];
  }
  params_.create("reg.w2", in, 1, rng);
  params_.create_zeros("reg.b2", 1, 1);
}

nn::Value CostModel::embed(const Value& x, bool training, std::mt19937_64* rng) const {
  Value h = x;
  for (int i = 0; i < 3; ++i) {
    h = add_rowwise(matmul(h, params_.at("embed.w" + std::to_string(i))),
                    params_.at("embed.b" + std::to_string(i)));
    h = dropout(elu(h), cfg_.dropout, training, rng);
  }
  return add_rowwise(matmul(h, params_.at("embed.w3")), params_.at("embed.b3"));
}

nn::Value CostModel::merge(const Value& x, bool training, std::mt19937_64* rng) const {
  Value h = add_rowwise(matmul(x, params_.at("merge.w0")), params_.at("merge.b0"));
  h = dropout(elu(h), cfg_.dropout, training, rng);
  return add_rowwise(matmul(h, params_.at("merge.w1")), params_.at("merge.b1"));
}

nn::Value CostModel::regress(const Value& x, bool training, std::mt19937_64* rng) const {
  Value h = x;
  for (int i = 0; i < 2; ++i) {
    h = add_rowwise(matmul(h, params_.at("reg.w" + std::to_string(i))),
                    params_.at("reg.b" + std::to_string(i)));
    h = dropout(elu(h), cfg_.dropout, training, rng);
  }
  return add_rowwise(matmul(h, params_.at("reg.w2")), params_.at("reg.b2"));
}

nn::Value CostModel::forward_batch(const ir::LoopTree& shape,
                                   const std::vector<Eigen::MatrixXd>& leaf_rows, bool training,
                                   std::mt19937_64* rng) const {
  if (leaf_rows.empty()) throw EmptyDataset("no leaves to evaluate");
  const Eigen::Index batch = leaf_rows[0].rows();
  for (const Eigen::MatrixXd& m : leaf_rows) {
    if (m.cols() != cfg_.feature_width)
      throw WidthMismatch("leaf width " + std::to_string(m.cols()) + " != configured " +
                          std::to_string(cfg_.feature_width));
    if (m.rows() != batch) throw WidthMismatch("leaf batch sizes differ");
  }

  std::vector<Value> embeds;
  embeds.reserve(leaf_rows.size());
  for (const Eigen::MatrixXd& m : leaf_rows)
    embeds.push_back(embed(Value::constant(m), training, rng));

  const auto zeros = [&] {
    return Value::constant(Eigen::MatrixXd::Zero(batch, kHidden));
  };

  Value root_vec;
  if (cfg_.flat_ablation) {
    nn::LstmParams flat{params_.at("flat.wx"), params_.at("flat.wh"), params_.at("flat.b")};
    Value h = zeros(), c = zeros();
    for (const Value& e : embeds) std::tie(h, c) = nn::lstm_step(e, h, c, flat);
    root_vec = h;
  } else {
    nn::LstmParams comps{params_.at("comps.wx"), params_.at("comps.wh"), params_.at("comps.b")};
    nn::LstmParams loops{params_.at("loops.wx"), params_.at("loops.wh"), params_.at("loops.b")};
    const std::function<Value(int)> eval_node = [&](int node) -> Value {
      Value hc = zeros(), cc = zeros();
      Value hl = zeros(), cl = zeros();
      for (const ir::LoopTree::Item& item : shape.nodes[node].items) {
        if (item.kind == ir::LoopTree::Item::Kind::Computation)
          std::tie(hc, cc) = nn::lstm_step(embeds[item.index], hc, cc, comps);
        else
          std::tie(hl, cl) = nn::lstm_step(eval_node(item.index), hl, cl, loops);
      }
      return merge(concat_cols(hc, hl), training, rng);
    };
    root_vec = eval_node(0);
  }

  return clamp_min(regress(root_vec, training, rng), kOutputFloor);
}

double CostModel::predict(const features::ProgramTree& tree) const {
  std::vector<Eigen::MatrixXd> rows;
  rows.reserve(tree.leaves.size());
  for (const Eigen::VectorXd& leaf : tree.leaves) rows.push_back(leaf.transpose());
  return forward_batch(tree.shape, rows, false, nullptr).data()(0, 0);
}

std::vector<double> CostModel::predict_many(const std::vector<TrainExample>& examples) const {
  // Batch by structure signature; only the shape must match within a batch.
  std::map<std::string, std::vector<int>> by_structure;
  for (std::size_t i = 0; i < examples.size(); ++i)
    by_structure[examples[i].tree.structure()].push_back(static_cast<int>(i));

  std::vector<double> out(examples.size(), 0.0);
  for (const auto& [sig, idxs] : by_structure) {
    for (std::size_t at = 0; at < idxs.size(); at += 64) {
      const std::size_t n = std::min<std::size_t>(64, idxs.size() - at);
      const features::ProgramTree& first = examples[idxs[at]].tree;
      std::vector<Eigen::MatrixXd> rows(first.leaves.size());
      for (std::size_t k = 0; k < rows.size(); ++k)
        rows[k].resize(n, first.leaves[k].size());
      for (std::size_t r = 0; r < n; ++r) {
        const features::ProgramTree& t = examples[idxs[at + r]].tree;
        for (std::size_t k = 0; k < rows.size(); ++k) rows[k].row(r) = t.leaves[k].transpose();
      }
      const nn::Value pred = forward_batch(first.shape, rows, false, nullptr);
      for (std::size_t r = 0; r < n; ++r) out[idxs[at + r]] = pred.data()(r, 0);
    }
  }
  return out;
}

std::vector<EpochStats> CostModel::train(const std::vector<TrainExample>& train_set,
                                         const std::vector<TrainExample>& val_set,
                                         const TrainConfig& tc) {
  if (train_set.empty()) throw EmptyDataset("training set is empty");
  for (const TrainExample& e : train_set)
    if (e.target <= 0) throw nn::NonPositiveTarget("training target must be positive");

  // Batches hold records of one group (same program, same fused structure).
  std::map<std::string, std::vector<int>> groups;
  for (std::size_t i = 0; i < train_set.size(); ++i)
    groups[train_set[i].group + "|" + train_set[i].tree.structure()].push_back(
        static_cast<int>(i));
  std::vector<std::vector<int>> batches;
  for (const auto& [key, idxs] : groups)
    for (std::size_t at = 0; at < idxs.size(); at += tc.batch_size)
      batches.emplace_back(idxs.begin() + at,
                           idxs.begin() + at + std::min<std::size_t>(tc.batch_size,
                                                                     idxs.size() - at));

  const std::int64_t total_steps =
      static_cast<std::int64_t>(tc.epochs) * static_cast<std::int64_t>(batches.size());
  std::mt19937_64 dropout_rng(tc.seed ^ 0x9e3779b97f4a7c15ULL);
  std::mt19937_64 shuffle_rng(tc.seed ^ 0x517cc1b727220a95ULL);

  std::vector<EpochStats> log;
  double best = std::numeric_limits<double>::infinity();
  std::map<std::string, Eigen::MatrixXd> best_params = params_.snapshot();
  std::int64_t step = 0;

  std::vector<int> order(batches.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng() % i]);

    double epoch_err = 0;
    double lr = 0;
    for (int bi : order) {
      const std::vector<int>& batch = batches[bi];
      const features::ProgramTree& first = train_set[batch[0]].tree;
      std::vector<Eigen::MatrixXd> rows(first.leaves.size());
      for (std::size_t k = 0; k < rows.size(); ++k)
        rows[k].resize(batch.size(), first.leaves[k].size());
      Eigen::VectorXd targets(batch.size());
      for (std::size_t r = 0; r < batch.size(); ++r) {
        const TrainExample& e = train_set[batch[r]];
        targets[r] = e.target;
        for (std::size_t k = 0; k < rows.size(); ++k) rows[k].row(r) = e.tree.leaves[k];
      }

      const nn::Value preds = forward_batch(first.shape, rows, true, &dropout_rng);
      const nn::Value loss = nn::mape_loss(targets, preds);
      params_.zero_grad();
      nn::backward(loss);
      lr = nn::one_cycle_lr(step, total_steps, tc.max_lr);
      params_.adamw_step(lr, 0.9, 0.999, 1e-8, tc.weight_decay);
      ++step;
      epoch_err += loss.data()(0, 0) * static_cast<double>(batch.size());
    }

    EpochStats stats;
    stats.lr = lr;
    stats.train_mape = epoch_err / static_cast<double>(train_set.size());
    if (val_set.empty()) {
      stats.val_mape = stats.train_mape;
    } else {
      const std::vector<double> preds = predict_many(val_set);
      double err = 0;
      for (std::size_t i = 0; i < val_set.size(); ++i)
        err += std::abs(val_set[i].target - preds[i]) / val_set[i].target;
      stats.val_mape = err / static_cast<double>(val_set.size());
    }
    if (stats.val_mape < best) {
      best = stats.val_mape;
      best_params = params_.snapshot();
    }
    log.push_back(stats);
    if (tc.verbose && (epoch % 10 == 0 || epoch + 1 == tc.epochs))
      std::cerr << "epoch " << epoch << " train " << stats.train_mape << " val "
                << stats.val_mape << " lr " << stats.lr << "\n";
  }

  params_.restore(best_params);
  return log;
}

// --- checkpoint io ------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'T', 'S', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_i64(std::ostream& os, std::int64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_string(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}
void write_matrix(std::ostream& os, const Eigen::MatrixXd& m) {
  write_u32(os, static_cast<std::uint32_t>(m.rows()));
  write_u32(os, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      os.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
}

std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
std::int64_t read_i64(std::istream& is) {
  std::int64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
std::string read_string(std::istream& is) {
  const std::uint32_t n = read_u32(is);
  std::string s(n, '\0');
  is.read(s.data(), n);
  return s;
}
Eigen::MatrixXd read_matrix(std::istream& is) {
  const std::uint32_t rows = read_u32(is);
  const std::uint32_t cols = read_u32(is);
  Eigen::MatrixXd m(rows, cols);
  for (std::uint32_t i = 0; i < rows; ++i)
    for (std::uint32_t j = 0; j < cols; ++j) {
      double v = 0;
      is.read(reinterpret_cast<char*>(&v), sizeof v);
      m(i, j) = v;
    }
  return m;
}

}  // namespace

void CostModel::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write checkpoint " + path);
  os.write(kMagic, 4);
  write_u32(os, kVersion);
  write_u32(os, cfg_.flat_ablation ? 1 : 0);
  write_u32(os, static_cast<std::uint32_t>(cfg_.feature_width));
  const double drop = cfg_.dropout;
  os.write(reinterpret_cast<const char*>(&drop), sizeof drop);

  const std::vector<std::string> names = params_.names();
  write_u32(os, static_cast<std::uint32_t>(names.size()));
  for (const std::string& name : names) {
    write_string(os, name);
    write_matrix(os, params_.at(name).data());
  }
  write_i64(os, params_.step_count());
  for (const std::string& name : names) {
    const nn::ParamStore::AdamState& st = params_.adam_state(name);
    write_matrix(os, st.m);
    write_matrix(os, st.v);
  }
}

CostModel CostModel::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read checkpoint " + path);
  char magic[4];
  is.read(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw CheckpointMismatch("bad checkpoint magic");
  if (read_u32(is) != kVersion) throw CheckpointMismatch("unsupported checkpoint version");

  ModelConfig cfg;
  cfg.flat_ablation = read_u32(is) != 0;
  cfg.feature_width = static_cast<int>(read_u32(is));
  double drop = 0;
  is.read(reinterpret_cast<char*>(&drop), sizeof drop);
  cfg.dropout = drop;

  CostModel model(cfg, 0);
  const std::uint32_t count = read_u32(is);
  const std::vector<std::string> expected = model.params_.names();
  if (count != expected.size()) throw CheckpointMismatch("parameter count differs");
  std::map<std::string, Eigen::MatrixXd> tensors;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = read_string(is);
    tensors[name] = read_matrix(is);
  }
  for (const std::string& name : expected) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw CheckpointMismatch("missing tensor " + name);
    const Eigen::MatrixXd& have = model.params_.at(name).data();
    if (it->second.rows() != have.rows() || it->second.cols() != have.cols())
      throw CheckpointMismatch("layout mismatch for " + name);
  }
  model.params_.restore(tensors);
  model.params_.set_step_count(read_i64(is));
  for (const std::string& name : expected) {
    nn::ParamStore::AdamState st;
    st.m = read_matrix(is);
    st.v = read_matrix(is);
    model.params_.set_adam_state(name, std::move(st));
  }
  return model;
}

}  // namespace tinysched::model
