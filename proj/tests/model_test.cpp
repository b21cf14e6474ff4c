#include <doctest.h>

#include <cstdio>
#include <random>

#include "tinysched/features.hpp"
#include "tinysched/generator.hpp"
#include "tinysched/model.hpp"

using namespace tinysched;

namespace {

model::TrainExample example_from(const ir::Program& p, const transforms::Schedule& s,
                                 double target, const std::string& group) {
  model::TrainExample e;
  e.tree = features::encode_program(p, s);
  e.target = target;
  e.group = group;
  return e;
}

std::vector<model::TrainExample> toy_examples(int programs, std::uint64_t seed) {
  generator::GeneratorConfig cfg;
  cfg.max_iterations = 1 << 10;
  cfg.min_iterations = 1 << 6;
  std::vector<model::TrainExample> out;
  std::mt19937_64 rng(seed);
  for (int k = 0; k < programs; ++k) {
    cfg.seed = generator::derive_seed(seed, k);
    const ir::Program p = generator::generate_program(cfg);
    const auto schedules = generator::generate_schedules(p, cfg);
    for (std::size_t i = 0; i < schedules.size(); ++i) {
      // Synthetic target keyed to the schedule length, in a learnable range.
      const double target =
          1.0 + 0.35 * static_cast<double>(schedules[i].actions.size()) +
          0.05 * static_cast<double>(rng() % 5);
      out.push_back(example_from(p, schedules[i], target, "p" + std::to_string(k)));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("a zeroed regression head predicts the clamped constant") {
  model::ModelConfig cfg;
  model::CostModel m(cfg, 1);
  m.params().at("reg.w2").mutable_data().setZero();
  m.params().at("reg.b2").mutable_data().setZero();

  generator::GeneratorConfig gc;
  std::vector<double> preds;
  for (std::uint64_t s = 0; s < 4; ++s) {
    gc.seed = generator::derive_seed(5, s);
    const ir::Program p = generator::generate_program(gc);
    preds.push_back(m.predict(features::encode_program(p, {})));
  }
  for (double v : preds) CHECK(v == doctest::Approx(0.01).epsilon(1e-12));

  m.params().at("reg.b2").mutable_data()(0, 0) = 3.0;
  for (std::uint64_t s = 0; s < 4; ++s) {
    gc.seed = generator::derive_seed(5, s);
    const ir::Program p = generator::generate_program(gc);
    CHECK(m.predict(features::encode_program(p, {})) == doctest::Approx(3.0).epsilon(1e-12));
  }
}

TEST_CASE("predictions never fall below the floor") {
  model::CostModel m(model::ModelConfig{}, 7);
  generator::GeneratorConfig gc;
  for (std::uint64_t s = 0; s < 8; ++s) {
    gc.seed = generator::derive_seed(21, s);
    const ir::Program p = generator::generate_program(gc);
    CHECK(m.predict(features::encode_program(p, {})) >= 0.01);
  }
}

TEST_CASE("overfitting a single record hits its target") {
  generator::GeneratorConfig gc;
  gc.seed = 77;
  const ir::Program p = generator::generate_program(gc);
  const auto ex = example_from(p, {}, 3.7, "p0");

  model::ModelConfig mc;
  mc.dropout = 0.0;  // capacity probe, not a regularization run
  model::CostModel m(mc, 3);
  model::TrainConfig tc;
  tc.epochs = 800;
  tc.seed = 3;
  m.train({ex}, {}, tc);
  CHECK(m.predict(ex.tree) == doctest::Approx(3.7).epsilon(0.01));
}

TEST_CASE("training is deterministic for a fixed seed") {
  const auto examples = toy_examples(2, 11);
  model::TrainConfig tc;
  tc.epochs = 4;
  tc.seed = 19;

  model::CostModel a(model::ModelConfig{}, 5);
  model::CostModel b(model::ModelConfig{}, 5);
  const auto log_a = a.train(examples, {}, tc);
  const auto log_b = b.train(examples, {}, tc);
  REQUIRE(log_a.size() == log_b.size());
  for (std::size_t i = 0; i < log_a.size(); ++i) {
    CHECK(log_a[i].train_mape == log_b[i].train_mape);
    CHECK(log_a[i].val_mape == log_b[i].val_mape);
  }
}

TEST_CASE("weight count is independent of tree size") {
  model::CostModel m(model::ModelConfig{}, 2);
  const auto names = m.params().names();
  std::size_t total = 0;
  for (const std::string& n : names) total += m.params().at(n).data().size();

  generator::GeneratorConfig gc;
  gc.seed = 3;
  const ir::Program p = generator::generate_program(gc);
  (void)m.predict(features::encode_program(p, {}));
  std::size_t after = 0;
  for (const std::string& n : m.params().names()) after += m.params().at(n).data().size();
  CHECK(total == after);
  CHECK(names.size() == m.params().names().size());
}

TEST_CASE("the flat ablation ignores nesting") {
  model::ModelConfig cfg;
  cfg.flat_ablation = true;
  cfg.feature_width = 12;
  model::CostModel m(cfg, 9);

  std::mt19937_64 rng(4);
  std::vector<Eigen::MatrixXd> leaves(2);
  for (auto& l : leaves) {
    l.resize(1, 12);
    for (int j = 0; j < 12; ++j) l(0, j) = static_cast<double>(rng() % 7) * 0.3;
  }
  // Same leaf sequence under two different loop structures.
  ir::LoopTree chain;
  chain.nodes.resize(2);
  chain.nodes[0].items = {{ir::LoopTree::Item::Kind::Child, 1}};
  chain.nodes[1].items = {{ir::LoopTree::Item::Kind::Computation, 0},
                          {ir::LoopTree::Item::Kind::Computation, 1}};
  ir::LoopTree split;
  split.nodes.resize(3);
  split.nodes[0].items = {{ir::LoopTree::Item::Kind::Child, 1},
                          {ir::LoopTree::Item::Kind::Child, 2}};
  split.nodes[1].items = {{ir::LoopTree::Item::Kind::Computation, 0}};
  split.nodes[2].items = {{ir::LoopTree::Item::Kind::Computation, 1}};

  const double a = m.forward_batch(chain, leaves, false, nullptr).data()(0, 0);
  const double b = m.forward_batch(split, leaves, false, nullptr).data()(0, 0);
  CHECK(a == b);
}

TEST_CASE("checkpoints round-trip and reject layout changes") {
  const std::string path = "/tmp/tinysched_model_test.ckpt";
  model::CostModel m(model::ModelConfig{}, 13);
  generator::GeneratorConfig gc;
  gc.seed = 31;
  const ir::Program p = generator::generate_program(gc);
  const features::ProgramTree tree = features::encode_program(p, {});
  const double before = m.predict(tree);
  m.save(path);

  const model::CostModel loaded = model::CostModel::load(path);
  CHECK(loaded.predict(tree) == before);

  // A different feature width must be refused on load.
  model::ModelConfig narrow;
  narrow.feature_width = 100;
  model::CostModel other(narrow, 13);
  other.save(path);
  CHECK_THROWS(model::CostModel::load(path).predict(tree));
  std::remove(path.c_str());
}

TEST_CASE("training rejects bad datasets") {
  model::CostModel m(model::ModelConfig{}, 1);
  model::TrainConfig tc;
  tc.epochs = 1;
  CHECK_THROWS_AS((void)m.train({}, {}, tc), model::EmptyDataset);

  generator::GeneratorConfig gc;
  gc.seed = 2;
  const ir::Program p = generator::generate_program(gc);
  const auto bad = example_from(p, {}, 0.0, "p0");
  CHECK_THROWS_AS((void)m.train({bad}, {}, tc), nn::NonPositiveTarget);
}

TEST_CASE("full model gradients match finite differences on a small tree") {
  model::ModelConfig cfg;
  cfg.feature_width = 8;
  cfg.dropout = 0.0;  // deterministic loss surface for differencing
  model::CostModel m(cfg, 17);
  // Keep raw outputs away from the clamp so the loss is smooth everywhere.
  m.params().at("reg.b2").mutable_data()(0, 0) = 0.5;

  ir::LoopTree shape;
  shape.nodes.resize(3);
  shape.nodes[0].items = {{ir::LoopTree::Item::Kind::Child, 1}};
  shape.nodes[1].items = {{ir::LoopTree::Item::Kind::Computation, 0},
                          {ir::LoopTree::Item::Kind::Child, 2}};
  shape.nodes[2].items = {{ir::LoopTree::Item::Kind::Computation, 1}};

  std::mt19937_64 rng(23);
  std::vector<Eigen::MatrixXd> leaves(2);
  for (auto& l : leaves) {
    l.resize(2, 8);  // batch of two records
    for (int r = 0; r < 2; ++r)
      for (int j = 0; j < 8; ++j)
        l(r, j) = (static_cast<double>(rng() >> 11) * 0x1.0p-53) * 2.0 - 1.0;
  }
  const Eigen::VectorXd targets = (Eigen::VectorXd(2) << 1.4, 0.8).finished();

  const auto loss_value = [&] {
    const nn::Value preds = m.forward_batch(shape, leaves, false, nullptr);
    return nn::mape_loss(targets, preds);
  };

  nn::Value loss = loss_value();
  m.params().zero_grad();
  nn::backward(loss);

  std::mt19937_64 pick(29);
  double worst = 0;
  for (const std::string& name : m.params().names()) {
    nn::Value param = m.params().at(name);
    const Eigen::MatrixXd analytic = param.grad().size()
                                         ? param.grad()
                                         : Eigen::MatrixXd::Zero(param.rows(), param.cols());
    for (int probe = 0; probe < 4; ++probe) {
      const Eigen::Index i = static_cast<Eigen::Index>(pick() % param.rows());
      const Eigen::Index j = static_cast<Eigen::Index>(pick() % param.cols());
      const double keep = param.data()(i, j);
      const double eps = 1e-5;
      param.mutable_data()(i, j) = keep + eps;
      const double up = loss_value().data()(0, 0);
      param.mutable_data()(i, j) = keep - eps;
      const double down = loss_value().data()(0, 0);
      param.mutable_data()(i, j) = keep;
      const double numeric = (up - down) / (2 * eps);
      const double a = analytic(i, j);
      worst = std::max(worst,
                       std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-4}));
    }
  }
  CHECK(worst < 1e-4);
}
