#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tinysched/exec.hpp"
#include "tinysched/ir.hpp"
#include "tinysched/model.hpp"
#include "tinysched/transforms.hpp"

namespace tinysched::search {

using transforms::Schedule;

struct SearchNode {
  Schedule prefix;
  transforms::Stage stage = transforms::Stage::Fusion;
};

/// Legal actions for the node's stage plus the explicit skip (nullopt).
/// A done node has no candidates.
std::vector<std::optional<transforms::Action>> candidate_actions(const ir::Program& p,
                                                                 const SearchNode& node);

/// Evaluators score complete schedules as speedups; higher is better.
/// Results are cached per schedule, so repeated queries are free.
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  double evaluate(const Schedule& s);
  virtual bool executes() const = 0;

  int calls() const { return calls_; }
  int executions() const { return executions_; }
  std::int64_t wall_ns() const { return wall_ns_; }

 protected:
  virtual double evaluate_uncached(const Schedule& s) = 0;
  int calls_ = 0;
  int executions_ = 0;
  std::int64_t wall_ns_ = 0;

 private:
  std::map<std::string, double> cache_;
};

/// Ground truth: measures apply(p, s + heuristic parallelization) against the
/// parallelized baseline.
class ExecutionEvaluator : public Evaluator {
 public:
  ExecutionEvaluator(const ir::Program& p, exec::Executor& ex, int runs = 5,
                     std::uint64_t input_seed = 0x7001, bool deterministic = false);
  bool executes() const override { return true; }
  std::int64_t baseline_median_ns();

 protected:
  double evaluate_uncached(const Schedule& s) override;

 private:
  const ir::Program& program_;
  exec::Executor& executor_;
  int runs_;
  bool deterministic_;
  exec::BufferSet inputs_;
  Schedule parallel_;
  std::int64_t baseline_ns_ = 0;
};

/// Predicts the serial speedup from the source program and the schedule;
/// never runs anything.
class ModelEvaluator : public Evaluator {
 public:
  ModelEvaluator(const ir::Program& p, const model::CostModel& m);
  bool executes() const override { return false; }

 protected:
  double evaluate_uncached(const Schedule& s) override;

 private:
  const ir::Program& program_;
  const model::CostModel& model_;
};

struct LogEntry {
  Schedule schedule;
  double evaluation = 0;
  std::int64_t cumulative_wall_ns = 0;
  bool executed = false;
};

struct SearchResult {
  Schedule best;
  double best_evaluation = 0;
  std::vector<LogEntry> log;
  std::int64_t wall_ns = 0;
  int evaluator_calls = 0;
  int executions = 0;
};

SearchResult beam_search(const ir::Program& p, Evaluator& evaluator, int beam_width = 4);

/// UCT search over the staged tree with model-scored rollouts; the best
/// exec_set_size schedules by prediction are then measured and the best
/// measured one wins.
SearchResult mcts(const ir::Program& p, ModelEvaluator& model_eval,
                  ExecutionEvaluator& exec_eval, int iterations, int exec_set_size = 5,
                  double c_uct = 1.0, std::uint64_t seed = 1);

/// Every complete schedule of the staged tree (the exhaustive oracle).
std::vector<Schedule> enumerate_schedules(const ir::Program& p);
std::int64_t count_leaves(const ir::Program& p, std::int64_t stop_above = 1 << 20);

struct TradeoffRow {
  std::string program_uid;
  double bse_speedup = 0;
  double bsm_speedup = 0;       // measured speedup of the schedule BSM chose
  double mcts_speedup = 0;
  double bsm_time_speedup = 0;  // BSE wall time over BSM wall time
  double mcts_time_speedup = 0;
  double bsm_degradation = 0;   // relative slowdown of BSM's pick vs BSE's
  double mcts_degradation = 0;
};

struct TradeoffReport {
  std::vector<TradeoffRow> rows;
  double mean_bsm_time_speedup = 0;
  double mean_mcts_time_speedup = 0;
  double mean_bsm_degradation = 0;
  double mean_mcts_degradation = 0;
};

TradeoffReport tradeoff_report(const std::vector<ir::Program>& programs,
                               const std::vector<std::string>& uids,
                               const model::CostModel& m, exec::Executor& ex, int beam_width,
                               int iterations, int exec_set_size, std::uint64_t seed,
                               int runs = 5, bool deterministic = false);

void tradeoff_csv(const TradeoffReport& report, const std::string& path);
void search_log_csv(const SearchResult& result, const std::string& path);

}  // namespace tinysched::search
