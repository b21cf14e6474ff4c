#include "tinysched/search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "tinysched/features.hpp"

namespace tinysched::search {

using transforms::Action;
using transforms::Stage;

namespace {

std::string key_of(const Schedule& s) {
  return transforms::to_json(s).dump();
}

std::int64_t now_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

std::vector<std::optional<Action>> candidate_actions(const ir::Program& p,
                                                     const SearchNode& node) {
  std::vector<std::optional<Action>> out;
  if (node.stage == Stage::Done) return out;
  out.push_back(std::nullopt);  // skip this stage
  for (const Action& a : transforms::enumerate_stage_actions(p, node.prefix, node.stage))
    out.push_back(a);
  return out;
}

double Evaluator::evaluate(const Schedule& s) {
  const std::string key = key_of(s);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  const std::int64_t t0 = now_ns();
  const double v = evaluate_uncached(s);
  wall_ns_ += now_ns() - t0;
  ++calls_;
  if (executes()) ++executions_;
  cache_[key] = v;
  return v;
}

ExecutionEvaluator::ExecutionEvaluator(const ir::Program& p, exec::Executor& ex, int runs,
                                       std::uint64_t input_seed, bool deterministic)
    : program_(p), executor_(ex), runs_(runs), deterministic_(deterministic) {
  inputs_ = exec::random_inputs(p, input_seed);
  parallel_ = transforms::heuristic_parallelize(p);
}

std::int64_t ExecutionEvaluator::baseline_median_ns() {
  if (baseline_ns_ == 0) {
    const std::int64_t t0 = now_ns();
    const ir::Program base = transforms::apply(program_, parallel_);
    baseline_ns_ = deterministic_ ? executor_.deterministic_cost(base)
                                  : executor_.measure(base, inputs_, runs_).median_ns;
    wall_ns_ += now_ns() - t0;
    ++executions_;
  }
  return baseline_ns_;
}

double ExecutionEvaluator::evaluate_uncached(const Schedule& s) {
  const std::int64_t base = baseline_median_ns();
  Schedule full = s;
  for (const Action& a : parallel_.actions)
    if (transforms::is_legal(program_, full, a)) full.actions.push_back(a);
  const ir::Program transformed = transforms::apply(program_, full);
  const std::int64_t ns = deterministic_
                              ? executor_.deterministic_cost(transformed)
                              : executor_.measure(transformed, inputs_, runs_).median_ns;
  return static_cast<double>(base) / static_cast<double>(ns);
}

ModelEvaluator::ModelEvaluator(const ir::Program& p, const model::CostModel& m)
    : program_(p), model_(m) {}

double ModelEvaluator::evaluate_uncached(const Schedule& s) {
  return model_.predict(features::encode_program(program_, s));
}

namespace {

struct Scored {
  Schedule schedule;
  double eval;
};

// Higher eval first; ties to fewer actions, then lexicographic keys.
bool better(const Scored& a, const Scored& b) {
  if (a.eval != b.eval) return a.eval > b.eval;
  if (a.schedule.actions.size() != b.schedule.actions.size())
    return a.schedule.actions.size() < b.schedule.actions.size();
  return key_of(a.schedule) < key_of(b.schedule);
}

}  // namespace

SearchResult beam_search(const ir::Program& p, Evaluator& evaluator, int beam_width) {
  const std::int64_t t0 = now_ns();
  const int calls0 = evaluator.calls();
  const int execs0 = evaluator.executions();
  SearchResult result;

  std::vector<Scored> beam{{Schedule{}, evaluator.evaluate({})}};
  result.log.push_back({Schedule{}, beam[0].eval, now_ns() - t0, evaluator.executes()});

  for (Stage stage = Stage::Fusion; stage != Stage::Done; stage = transforms::next_stage(stage)) {
    std::vector<Scored> children;
    std::set<std::string> seen;
    for (const Scored& node : beam) {
      for (const std::optional<Action>& cand : candidate_actions(p, {node.schedule, stage})) {
        Schedule next = node.schedule;
        if (cand) next.actions.push_back(*cand);
        if (!seen.insert(key_of(next)).second) continue;
        const double eval = evaluator.evaluate(next);
        children.push_back({std::move(next), eval});
        result.log.push_back(
            {children.back().schedule, eval, now_ns() - t0, evaluator.executes()});
      }
    }
    std::sort(children.begin(), children.end(), better);
    if (static_cast<int>(children.size()) > beam_width) children.resize(beam_width);
    beam = std::move(children);
  }

  result.best = beam[0].schedule;
  result.best_evaluation = beam[0].eval;
  result.wall_ns = now_ns() - t0;
  result.evaluator_calls = evaluator.calls() - calls0;
  result.executions = evaluator.executions() - execs0;
  return result;
}

SearchResult mcts(const ir::Program& p, ModelEvaluator& model_eval,
                  ExecutionEvaluator& exec_eval, int iterations, int exec_set_size, double c_uct,
                  std::uint64_t seed) {
  const std::int64_t t0 = now_ns();
  SearchResult result;
  std::mt19937_64 rng(seed);

  struct TreeNode {
    Schedule prefix;
    Stage stage;
    int parent = -1;
    std::vector<int> children;
    std::vector<std::optional<Action>> untried;
    int visits = 0;
    double total = 0;
  };
  std::vector<TreeNode> nodes;
  nodes.push_back({Schedule{}, Stage::Fusion, -1, {}, candidate_actions(p, {{}, Stage::Fusion})});

  // Retained set: the best distinct schedules by model prediction.
  std::map<std::string, std::pair<double, Schedule>> top;
  double best_pred = 0;

  for (int it = 0; it < iterations; ++it) {
    // Selection.
    int cur = 0;
    while (nodes[cur].untried.empty() && !nodes[cur].children.empty()) {
      const double log_n = std::log(std::max(1, nodes[cur].visits));
      int best_child = nodes[cur].children[0];
      double best_uct = -1;
      for (int ch : nodes[cur].children) {
        const TreeNode& c = nodes[ch];
        const double uct = c.total / std::max(1, c.visits) +
                           c_uct * std::sqrt(log_n / std::max(1, c.visits));
        if (uct > best_uct) {
          best_uct = uct;
          best_child = ch;
        }
      }
      cur = best_child;
    }

    // Expansion: one random untried action.
    if (nodes[cur].stage != Stage::Done && !nodes[cur].untried.empty()) {
      auto& untried = nodes[cur].untried;
      const std::size_t pick = static_cast<std::size_t>(rng() % untried.size());
      const std::optional<Action> action = untried[pick];
      untried.erase(untried.begin() + static_cast<std::ptrdiff_t>(pick));

      TreeNode child;
      child.prefix = nodes[cur].prefix;
      if (action) child.prefix.actions.push_back(*action);
      child.stage = transforms::next_stage(nodes[cur].stage);
      child.parent = cur;
      if (child.stage != Stage::Done)
        child.untried = candidate_actions(p, {child.prefix, child.stage});
      nodes.push_back(std::move(child));
      nodes[cur].children.push_back(static_cast<int>(nodes.size()) - 1);
      cur = static_cast<int>(nodes.size()) - 1;
    }

    // Rollout: finish the schedule with uniform random legal choices.
    Schedule rolled = nodes[cur].prefix;
    for (Stage stage = nodes[cur].stage; stage != Stage::Done;
         stage = transforms::next_stage(stage)) {
      const auto menu = candidate_actions(p, {rolled, stage});
      const std::optional<Action>& pick = menu[static_cast<std::size_t>(rng() % menu.size())];
      if (pick) rolled.actions.push_back(*pick);
    }
    const double pred = model_eval.evaluate(rolled);
    result.log.push_back({rolled, pred, now_ns() - t0, false});

    top[key_of(rolled)] = {pred, rolled};
    if (top.size() > static_cast<std::size_t>(exec_set_size)) {
      auto worst = top.begin();
      for (auto i = top.begin(); i != top.end(); ++i)
        if (i->second.first < worst->second.first) worst = i;
      top.erase(worst);
    }

    best_pred = std::max(best_pred, pred);
    const double reward = best_pred > 0 ? pred / best_pred : 0.0;
    for (int up = cur; up >= 0; up = nodes[up].parent) {
      nodes[up].visits += 1;
      nodes[up].total += reward;
    }
  }

  // Execute the retained set; the best measured schedule wins.
  bool have_best = false;
  for (const auto& [key, entry] : top) {
    try {
      const double measured = exec_eval.evaluate(entry.second);
      result.log.push_back({entry.second, measured, now_ns() - t0, true});
      if (!have_best || measured > result.best_evaluation) {
        result.best = entry.second;
        result.best_evaluation = measured;
        have_best = true;
      }
    } catch (const std::exception&) {
      // A failing candidate is dropped from the final set.
    }
  }
  result.wall_ns = now_ns() - t0;
  result.evaluator_calls = model_eval.calls();
  result.executions = exec_eval.executions();
  return result;
}

namespace {

void enumerate_rec(const ir::Program& p, const Schedule& prefix, Stage stage,
                   std::vector<Schedule>& out) {
  if (stage == Stage::Done) {
    out.push_back(prefix);
    return;
  }
  for (const std::optional<Action>& cand : candidate_actions(p, {prefix, stage})) {
    Schedule next = prefix;
    if (cand) next.actions.push_back(*cand);
    enumerate_rec(p, next, transforms::next_stage(stage), out);
  }
}

std::int64_t count_rec(const ir::Program& p, const Schedule& prefix, Stage stage,
                       std::int64_t stop_above) {
  if (stage == Stage::Done) return 1;
  std::int64_t total = 0;
  for (const std::optional<Action>& cand : candidate_actions(p, {prefix, stage})) {
    Schedule next = prefix;
    if (cand) next.actions.push_back(*cand);
    total += count_rec(p, next, transforms::next_stage(stage), stop_above);
    if (total > stop_above) return total;
  }
  return total;
}

}  // namespace

std::vector<Schedule> enumerate_schedules(const ir::Program& p) {
  std::vector<Schedule> out;
  enumerate_rec(p, {}, Stage::Fusion, out);
  return out;
}

std::int64_t count_leaves(const ir::Program& p, std::int64_t stop_above) {
  return count_rec(p, {}, Stage::Fusion, stop_above);
}

TradeoffReport tradeoff_report(const std::vector<ir::Program>& programs,
                               const std::vector<std::string>& uids,
                               const model::CostModel& m, exec::Executor& ex, int beam_width,
                               int iterations, int exec_set_size, std::uint64_t seed, int runs,
                               bool deterministic) {
  TradeoffReport report;
  for (std::size_t i = 0; i < programs.size(); ++i) {
    const ir::Program& p = programs[i];
    TradeoffRow row;
    row.program_uid = i < uids.size() ? uids[i] : std::to_string(i);

    ExecutionEvaluator bse_eval(p, ex, runs, 0x7001, deterministic);
    const SearchResult bse = beam_search(p, bse_eval, beam_width);

    ModelEvaluator bsm_eval(p, m);
    const SearchResult bsm = beam_search(p, bsm_eval, beam_width);

    ModelEvaluator mcts_model(p, m);
    ExecutionEvaluator mcts_exec(p, ex, runs, 0x7001, deterministic);
    const SearchResult mc = mcts(p, mcts_model, mcts_exec, iterations, exec_set_size, 1.0,
                                 seed + i);

    // Measure every winner under one evaluator so times are comparable.
    row.bse_speedup = bse_eval.evaluate(bse.best);
    row.bsm_speedup = bse_eval.evaluate(bsm.best);
    row.mcts_speedup = bse_eval.evaluate(mc.best);
    row.bsm_time_speedup = static_cast<double>(bse.wall_ns) / std::max<std::int64_t>(1, bsm.wall_ns);
    row.mcts_time_speedup = static_cast<double>(bse.wall_ns) / std::max<std::int64_t>(1, mc.wall_ns);
    row.bsm_degradation = row.bse_speedup / row.bsm_speedup - 1.0;
    row.mcts_degradation = row.bse_speedup / row.mcts_speedup - 1.0;
    report.rows.push_back(row);
  }

  const auto mean = [&](double TradeoffRow::*field) {
    double total = 0;
    for (const TradeoffRow& r : report.rows) total += r.*field;
    return report.rows.empty() ? 0.0 : total / static_cast<double>(report.rows.size());
  };
  report.mean_bsm_time_speedup = mean(&TradeoffRow::bsm_time_speedup);
  report.mean_mcts_time_speedup = mean(&TradeoffRow::mcts_time_speedup);
  report.mean_bsm_degradation = mean(&TradeoffRow::bsm_degradation);
  report.mean_mcts_degradation = mean(&TradeoffRow::mcts_degradation);
  return report;
}

void tradeoff_csv(const TradeoffReport& report, const std::string& path) {
  std::ofstream os(path);
  os << "program,bse_speedup,bsm_speedup,mcts_speedup,bsm_time_speedup,mcts_time_speedup,"
        "bsm_degradation,mcts_degradation\n";
  for (const TradeoffRow& r : report.rows)
    os << r.program_uid << "," << r.bse_speedup << "," << r.bsm_speedup << "," << r.mcts_speedup
       << "," << r.bsm_time_speedup << "," << r.mcts_time_speedup << "," << r.bsm_degradation
       << "," << r.mcts_degradation << "\n";
  os << "mean,,,," << report.mean_bsm_time_speedup << "," << report.mean_mcts_time_speedup << ","
     << report.mean_bsm_degradation << "," << report.mean_mcts_degradation << "\n";
}

void search_log_csv(const SearchResult& result, const std::string& path) {
  std::ofstream os(path);
  os << "schedule,evaluation,cumulative_wall_ns,executed\n";
  for (const LogEntry& e : result.log) {
    std::string key = key_of(e.schedule);
    for (char& c : key)
      if (c == ',') c = ';';
    os << "\"" << key << "\"," << e.evaluation << "," << e.cumulative_wall_ns << ","
       << (e.executed ? 1 : 0) << "\n";
  }
}

}  // namespace tinysched::search
