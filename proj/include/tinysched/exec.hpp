#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "tinysched/ir.hpp"

namespace tinysched::exec {

struct ShapeMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SignatureMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DivisionByZero : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ZeroTime : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Buffers keyed by id, flattened row-major.
using BufferSet = std::map<int, Eigen::VectorXd>;

struct Measurement {
  std::vector<std::int64_t> times_ns;
  std::int64_t median_ns = 0;
  int runs = 0;
};

/// baseline median over optimized median; slowdowns come out below 1.
double speedup(const Measurement& baseline, const Measurement& optimized);

/// Program compiled to a flat instruction sequence: loop open/close pairs,
/// linearized load/store addressing and arithmetic over a value stack.
class ExecutionPlan {
 public:
  static ExecutionPlan compile(const ir::Program& p);

  /// Dynamic iteration count of the loop carrying `iterator`.
  std::int64_t loop_iteration_count(const std::string& iterator) const;
  std::int64_t instruction_count() const;

  struct Impl;  // opaque compiled form

 private:
  friend class Executor;
  std::shared_ptr<const Impl> impl_;
};

BufferSet random_inputs(const ir::Program& p, std::uint64_t seed);

class Executor {
 public:
  /// workers == 0 picks TINYSCHED_WORKERS or the hardware concurrency.
  explicit Executor(int workers = 0);
  ~Executor();
  Executor(const Executor&) = delete;
  Executor& operator=(const Executor&) = delete;

  int workers() const;

  BufferSet run(const ir::Program& p, const BufferSet& inputs) const;
  BufferSet run(const ExecutionPlan& plan, const BufferSet& inputs) const;

  /// One discarded warm-up execution, then `runs` timed ones.
  Measurement measure(const ir::Program& p, const BufferSet& inputs, int runs = 30) const;

  /// Seed-free execution cost: dynamic instruction count plus a stride
  /// penalty on memory accesses. Byte-reproducible where wall-clock time
  /// cannot be; used by the demo pipeline.
  std::int64_t deterministic_cost(const ExecutionPlan& plan) const;
  std::int64_t deterministic_cost(const ir::Program& p) const;

  /// Outputs match within 1e-9 relative tolerance on seeded random inputs.
  bool equivalent(const ir::Program& a, const ir::Program& b, int trials = 3,
                  std::uint64_t seed = 0x5eed) const;

  struct PoolImpl;  // worker pool, shared with the interpreter internals

 private:
  std::unique_ptr<PoolImpl> pool_;
};

}  // namespace tinysched::exec
