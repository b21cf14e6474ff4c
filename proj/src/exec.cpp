#include "tinysched/exec.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <random>
#include <set>
#include <thread>

namespace tinysched::exec {

double speedup(const Measurement& baseline, const Measurement& optimized) {
  if (optimized.median_ns <= 0) throw ZeroTime("optimized median is zero");
  return static_cast<double>(baseline.median_ns) / static_cast<double>(optimized.median_ns);
}

// --- plan -------------------------------------------------------------------

namespace {

enum class OpCode : std::uint8_t {
  LoopOpen,
  LoopClose,
  PushConst,
  Load,
  Add,
  Sub,
  Mul,
  Div,
  StoreAssign,
  StoreAdd,
  StoreMul,
};

struct AccessTerm {
  int reg;
  std::int64_t weight;
};

struct AccessRef {
  int buffer_slot;
  std::int64_t const_off;
  int term_begin, term_count;  // into the shared term pool
};

struct LoopInfo {
  int reg;
  std::int64_t lower, upper;
  int open_pc, close_pc;
  bool parallel;
  std::string iterator;
  std::int64_t dynamic_iterations;  // iterations per full program run
};

struct Instr {
  OpCode op;
  int arg = 0;  // loop index or access index
  double imm = 0.0;
};

}  // namespace

struct ExecutionPlan::Impl {
  std::vector<Instr> code;
  std::vector<LoopInfo> loops;
  std::vector<AccessRef> accesses;
  std::vector<AccessTerm> terms;
  std::vector<ir::Buffer> buffers;          // slot order
  std::vector<double> buffer_init;          // reduction identity per slot
  std::vector<bool> buffer_is_input;
  std::map<int, int> slot_of;               // buffer id -> slot
  int max_depth = 0;
};

namespace {

struct PlanBuilder {
  const ir::Program& p;
  ExecutionPlan::Impl& impl;

  int add_access(const ir::AccessMatrix& m, const ir::Computation& comp,
                 const std::vector<std::int64_t>& strides) {
    AccessRef ref;
    ref.buffer_slot = impl.slot_of.at(m.buffer_id);
    const int n = comp.depth();
    std::int64_t c0 = 0;
    for (int d = 0; d < m.rank(); ++d) c0 += strides[d] * m.coeffs(d, n);
    ref.const_off = c0;
    ref.term_begin = static_cast<int>(impl.terms.size());
    for (int q = 0; q < n; ++q) {
      std::int64_t w = 0;
      for (int d = 0; d < m.rank(); ++d) w += strides[d] * m.coeffs(d, q);
      if (w != 0) impl.terms.push_back({q, w});
    }
    ref.term_count = static_cast<int>(impl.terms.size()) - ref.term_begin;

    // Reject any address that could leave the buffer.
    const ir::Buffer& buf = impl.buffers[ref.buffer_slot];
    std::int64_t lo = ref.const_off, hi = ref.const_off;
    for (int t = ref.term_begin; t < ref.term_begin + ref.term_count; ++t) {
      const auto& term = impl.terms[t];
      const ir::Loop& loop = comp.loops[term.reg];
      const std::int64_t v0 = term.weight * loop.lower;
      const std::int64_t v1 = term.weight * (loop.upper - 1);
      lo += std::min(v0, v1);
      hi += std::max(v0, v1);
    }
    if (lo < 0 || hi >= buf.element_count())
      throw ShapeMismatch("access leaves buffer " + std::to_string(m.buffer_id));

    impl.accesses.push_back(ref);
    return static_cast<int>(impl.accesses.size()) - 1;
  }

  void emit_expr(const ir::Expr& e, const ir::Computation& comp,
                 const std::vector<std::vector<std::int64_t>>& strides) {
    switch (e.kind) {
      case ir::Expr::Kind::Constant:
        impl.code.push_back({OpCode::PushConst, 0, e.constant});
        break;
      case ir::Expr::Kind::Load: {
        const int slot = impl.slot_of.at(e.access.buffer_id);
        impl.code.push_back({OpCode::Load, add_access(e.access, comp, strides[slot])});
        break;
      }
      case ir::Expr::Kind::Binary:
        emit_expr(e.operands[0], comp, strides);
        emit_expr(e.operands[1], comp, strides);
        switch (e.op) {
          case ir::OpKind::Add: impl.code.push_back({OpCode::Add}); break;
          case ir::OpKind::Sub: impl.code.push_back({OpCode::Sub}); break;
          case ir::OpKind::Mul: impl.code.push_back({OpCode::Mul}); break;
          case ir::OpKind::Div: impl.code.push_back({OpCode::Div}); break;
        }
        break;
    }
  }

  void emit_node(const ir::LoopTree& tree, int node,
                 const std::vector<std::vector<std::int64_t>>& strides,
                 std::int64_t enclosing_iters) {
    for (const ir::LoopTree::Item& item : tree.nodes[node].items) {
      if (item.kind == ir::LoopTree::Item::Kind::Child) {
        const ir::LoopTree::Node& n = tree.nodes[item.index];
        const ir::Loop& loop = p.computations[n.comp_index].loops[n.level];
        const int loop_index = static_cast<int>(impl.loops.size());
        impl.loops.push_back({n.level, loop.lower, loop.upper, 0, 0, loop.parallel,
                              loop.iterator, enclosing_iters * loop.extent()});
        impl.loops[loop_index].open_pc = static_cast<int>(impl.code.size());
        impl.code.push_back({OpCode::LoopOpen, loop_index});
        emit_node(tree, item.index, strides, enclosing_iters * loop.extent());
        impl.loops[loop_index].close_pc = static_cast<int>(impl.code.size());
        impl.code.push_back({OpCode::LoopClose, loop_index});
        impl.max_depth = std::max(impl.max_depth, n.level + 1);
      } else {
        const ir::Computation& comp = p.computations[item.index];
        emit_expr(comp.rhs, comp, strides);
        OpCode store = OpCode::StoreAssign;
        if (comp.reduce == ir::ReduceOp::Sum) store = OpCode::StoreAdd;
        if (comp.reduce == ir::ReduceOp::Product) store = OpCode::StoreMul;
        const int slot = impl.slot_of.at(comp.lhs.buffer_id);
        impl.code.push_back({store, add_access(comp.lhs, comp, strides[slot])});
      }
    }
  }
};

std::vector<std::int64_t> row_major_strides(const ir::Buffer& b) {
  std::vector<std::int64_t> s(b.dim_sizes.size(), 1);
  for (int d = static_cast<int>(s.size()) - 2; d >= 0; --d)
    s[d] = s[d + 1] * b.dim_sizes[d + 1];
  return s;
}

}  // namespace

ExecutionPlan ExecutionPlan::compile(const ir::Program& p) {
  auto impl = std::make_shared<Impl>();
  std::vector<std::vector<std::int64_t>> strides;
  for (const ir::Buffer& b : p.buffers) {
    impl->slot_of[b.id] = static_cast<int>(impl->buffers.size());
    impl->buffers.push_back(b);
    impl->buffer_is_input.push_back(b.kind == ir::BufferKind::Input);
    impl->buffer_init.push_back(0.0);
    strides.push_back(row_major_strides(b));
  }
  // A buffer first written by a product reduction starts from 1.
  std::set<int> seen;
  for (const ir::Computation& c : p.computations) {
    if (seen.insert(c.lhs.buffer_id).second && c.reduce == ir::ReduceOp::Product)
      impl->buffer_init[impl->slot_of[c.lhs.buffer_id]] = 1.0;
  }

  PlanBuilder builder{p, *impl};
  builder.emit_node(ir::derive_tree(p), 0, strides, 1);

  ExecutionPlan plan;
  plan.impl_ = std::move(impl);
  return plan;
}

std::int64_t ExecutionPlan::loop_iteration_count(const std::string& iterator) const {
  std::int64_t total = 0;
  for (const LoopInfo& l : impl_->loops)
    if (l.iterator == iterator) total += l.dynamic_iterations;
  return total;
}

std::int64_t ExecutionPlan::instruction_count() const {
  return static_cast<std::int64_t>(impl_->code.size());
}

// --- worker pool ------------------------------------------------------------

struct Executor::PoolImpl {
  std::vector<std::thread> threads;
  std::mutex mu;
  std::condition_variable cv_work, cv_done;
  std::function<void(int)> job;
  int job_chunks = 0;
  int next_chunk = 0;
  int active = 0;
  std::uint64_t generation = 0;
  bool stop = false;
  int workers = 1;

  explicit PoolImpl(int n) : workers(n) {
    for (int i = 0; i + 1 < n; ++i)
      threads.emplace_back([this] { worker_loop(); });
  }

  ~PoolImpl() {
    {
      std::lock_guard<std::mutex> lock(mu);
      stop = true;
    }
    cv_work.notify_all();
    for (std::thread& t : threads) t.join();
  }

  void worker_loop() {
    std::uint64_t last_gen = 0;
    while (true) {
      std::function<void(int)> fn;
      {
        std::unique_lock<std::mutex> lock(mu);
        cv_work.wait(lock, [&] { return stop || generation != last_gen; });
        if (stop) return;
        last_gen = generation;
        fn = job;
      }
      work(fn);
    }
  }

  void work(const std::function<void(int)>& fn) {
    while (true) {
      int chunk;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next_chunk >= job_chunks) break;
        chunk = next_chunk++;
      }
      fn(chunk);
    }
    std::lock_guard<std::mutex> lock(mu);
    if (--active == 0) cv_done.notify_all();
  }

  void run(int chunks, const std::function<void(int)>& fn) {
    {
      std::lock_guard<std::mutex> lock(mu);
      job = fn;
      job_chunks = chunks;
      next_chunk = 0;
      active = static_cast<int>(threads.size()) + 1;
      ++generation;
    }
    cv_work.notify_all();
    work(fn);  // the calling thread participates
    std::unique_lock<std::mutex> lock(mu);
    cv_done.wait(lock, [&] { return active == 0; });
  }
};

Executor::Executor(int workers) {
  int n = workers;
  if (n <= 0) {
    if (const char* env = std::getenv("TINYSCHED_WORKERS")) n = std::atoi(env);
    if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
    if (n <= 0) n = 1;
  }
  pool_ = std::make_unique<PoolImpl>(n);
}

Executor::~Executor() = default;

int Executor::workers() const {
  return pool_->workers;
}

// --- interpreter ------------------------------------------------------------

namespace {

constexpr int kMaxRegs = 16;
constexpr int kMaxStack = 64;

struct Frame {
  std::int64_t regs[kMaxRegs];
  double stack[kMaxStack];
};

// Executes code[pc_begin, pc_end); `bounds` overrides the first parallel
// loop's range when a worker owns a sub-range.
void interpret(const ExecutionPlan::Impl& impl, std::vector<Eigen::VectorXd>& bufs, int pc_begin,
               int pc_end, Frame& f, int override_loop, std::int64_t lo, std::int64_t hi,
               Executor::PoolImpl* pool) {
  const Instr* code = impl.code.data();
  int sp = 0;
  int pc = pc_begin;
  while (pc < pc_end) {
    const Instr& in = code[pc];
    switch (in.op) {
      case OpCode::LoopOpen: {
        const LoopInfo& l = impl.loops[in.arg];
        std::int64_t from = l.lower, to = l.upper;
        if (in.arg == override_loop) {
          from = lo;
          to = hi;
        } else if (l.parallel && pool && pool->workers > 1) {
          // Split this loop across the pool; workers run the enclosed segment.
          const std::int64_t extent = l.upper - l.lower;
          const int chunks = static_cast<int>(
              std::min<std::int64_t>(pool->workers, extent));
          const Frame snapshot = f;
          pool->run(chunks, [&, chunks](int chunk) {
            const std::int64_t begin = l.lower + extent * chunk / chunks;
            const std::int64_t end = l.lower + extent * (chunk + 1) / chunks;
            if (begin >= end) return;
            Frame wf = snapshot;
            interpret(impl, bufs, l.open_pc, l.close_pc + 1, wf, in.arg, begin, end, nullptr);
          });
          pc = l.close_pc + 1;
          continue;
        }
        if (from >= to) {  // extents are >= 1, ranges may be empty only here
          pc = l.close_pc + 1;
          continue;
        }
        f.regs[l.reg] = from;
        ++pc;
        break;
      }
      case OpCode::LoopClose: {
        const LoopInfo& l = impl.loops[in.arg];
        const std::int64_t limit = (in.arg == override_loop) ? hi : l.upper;
        if (++f.regs[l.reg] < limit)
          pc = l.open_pc + 1;
        else
          ++pc;
        break;
      }
      case OpCode::PushConst:
        f.stack[sp++] = in.imm;
        ++pc;
        break;
      case OpCode::Load: {
        const AccessRef& ar = impl.accesses[in.arg];
        std::int64_t addr = ar.const_off;
        const AccessTerm* t = impl.terms.data() + ar.term_begin;
        for (int i = 0; i < ar.term_count; ++i) addr += t[i].weight * f.regs[t[i].reg];
        f.stack[sp++] = bufs[ar.buffer_slot][addr];
        ++pc;
        break;
      }
      case OpCode::Add:
        --sp;
        f.stack[sp - 1] += f.stack[sp];
        ++pc;
        break;
      case OpCode::Sub:
        --sp;
        f.stack[sp - 1] -= f.stack[sp];
        ++pc;
        break;
      case OpCode::Mul:
        --sp;
        f.stack[sp - 1] *= f.stack[sp];
        ++pc;
        break;
      case OpCode::Div:
        --sp;
        if (f.stack[sp] == 0.0) throw DivisionByZero("division by zero");
        f.stack[sp - 1] /= f.stack[sp];
        ++pc;
        break;
      case OpCode::StoreAssign:
      case OpCode::StoreAdd:
      case OpCode::StoreMul: {
        const AccessRef& ar = impl.accesses[in.arg];
        std::int64_t addr = ar.const_off;
        const AccessTerm* t = impl.terms.data() + ar.term_begin;
        for (int i = 0; i < ar.term_count; ++i) addr += t[i].weight * f.regs[t[i].reg];
        double& cell = bufs[ar.buffer_slot][addr];
        const double v = f.stack[--sp];
        if (in.op == OpCode::StoreAssign)
          cell = v;
        else if (in.op == OpCode::StoreAdd)
          cell += v;
        else
          cell *= v;
        ++pc;
        break;
      }
    }
  }
}

std::vector<Eigen::VectorXd> prepare_buffers(const ExecutionPlan::Impl& impl,
                                             const BufferSet& inputs) {
  std::vector<Eigen::VectorXd> bufs(impl.buffers.size());
  for (std::size_t s = 0; s < impl.buffers.size(); ++s) {
    const ir::Buffer& b = impl.buffers[s];
    if (impl.buffer_is_input[s]) {
      auto it = inputs.find(b.id);
      if (it == inputs.end())
        throw ShapeMismatch("missing input buffer " + std::to_string(b.id));
      if (it->second.size() != b.element_count())
        throw ShapeMismatch("input buffer " + std::to_string(b.id) + " has wrong size");
      bufs[s] = it->second;
    } else {
      bufs[s] = Eigen::VectorXd::Constant(b.element_count(), impl.buffer_init[s]);
    }
  }
  return bufs;
}

BufferSet collect_outputs(const ExecutionPlan::Impl& impl,
                          const std::vector<Eigen::VectorXd>& bufs) {
  BufferSet out;
  for (std::size_t s = 0; s < impl.buffers.size(); ++s)
    if (!impl.buffer_is_input[s]) out[impl.buffers[s].id] = bufs[s];
  return out;
}

}  // namespace

BufferSet Executor::run(const ExecutionPlan& plan, const BufferSet& inputs) const {
  const ExecutionPlan::Impl& impl = *plan.impl_;
  std::vector<Eigen::VectorXd> bufs = prepare_buffers(impl, inputs);
  Frame f{};
  interpret(impl, bufs, 0, static_cast<int>(impl.code.size()), f, -1, 0, 0, pool_.get());
  return collect_outputs(impl, bufs);
}

BufferSet Executor::run(const ir::Program& p, const BufferSet& inputs) const {
  return run(ExecutionPlan::compile(p), inputs);
}

Measurement Executor::measure(const ir::Program& p, const BufferSet& inputs, int runs) const {
  if (runs < 1) throw std::invalid_argument("runs must be >= 1");
  const ExecutionPlan plan = ExecutionPlan::compile(p);
  const ExecutionPlan::Impl& impl = *plan.impl_;

  Measurement m;
  m.runs = runs;
  for (int r = 0; r < runs + 1; ++r) {  // first run warms up and is discarded
    std::vector<Eigen::VectorXd> bufs = prepare_buffers(impl, inputs);
    const auto t0 = std::chrono::steady_clock::now();
    Frame f{};
    interpret(impl, bufs, 0, static_cast<int>(impl.code.size()), f, -1, 0, 0, pool_.get());
    const auto t1 = std::chrono::steady_clock::now();
    if (r > 0)
      m.times_ns.push_back(
          std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
  }
  std::vector<std::int64_t> sorted = m.times_ns;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  m.median_ns = (n % 2 == 1) ? sorted[n / 2] : (sorted[n / 2 - 1] + sorted[n / 2]) / 2;
  return m;
}

std::int64_t Executor::deterministic_cost(const ExecutionPlan& plan) const {
  const ExecutionPlan::Impl& impl = *plan.impl_;
  std::int64_t cost = 0;
  std::vector<std::int64_t> last_addr(impl.buffers.size(), -1);
  std::int64_t regs[kMaxRegs] = {0};

  const Instr* code = impl.code.data();
  const int end = static_cast<int>(impl.code.size());
  int pc = 0;
  while (pc < end) {
    const Instr& in = code[pc];
    ++cost;
    switch (in.op) {
      case OpCode::LoopOpen: {
        const LoopInfo& l = impl.loops[in.arg];
        regs[l.reg] = l.lower;
        ++pc;
        break;
      }
      case OpCode::LoopClose: {
        const LoopInfo& l = impl.loops[in.arg];
        if (++regs[l.reg] < l.upper)
          pc = l.open_pc + 1;
        else
          ++pc;
        break;
      }
      case OpCode::Load:
      case OpCode::StoreAssign:
      case OpCode::StoreAdd:
      case OpCode::StoreMul: {
        const AccessRef& ar = impl.accesses[in.arg];
        std::int64_t addr = ar.const_off;
        const AccessTerm* t = impl.terms.data() + ar.term_begin;
        for (int i = 0; i < ar.term_count; ++i) addr += t[i].weight * regs[t[i].reg];
        const std::int64_t delta = std::abs(addr - last_addr[ar.buffer_slot]);
        if (delta > 64)
          cost += 7;
        else if (delta > 1)
          cost += 1;
        last_addr[ar.buffer_slot] = addr;
        ++pc;
        break;
      }
      default:
        ++pc;
        break;
    }
  }
  return cost;
}

std::int64_t Executor::deterministic_cost(const ir::Program& p) const {
  return deterministic_cost(ExecutionPlan::compile(p));
}

BufferSet random_inputs(const ir::Program& p, std::uint64_t seed) {
  BufferSet out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(1.0, 2.0);
  for (const ir::Buffer& b : p.buffers) {
    if (b.kind != ir::BufferKind::Input) continue;
    Eigen::VectorXd v(b.element_count());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = dist(rng);
    out[b.id] = std::move(v);
  }
  return out;
}

bool Executor::equivalent(const ir::Program& a, const ir::Program& b, int trials,
                          std::uint64_t seed) const {
  const auto signature = [](const ir::Program& p, ir::BufferKind kind) {
    std::map<int, std::vector<std::int64_t>> sig;
    for (const ir::Buffer& buf : p.buffers)
      if (buf.kind == kind) sig[buf.id] = buf.dim_sizes;
    return sig;
  };
  if (signature(a, ir::BufferKind::Input) != signature(b, ir::BufferKind::Input) ||
      signature(a, ir::BufferKind::Output) != signature(b, ir::BufferKind::Output))
    throw SignatureMismatch("programs do not share buffer signatures");

  const ExecutionPlan plan_a = ExecutionPlan::compile(a);
  const ExecutionPlan plan_b = ExecutionPlan::compile(b);
  for (int t = 0; t < trials; ++t) {
    const BufferSet inputs = random_inputs(a, seed + static_cast<std::uint64_t>(t));
    const BufferSet out_a = run(plan_a, inputs);
    const BufferSet out_b = run(plan_b, inputs);
    for (const auto& [id, va] : out_a) {
      auto it = out_b.find(id);
      if (it == out_b.end()) return false;
      const Eigen::VectorXd& vb = it->second;
      if (va.size() != vb.size()) return false;
      for (Eigen::Index i = 0; i < va.size(); ++i) {
        const double diff = std::abs(va[i] - vb[i]);
        const double scale = std::max(std::abs(va[i]), std::abs(vb[i]));
        if (diff > 1e-9 * scale) return false;
      }
    }
  }
  return true;
}

}  // namespace tinysched::exec
