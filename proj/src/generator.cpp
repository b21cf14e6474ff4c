#include "tinysched/generator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

namespace tinysched::generator {

using ir::AccessMatrix;
using ir::Buffer;
using ir::BufferKind;
using ir::Computation;
using ir::Expr;
using ir::Loop;
using ir::OpKind;
using ir::Program;
using ir::ReduceOp;

bool GeneratorConfig::valid() const {
  if (max_computations < 1) return false;
  if (min_depth < 1 || max_depth > ir::kMaxDepth || min_depth > max_depth) return false;
  if (extent_choices.empty() || inner_extents.empty()) return false;
  const double wsum = weight_simple + weight_stencil + weight_reduction;
  if (weight_simple < 0 || weight_stencil < 0 || weight_reduction < 0 || wsum <= 0) return false;
  if (schedules_per_program < 1) return false;
  return min_iterations >= 1 && max_iterations >= min_iterations;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

constexpr int kInputPad = 4;    // stencil halo on every input dimension
constexpr int kInputShift = 2;  // keeps offset reads of {-2..2} in bounds
constexpr double kLogMagCap = 150.0;  // log10 bound before operand rejection

// Raw-draw helpers so generation stays bit-stable across standard libraries.
struct Rand {
  std::mt19937_64 rng;
  explicit Rand(std::uint64_t seed) : rng(seed) {}
  std::uint64_t u64() { return rng(); }
  std::int64_t below(std::int64_t n) { return static_cast<std::int64_t>(u64() % n); }
  double unit() { return static_cast<double>(u64() >> 11) * 0x1.0p-53; }
  bool chance(double p) { return unit() < p; }
  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<std::size_t>(below(static_cast<std::int64_t>(v.size())))];
  }
};

enum class Pattern { Simple, Stencil, Reduction };

struct BufferInfo {
  double log_mag = std::log10(2.0);  // |value| upper bound, log10
  bool positive = true;
  int writer = -1;  // computation index, -1 for inputs
};

struct Builder {
  const GeneratorConfig& cfg;
  Rand rnd;
  Program prog;
  std::map<int, BufferInfo> info;
  std::set<int> read_later;  // buffers consumed by some computation
  int next_buffer = 0;
  int next_comp = 0;
  int next_iter = 0;

  Builder(const GeneratorConfig& c, std::uint64_t seed) : cfg(c), rnd(seed) {}

  std::string fresh_iter() { return "i" + std::to_string(next_iter++); }

  Pattern draw_pattern() {
    const double total = cfg.weight_simple + cfg.weight_stencil + cfg.weight_reduction;
    const double x = rnd.unit() * total;
    if (x < cfg.weight_simple) return Pattern::Simple;
    if (x < cfg.weight_simple + cfg.weight_stencil) return Pattern::Stencil;
    return Pattern::Reduction;
  }

  std::int64_t product(const std::vector<Loop>& loops) {
    std::int64_t p = 1;
    for (const Loop& l : loops) p *= l.extent();
    return p;
  }

  // Draws a fresh loop whose extent respects the remaining iteration budget.
  Loop draw_loop(int level, std::int64_t budget_left, int levels_left) {
    const std::vector<std::int64_t>& menu = level < 3 ? cfg.extent_choices : cfg.inner_extents;
    std::int64_t reserve = 1;
    for (int i = 1; i < levels_left; ++i) reserve *= 2;  // leave room for extent-2 loops
    std::vector<std::int64_t> fits;
    for (std::int64_t e : menu)
      if (e <= budget_left / reserve) fits.push_back(e);
    if (fits.empty()) fits.push_back(*std::min_element(menu.begin(), menu.end()));
    return Loop{fresh_iter(), 0, rnd.pick(fits), false, false};
  }

  // Scale the outermost loop up until the nest reaches the minimum budget.
  void enforce_min_budget(std::vector<Loop>& loops, int first_private) {
    if (first_private >= static_cast<int>(loops.size())) return;
    while (product(loops) < cfg.min_iterations) {
      Loop& l = loops[first_private];
      auto it = std::upper_bound(cfg.extent_choices.begin(), cfg.extent_choices.end(), l.extent());
      if (it == cfg.extent_choices.end()) break;
      l.upper = *it;
    }
  }

  // Input buffer padded on every dimension; reads are shifted by kInputShift.
  int make_input(const std::vector<std::int64_t>& dims) {
    Buffer b;
    b.id = next_buffer++;
    b.kind = BufferKind::Input;
    for (std::int64_t d : dims) b.dim_sizes.push_back(d + kInputPad);
    prog.buffers.push_back(b);
    info[b.id] = BufferInfo{};
    return b.id;
  }

  // Reuses an existing input with matching padded dims half the time.
  int input_for(const std::vector<std::int64_t>& dims) {
    std::vector<int> matches;
    for (const Buffer& b : prog.buffers) {
      if (b.kind != BufferKind::Input) continue;
      if (static_cast<int>(b.dim_sizes.size()) != static_cast<int>(dims.size())) continue;
      bool ok = true;
      for (std::size_t d = 0; d < dims.size(); ++d)
        if (b.dim_sizes[d] != dims[d] + kInputPad) ok = false;
      if (ok) matches.push_back(b.id);
    }
    if (!matches.empty() && rnd.chance(0.5)) return rnd.pick(matches);
    return make_input(dims);
  }

  // Identity-with-shift read of an input over `iters` (loop positions),
  // optionally offset for stencil taps.
  Expr input_read(const std::vector<Loop>& loops, const std::vector<int>& iters, int buffer_id,
                  const std::vector<int>& offsets) {
    AccessMatrix m;
    m.buffer_id = buffer_id;
    const int n = static_cast<int>(loops.size());
    m.coeffs = Eigen::MatrixXi::Zero(static_cast<int>(iters.size()), n + 1);
    for (std::size_t d = 0; d < iters.size(); ++d) {
      m.coeffs(static_cast<int>(d), iters[d]) = 1;
      m.coeffs(static_cast<int>(d), n) = kInputShift + offsets[d];
    }
    return Expr::load(m);
  }

  // Selects which loop positions index a rank-k input read.
  std::vector<int> select_iters(int depth, int k) {
    std::vector<int> all(depth);
    for (int i = 0; i < depth; ++i) all[i] = i;
    // Drop random levels until k remain, then sometimes permute a pair for
    // transposed-style accesses.
    while (static_cast<int>(all.size()) > k)
      all.erase(all.begin() + rnd.below(static_cast<std::int64_t>(all.size())));
    if (all.size() >= 2 && rnd.chance(0.3)) {
      const int a = static_cast<int>(rnd.below(static_cast<std::int64_t>(all.size())));
      int b = static_cast<int>(rnd.below(static_cast<std::int64_t>(all.size())));
      if (a != b) std::swap(all[a], all[b]);
    }
    return all;
  }

  std::vector<std::int64_t> dims_of(const std::vector<Loop>& loops, const std::vector<int>& iters) {
    std::vector<std::int64_t> out;
    for (int q : iters) out.push_back(loops[q].extent());
    return out;
  }

  double read_log_mag(const Expr& e) {
    double m = 0;
    for (const AccessMatrix* a : ir::loads_of(e)) m = std::max(m, info[a->buffer_id].log_mag);
    return m;
  }
};

struct RhsResult {
  Expr expr;
  double log_mag;
  bool positive;
};

// Combines operand expressions left to right with the allowed operators.
RhsResult combine(Builder& b, std::vector<RhsResult> operands, bool allow_sub) {
  RhsResult acc = operands[0];
  for (std::size_t i = 1; i < operands.size(); ++i) {
    const RhsResult& rhs = operands[i];
    std::vector<OpKind> ops = {OpKind::Add, OpKind::Mul};
    if (allow_sub) ops.push_back(OpKind::Sub);
    OpKind op = ops[static_cast<std::size_t>(b.rnd.below(static_cast<std::int64_t>(ops.size())))];
    if (op == OpKind::Mul && acc.log_mag + rhs.log_mag > kLogMagCap) op = OpKind::Add;
    acc.expr = Expr::binary(op, acc.expr, rhs.expr);
    switch (op) {
      case OpKind::Add:
        acc.log_mag = std::max(acc.log_mag, rhs.log_mag) + std::log10(2.0);
        acc.positive = acc.positive && rhs.positive;
        break;
      case OpKind::Sub:
        acc.log_mag = std::max(acc.log_mag, rhs.log_mag) + std::log10(2.0);
        acc.positive = false;
        break;
      case OpKind::Mul:
        acc.log_mag += rhs.log_mag;
        acc.positive = acc.positive && rhs.positive;
        break;
      case OpKind::Div:
        break;
    }
  }
  // Occasional scale by a positive constant.
  if (b.rnd.chance(0.35)) {
    const double c = static_cast<double>(2 + b.rnd.below(7));
    if (b.rnd.chance(0.5)) {
      acc.expr = Expr::binary(OpKind::Div, acc.expr, Expr::make_constant(c));
      acc.log_mag -= std::log10(c);
    } else {
      acc.expr = Expr::binary(OpKind::Mul, acc.expr, Expr::make_constant(c));
      acc.log_mag += std::log10(c);
    }
  }
  return acc;
}

void build_computation(Builder& b, Pattern pattern) {
  const bool is_reduction = pattern == Pattern::Reduction;
  const Computation* prev =
      b.prog.computations.empty() ? nullptr : &b.prog.computations.back();

  // A reduction may consume the previous computation's output; other
  // patterns may consume any earlier positive or sign-free output.
  int consumed_buffer = -1;
  if (is_reduction && prev && b.rnd.chance(b.cfg.combination_probability)) {
    const int candidate = prev->lhs.buffer_id;
    if (b.info[candidate].positive && b.prog.find_buffer(candidate)->rank() >= 2)
      consumed_buffer = candidate;
  }
  if (consumed_buffer < 0 && !b.prog.computations.empty() && b.rnd.chance(0.45)) {
    std::vector<int> candidates;
    for (const Computation& c : b.prog.computations) {
      const int id = c.lhs.buffer_id;
      const bool needs_positive = is_reduction;
      if (needs_positive && !b.info[id].positive) continue;
      if (is_reduction && b.prog.find_buffer(id)->rank() < 2) continue;
      candidates.push_back(id);
    }
    if (!candidates.empty()) consumed_buffer = b.rnd.pick(candidates);
  }
  if (pattern == Pattern::Stencil) consumed_buffer = -1;  // stencils read padded inputs

  std::vector<Loop> loops;
  int n_red = 0;

  if (consumed_buffer >= 0) {
    // Adopt the producer's dims; optionally share outer loops when adjacent.
    const Buffer* src = b.prog.find_buffer(consumed_buffer);
    const int kb = src->rank();
    int shared = 0;
    if (prev && b.info[consumed_buffer].writer ==
                    static_cast<int>(b.prog.computations.size()) - 1 &&
        b.rnd.chance(b.cfg.share_probability)) {
      const int prev_nonred = prev->lhs.rank();
      shared = 1 + static_cast<int>(b.rnd.below(std::min({2, kb, prev_nonred})));
    }
    if (is_reduction) {
      const int max_red = std::min<int>(3, kb - std::max(shared, 1));
      if (max_red < 1) {
        n_red = 0;
      } else {
        n_red = 1 + static_cast<int>(b.rnd.below(max_red));
      }
    }
    for (int d = 0; d < kb; ++d) {
      if (d < shared) {
        loops.push_back(prev->loops[d]);
      } else {
        loops.push_back(Loop{b.fresh_iter(), 0, src->dim_sizes[d], d >= kb - n_red, false});
      }
    }
  } else {
    // Fresh nest within the iteration budget.
    int depth;
    if (is_reduction) {
      depth = b.cfg.min_depth +
              static_cast<int>(b.rnd.below(b.cfg.max_depth - b.cfg.min_depth + 1));
      depth = std::max(depth, 2);
      const int lo = std::max(1, depth - ir::kMaxRank);
      const int hi = std::min(3, depth - 1);
      n_red = lo + static_cast<int>(b.rnd.below(hi - lo + 1));
    } else {
      const int cap = std::min(b.cfg.max_depth, ir::kMaxRank);
      depth = std::min(b.cfg.min_depth, cap) +
              static_cast<int>(b.rnd.below(cap - std::min(b.cfg.min_depth, cap) + 1));
    }

    int shared = 0;
    if (prev && b.rnd.chance(b.cfg.share_probability * 0.5)) {
      const int prev_nonred = prev->lhs.rank();
      const int most = std::min({2, depth - 1, prev_nonred});
      if (most >= 1) shared = 1 + static_cast<int>(b.rnd.below(most));
    }
    std::int64_t budget = b.cfg.max_iterations;
    for (int d = 0; d < shared; ++d) {
      loops.push_back(prev->loops[d]);
      budget = std::max<std::int64_t>(1, budget / prev->loops[d].extent());
    }
    for (int d = shared; d < depth; ++d) {
      Loop l = b.draw_loop(d, budget, depth - d);
      l.is_reduction_dim = d >= depth - n_red;
      budget = std::max<std::int64_t>(1, budget / l.extent());
      loops.push_back(l);
    }
    b.enforce_min_budget(loops, shared);
  }

  const int depth = static_cast<int>(loops.size());
  const int rank = depth - n_red;

  // Right-hand side.
  std::vector<RhsResult> operands;
  if (consumed_buffer >= 0) {
    AccessMatrix m;
    m.buffer_id = consumed_buffer;
    m.coeffs = Eigen::MatrixXi::Zero(b.prog.find_buffer(consumed_buffer)->rank(), depth + 1);
    for (int d = 0; d < m.rank(); ++d) m.coeffs(d, d) = 1;
    operands.push_back({Expr::load(m), b.info[consumed_buffer].log_mag,
                        b.info[consumed_buffer].positive});
    b.read_later.insert(consumed_buffer);
  }

  if (pattern == Pattern::Stencil) {
    // Several taps of one padded input, distinct constant offsets.
    const int kr = 1 + static_cast<int>(b.rnd.below(std::min(depth, ir::kMaxRank)));
    const std::vector<int> iters = b.select_iters(depth, kr);
    const int input = b.input_for(b.dims_of(loops, iters));
    const int taps = 2 + static_cast<int>(b.rnd.below(2));
    std::set<std::vector<int>> used;
    for (int t = 0; t < taps; ++t) {
      std::vector<int> offsets(iters.size());
      do {
        for (auto& o : offsets) o = static_cast<int>(b.rnd.below(5)) - 2;
      } while (used.count(offsets));
      used.insert(offsets);
      operands.push_back({b.input_read(loops, iters, input, offsets), std::log10(2.0), true});
    }
  } else {
    const int extra = operands.empty()
                          ? 1 + static_cast<int>(b.rnd.below(2))
                          : static_cast<int>(b.rnd.below(2));
    for (int t = 0; t < extra; ++t) {
      const int kr = 1 + static_cast<int>(b.rnd.below(std::min(depth, ir::kMaxRank)));
      const std::vector<int> iters = b.select_iters(depth, kr);
      const int input = b.input_for(b.dims_of(loops, iters));
      operands.push_back(
          {b.input_read(loops, iters, input, std::vector<int>(iters.size(), 0)),
           std::log10(2.0), true});
    }
  }

  // Product reductions stay on small domains over raw inputs so values keep
  // clear of overflow even after reassociation.
  ReduceOp reduce = ReduceOp::None;
  if (is_reduction && n_red > 0) {
    std::int64_t red_iters = 1;
    for (int d = rank; d < depth; ++d) red_iters *= loops[d].extent();
    const bool inputs_only = consumed_buffer < 0;
    if (inputs_only && red_iters <= 64 && b.rnd.chance(0.2))
      reduce = ReduceOp::Product;
    else
      reduce = ReduceOp::Sum;
  }

  const bool allow_sub = reduce == ReduceOp::None;
  RhsResult rhs = combine(b, operands, allow_sub);

  // Output buffer: identity over the non-reduction prefix.
  Buffer out;
  out.id = b.next_buffer++;
  out.kind = BufferKind::Intermediate;
  for (int d = 0; d < rank; ++d) out.dim_sizes.push_back(loops[d].extent());
  b.prog.buffers.push_back(out);

  double out_mag = rhs.log_mag;
  if (reduce == ReduceOp::Sum) {
    std::int64_t red_iters = 1;
    for (int d = rank; d < depth; ++d) red_iters *= loops[d].extent();
    out_mag += std::log10(static_cast<double>(red_iters));
  } else if (reduce == ReduceOp::Product) {
    std::int64_t red_iters = 1;
    for (int d = rank; d < depth; ++d) red_iters *= loops[d].extent();
    out_mag *= static_cast<double>(red_iters);
  }
  b.info[out.id] = BufferInfo{out_mag, rhs.positive,
                              static_cast<int>(b.prog.computations.size())};

  Computation comp;
  comp.id = b.next_comp++;
  comp.loops = std::move(loops);
  comp.reduce = reduce;
  comp.rhs = std::move(rhs.expr);
  comp.lhs.buffer_id = out.id;
  comp.lhs.coeffs = Eigen::MatrixXi::Zero(rank, depth + 1);
  for (int d = 0; d < rank; ++d) comp.lhs.coeffs(d, d) = 1;
  b.prog.computations.push_back(std::move(comp));
}

}  // namespace

ir::Program generate_program(const GeneratorConfig& cfg) {
  Builder b(cfg, derive_seed(cfg.seed, 0));
  const int n_comps = 1 + static_cast<int>(b.rnd.below(cfg.max_computations));
  for (int k = 0; k < n_comps; ++k) build_computation(b, b.draw_pattern());

  // Buffers nobody reads downstream are the program outputs.
  for (Buffer& buf : b.prog.buffers) {
    if (buf.kind == BufferKind::Input) continue;
    buf.kind = b.read_later.count(buf.id) ? BufferKind::Intermediate : BufferKind::Output;
  }
  return b.prog;
}

std::vector<transforms::Schedule> generate_schedules(const ir::Program& p,
                                                     const GeneratorConfig& cfg) {
  // Seed from (config, program) so the result is a pure function of both.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : ir::to_json(p).dump()) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
  Rand rnd(derive_seed(cfg.seed ^ h, 1));

  const auto draw = [&] {
    transforms::Schedule s;
    for (transforms::Stage stage = transforms::Stage::Fusion; stage != transforms::Stage::Done;
         stage = transforms::next_stage(stage)) {
      if (!rnd.chance(0.5)) continue;
      const std::vector<transforms::Action> menu =
          transforms::enumerate_stage_actions(p, s, stage);
      if (menu.empty()) continue;
      s.actions.push_back(
          menu[static_cast<std::size_t>(rnd.below(static_cast<std::int64_t>(menu.size())))]);
    }
    return s;
  };

  std::vector<transforms::Schedule> out;
  std::set<std::string> seen;
  out.push_back({});  // the empty schedule anchors speedup 1
  seen.insert(transforms::to_json(out.back()).dump());

  while (static_cast<int>(out.size()) < cfg.schedules_per_program) {
    transforms::Schedule s = draw();
    // Retry duplicates a few times; tiny spaces may still repeat.
    for (int attempt = 0; attempt < 8 && seen.count(transforms::to_json(s).dump()); ++attempt)
      s = draw();
    seen.insert(transforms::to_json(s).dump());
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace tinysched::generator
