#include "tinysched/transforms.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

namespace tinysched::transforms {

using ir::AccessMatrix;
using ir::Computation;
using ir::Program;
using nlohmann::json;

int stage_of(const Action& a) {
  return static_cast<int>(a.index());
}

std::string to_string(const Action& a) {
  std::ostringstream os;
  if (const auto* f = std::get_if<Fusion>(&a))
    os << "fusion(" << f->comp_a << "," << f->comp_b << ",l" << f->level << ")";
  else if (const auto* i = std::get_if<Interchange>(&a))
    os << "interchange(" << i->comp << ",l" << i->level_i << ",l" << i->level_j << ")";
  else if (const auto* t = std::get_if<Tiling>(&a))
    os << "tiling(" << t->comp << ",l" << t->level_y << ",l" << t->level_x << "," << t->tile_y
       << "x" << t->tile_x << ")";
  else if (const auto* u = std::get_if<Unrolling>(&a))
    os << "unrolling(" << u->comp << "," << u->factor << ")";
  else if (const auto* pz = std::get_if<Parallelize>(&a))
    os << "parallelize(" << pz->comp << ",l" << pz->level << ")";
  return os.str();
}

bool operator==(const Action& a, const Action& b) {
  return to_string(a) == to_string(b);
}

Schedule Schedule::with(const Action& a) const {
  Schedule out = *this;
  out.actions.push_back(a);
  return out;
}

bool operator==(const Schedule& a, const Schedule& b) {
  if (a.actions.size() != b.actions.size()) return false;
  for (std::size_t i = 0; i < a.actions.size(); ++i)
    if (!(a.actions[i] == b.actions[i])) return false;
  return true;
}

namespace {

// Tracks where each original loop level of each computation currently sits.
struct ApplyState {
  // keyed by computation id; value[orig_level] = current position
  std::map<int, std::vector<int>> level_map;
  int next_id = 0;

  void init(const Program& p) {
    for (const Computation& c : p.computations) {
      std::vector<int> ident(c.loops.size());
      for (std::size_t i = 0; i < ident.size(); ++i) ident[i] = static_cast<int>(i);
      level_map[c.id] = std::move(ident);
      next_id = std::max(next_id, c.id + 1);
    }
  }
};

bool unit_row(const Eigen::MatrixXi& m, int row, int col) {
  for (int c = 0; c < m.cols(); ++c) {
    const int want = (c == col) ? 1 : 0;
    if (m(row, c) != want) return false;
  }
  return true;
}

// Number of levels `comp` currently shares with either neighbour.
int shared_depth(const Program& p, int comp_index) {
  int s = 0;
  if (comp_index > 0)
    s = std::max(s, ir::shared_prefix(p.computations[comp_index - 1], p.computations[comp_index]));
  if (comp_index + 1 < static_cast<int>(p.computations.size()))
    s = std::max(s, ir::shared_prefix(p.computations[comp_index], p.computations[comp_index + 1]));
  return s;
}

// Maximal run of computations ending at `last` that all share at least
// `depth` loop levels with their successor in the run.
std::vector<int> nest_group_ending_at(const Program& p, int last, int depth) {
  std::vector<int> group{last};
  for (int i = last - 1; i >= 0; --i) {
    if (ir::shared_prefix(p.computations[i], p.computations[i + 1]) >= depth)
      group.push_back(i);
    else
      break;
  }
  std::reverse(group.begin(), group.end());
  return group;
}

// Contiguous run of computations whose loop at `pos` carries `name`.
std::vector<int> comps_sharing_loop(const Program& p, int comp_index, int pos,
                                    const std::string& name) {
  std::vector<int> group{comp_index};
  for (int i = comp_index - 1; i >= 0; --i) {
    const Computation& c = p.computations[i];
    if (pos < c.depth() && c.loops[pos].iterator == name)
      group.insert(group.begin(), i);
    else
      break;
  }
  for (int i = comp_index + 1; i < static_cast<int>(p.computations.size()); ++i) {
    const Computation& c = p.computations[i];
    if (pos < c.depth() && c.loops[pos].iterator == name)
      group.push_back(i);
    else
      break;
  }
  return group;
}

bool self_reads_safe(const Computation& c) {
  for (const AccessMatrix* read : ir::loads_of(c.rhs)) {
    if (read->buffer_id != c.lhs.buffer_id) continue;
    if (read->coeffs != c.lhs.coeffs) return false;  // nonzero dependence distance
  }
  return true;
}

bool identity_map(const std::vector<int>& m) {
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i] != static_cast<int>(i)) return false;
  return true;
}

bool check_fusion(const Program& p, const ApplyState& st, const Fusion& f) {
  const int ia = p.computation_index(f.comp_a);
  const int ib = p.computation_index(f.comp_b);
  if (ia < 0 || ib < 0 || ib != ia + 1) return false;
  const Computation& a = p.computations[ia];
  const Computation& b = p.computations[ib];
  if (!identity_map(st.level_map.at(a.id)) || !identity_map(st.level_map.at(b.id))) return false;
  if (f.level < 0 || f.level >= std::min(a.depth(), b.depth())) return false;
  if (ir::shared_prefix(a, b) > f.level) return false;  // nothing new to fuse
  for (int d = 0; d <= f.level; ++d) {
    if (a.loops[d].lower != b.loops[d].lower) return false;
    if (a.loops[d].upper != b.loops[d].upper) return false;
  }

  // b must not write a buffer anyone in the nest reads or writes, and reads
  // of in-nest producers must hit exactly the current fused indices.
  const std::vector<int> group = nest_group_ending_at(p, ia, f.level + 1);
  std::vector<int> members = group;
  if (members.empty() || members.back() != ia) members.push_back(ia);
  for (int gi : members) {
    const Computation& g = p.computations[gi];
    if (g.lhs.buffer_id == b.lhs.buffer_id) return false;
    for (const AccessMatrix* read : ir::loads_of(g.rhs))
      if (read->buffer_id == b.lhs.buffer_id) return false;
    for (const AccessMatrix* read : ir::loads_of(b.rhs)) {
      if (read->buffer_id != g.lhs.buffer_id) continue;
      if (f.level >= g.lhs.rank()) return false;  // would observe partial reductions
      for (int d = 0; d <= f.level; ++d) {
        if (!unit_row(g.lhs.coeffs, d, d)) return false;
        if (!unit_row(read->coeffs, d, d)) return false;
      }
    }
  }
  return true;
}

bool check_interchange(const Program& p, const ApplyState& st, const Interchange& x) {
  const int ic = p.computation_index(x.comp);
  if (ic < 0) return false;
  const Computation& c = p.computations[ic];
  const auto& map = st.level_map.at(c.id);
  if (x.level_i == x.level_j) return false;
  if (x.level_i < 0 || x.level_j < 0) return false;
  if (x.level_i >= static_cast<int>(map.size()) || x.level_j >= static_cast<int>(map.size()))
    return false;
  const int pi = map[x.level_i];
  const int pj = map[x.level_j];
  const int shared = shared_depth(p, ic);
  if (pi < shared || pj < shared) return false;
  return self_reads_safe(c);
}

bool check_tiling(const Program& p, const ApplyState& st, const Schedule& prefix,
                  const Tiling& t) {
  const int ic = p.computation_index(t.comp);
  if (ic < 0) return false;
  for (const Action& a : prefix.actions)
    if (const auto* prev = std::get_if<Tiling>(&a))
      if (prev->comp == t.comp) return false;
  const Computation& c = p.computations[ic];
  const auto& map = st.level_map.at(c.id);
  if (t.level_y < 0 || t.level_x != t.level_y + 1) return false;
  if (t.level_x >= static_cast<int>(map.size())) return false;
  const int py = map[t.level_y];
  const int px = map[t.level_x];
  // An earlier interchange may have swapped the pair; it must stay adjacent.
  if (std::max(py, px) != std::min(py, px) + 1) return false;
  const int shared = shared_depth(p, ic);
  if (std::min(py, px) < shared) return false;
  if (c.depth() + 2 > ir::kMaxDepth) return false;
  const auto in_menu = [](int v) {
    return std::find(kTileSizes.begin(), kTileSizes.end(), v) != kTileSizes.end();
  };
  if (!in_menu(t.tile_y) || !in_menu(t.tile_x)) return false;
  const ir::Loop& ly = c.loops[py];
  const ir::Loop& lx = c.loops[px];
  if (ly.lower != 0 || lx.lower != 0) return false;
  if (ly.extent() < t.tile_y || lx.extent() < t.tile_x) return false;
  if (ly.extent() % t.tile_y != 0 || lx.extent() % t.tile_x != 0) return false;
  return true;
}

bool check_unrolling(const Program& p, const ApplyState& st, const Schedule& prefix,
                     const Unrolling& u) {
  const int ic = p.computation_index(u.comp);
  if (ic < 0) return false;
  for (const Action& a : prefix.actions)
    if (const auto* prev = std::get_if<Unrolling>(&a))
      if (prev->comp == u.comp) return false;
  const Computation& c = p.computations[ic];
  const int inner = c.depth() - 1;
  if (inner < shared_depth(p, ic)) return false;
  if (std::find(kUnrollFactors.begin(), kUnrollFactors.end(), u.factor) == kUnrollFactors.end())
    return false;
  const ir::Loop& l = c.loops[inner];
  if (l.lower != 0) return false;
  if (l.extent() % u.factor != 0 || l.extent() / u.factor < 1) return false;
  (void)st;
  return true;
}

bool check_parallelize(const Program& p, const ApplyState& st, const Parallelize& z) {
  const int ic = p.computation_index(z.comp);
  if (ic < 0) return false;
  const Computation& c = p.computations[ic];
  const auto& map = st.level_map.at(c.id);
  if (z.level < 0 || z.level >= static_cast<int>(map.size())) return false;
  const int pos = map[z.level];
  const std::string name = c.loops[pos].iterator;

  const std::vector<int> group = comps_sharing_loop(p, ic, pos, name);
  for (int mi : group) {
    const Computation& m = p.computations[mi];
    int mpos = -1;
    for (int q = 0; q < m.depth(); ++q)
      if (m.loops[q].iterator == name) mpos = q;
    if (mpos < 0) return false;
    if (m.loops[mpos].is_reduction_dim) return false;
    if (!self_reads_safe(m)) return false;
    // The write must cover the parallel iterator injectively.
    int unit_dim = -1;
    for (int d = 0; d < m.lhs.rank(); ++d)
      if (unit_row(m.lhs.coeffs, d, mpos)) unit_dim = d;
    if (unit_dim < 0) return false;
    // Consumers inside the nest must read producers at the current index.
    for (int ci2 : group) {
      if (ci2 <= mi) continue;
      const Computation& consumer = p.computations[ci2];
      int cpos = -1;
      for (int q = 0; q < consumer.depth(); ++q)
        if (consumer.loops[q].iterator == name) cpos = q;
      for (const AccessMatrix* read : ir::loads_of(consumer.rhs)) {
        if (read->buffer_id != m.lhs.buffer_id) continue;
        if (cpos < 0 || !unit_row(read->coeffs, unit_dim, cpos)) return false;
      }
    }
  }
  return true;
}

void swap_columns(AccessMatrix& m, int a, int b) {
  m.coeffs.col(a).swap(m.coeffs.col(b));
}

void for_each_access(Computation& c, const std::function<void(AccessMatrix&)>& fn) {
  fn(c.lhs);
  const auto walk = [&](ir::Expr& e, const auto& self) -> void {
    if (e.kind == ir::Expr::Kind::Load) fn(e.access);
    for (ir::Expr& child : e.operands) self(child, self);
  };
  walk(c.rhs, walk);
}

void apply_fusion(Program& p, const Fusion& f) {
  const int ia = p.computation_index(f.comp_a);
  const int ib = p.computation_index(f.comp_b);
  Computation& a = p.computations[ia];
  Computation& b = p.computations[ib];
  for (int d = 0; d <= f.level; ++d) b.loops[d].iterator = a.loops[d].iterator;
}

void apply_interchange(Program& p, ApplyState& st, const Interchange& x) {
  const int ic = p.computation_index(x.comp);
  Computation& c = p.computations[ic];
  auto& map = st.level_map[c.id];
  const int pi = map[x.level_i];
  const int pj = map[x.level_j];
  std::swap(c.loops[pi], c.loops[pj]);
  for_each_access(c, [&](AccessMatrix& m) { swap_columns(m, pi, pj); });
  for (int& pos : map) {
    if (pos == pi)
      pos = pj;
    else if (pos == pj)
      pos = pi;
  }
}

void apply_tiling(Program& p, ApplyState& st, const Tiling& t) {
  const int ic = p.computation_index(t.comp);
  Computation& c = p.computations[ic];
  auto& map = st.level_map[c.id];
  const int py = map[t.level_y];
  const int px = map[t.level_x];
  const int pa = std::min(py, px);
  const int fa = (pa == py) ? t.tile_y : t.tile_x;
  const int fb = (pa == py) ? t.tile_x : t.tile_y;
  const int n = c.depth();

  // Column map old -> new: a = fa*a_out + a_in, b = fb*b_out + b_in.
  Eigen::MatrixXi T = Eigen::MatrixXi::Zero(n + 1, n + 3);
  for (int q = 0; q < pa; ++q) T(q, q) = 1;
  T(pa, pa) = fa;
  T(pa, pa + 2) = 1;
  T(pa + 1, pa + 1) = fb;
  T(pa + 1, pa + 3) = 1;
  for (int q = pa + 2; q <= n; ++q) T(q, q + 2) = 1;
  for_each_access(c, [&](AccessMatrix& m) { m.coeffs = (m.coeffs * T).eval(); });

  const ir::Loop a = c.loops[pa];
  const ir::Loop b = c.loops[pa + 1];
  std::vector<ir::Loop> loops(c.loops.begin(), c.loops.begin() + pa);
  loops.push_back({a.iterator, 0, a.extent() / fa, a.is_reduction_dim, false});
  loops.push_back({b.iterator, 0, b.extent() / fb, b.is_reduction_dim, false});
  loops.push_back({a.iterator + "_t", 0, fa, a.is_reduction_dim, false});
  loops.push_back({b.iterator + "_t", 0, fb, b.is_reduction_dim, false});
  loops.insert(loops.end(), c.loops.begin() + pa + 2, c.loops.end());
  c.loops = std::move(loops);

  for (int& pos : map)
    if (pos > pa + 1) pos += 2;
}

void apply_unrolling(Program& p, ApplyState& st, const Unrolling& u) {
  const int ic = p.computation_index(u.comp);
  const int inner = p.computations[ic].depth() - 1;
  const std::int64_t extent = p.computations[ic].loops[inner].extent();
  const std::int64_t body = extent / u.factor;

  std::vector<Computation> replicas;
  for (int r = 0; r < u.factor; ++r) {
    Computation rep = p.computations[ic];
    rep.loops[inner].upper = body;
    if (r > 0) rep.id = st.next_id++;
    for_each_access(rep, [&](AccessMatrix& m) {
      const int cc = static_cast<int>(m.coeffs.cols());
      for (int row = 0; row < m.coeffs.rows(); ++row) {
        const int a = m.coeffs(row, inner);
        m.coeffs(row, cc - 1) += a * r;
        m.coeffs(row, inner) = a * u.factor;
      }
    });
    replicas.push_back(std::move(rep));
  }
  for (const Computation& rep : replicas)
    if (!st.level_map.count(rep.id)) st.level_map[rep.id] = st.level_map[p.computations[ic].id];
  p.computations.erase(p.computations.begin() + ic);
  p.computations.insert(p.computations.begin() + ic, replicas.begin(), replicas.end());
}

void apply_parallelize(Program& p, ApplyState& st, const Parallelize& z) {
  const int ic = p.computation_index(z.comp);
  const Computation& c = p.computations[ic];
  const int pos = st.level_map[c.id][z.level];
  const std::string name = c.loops[pos].iterator;
  for (Computation& m : p.computations)
    for (ir::Loop& l : m.loops)
      if (l.iterator == name) l.parallel = true;
}

bool check_action(const Program& p, const ApplyState& st, const Schedule& prefix,
                  const Action& action) {
  if (!prefix.actions.empty() && stage_of(action) < stage_of(prefix.actions.back())) return false;
  if (const auto* f = std::get_if<Fusion>(&action)) return check_fusion(p, st, *f);
  if (const auto* x = std::get_if<Interchange>(&action)) return check_interchange(p, st, *x);
  if (const auto* t = std::get_if<Tiling>(&action)) return check_tiling(p, st, prefix, *t);
  if (const auto* u = std::get_if<Unrolling>(&action)) return check_unrolling(p, st, prefix, *u);
  if (const auto* z = std::get_if<Parallelize>(&action)) return check_parallelize(p, st, *z);
  return false;
}

void apply_action(Program& p, ApplyState& st, const Action& action) {
  if (const auto* f = std::get_if<Fusion>(&action))
    apply_fusion(p, *f);
  else if (const auto* x = std::get_if<Interchange>(&action))
    apply_interchange(p, st, *x);
  else if (const auto* t = std::get_if<Tiling>(&action))
    apply_tiling(p, st, *t);
  else if (const auto* u = std::get_if<Unrolling>(&action))
    apply_unrolling(p, st, *u);
  else if (const auto* z = std::get_if<Parallelize>(&action))
    apply_parallelize(p, st, *z);
}

}  // namespace

bool is_legal(const ir::Program& p, const Schedule& prefix, const Action& action) {
  Program cur = p;
  ApplyState st;
  st.init(cur);
  Schedule done;
  for (const Action& a : prefix.actions) {
    if (!check_action(cur, st, done, a)) return false;
    apply_action(cur, st, a);
    done.actions.push_back(a);
  }
  return check_action(cur, st, done, action);
}

bool is_legal(const ir::Program& p, const Schedule& s) {
  Program cur = p;
  ApplyState st;
  st.init(cur);
  Schedule done;
  for (const Action& a : s.actions) {
    if (!check_action(cur, st, done, a)) return false;
    apply_action(cur, st, a);
    done.actions.push_back(a);
  }
  return true;
}

ir::Program apply(const ir::Program& p, const Schedule& s) {
  Program cur = p;
  ApplyState st;
  st.init(cur);
  Schedule done;
  for (const Action& a : s.actions) {
    if (!check_action(cur, st, done, a))
      throw IllegalSchedule("illegal action " + to_string(a));
    apply_action(cur, st, a);
    done.actions.push_back(a);
  }
  return cur;
}

ir::Program fused_structure(const ir::Program& p, const Schedule& s) {
  Program cur = p;
  for (const Action& a : s.actions)
    if (const auto* f = std::get_if<Fusion>(&a)) apply_fusion(cur, *f);
  return cur;
}

Schedule heuristic_parallelize(const ir::Program& p, std::int64_t min_extent) {
  Schedule out;
  const ir::LoopTree tree = derive_tree(p);
  for (int root_child : tree.child_nodes(0)) {
    int node = root_child;
    while (true) {
      const ir::LoopTree::Node& n = tree.nodes[node];
      const ir::Computation& c = p.computations[n.comp_index];
      const Parallelize cand{c.id, n.level};
      if (is_legal(p, Schedule{}, Action{cand})) {
        // Outermost legal level found; the extent threshold decides.
        if (c.loops[n.level].extent() >= min_extent) out.actions.push_back(cand);
        break;
      }
      const std::vector<int> children = tree.child_nodes(node);
      if (children.size() != 1) break;  // stop at branching or at the body
      node = children[0];
    }
  }
  return out;
}

std::vector<CompTags> schedule_tags(const ir::Program& p, const Schedule& s) {
  std::vector<CompTags> tags(p.computations.size());
  const auto index_of = [&](int id) { return p.computation_index(id); };
  for (const Action& a : s.actions) {
    if (const auto* f = std::get_if<Fusion>(&a)) {
      for (int id : {f->comp_a, f->comp_b}) {
        const int i = index_of(id);
        for (int d = 0; d <= f->level; ++d) tags[i].levels[d].fusion = true;
      }
    } else if (const auto* x = std::get_if<Interchange>(&a)) {
      const int i = index_of(x->comp);
      tags[i].levels[x->level_i].interchange = true;
      tags[i].levels[x->level_j].interchange = true;
    } else if (const auto* t = std::get_if<Tiling>(&a)) {
      const int i = index_of(t->comp);
      tags[i].levels[t->level_y].tiling = true;
      tags[i].levels[t->level_y].tile_factor = t->tile_y;
      tags[i].levels[t->level_x].tiling = true;
      tags[i].levels[t->level_x].tile_factor = t->tile_x;
    } else if (const auto* u = std::get_if<Unrolling>(&a)) {
      const int i = index_of(u->comp);
      tags[i].unrolled = true;
      tags[i].unroll_factor = u->factor;
    } else if (const auto* z = std::get_if<Parallelize>(&a)) {
      const int ci = index_of(z->comp);
      const ir::Computation& c = p.computations[ci];
      const std::string name = c.loops[z->level].iterator;
      for (int mi : comps_sharing_loop(p, ci, z->level, name)) tags[mi].parallel_level = z->level;
    }
  }
  return tags;
}

Stage next_stage(Stage s) {
  switch (s) {
    case Stage::Fusion: return Stage::Interchange;
    case Stage::Interchange: return Stage::Tiling;
    case Stage::Tiling: return Stage::Unrolling;
    default: return Stage::Done;
  }
}

std::vector<Action> enumerate_stage_actions(const ir::Program& p, const Schedule& prefix,
                                            Stage stage) {
  std::vector<Action> candidates;
  const int ncomps = static_cast<int>(p.computations.size());
  switch (stage) {
    case Stage::Fusion:
      for (int i = 0; i + 1 < ncomps; ++i) {
        const int da = p.computations[i].depth();
        const int db = p.computations[i + 1].depth();
        for (int level = 0; level < std::min(da, db); ++level)
          candidates.push_back(
              Fusion{p.computations[i].id, p.computations[i + 1].id, level});
      }
      break;
    case Stage::Interchange:
      for (const ir::Computation& c : p.computations)
        for (int i = 0; i < c.depth(); ++i)
          for (int j = i + 1; j < c.depth(); ++j)
            candidates.push_back(Interchange{c.id, i, j});
      break;
    case Stage::Tiling:
      for (const ir::Computation& c : p.computations)
        for (int y = 0; y + 1 < c.depth(); ++y)
          for (int ty : kTileSizes)
            for (int tx : kTileSizes)
              candidates.push_back(Tiling{c.id, y, y + 1, ty, tx});
      break;
    case Stage::Unrolling:
      for (const ir::Computation& c : p.computations)
        for (int f : kUnrollFactors) candidates.push_back(Unrolling{c.id, f});
      break;
    case Stage::Done:
      return {};
  }
  std::vector<Action> legal;
  for (const Action& a : candidates)
    if (is_legal(p, prefix, a)) legal.push_back(a);
  return legal;
}

json to_json(const Schedule& s) {
  json out = json::array();
  for (const Action& a : s.actions) {
    if (const auto* f = std::get_if<Fusion>(&a))
      out.push_back({{"kind", "fusion"},
                     {"comp_a", f->comp_a},
                     {"comp_b", f->comp_b},
                     {"level", f->level}});
    else if (const auto* x = std::get_if<Interchange>(&a))
      out.push_back({{"kind", "interchange"},
                     {"comp", x->comp},
                     {"level_i", x->level_i},
                     {"level_j", x->level_j}});
    else if (const auto* t = std::get_if<Tiling>(&a))
      out.push_back({{"kind", "tiling"},
                     {"comp", t->comp},
                     {"level_y", t->level_y},
                     {"level_x", t->level_x},
                     {"tile_y", t->tile_y},
                     {"tile_x", t->tile_x}});
    else if (const auto* u = std::get_if<Unrolling>(&a))
      out.push_back({{"kind", "unrolling"}, {"comp", u->comp}, {"factor", u->factor}});
    else if (const auto* z = std::get_if<Parallelize>(&a))
      out.push_back({{"kind", "parallelize"}, {"comp", z->comp}, {"level", z->level}});
  }
  return out;
}

Schedule schedule_from_json(const json& j) {
  Schedule s;
  for (const json& ja : j) {
    const std::string kind = ja.at("kind").get<std::string>();
    if (kind == "fusion")
      s.actions.push_back(Fusion{ja.at("comp_a").get<int>(), ja.at("comp_b").get<int>(),
                                 ja.at("level").get<int>()});
    else if (kind == "interchange")
      s.actions.push_back(Interchange{ja.at("comp").get<int>(), ja.at("level_i").get<int>(),
                                      ja.at("level_j").get<int>()});
    else if (kind == "tiling")
      s.actions.push_back(Tiling{ja.at("comp").get<int>(), ja.at("level_y").get<int>(),
                                 ja.at("level_x").get<int>(), ja.at("tile_y").get<int>(),
                                 ja.at("tile_x").get<int>()});
    else if (kind == "unrolling")
      s.actions.push_back(Unrolling{ja.at("comp").get<int>(), ja.at("factor").get<int>()});
    else if (kind == "parallelize")
      s.actions.push_back(Parallelize{ja.at("comp").get<int>(), ja.at("level").get<int>()});
    else
      throw std::runtime_error("unknown action kind '" + kind + "'");
  }
  return s;
}

}  // namespace tinysched::transforms
