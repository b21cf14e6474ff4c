#include "tinysched/ir.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace tinysched::ir {

using nlohmann::json;

std::int64_t Buffer::element_count() const {
  std::int64_t n = 1;
  for (std::int64_t d : dim_sizes) n *= d;
  return n;
}

// --- AffineExpr -------------------------------------------------------------

AffineExpr AffineExpr::constant(std::int64_t c) {
  AffineExpr e;
  e.constant_ = c;
  return e;
}

AffineExpr AffineExpr::iterator(const std::string& name) {
  AffineExpr e;
  e.terms_.emplace_back(name, 1);
  return e;
}

std::int64_t AffineExpr::coeff(const std::string& name) const {
  for (const auto& [n, c] : terms_)
    if (n == name) return c;
  return 0;
}

namespace {

void add_term(std::vector<std::pair<std::string, std::int64_t>>& terms, const std::string& name,
              std::int64_t c) {
  for (auto& [n, existing] : terms) {
    if (n == name) {
      existing += c;
      return;
    }
  }
  if (c != 0) terms.emplace_back(name, c);
}

}  // namespace

AffineExpr AffineExpr::operator+(const AffineExpr& rhs) const {
  AffineExpr out = *this;
  out.constant_ += rhs.constant_;
  for (const auto& [n, c] : rhs.terms_) add_term(out.terms_, n, c);
  return out;
}

AffineExpr AffineExpr::operator-(const AffineExpr& rhs) const {
  AffineExpr out = *this;
  out.constant_ -= rhs.constant_;
  for (const auto& [n, c] : rhs.terms_) add_term(out.terms_, n, -c);
  return out;
}

AffineExpr AffineExpr::operator*(const AffineExpr& rhs) const {
  const bool lhs_const = terms_.empty();
  const bool rhs_const = rhs.terms_.empty();
  if (!lhs_const && !rhs_const)
    throw NonAffineAccess("product of two iterator expressions is not affine");
  const AffineExpr& varying = lhs_const ? rhs : *this;
  const std::int64_t k = lhs_const ? constant_ : rhs.constant_;
  AffineExpr out;
  out.constant_ = varying.constant_ * k;
  for (const auto& [n, c] : varying.terms_)
    if (c * k != 0) out.terms_.emplace_back(n, c * k);
  return out;
}

AffineExpr operator*(std::int64_t c, const AffineExpr& e) {
  return AffineExpr::constant(c) * e;
}
AffineExpr operator+(const AffineExpr& e, std::int64_t c) {
  return e + AffineExpr::constant(c);
}
AffineExpr operator-(const AffineExpr& e, std::int64_t c) {
  return e - AffineExpr::constant(c);
}

AccessMatrix access_matrix_of(const std::vector<AffineExpr>& indices,
                              const std::vector<std::string>& iterators, int buffer_id) {
  const int k = static_cast<int>(indices.size());
  const int n = static_cast<int>(iterators.size());
  AccessMatrix m;
  m.buffer_id = buffer_id;
  m.coeffs = Eigen::MatrixXi::Zero(k, n + 1);
  for (int r = 0; r < k; ++r) {
    for (const auto& [name, c] : indices[r].terms()) {
      auto it = std::find(iterators.begin(), iterators.end(), name);
      if (it == iterators.end())
        throw NonAffineAccess("index uses unknown iterator '" + name + "'");
      m.coeffs(r, static_cast<int>(it - iterators.begin())) = static_cast<int>(c);
    }
    m.coeffs(r, n) = static_cast<int>(indices[r].constant_term());
  }
  return m;
}

// --- Expr -------------------------------------------------------------------

Expr Expr::make_constant(double v) {
  Expr e;
  e.kind = Kind::Constant;
  e.constant = v;
  return e;
}

Expr Expr::load(AccessMatrix access) {
  Expr e;
  e.kind = Kind::Load;
  e.access = std::move(access);
  return e;
}

Expr Expr::binary(OpKind op, Expr lhs, Expr rhs) {
  Expr e;
  e.kind = Kind::Binary;
  e.op = op;
  e.operands.push_back(std::move(lhs));
  e.operands.push_back(std::move(rhs));
  return e;
}

std::vector<const AccessMatrix*> loads_of(const Expr& e) {
  std::vector<const AccessMatrix*> out;
  const auto walk = [&](const Expr& node, const auto& self) -> void {
    if (node.kind == Expr::Kind::Load) out.push_back(&node.access);
    for (const Expr& child : node.operands) self(child, self);
  };
  walk(e, walk);
  return out;
}

void count_ops(const Expr& e, int& adds, int& muls, int& subs, int& divs) {
  if (e.kind == Expr::Kind::Binary) {
    switch (e.op) {
      case OpKind::Add: ++adds; break;
      case OpKind::Mul: ++muls; break;
      case OpKind::Sub: ++subs; break;
      case OpKind::Div: ++divs; break;
    }
  }
  for (const Expr& child : e.operands) count_ops(child, adds, muls, subs, divs);
}

// --- Program ----------------------------------------------------------------

const Buffer* Program::find_buffer(int id) const {
  for (const Buffer& b : buffers)
    if (b.id == id) return &b;
  return nullptr;
}

const Computation* Program::find_computation(int id) const {
  for (const Computation& c : computations)
    if (c.id == id) return &c;
  return nullptr;
}

int Program::computation_index(int id) const {
  for (std::size_t i = 0; i < computations.size(); ++i)
    if (computations[i].id == id) return static_cast<int>(i);
  return -1;
}

int shared_prefix(const Computation& a, const Computation& b) {
  int d = 0;
  const int limit = std::min(a.depth(), b.depth());
  while (d < limit && a.loops[d].iterator == b.loops[d].iterator &&
         a.loops[d].lower == b.loops[d].lower && a.loops[d].upper == b.loops[d].upper)
    ++d;
  return d;
}

std::vector<int> LoopTree::child_nodes(int node) const {
  std::vector<int> out;
  for (const Item& it : nodes[node].items)
    if (it.kind == Item::Kind::Child) out.push_back(it.index);
  return out;
}

std::vector<int> LoopTree::direct_computations(int node) const {
  std::vector<int> out;
  for (const Item& it : nodes[node].items)
    if (it.kind == Item::Kind::Computation) out.push_back(it.index);
  return out;
}

std::string LoopTree::signature() const {
  std::string out;
  const auto walk = [&](int node, const auto& self) -> void {
    out += '(';
    for (const Item& it : nodes[node].items) {
      if (it.kind == Item::Kind::Computation)
        out += 'c';
      else
        self(it.index, self);
    }
    out += ')';
  };
  walk(0, walk);
  return out;
}

LoopTree derive_tree(const Program& p) {
  LoopTree tree;
  tree.nodes.push_back({});  // virtual root
  std::vector<int> open;     // node-id stack for the currently open loops

  for (std::size_t ci = 0; ci < p.computations.size(); ++ci) {
    const Computation& comp = p.computations[ci];
    int keep = 0;
    if (ci > 0) {
      keep = shared_prefix(p.computations[ci - 1], comp);
      keep = std::min(keep, static_cast<int>(open.size()));
    }
    open.resize(keep);
    for (int level = keep; level < comp.depth(); ++level) {
      const int parent = open.empty() ? 0 : open.back();
      const int id = static_cast<int>(tree.nodes.size());
      LoopTree::Node node;
      node.comp_index = static_cast<int>(ci);
      node.level = level;
      tree.nodes.push_back(node);
      tree.nodes[parent].items.push_back({LoopTree::Item::Kind::Child, id});
      open.push_back(id);
    }
    const int leaf_parent = open.empty() ? 0 : open.back();
    tree.nodes[leaf_parent].items.push_back(
        {LoopTree::Item::Kind::Computation, static_cast<int>(ci)});
  }
  return tree;
}

// --- validate ---------------------------------------------------------------

namespace {

// Inclusive [min, max] value range of `row * (iters, 1)` over the loop box.
std::pair<std::int64_t, std::int64_t> access_row_range(const Eigen::MatrixXi& coeffs, int row,
                                                       const std::vector<Loop>& loops) {
  std::int64_t lo = coeffs(row, coeffs.cols() - 1);
  std::int64_t hi = lo;
  for (int c = 0; c < static_cast<int>(loops.size()); ++c) {
    const std::int64_t a = coeffs(row, c);
    if (a == 0) continue;
    const std::int64_t v0 = a * loops[c].lower;
    const std::int64_t v1 = a * (loops[c].upper - 1);
    lo += std::min(v0, v1);
    hi += std::max(v0, v1);
  }
  return {lo, hi};
}

void check_access(const Program& p, const Computation& comp, const AccessMatrix& m,
                  const char* what, std::vector<std::string>& out) {
  const Buffer* buf = p.find_buffer(m.buffer_id);
  const std::string where =
      "computation " + std::to_string(comp.id) + " " + what;
  if (!buf) {
    out.push_back(where + ": unknown buffer " + std::to_string(m.buffer_id));
    return;
  }
  if (m.rank() != buf->rank()) {
    out.push_back(where + ": rank mismatch (access rank " + std::to_string(m.rank()) +
                  ", buffer rank " + std::to_string(buf->rank()) + ")");
    return;
  }
  if (m.depth() != comp.depth()) {
    out.push_back(where + ": access depth " + std::to_string(m.depth()) +
                  " does not match loop depth " + std::to_string(comp.depth()));
    return;
  }
  for (int r = 0; r < m.rank(); ++r) {
    auto [lo, hi] = access_row_range(m.coeffs, r, comp.loops);
    if (lo < 0 || hi >= buf->dim_sizes[r]) {
      out.push_back(where + ": access out of bounds in dimension " + std::to_string(r));
      return;
    }
  }
}

}  // namespace

std::vector<std::string> validate(const Program& p) {
  std::vector<std::string> out;

  std::set<int> buffer_ids;
  for (const Buffer& b : p.buffers) {
    if (!buffer_ids.insert(b.id).second)
      out.push_back("duplicate buffer id " + std::to_string(b.id));
    if (b.rank() < 1 || b.rank() > kMaxRank)
      out.push_back("buffer " + std::to_string(b.id) + ": rank outside 1.." +
                    std::to_string(kMaxRank));
    for (std::int64_t d : b.dim_sizes)
      if (d < 1) out.push_back("buffer " + std::to_string(b.id) + ": dimension size < 1");
  }

  std::set<int> comp_ids;
  std::set<int> written;  // buffers written by computations seen so far
  for (std::size_t ci = 0; ci < p.computations.size(); ++ci) {
    const Computation& comp = p.computations[ci];
    const std::string name = "computation " + std::to_string(comp.id);
    if (!comp_ids.insert(comp.id).second) out.push_back("duplicate " + name);

    if (comp.depth() < 1) out.push_back(name + ": empty loop nest");
    if (comp.depth() > kMaxDepth) out.push_back(name + ": depth exceeds 7");

    std::set<std::string> names;
    for (const Loop& l : comp.loops) {
      if (!names.insert(l.iterator).second)
        out.push_back(name + ": duplicate iterator '" + l.iterator + "'");
      if (l.upper <= l.lower)
        out.push_back(name + ": loop '" + l.iterator + "' has nonpositive extent");
    }

    // Shared-prefix consistency with the predecessor: equal names imply a
    // contiguous prefix with equal bounds.
    if (ci > 0) {
      const Computation& prev = p.computations[ci - 1];
      const int shared = shared_prefix(prev, comp);
      for (int d = shared; d < comp.depth(); ++d) {
        for (int e = 0; e < prev.depth(); ++e) {
          if (comp.loops[d].iterator == prev.loops[e].iterator && !(d == e && d < shared))
            out.push_back(name + ": iterator '" + comp.loops[d].iterator +
                          "' collides with the previous computation outside the shared prefix");
        }
      }
    }

    const Buffer* lhs_buf = p.find_buffer(comp.lhs.buffer_id);
    if (lhs_buf && lhs_buf->kind == BufferKind::Input)
      out.push_back(name + ": writes input buffer " + std::to_string(comp.lhs.buffer_id));
    check_access(p, comp, comp.lhs, "lhs", out);

    for (const AccessMatrix* read : loads_of(comp.rhs)) {
      check_access(p, comp, *read, "rhs", out);
      const Buffer* buf = p.find_buffer(read->buffer_id);
      if (!buf) continue;
      if (buf->kind == BufferKind::Input) continue;
      const bool self_read = read->buffer_id == comp.lhs.buffer_id;
      if (self_read && !comp.is_reduction())
        out.push_back(name + ": non-reduction reads its own output buffer");
      if (!self_read && !written.count(read->buffer_id))
        out.push_back(name + ": read before write of buffer " + std::to_string(read->buffer_id));
    }
    written.insert(comp.lhs.buffer_id);
  }
  return out;
}

// --- JSON -------------------------------------------------------------------

namespace {

const char* kind_name(BufferKind k) {
  switch (k) {
    case BufferKind::Input: return "input";
    case BufferKind::Intermediate: return "intermediate";
    case BufferKind::Output: return "output";
  }
  return "input";
}

BufferKind kind_from(const std::string& s) {
  if (s == "input") return BufferKind::Input;
  if (s == "intermediate") return BufferKind::Intermediate;
  if (s == "output") return BufferKind::Output;
  throw std::runtime_error("unknown buffer kind '" + s + "'");
}

const char* reduce_name(ReduceOp r) {
  switch (r) {
    case ReduceOp::None: return "none";
    case ReduceOp::Sum: return "sum";
    case ReduceOp::Product: return "product";
  }
  return "none";
}

ReduceOp reduce_from(const std::string& s) {
  if (s == "none") return ReduceOp::None;
  if (s == "sum") return ReduceOp::Sum;
  if (s == "product") return ReduceOp::Product;
  throw std::runtime_error("unknown reduce op '" + s + "'");
}

const char* op_name(OpKind o) {
  switch (o) {
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Mul: return "mul";
    case OpKind::Div: return "div";
  }
  return "add";
}

OpKind op_from(const std::string& s) {
  if (s == "add") return OpKind::Add;
  if (s == "sub") return OpKind::Sub;
  if (s == "mul") return OpKind::Mul;
  if (s == "div") return OpKind::Div;
  throw std::runtime_error("unknown operator '" + s + "'");
}

void expect_fields(const json& j, std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) ok = true;
    if (!ok) throw std::runtime_error("unknown field '" + key + "'");
  }
}

json matrix_to_json(const AccessMatrix& m) {
  json rows = json::array();
  for (int r = 0; r < m.coeffs.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.coeffs.cols(); ++c) row.push_back(m.coeffs(r, c));
    rows.push_back(std::move(row));
  }
  return json{{"buffer", m.buffer_id}, {"coeffs", std::move(rows)}};
}

AccessMatrix matrix_from_json(const json& j) {
  expect_fields(j, {"buffer", "coeffs"});
  AccessMatrix m;
  m.buffer_id = j.at("buffer").get<int>();
  const auto& rows = j.at("coeffs");
  const int k = static_cast<int>(rows.size());
  if (k == 0) throw std::runtime_error("access matrix has no rows");
  const int w = static_cast<int>(rows[0].size());
  m.coeffs = Eigen::MatrixXi::Zero(k, w);
  for (int r = 0; r < k; ++r) {
    if (static_cast<int>(rows[r].size()) != w)
      throw std::runtime_error("ragged access matrix");
    for (int c = 0; c < w; ++c) m.coeffs(r, c) = rows[r][c].get<int>();
  }
  return m;
}

json expr_to_json(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Constant:
      return json{{"const", e.constant}};
    case Expr::Kind::Load:
      return json{{"load", matrix_to_json(e.access)}};
    case Expr::Kind::Binary:
      return json{{"op", op_name(e.op)},
                  {"args", json::array({expr_to_json(e.operands[0]), expr_to_json(e.operands[1])})}};
  }
  return {};
}

Expr expr_from_json(const json& j) {
  if (j.contains("const")) {
    expect_fields(j, {"const"});
    return Expr::make_constant(j.at("const").get<double>());
  }
  if (j.contains("load")) {
    expect_fields(j, {"load"});
    return Expr::load(matrix_from_json(j.at("load")));
  }
  expect_fields(j, {"op", "args"});
  const auto& args = j.at("args");
  if (args.size() != 2) throw std::runtime_error("binary expr needs two args");
  return Expr::binary(op_from(j.at("op").get<std::string>()), expr_from_json(args[0]),
                      expr_from_json(args[1]));
}

}  // namespace

json to_json(const Program& p) {
  json buffers = json::array();
  for (const Buffer& b : p.buffers)
    buffers.push_back(json{{"id", b.id}, {"kind", kind_name(b.kind)}, {"dim_sizes", b.dim_sizes}});

  json comps = json::array();
  for (const Computation& c : p.computations) {
    json loops = json::array();
    for (const Loop& l : c.loops)
      loops.push_back(json{{"iterator", l.iterator},
                           {"lower", l.lower},
                           {"upper", l.upper},
                           {"reduction", l.is_reduction_dim},
                           {"parallel", l.parallel}});
    comps.push_back(json{{"id", c.id},
                         {"loops", std::move(loops)},
                         {"lhs", matrix_to_json(c.lhs)},
                         {"rhs", expr_to_json(c.rhs)},
                         {"reduce", reduce_name(c.reduce)}});
  }
  return json{{"version", 1}, {"buffers", std::move(buffers)}, {"computations", std::move(comps)}};
}

Program program_from_json(const json& j) {
  expect_fields(j, {"version", "buffers", "computations"});
  if (j.at("version").get<int>() != 1) throw std::runtime_error("unsupported program version");
  Program p;
  for (const json& jb : j.at("buffers")) {
    expect_fields(jb, {"id", "kind", "dim_sizes"});
    Buffer b;
    b.id = jb.at("id").get<int>();
    b.kind = kind_from(jb.at("kind").get<std::string>());
    b.dim_sizes = jb.at("dim_sizes").get<std::vector<std::int64_t>>();
    p.buffers.push_back(std::move(b));
  }
  for (const json& jc : j.at("computations")) {
    expect_fields(jc, {"id", "loops", "lhs", "rhs", "reduce"});
    Computation c;
    c.id = jc.at("id").get<int>();
    for (const json& jl : jc.at("loops")) {
      expect_fields(jl, {"iterator", "lower", "upper", "reduction", "parallel"});
      Loop l;
      l.iterator = jl.at("iterator").get<std::string>();
      l.lower = jl.at("lower").get<std::int64_t>();
      l.upper = jl.at("upper").get<std::int64_t>();
      l.is_reduction_dim = jl.at("reduction").get<bool>();
      l.parallel = jl.at("parallel").get<bool>();
      c.loops.push_back(std::move(l));
    }
    c.lhs = matrix_from_json(jc.at("lhs"));
    c.rhs = expr_from_json(jc.at("rhs"));
    c.reduce = reduce_from(jc.at("reduce").get<std::string>());
    p.computations.push_back(std::move(c));
  }
  return p;
}

std::string to_string(const Program& p) {
  std::ostringstream os;
  const LoopTree tree = derive_tree(p);
  const auto walk = [&](int node, int indent, const auto& self) -> void {
    for (const LoopTree::Item& it : tree.nodes[node].items) {
      if (it.kind == LoopTree::Item::Kind::Computation) {
        const Computation& c = p.computations[it.index];
        os << std::string(indent * 2, ' ') << "comp " << c.id << " -> buffer "
           << c.lhs.buffer_id << (c.is_reduction() ? " (reduce)" : "") << "\n";
      } else {
        const LoopTree::Node& n = tree.nodes[it.index];
        const Loop& l = p.computations[n.comp_index].loops[n.level];
        os << std::string(indent * 2, ' ') << "for " << l.iterator << " in " << l.lower << ".."
           << l.upper << (l.is_reduction_dim ? " [red]" : "") << (l.parallel ? " [par]" : "")
           << "\n";
        self(it.index, indent + 1, self);
      }
    }
  };
  walk(0, 0, walk);
  return os.str();
}

}  // namespace tinysched::ir
