#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace tinysched::ir {

/// Widest buffer rank the toolkit handles.
inline constexpr int kMaxRank = 5;
/// Deepest loop nest a computation may carry.
inline constexpr int kMaxDepth = 7;
/// Most memory reads a single right-hand side may contain.
inline constexpr int kMaxAccesses = 21;

enum class BufferKind { Input, Intermediate, Output };

struct Buffer {
  int id = 0;
  BufferKind kind = BufferKind::Input;
  std::vector<std::int64_t> dim_sizes;

  int rank() const { return static_cast<int>(dim_sizes.size()); }
  std::int64_t element_count() const;
};

/// Affine array access: one row per buffer dimension, one column per loop
/// iterator of the enclosing computation, plus a trailing constant column.
struct AccessMatrix {
  Eigen::MatrixXi coeffs;
  int buffer_id = 0;

  int rank() const { return static_cast<int>(coeffs.rows()); }
  int depth() const { return static_cast<int>(coeffs.cols()) - 1; }
};

struct NonAffineAccess : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Symbolic affine index expression over named iterators, used to build
/// access matrices from readable index forms.
class AffineExpr {
 public:
  AffineExpr() = default;
  static AffineExpr constant(std::int64_t c);
  static AffineExpr iterator(const std::string& name);

  AffineExpr operator+(const AffineExpr& rhs) const;
  AffineExpr operator-(const AffineExpr& rhs) const;
  /// Throws NonAffineAccess when neither side is a pure constant.
  AffineExpr operator*(const AffineExpr& rhs) const;

  std::int64_t constant_term() const { return constant_; }
  std::int64_t coeff(const std::string& name) const;
  const std::vector<std::pair<std::string, std::int64_t>>& terms() const { return terms_; }

 private:
  std::vector<std::pair<std::string, std::int64_t>> terms_;
  std::int64_t constant_ = 0;
};

AffineExpr operator*(std::int64_t c, const AffineExpr& e);
AffineExpr operator+(const AffineExpr& e, std::int64_t c);
AffineExpr operator-(const AffineExpr& e, std::int64_t c);

/// Row r, column c of the result holds the coefficient of iterators[c] in
/// indices[r]; the last column holds the additive constant.
AccessMatrix access_matrix_of(const std::vector<AffineExpr>& indices,
                              const std::vector<std::string>& iterators, int buffer_id = 0);

enum class OpKind { Add, Sub, Mul, Div };

/// Expression tree over constants, affine buffer reads and {+, -, *, /}.
struct Expr {
  enum class Kind { Constant, Load, Binary };

  Kind kind = Kind::Constant;
  double constant = 0.0;
  AccessMatrix access;       // Kind::Load
  OpKind op = OpKind::Add;   // Kind::Binary
  std::vector<Expr> operands;

  static Expr make_constant(double v);
  static Expr load(AccessMatrix access);
  static Expr binary(OpKind op, Expr lhs, Expr rhs);
};

/// Collects every Load in evaluation (left-to-right) order.
std::vector<const AccessMatrix*> loads_of(const Expr& e);
void count_ops(const Expr& e, int& adds, int& muls, int& subs, int& divs);

struct Loop {
  std::string iterator;
  std::int64_t lower = 0;
  std::int64_t upper = 0;  // exclusive
  bool is_reduction_dim = false;
  bool parallel = false;   // set by schedule application only

  std::int64_t extent() const { return upper - lower; }
};

enum class ReduceOp { None, Sum, Product };

struct Computation {
  int id = 0;
  std::vector<Loop> loops;  // outermost first
  AccessMatrix lhs;
  Expr rhs;
  ReduceOp reduce = ReduceOp::None;

  bool is_reduction() const { return reduce != ReduceOp::None; }
  int depth() const { return static_cast<int>(loops.size()); }
};

struct Program {
  std::vector<Buffer> buffers;
  std::vector<Computation> computations;

  const Buffer* find_buffer(int id) const;
  const Computation* find_computation(int id) const;
  int computation_index(int id) const;  // -1 when absent
};

/// Number of leading loops two computations share (same iterator, bounds).
int shared_prefix(const Computation& a, const Computation& b);

/// Loop-structure tree: internal nodes are loop levels, leaves reference
/// computations. Adjacent computations sharing a loop prefix hang under the
/// same nodes. nodes[0] is a virtual program root.
struct LoopTree {
  struct Item {
    enum class Kind { Computation, Child };
    Kind kind;
    int index;  // computation index or node id
  };
  struct Node {
    int comp_index = -1;  // computation whose loop labels this node
    int level = -1;       // depth of that loop within comp_index
    std::vector<Item> items;
  };
  std::vector<Node> nodes;

  std::vector<int> child_nodes(int node) const;
  std::vector<int> direct_computations(int node) const;
  /// Shape-only fingerprint; equal strings mean batched recursion is legal.
  std::string signature() const;
};

LoopTree derive_tree(const Program& p);

/// Returns every invariant violation; an empty list means the program is ok.
std::vector<std::string> validate(const Program& p);

nlohmann::json to_json(const Program& p);
/// Strict: unknown or missing fields reject the document.
Program program_from_json(const nlohmann::json& j);

std::string to_string(const Program& p);  // debugging aid

}  // namespace tinysched::ir
