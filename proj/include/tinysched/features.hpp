#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tinysched/ir.hpp"
#include "tinysched/transforms.hpp"

namespace tinysched::features {

inline constexpr int kMaxLoops = ir::kMaxDepth;        // 7 loop slots
inline constexpr int kLoopFields = 7;                  // bounds + tags per slot
inline constexpr int kInnerExtras = 4;                 // unroll/parallel/vectorize block
inline constexpr int kAccessSlots = ir::kMaxAccesses;  // 21 read slots
inline constexpr int kAccessRows = ir::kMaxRank;       // 5
inline constexpr int kAccessCols = kMaxLoops + 1;      // 7 iterators + constant
inline constexpr int kAccessFields = kAccessRows * kAccessCols + 1;  // matrix + buffer id
inline constexpr int kLhsFields = 1 + ir::kMaxRank;    // rank + dim sizes
inline constexpr int kOpFields = 4;                    // add/mul/sub/div counts

/// Fixed computation-vector width; every leaf has exactly this many entries.
inline constexpr int kWidth = kMaxLoops * kLoopFields + kInnerExtras +
                              kAccessSlots * kAccessFields + kLhsFields + kOpFields;
static_assert(kWidth == 924);

/// sgn(x) * ln(1 + |x|): total, monotone, exact at zero.
inline double signed_log(double x) {
  return x >= 0 ? std::log1p(x) : -std::log1p(-x);
}

struct TooDeep : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TooManyAccesses : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct RankTooLarge : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Layout, slot by slot:
///   [7 x 7]  per loop level: slog upper, slog lower, reduction tag,
///            fusion tag, interchange tag, tiling tag, slog tile factor
///   [4]      innermost extras: unroll tag, slog unroll factor,
///            slog(1 + parallel level) or 0, vectorize tag (reserved 0)
///   [21 x 41] per rhs read: 5x8 access matrix (iterator coefficients in
///            columns 0..6, constant in column 7, slog), then slog buffer id
///   [6]      lhs: slog rank, slog dim sizes
///   [4]      slog operation counts (add, mul, sub, div)
Eigen::VectorXd encode_computation(const ir::Program& p, const ir::Computation& comp,
                                   const transforms::CompTags& tags);

/// Model input: the fused loop structure with one computation vector per leaf.
struct ProgramTree {
  ir::LoopTree shape;
  std::vector<Eigen::VectorXd> leaves;  // program order

  std::string structure() const { return shape.signature(); }
};

/// Reads only the source program and the schedule; transformations other
/// than fusion enter through tags, fusion through the tree structure.
ProgramTree encode_program(const ir::Program& p, const transforms::Schedule& s);

nlohmann::json to_json(const ProgramTree& t);

}  // namespace tinysched::features
