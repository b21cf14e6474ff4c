#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tinysched/ir.hpp"

namespace tinysched::transforms {

inline constexpr std::array<int, 5> kTileSizes = {8, 16, 32, 64, 128};
inline constexpr std::array<int, 4> kUnrollFactors = {2, 4, 8, 16};

/// Levels in every action refer to the original (pre-transformation) nest.
struct Fusion {
  int comp_a = 0, comp_b = 0;
  int level = 0;  // levels 0..level become shared
};
struct Interchange {
  int comp = 0;
  int level_i = 0, level_j = 0;
};
struct Tiling {
  int comp = 0;
  int level_y = 0, level_x = 0;  // adjacent pair
  int tile_y = 0, tile_x = 0;
};
struct Unrolling {
  int comp = 0;
  int factor = 0;  // innermost level only
};
struct Parallelize {
  int comp = 0;
  int level = 0;
};

using Action = std::variant<Fusion, Interchange, Tiling, Unrolling, Parallelize>;

/// Canonical stage rank: fusion < interchange < tiling < unrolling < parallelize.
int stage_of(const Action& a);
std::string to_string(const Action& a);
bool operator==(const Action& a, const Action& b);

struct Schedule {
  std::vector<Action> actions;

  bool empty() const { return actions.empty(); }
  Schedule with(const Action& a) const;
};

bool operator==(const Schedule& a, const Schedule& b);

struct IllegalSchedule : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// True iff `action` can legally extend the already-legal `prefix`.
bool is_legal(const ir::Program& p, const Schedule& prefix, const Action& action);
/// Checks the whole sequence left to right.
bool is_legal(const ir::Program& p, const Schedule& s);

/// Returns the transformed program; the input is never modified.
/// Throws IllegalSchedule when any action fails its legality check.
ir::Program apply(const ir::Program& p, const Schedule& s);

/// Applies only the structural effect of Fusion actions (iterator renaming),
/// which is all the program-tree representation depends on.
ir::Program fused_structure(const ir::Program& p, const Schedule& s);

/// Parallelize the outermost legal loop of each root nest whose extent
/// reaches `min_extent`.
Schedule heuristic_parallelize(const ir::Program& p, std::int64_t min_extent = 16);

/// Per-original-level transformation markers consumed by feature extraction.
struct LoopTags {
  bool fusion = false;
  bool interchange = false;
  bool tiling = false;
  int tile_factor = 0;
};
struct CompTags {
  std::array<LoopTags, ir::kMaxDepth> levels{};
  bool unrolled = false;
  int unroll_factor = 0;
  int parallel_level = -1;  // -1 when the nest is not parallelized
};

/// Tags indexed by computation position in `p`.
std::vector<CompTags> schedule_tags(const ir::Program& p, const Schedule& s);

enum class Stage { Fusion, Interchange, Tiling, Unrolling, Done };
Stage next_stage(Stage s);

/// Every legal action of the given stage that can extend `prefix`, in a
/// deterministic (computation, level, menu) order.
std::vector<Action> enumerate_stage_actions(const ir::Program& p, const Schedule& prefix,
                                            Stage stage);

nlohmann::json to_json(const Schedule& s);
Schedule schedule_from_json(const nlohmann::json& j);

}  // namespace tinysched::transforms
