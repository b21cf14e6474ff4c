#pragma once

#include <cstdint>
#include <vector>

#include "tinysched/ir.hpp"
#include "tinysched/transforms.hpp"

namespace tinysched::generator {

struct GeneratorConfig {
  std::uint64_t seed = 1;
  int max_computations = 4;
  int min_depth = 2;
  int max_depth = 7;
  /// Data-dimension extents (outer loop levels and buffer sizes).
  std::vector<std::int64_t> extent_choices = {16,  24,  32,  48,  64,  96, 128,
                                              192, 256, 384, 512, 768, 1024};
  /// Kernel-style extents for loop levels below the third.
  std::vector<std::int64_t> inner_extents = {2, 3, 4, 8};
  double weight_simple = 1.0;
  double weight_stencil = 1.0;
  double weight_reduction = 1.0;
  /// Probability that a reduction consumes the preceding stencil.
  double combination_probability = 0.2;
  /// Probability that a computation nests under its predecessor's outer loops.
  double share_probability = 0.4;
  int schedules_per_program = 32;
  /// Iteration budget per computation; keeps single runs measurable.
  std::int64_t min_iterations = 1 << 14;
  std::int64_t max_iterations = 1 << 18;

  bool valid() const;
};

/// splitmix64 stream; programs i of a batch use derive_seed(seed, i).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

/// Deterministic in cfg; the result always passes ir::validate.
ir::Program generate_program(const GeneratorConfig& cfg);

/// Exactly cfg.schedules_per_program legal schedules; the first is empty.
/// Deterministic in (cfg, program).
std::vector<transforms::Schedule> generate_schedules(const ir::Program& p,
                                                     const GeneratorConfig& cfg);

}  // namespace tinysched::generator
