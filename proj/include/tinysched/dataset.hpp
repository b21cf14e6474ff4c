#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tinysched/generator.hpp"
#include "tinysched/ir.hpp"
#include "tinysched/model.hpp"
#include "tinysched/transforms.hpp"

namespace tinysched::dataset {

/// One training point: program, schedule, the two medians and their ratio.
struct DatasetRecord {
  nlohmann::json program;
  nlohmann::json schedule;
  std::int64_t baseline_median_ns = 0;
  std::int64_t transformed_median_ns = 0;
  double speedup = 1.0;
  std::uint64_t generator_seed = 0;  // per-program seed, doubles as program uid
  std::string timestamp;
  std::string version;
};

nlohmann::json to_json(const DatasetRecord& r);
DatasetRecord record_from_json(const nlohmann::json& j);

std::vector<DatasetRecord> read_jsonl(const std::string& path);
void append_jsonl(const std::string& path, const std::vector<DatasetRecord>& records);

struct BuildConfig {
  generator::GeneratorConfig gen;
  int programs = 10;
  int runs = 30;
  /// Programs whose baseline median lands below this are regenerated with a
  /// larger iteration budget.
  std::int64_t min_baseline_ns = 100'000;
  int max_regen_attempts = 5;
  int workers = 1;
  bool verbose = false;
  /// Replace wall-clock medians with the deterministic execution cost.
  bool deterministic_cost = false;
  /// Re-measure the baseline next to every schedule measurement so the
  /// ratio is immune to machine-speed drift across the sweep.
  bool paired_baseline = true;
};

struct BuildStats {
  int programs_done = 0;
  int records_written = 0;
  int schedules_failed = 0;
  int programs_skipped_resume = 0;
};

/// Measures baseline plus every generated schedule per program, appending
/// records to `out_path`. A journal file (out_path + ".journal") makes the
/// build resumable: completed programs are skipped, half-written ones redone.
BuildStats build_dataset(const BuildConfig& cfg, const std::string& out_path);

struct SplitResult {
  std::vector<DatasetRecord> train, validation, test;
};

/// 60/20/20 by program: all schedules of one program stay together.
SplitResult split(const std::vector<DatasetRecord>& records, std::uint64_t seed);

/// Index batches; every batch holds records of exactly one program with one
/// fused tree structure.
std::vector<std::vector<int>> batch_by_structure(const std::vector<DatasetRecord>& records,
                                                 int batch_size = 32);

/// Feature-encoded examples ready for model training.
std::vector<model::TrainExample> to_examples(const std::vector<DatasetRecord>& records);

/// Histogram CSV of the speedup distribution (bin_low, bin_high, count).
void speedup_histogram_csv(const std::vector<DatasetRecord>& records, const std::string& path,
                           int bins = 50);

}  // namespace tinysched::dataset
