#include "tinysched/dataset.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>

#include "tinysched/exec.hpp"
#include "tinysched/features.hpp"
#include "tinysched/version.hpp"

namespace tinysched::dataset {

using nlohmann::json;

json to_json(const DatasetRecord& r) {
  return json{{"program", r.program},
              {"schedule", r.schedule},
              {"baseline_median_ns", r.baseline_median_ns},
              {"transformed_median_ns", r.transformed_median_ns},
              {"speedup", r.speedup},
              {"generator_seed", r.generator_seed},
              {"timestamp", r.timestamp},
              {"version", r.version}};
}

DatasetRecord record_from_json(const json& j) {
  DatasetRecord r;
  r.program = j.at("program");
  r.schedule = j.at("schedule");
  r.baseline_median_ns = j.at("baseline_median_ns").get<std::int64_t>();
  r.transformed_median_ns = j.at("transformed_median_ns").get<std::int64_t>();
  r.speedup = j.at("speedup").get<double>();
  r.generator_seed = j.at("generator_seed").get<std::uint64_t>();
  r.timestamp = j.at("timestamp").get<std::string>();
  r.version = j.at("version").get<std::string>();
  return r;
}

std::vector<DatasetRecord> read_jsonl(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open dataset " + path);
  std::vector<DatasetRecord> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    out.push_back(record_from_json(json::parse(line)));
  }
  return out;
}

void append_jsonl(const std::string& path, const std::vector<DatasetRecord>& records) {
  std::ofstream os(path, std::ios::app);
  if (!os) throw std::runtime_error("cannot append to " + path);
  for (const DatasetRecord& r : records) os << to_json(r).dump() << "\n";
}

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::set<std::uint64_t> read_journal(const std::string& path) {
  std::set<std::uint64_t> done;
  std::ifstream is(path);
  std::string line;
  while (is && std::getline(is, line))
    if (!line.empty()) done.insert(std::stoull(line));
  return done;
}

}  // namespace

BuildStats build_dataset(const BuildConfig& cfg, const std::string& out_path) {
  const std::string journal_path = out_path + ".journal";
  const std::set<std::uint64_t> done = read_journal(journal_path);

  // Drop any half-written program group from an interrupted run.
  if (std::filesystem::exists(out_path)) {
    std::vector<DatasetRecord> kept;
    for (const DatasetRecord& r : read_jsonl(out_path))
      if (done.count(r.generator_seed)) kept.push_back(r);
    std::ofstream os(out_path, std::ios::trunc);
    for (const DatasetRecord& r : kept) os << to_json(r).dump() << "\n";
  }

  exec::Executor ex(cfg.workers);
  BuildStats stats;
  for (int i = 0; i < cfg.programs; ++i) {
    const std::uint64_t pseed = generator::derive_seed(cfg.gen.seed, i);
    if (done.count(pseed)) {
      ++stats.programs_skipped_resume;
      ++stats.programs_done;
      continue;
    }

    // Regenerate with a larger iteration budget while the baseline is too
    // fast to time reliably.
    generator::GeneratorConfig gen = cfg.gen;
    gen.seed = pseed;
    const auto take = [&](const ir::Program& prog, const exec::BufferSet& in) {
      if (cfg.deterministic_cost) {
        exec::Measurement m;
        m.runs = 1;
        m.median_ns = ex.deterministic_cost(prog);
        m.times_ns = {m.median_ns};
        return m;
      }
      return ex.measure(prog, in, cfg.runs);
    };

    ir::Program program = generator::generate_program(gen);
    exec::BufferSet inputs = exec::random_inputs(program, pseed);
    exec::Measurement baseline = take(program, inputs);
    for (int attempt = 1; !cfg.deterministic_cost &&
                          baseline.median_ns < cfg.min_baseline_ns &&
                          attempt <= cfg.max_regen_attempts;
         ++attempt) {
      gen.min_iterations *= 4;
      gen.max_iterations *= 4;
      program = generator::generate_program(gen);
      inputs = exec::random_inputs(program, pseed);
      baseline = take(program, inputs);
    }

    std::vector<DatasetRecord> group;
    const json program_json = ir::to_json(program);
    for (const transforms::Schedule& sched : generator::generate_schedules(program, gen)) {
      try {
        const ir::Program transformed = transforms::apply(program, sched);
        const exec::Measurement m = take(transformed, inputs);
        if (cfg.paired_baseline && !cfg.deterministic_cost) baseline = take(program, inputs);
        DatasetRecord r;
        r.program = program_json;
        r.schedule = transforms::to_json(sched);
        r.baseline_median_ns = baseline.median_ns;
        r.transformed_median_ns = m.median_ns;
        r.speedup = exec::speedup(baseline, m);
        r.generator_seed = pseed;
        r.timestamp = utc_now();
        r.version = kVersion;
        group.push_back(std::move(r));
      } catch (const std::exception& e) {
        ++stats.schedules_failed;
        std::cerr << "dataset: skipping schedule on program " << pseed << ": " << e.what()
                  << "\n";
      }
    }

    append_jsonl(out_path, group);
    {
      std::ofstream js(journal_path, std::ios::app);
      js << pseed << "\n";
    }
    stats.records_written += static_cast<int>(group.size());
    ++stats.programs_done;
    if (cfg.verbose)
      std::cerr << "dataset: program " << (i + 1) << "/" << cfg.programs << " baseline "
                << baseline.median_ns / 1000 << "us, " << group.size() << " records\n";
  }
  return stats;
}

SplitResult split(const std::vector<DatasetRecord>& records, std::uint64_t seed) {
  if (records.empty()) throw std::runtime_error("cannot split an empty dataset");
  std::vector<std::uint64_t> uids;
  std::set<std::uint64_t> seen;
  for (const DatasetRecord& r : records)
    if (seen.insert(r.generator_seed).second) uids.push_back(r.generator_seed);

  std::mt19937_64 rng(seed);
  for (std::size_t i = uids.size(); i > 1; --i) std::swap(uids[i - 1], uids[rng() % i]);

  const std::size_t n = uids.size();
  const std::size_t n_train = static_cast<std::size_t>(0.6 * static_cast<double>(n));
  const std::size_t n_val = static_cast<std::size_t>(0.2 * static_cast<double>(n));
  std::map<std::uint64_t, int> side;  // 0 train, 1 val, 2 test
  for (std::size_t i = 0; i < n; ++i) side[uids[i]] = i < n_train ? 0 : (i < n_train + n_val ? 1 : 2);

  SplitResult out;
  for (const DatasetRecord& r : records) {
    switch (side.at(r.generator_seed)) {
      case 0: out.train.push_back(r); break;
      case 1: out.validation.push_back(r); break;
      default: out.test.push_back(r); break;
    }
  }
  return out;
}

std::vector<std::vector<int>> batch_by_structure(const std::vector<DatasetRecord>& records,
                                                 int batch_size) {
  // Parse each distinct program once.
  std::map<std::uint64_t, ir::Program> programs;
  std::map<std::string, std::vector<int>> groups;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const DatasetRecord& r = records[i];
    auto it = programs.find(r.generator_seed);
    if (it == programs.end())
      it = programs.emplace(r.generator_seed, ir::program_from_json(r.program)).first;
    const transforms::Schedule sched = transforms::schedule_from_json(r.schedule);
    const std::string structure =
        ir::derive_tree(transforms::fused_structure(it->second, sched)).signature();
    groups[std::to_string(r.generator_seed) + "|" + structure].push_back(static_cast<int>(i));
  }

  std::vector<std::vector<int>> batches;
  for (const auto& [key, idxs] : groups)
    for (std::size_t at = 0; at < idxs.size(); at += batch_size)
      batches.emplace_back(
          idxs.begin() + at,
          idxs.begin() + at + std::min<std::size_t>(batch_size, idxs.size() - at));
  return batches;
}

std::vector<model::TrainExample> to_examples(const std::vector<DatasetRecord>& records) {
  std::map<std::uint64_t, ir::Program> programs;
  std::vector<model::TrainExample> out;
  out.reserve(records.size());
  for (const DatasetRecord& r : records) {
    auto it = programs.find(r.generator_seed);
    if (it == programs.end())
      it = programs.emplace(r.generator_seed, ir::program_from_json(r.program)).first;
    model::TrainExample e;
    e.tree = features::encode_program(it->second, transforms::schedule_from_json(r.schedule));
    e.target = r.speedup;
    e.group = std::to_string(r.generator_seed);
    out.push_back(std::move(e));
  }
  return out;
}

void speedup_histogram_csv(const std::vector<DatasetRecord>& records, const std::string& path,
                           int bins) {
  double hi = 0;
  for (const DatasetRecord& r : records) hi = std::max(hi, r.speedup);
  if (hi <= 0) hi = 1.0;
  std::vector<int> counts(bins, 0);
  for (const DatasetRecord& r : records) {
    int b = static_cast<int>(r.speedup / hi * bins);
    counts[std::min(b, bins - 1)]++;
  }
  std::ofstream os(path);
  os << "bin_low,bin_high,count\n";
  for (int b = 0; b < bins; ++b)
    os << (hi * b / bins) << "," << (hi * (b + 1) / bins) << "," << counts[b] << "\n";
}

}  // namespace tinysched::dataset
