#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace tinysched::metrics {

struct ZeroVariance : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonPositiveTarget : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Mean of |y - yhat| / y; same accumulation as the training loss.
double mape(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat);
double pearson(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat);
/// Pearson correlation of average-ranked values.
double spearman(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat);
double r2(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat);

std::vector<double> average_ranks(const Eigen::VectorXd& v);

struct PerProgramStats {
  std::string uid;
  int records = 0;
  double pearson_r = 0;
  double spearman_rs = 0;
};

struct EvalReport {
  double mape = 0;
  double pearson_r = 0;
  double spearman_rs = 0;
  double r2 = 0;
  std::vector<double> ape;  // per record, aligned with the inputs
  std::vector<PerProgramStats> per_program;
  double mean_program_spearman = 0;
  std::vector<int> ape_histogram;
  double ape_bin_width = 0;
};

/// program_uid groups records for the per-program coefficients; programs
/// with fewer than two records or zero variance are skipped there.
EvalReport eval_report(const std::vector<double>& measured, const std::vector<double>& predicted,
                       const std::vector<std::string>& program_uid, int histogram_bins = 50);

/// report.json, four CSVs and two SVG plots under out_dir.
void write_report(const EvalReport& report, const std::vector<double>& measured,
                  const std::vector<double>& predicted,
                  const std::vector<std::string>& program_uid, const std::string& out_dir);

}  // namespace tinysched::metrics
