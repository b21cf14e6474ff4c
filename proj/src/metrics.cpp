#include "tinysched/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

namespace tinysched::metrics {

double mape(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
  if (y.size() != yhat.size() || y.size() == 0)
    throw std::invalid_argument("mape: length mismatch");
  double total = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] <= 0) throw NonPositiveTarget("mape: targets must be positive");
    total += std::abs(y[i] - yhat[i]) / y[i];
  }
  return total / static_cast<double>(y.size());
}

double pearson(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
  if (y.size() != yhat.size() || y.size() < 2)
    throw std::invalid_argument("pearson: need two aligned samples");
  const Eigen::VectorXd a = y.array() - y.mean();
  const Eigen::VectorXd b = yhat.array() - yhat.mean();
  const double va = a.squaredNorm();
  const double vb = b.squaredNorm();
  if (va == 0 || vb == 0) throw ZeroVariance("pearson: constant input");
  return a.dot(b) / std::sqrt(va * vb);
}

std::vector<double> average_ranks(const Eigen::VectorXd& v) {
  const std::size_t n = static_cast<std::size_t>(v.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return v[a] < v[b]; });
  std::vector<double> ranks(n, 0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[static_cast<std::size_t>(order[k])] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
  const std::vector<double> ry = average_ranks(y);
  const std::vector<double> rh = average_ranks(yhat);
  Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(ry.data(), ry.size());
  Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(rh.data(), rh.size());
  return pearson(a, b);
}

double r2(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
  if (y.size() != yhat.size() || y.size() < 2) throw std::invalid_argument("r2: need samples");
  const double ss_tot = (y.array() - y.mean()).square().sum();
  if (ss_tot == 0) throw ZeroVariance("r2: targets are constant");
  const double ss_res = (y - yhat).squaredNorm();
  return 1.0 - ss_res / ss_tot;
}

EvalReport eval_report(const std::vector<double>& measured, const std::vector<double>& predicted,
                       const std::vector<std::string>& program_uid, int histogram_bins) {
  if (measured.size() != predicted.size() || measured.size() != program_uid.size())
    throw std::invalid_argument("eval_report: misaligned inputs");
  const Eigen::Map<const Eigen::VectorXd> y(measured.data(), measured.size());
  const Eigen::Map<const Eigen::VectorXd> yh(predicted.data(), predicted.size());

  EvalReport rep;
  rep.mape = mape(y, yh);
  // Degenerate (constant) inputs leave the correlations undefined.
  const auto guarded = [](const std::function<double()>& f) {
    try {
      return f();
    } catch (const ZeroVariance&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  rep.pearson_r = guarded([&] { return pearson(y, yh); });
  rep.spearman_rs = guarded([&] { return spearman(y, yh); });
  rep.r2 = guarded([&] { return r2(y, yh); });
  rep.ape.reserve(measured.size());
  for (std::size_t i = 0; i < measured.size(); ++i)
    rep.ape.push_back(std::abs(measured[i] - predicted[i]) / measured[i]);

  std::map<std::string, std::vector<int>> groups;
  for (std::size_t i = 0; i < program_uid.size(); ++i)
    groups[program_uid[i]].push_back(static_cast<int>(i));
  double spearman_sum = 0;
  int spearman_count = 0;
  for (const auto& [uid, idxs] : groups) {
    if (idxs.size() < 2) continue;
    Eigen::VectorXd gy(idxs.size()), gh(idxs.size());
    for (std::size_t k = 0; k < idxs.size(); ++k) {
      gy[k] = measured[idxs[k]];
      gh[k] = predicted[idxs[k]];
    }
    try {
      PerProgramStats st;
      st.uid = uid;
      st.records = static_cast<int>(idxs.size());
      st.pearson_r = pearson(gy, gh);
      st.spearman_rs = spearman(gy, gh);
      rep.per_program.push_back(st);
      spearman_sum += st.spearman_rs;
      ++spearman_count;
    } catch (const ZeroVariance&) {
      // Constant speedups or predictions within the program; skipped.
    }
  }
  rep.mean_program_spearman = spearman_count ? spearman_sum / spearman_count : 0.0;

  double max_ape = 0;
  for (double a : rep.ape) max_ape = std::max(max_ape, a);
  rep.ape_bin_width = max_ape > 0 ? max_ape / histogram_bins : 1.0;
  rep.ape_histogram.assign(histogram_bins, 0);
  for (double a : rep.ape) {
    int b = static_cast<int>(a / rep.ape_bin_width);
    rep.ape_histogram[std::min(b, histogram_bins - 1)]++;
  }
  return rep;
}

namespace {

// Minimal self-contained SVG emitters.
std::string svg_header(int w, int h) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" viewBox=\"0 0 " << w << " " << h << "\">\n"
     << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  return os.str();
}

void write_sorted_curve_svg(const std::string& path, std::vector<double> measured,
                            std::vector<double> predicted) {
  const int W = 900, H = 420, pad = 40;
  std::vector<int> order(measured.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return measured[a] < measured[b]; });
  double hi = 1e-9;
  for (std::size_t i = 0; i < measured.size(); ++i)
    hi = std::max({hi, measured[i], predicted[i]});

  const auto xmap = [&](std::size_t i) {
    return pad + (W - 2.0 * pad) * static_cast<double>(i) /
                     std::max<std::size_t>(1, measured.size() - 1);
  };
  const auto ymap = [&](double v) { return H - pad - (H - 2.0 * pad) * v / hi; };

  std::ofstream os(path);
  os << svg_header(W, H);
  os << "<line x1=\"" << pad << "\" y1=\"" << H - pad << "\" x2=\"" << W - pad << "\" y2=\""
     << H - pad << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\"" << H - pad
     << "\" stroke=\"black\"/>\n";
  for (int series = 0; series < 2; ++series) {
    os << "<polyline fill=\"none\" stroke=\"" << (series == 0 ? "#1f77b4" : "#ff7f0e")
       << "\" stroke-width=\"1\" points=\"";
    for (std::size_t i = 0; i < order.size(); ++i) {
      const double v = series == 0 ? measured[order[i]] : predicted[order[i]];
      os << xmap(i) << "," << ymap(v) << " ";
    }
    os << "\"/>\n";
  }
  os << "<text x=\"" << pad << "\" y=\"20\" font-size=\"13\">sorted speedups: measured (blue) "
        "vs predicted (orange)</text>\n</svg>\n";
}

void write_histogram_svg(const std::string& path, const std::vector<int>& counts,
                         double bin_width) {
  const int W = 900, H = 420, pad = 40;
  int hi = 1;
  for (int c : counts) hi = std::max(hi, c);
  const double bw = (W - 2.0 * pad) / counts.size();
  std::ofstream os(path);
  os << svg_header(W, H);
  for (std::size_t b = 0; b < counts.size(); ++b) {
    const double h = (H - 2.0 * pad) * counts[b] / hi;
    os << "<rect x=\"" << pad + b * bw << "\" y=\"" << H - pad - h << "\" width=\"" << bw * 0.9
       << "\" height=\"" << h << "\" fill=\"#1f77b4\"/>\n";
  }
  os << "<text x=\"" << pad << "\" y=\"20\" font-size=\"13\">APE histogram (bin width "
     << bin_width << ")</text>\n</svg>\n";
}

}  // namespace

void write_report(const EvalReport& rep, const std::vector<double>& measured,
                  const std::vector<double>& predicted,
                  const std::vector<std::string>& program_uid, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  const auto num_or_null = [](double v) {
    return std::isnan(v) ? nlohmann::json() : nlohmann::json(v);
  };
  nlohmann::json j{{"mape", rep.mape},
                   {"pearson", num_or_null(rep.pearson_r)},
                   {"spearman", num_or_null(rep.spearman_rs)},
                   {"r2", num_or_null(rep.r2)},
                   {"records", measured.size()},
                   {"programs_with_stats", rep.per_program.size()},
                   {"mean_program_spearman", rep.mean_program_spearman}};
  std::ofstream(out_dir + "/report.json") << j.dump(2) << "\n";

  {
    std::vector<int> order(measured.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return measured[a] < measured[b]; });
    std::ofstream os(out_dir + "/sorted_curve.csv");
    os << std::setprecision(17);
    os << "index,measured,predicted\n";
    for (std::size_t i = 0; i < order.size(); ++i)
      os << i << "," << measured[order[i]] << "," << predicted[order[i]] << "\n";
  }
  {
    std::ofstream os(out_dir + "/ape_histogram.csv");
    os << std::setprecision(17);
    os << "bin_low,bin_high,count\n";
    for (std::size_t b = 0; b < rep.ape_histogram.size(); ++b)
      os << b * rep.ape_bin_width << "," << (b + 1) * rep.ape_bin_width << ","
         << rep.ape_histogram[b] << "\n";
  }
  {
    // Original record order, full precision: the headline stats recompute
    // exactly from this file.
    std::ofstream os(out_dir + "/ape_vs_speedup.csv");
    os << std::setprecision(17);
    os << "measured,predicted,ape\n";
    for (std::size_t i = 0; i < measured.size(); ++i)
      os << measured[i] << "," << predicted[i] << "," << rep.ape[i] << "\n";
  }
  {
    std::ofstream os(out_dir + "/per_program.csv");
    os << std::setprecision(17);
    os << "program,records,pearson,spearman\n";
    for (const PerProgramStats& st : rep.per_program)
      os << st.uid << "," << st.records << "," << st.pearson_r << "," << st.spearman_rs << "\n";
  }
  write_sorted_curve_svg(out_dir + "/sorted_curve.svg", measured, predicted);
  write_histogram_svg(out_dir + "/ape_histogram.svg", rep.ape_histogram, rep.ape_bin_width);
  (void)program_uid;
}

}  // namespace tinysched::metrics
