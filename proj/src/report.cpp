#include "mtl/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "mtl/metrics.hpp"

namespace mtl {

using nlohmann::json;

namespace {

constexpr int kRegressionBins = 20;

json regression_histogram(const std::vector<double>& y) {
  const auto [lo_it, hi_it] = std::minmax_element(y.begin(), y.end());
  const double lo = *lo_it, hi = *hi_it;
  std::vector<std::size_t> counts(kRegressionBins, 0);
  std::vector<double> edges(kRegressionBins + 1);
  for (int b = 0; b <= kRegressionBins; ++b) edges[b] = lo + (hi - lo) * b / kRegressionBins;
  for (double v : y) {
    int bin = hi > lo ? static_cast<int>((v - lo) / (hi - lo) * kRegressionBins) : 0;
    counts[static_cast<std::size_t>(std::clamp(bin, 0, kRegressionBins - 1))]++;
  }
  return {{"bin_edges", edges}, {"counts", counts}};
}

std::string fmt(double v, const char* spec) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

json distribution_report(const Dataset& ds) {
  ds.validate();
  const std::size_t n = ds.n_samples();
  json outcomes = json::array();
  for (const auto& o : ds.outcomes) {
    json entry = {{"task", o.task_name}};
    if (o.kind == TaskKind::classification) {
      std::vector<std::size_t> counts(static_cast<std::size_t>(o.num_classes), 0);
      for (int y : o.labels) counts[static_cast<std::size_t>(y)]++;
      entry["kind"] = "classification";
      entry["class_counts"] = counts;
    } else {
      entry["kind"] = "regression";
      entry["histogram"] = regression_histogram(o.targets);
    }
    outcomes.push_back(entry);
  }

  json by_class = json::array();
  for (const auto& c : ds.outcomes) {
    if (c.kind != TaskKind::classification) continue;
    for (const auto& r : ds.outcomes) {
      if (r.kind != TaskKind::regression) continue;
      json classes = json::array();
      for (int k = 0; k < c.num_classes; ++k) {
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < n; ++i)
          if (c.labels[i] == k) {
            sum += r.targets[i];
            ++count;
          }
        double mean = std::numeric_limits<double>::quiet_NaN();
        double sd = mean;
        if (count > 0) {
          mean = sum / static_cast<double>(count);
          double ss = 0.0;
          for (std::size_t i = 0; i < n; ++i)
            if (c.labels[i] == k) ss += (r.targets[i] - mean) * (r.targets[i] - mean);
          sd = std::sqrt(ss / static_cast<double>(count));
        }
        classes.push_back({{"class", k}, {"count", count}, {"mean", number_or_null(mean)},
                           {"std", number_or_null(sd)}});
      }
      by_class.push_back({{"classification_task", c.task_name},
                          {"regression_task", r.task_name},
                          {"classes", classes}});
    }
  }

  json contingency = json::array();
  for (std::size_t a = 0; a < ds.n_tasks(); ++a) {
    const auto& ta = ds.outcomes[a];
    if (ta.kind != TaskKind::classification) continue;
    for (std::size_t b = a + 1; b < ds.n_tasks(); ++b) {
      const auto& tb = ds.outcomes[b];
      if (tb.kind != TaskKind::classification) continue;
      std::vector<std::vector<std::size_t>> table(
          static_cast<std::size_t>(ta.num_classes),
          std::vector<std::size_t>(static_cast<std::size_t>(tb.num_classes), 0));
      for (std::size_t i = 0; i < n; ++i)
        table[static_cast<std::size_t>(ta.labels[i])][static_cast<std::size_t>(tb.labels[i])]++;
      contingency.push_back({{"row_task", ta.task_name}, {"col_task", tb.task_name}, {"table", table}});
    }
  }

  return {{"n_samples", n},
          {"outcomes", outcomes},
          {"regression_by_class", by_class},
          {"contingency", contingency}};
}

std::string render_distribution_report(const json& report) {
  std::ostringstream out;
  out << "Samples: " << report.at("n_samples").get<std::size_t>() << "\n\n";
  for (const auto& o : report.at("outcomes")) {
    out << o.at("task").get<std::string>() << " (" << o.at("kind").get<std::string>() << ")\n";
    if (o.contains("class_counts")) {
      const auto counts = o.at("class_counts").get<std::vector<std::size_t>>();
      for (std::size_t k = 0; k < counts.size(); ++k)
        out << "  class " << k << ": " << counts[k] << '\n';
    } else {
      const auto edges = o.at("histogram").at("bin_edges").get<std::vector<double>>();
      const auto counts = o.at("histogram").at("counts").get<std::vector<std::size_t>>();
      for (std::size_t b = 0; b < counts.size(); ++b)
        out << "  [" << fmt(edges[b], "%9.3f") << ", " << fmt(edges[b + 1], "%9.3f") << ") "
            << std::string(counts[b], '#') << ' ' << counts[b] << '\n';
    }
    out << '\n';
  }
  for (const auto& e : report.at("regression_by_class")) {
    out << e.at("regression_task").get<std::string>() << " by "
        << e.at("classification_task").get<std::string>() << '\n';
    for (const auto& c : e.at("classes")) {
      out << "  class " << c.at("class").get<int>() << " (n=" << c.at("count").get<std::size_t>()
          << "): ";
      if (c.at("mean").is_null())
        out << "-\n";
      else
        out << "mean " << fmt(c.at("mean").get<double>(), "%.4f") << ", std "
            << fmt(c.at("std").get<double>(), "%.4f") << '\n';
    }
    out << '\n';
  }
  for (const auto& e : report.at("contingency")) {
    out << e.at("row_task").get<std::string>() << " (rows) x " << e.at("col_task").get<std::string>()
        << " (columns)\n";
    for (const auto& row : e.at("table")) {
      out << ' ';
      for (const auto& cell : row) out << ' ' << fmt(static_cast<double>(cell.get<std::size_t>()), "%6.0f");
      out << '\n';
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace mtl
