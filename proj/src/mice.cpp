// Multiple imputation by chained equations, single deterministic chain.
//
// Missing cells start at their column mean. Each sweep visits the incomplete
// columns in ascending order of missing count (ties by schema order), regresses
// the column on every other input column plus an intercept over its observed
// rows, and overwrites its missing cells with the fitted values. The chain stops
// once the largest change to any imputed cell within a sweep is below `tol`, or
// after `max_sweeps` sweeps.

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mtl/dataset.hpp"

namespace mtl {

namespace {

constexpr double kRidge = 1e-8;

}  // namespace

RawTable mice_impute(const RawTable& table, int max_sweeps, double tol) {
  if (max_sweeps < 1) throw std::invalid_argument("mice_impute: max_sweeps must be >= 1");
  if (!(tol >= 0.0)) throw std::invalid_argument("mice_impute: tol must be >= 0");

  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < table.n_cols(); ++c)
    if (table.schema[c].is_input()) cols.push_back(c);
  if (cols.empty()) throw std::invalid_argument("mice_impute: no input columns");

  const std::size_t n = table.n_rows();
  const std::size_t p = cols.size();
  Matrix x = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  std::vector<std::vector<std::size_t>> missing_rows(p), observed_rows(p);

  for (std::size_t j = 0; j < p; ++j) {
    const auto& col = table.schema[cols[j]];
    double sum = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const auto& cell = table.rows[r][cols[j]];
      if (is_missing(cell)) {
        missing_rows[j].push_back(r);
      } else if (const auto* v = std::get_if<double>(&cell)) {
        x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = *v;
        observed_rows[j].push_back(r);
        sum += *v;
      } else {
        throw std::invalid_argument("mice_impute: column '" + col.name +
                                    "' is not numeric (encode nominal columns first)");
      }
    }
    if (observed_rows[j].size() < 2)
      throw std::invalid_argument("mice_impute: column '" + col.name +
                                  "' has fewer than 2 observed values");
    const double mean = sum / static_cast<double>(observed_rows[j].size());
    for (auto r : missing_rows[j])
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = mean;
  }

  std::vector<std::size_t> order;
  for (std::size_t j = 0; j < p; ++j)
    if (!missing_rows[j].empty()) order.push_back(j);
  if (order.empty()) return table;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return missing_rows[a].size() < missing_rows[b].size();
  });

  // Design row for `r` when predicting column `target`: [1, x_r without target].
  auto design = [&](const std::vector<std::size_t>& rows, std::size_t target) {
    Matrix z(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(p));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto ri = static_cast<Eigen::Index>(rows[i]);
      const auto zi = static_cast<Eigen::Index>(i);
      z(zi, 0) = 1.0;
      Eigen::Index k = 1;
      for (std::size_t j = 0; j < p; ++j)
        if (j != target) z(zi, k++) = x(ri, static_cast<Eigen::Index>(j));
    }
    return z;
  };

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (auto target : order) {
      const auto tcol = static_cast<Eigen::Index>(target);
      const Matrix z_obs = design(observed_rows[target], target);
      Vector y(static_cast<Eigen::Index>(observed_rows[target].size()));
      for (std::size_t i = 0; i < observed_rows[target].size(); ++i)
        y(static_cast<Eigen::Index>(i)) = x(static_cast<Eigen::Index>(observed_rows[target][i]), tcol);

      Matrix normal = z_obs.transpose() * z_obs;
      normal.diagonal().array() += kRidge;
      const Vector rhs = z_obs.transpose() * y;
      const Vector beta = normal.ldlt().solve(rhs);

      const Matrix z_mis = design(missing_rows[target], target);
      const Vector fitted = z_mis * beta;
      if (!fitted.allFinite())
        throw NumericalError("mice_impute: non-finite prediction for column '" +
                             table.schema[cols[target]].name + "'");
      for (std::size_t i = 0; i < missing_rows[target].size(); ++i) {
        const auto r = static_cast<Eigen::Index>(missing_rows[target][i]);
        max_change = std::max(max_change, std::abs(fitted(static_cast<Eigen::Index>(i)) - x(r, tcol)));
        x(r, tcol) = fitted(static_cast<Eigen::Index>(i));
      }
    }
    if (max_change < tol) break;
  }

  RawTable out = table;
  for (std::size_t j = 0; j < p; ++j)
    for (auto r : missing_rows[j])
      out.rows[r][cols[j]] = x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j));
  return out;
}

}  // namespace mtl
