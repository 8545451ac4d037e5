#pragma once

#include <string>

#include <json.hpp>

#include "mtl/dataset.hpp"

namespace mtl {

/// Outcome distribution summary of a dataset: class counts per
/// classification task, a 20-bin histogram per regression task, the mean and
/// std of every regression target within each class of every classification
/// task, and a contingency table for each pair of classification tasks.
nlohmann::json distribution_report(const Dataset& dataset);

std::string render_distribution_report(const nlohmann::json& report);

}  // namespace mtl
