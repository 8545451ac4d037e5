#pragma once

#include <span>

namespace mtl::testing {

// Pairwise concordance with ties counting one half.
inline double brute_force_auc(std::span<const double> s, std::span<const int> y) {
  double concordant = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      pairs += 1.0;
      if (s[i] > s[j]) concordant += 1.0;
      else if (s[i] == s[j]) concordant += 0.5;
    }
  }
  return concordant / pairs;
}

}  // namespace mtl::testing
