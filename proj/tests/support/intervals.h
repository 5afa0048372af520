#pragma once

// Random occupancy columns made of disjoint z-intervals in [-1, 1].

#include <algorithm>
#include <random>
#include <utility>
#include <vector>

namespace nvs::test {

using Intervals = std::vector<std::pair<double, double>>;

inline Intervals random_intervals(std::mt19937& rng, int max_count) {
  std::uniform_int_distribution<int> count(0, max_count);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> ends(2 * count(rng));
  for (double& e : ends) e = u(rng);
  std::sort(ends.begin(), ends.end());
  Intervals out;
  for (std::size_t i = 0; i + 1 < ends.size(); i += 2) out.emplace_back(ends[i], ends[i + 1]);
  return out;
}

inline bool inside(const Intervals& iv, double z) {
  return std::any_of(iv.begin(), iv.end(), [&](const auto& p) { return z >= p.first && z <= p.second; });
}

}  // namespace nvs::test
