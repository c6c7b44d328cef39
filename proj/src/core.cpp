#include "bopo/core.hpp"

#include <algorithm>
#include <numeric>

namespace bopo {

double gap_percent(double obj, double ref_obj) {
  if (!(ref_obj > 0.0)) throw std::domain_error("gap_percent: reference objective must be > 0");
  return 100.0 * (obj - ref_obj) / ref_obj;
}

SortedSolutionSet sort_solutions(const std::vector<Solution>& set) {
  if (set.empty()) throw std::domain_error("sort_solutions: empty input");
  std::vector<int> order(set.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return set[size_t(a)].objective < set[size_t(b)].objective; });
  SortedSolutionSet out;
  out.solutions.reserve(set.size());
  out.sample_index = order;
  for (int i : order) out.solutions.push_back(set[size_t(i)]);
  return out;
}

}  // namespace bopo
