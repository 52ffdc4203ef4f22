#pragma once

#include <vector>

namespace cim {

// Number of subsets of {0..n-1} with size <= K; saturates at cap to avoid
// overflow, so a return value == cap means "at least cap".
long long count_subsets_leq(int n, int K, long long cap);

// Calls f(members) for every size-k subset of {0..n-1}, k fixed, in
// lexicographic member order. members is ascending and reused across calls.
template <typename F>
void for_each_subset_of_size(int n, int k, F&& f) {
  std::vector<int> members(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) members[static_cast<std::size_t>(i)] = i;
  if (k == 0) {
    f(members);
    return;
  }
  if (k > n) return;
  while (true) {
    f(members);
    int i = k - 1;
    while (i >= 0 && members[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) break;
    ++members[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j)
      members[static_cast<std::size_t>(j)] = members[static_cast<std::size_t>(j - 1)] + 1;
  }
}

// All subsets with size <= K, sizes ascending 0..K.
template <typename F>
void for_each_subset_leq(int n, int K, F&& f) {
  for (int k = 0; k <= K; ++k) for_each_subset_of_size(n, k, f);
}

}  // namespace cim
