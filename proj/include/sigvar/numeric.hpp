#pragma once

#include <cstddef>
#include <span>

namespace sigvar {

/// Pairwise (tree) summation. The reduction order depends only on the length,
/// so sums are reproducible bit for bit.
template <typename F>
double pairwise_sum(std::size_t n, F&& term) {
  constexpr std::size_t kLeaf = 16;
  auto rec = [&](auto&& self, std::size_t lo, std::size_t hi) -> double {
    if (hi - lo <= kLeaf) {
      double s = 0.0;
      for (std::size_t i = lo; i < hi; ++i) s += term(i);
      return s;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    return self(self, lo, mid) + self(self, mid, hi);
  };
  return n == 0 ? 0.0 : rec(rec, 0, n);
}

inline double pairwise_sum(std::span<const double> v) {
  return pairwise_sum(v.size(), [v](std::size_t i) { return v[i]; });
}

}  // namespace sigvar
