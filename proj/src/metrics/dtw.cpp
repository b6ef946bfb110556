#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "evc/error.hpp"
#include "evc/kernels.hpp"
#include "evc/metrics.hpp"

namespace evc {

void validate(const AlignmentPath& path, std::size_t n, std::size_t m) {
  if (path.pairs.empty()) fail(ErrorKind::Shape, "empty alignment path");
  if (path.pairs.front() != std::pair<std::size_t, std::size_t>{0, 0})
    fail(ErrorKind::Shape, "alignment path must start at (0,0)");
  if (path.pairs.back() != std::pair<std::size_t, std::size_t>{n - 1, m - 1})
    fail(ErrorKind::Shape, "alignment path must end at (" + std::to_string(n - 1) + "," + std::to_string(m - 1) + ")");
  for (std::size_t k = 1; k < path.pairs.size(); ++k) {
    const auto [pi, pj] = path.pairs[k - 1];
    const auto [ci, cj] = path.pairs[k];
    const std::size_t di = ci - pi, dj = cj - pj;
    if (ci < pi || cj < pj || di > 1 || dj > 1 || (di == 0 && dj == 0))
      fail(ErrorKind::Shape, "invalid alignment step at position " + std::to_string(k));
  }
}

AlignmentPath diagonal_path(std::size_t n) {
  AlignmentPath p;
  p.pairs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) p.pairs.emplace_back(i, i);
  return p;
}

AlignmentPath dtw_align(const FeatureSequence& a, const FeatureSequence& b) {
  if (a.dim() != b.dim())
    fail(ErrorKind::Shape, "dtw_align: dimension " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
  const std::size_t n = a.n_frames(), m = b.n_frames(), dim = a.dim();
  const Matrix bt = b.data().transposed();
  const auto& k = kernels::active();

  Matrix acc(n, m);
  std::vector<double> dist(m);
  for (std::size_t i = 0; i < n; ++i) {
    k.sq_dist_row(a.data().row(i).data(), bt.data().data(), dim, m, dist.data());
    for (std::size_t j = 0; j < m; ++j) {
      const double d = std::sqrt(dist[j]);
      double best;
      if (i == 0 && j == 0) {
        best = 0.0;
      } else {
        best = std::numeric_limits<double>::infinity();
        if (i > 0 && j > 0) best = std::min(best, acc(i - 1, j - 1));
        if (i > 0) best = std::min(best, acc(i - 1, j));
        if (j > 0) best = std::min(best, acc(i, j - 1));
      }
      acc(i, j) = d + best;
    }
  }

  AlignmentPath path;
  path.cost = acc(n - 1, m - 1);
  std::size_t i = n - 1, j = m - 1;
  path.pairs.emplace_back(i, j);
  while (i > 0 || j > 0) {
    if (i == 0) {
      --j;
    } else if (j == 0) {
      --i;
    } else {
      const double diag = acc(i - 1, j - 1), up = acc(i - 1, j), left = acc(i, j - 1);
      const double best = std::min(diag, std::min(up, left));
      if (diag == best) {
        --i;
        --j;
      } else if (up == best) {
        --i;
      } else {
        --j;
      }
    }
    path.pairs.emplace_back(i, j);
  }
  std::reverse(path.pairs.begin(), path.pairs.end());
  return path;
}

}  // namespace evc
