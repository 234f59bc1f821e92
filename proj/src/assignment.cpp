#include "gif/assignment.hpp"

#include <limits>

#include "gif/error.hpp"

namespace gif {

std::vector<int> solve_assignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw Error(ErrorKind::SizeMismatch, "assignment needs a square cost matrix");
  constexpr double inf = std::numeric_limits<double>::infinity();
  // row-major copy: the inner loop scans one row at a time
  std::vector<double> C(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) C[std::size_t(i) * n + j] = cost(i, j);

  std::vector<double> u(n, 0.0), v(n, 0.0), dist(n);
  std::vector<int> path(n, -1), col4row(n, -1), row4col(n, -1), remaining(n);
  std::vector<char> SR(n), SC(n);

  for (int cur = 0; cur < n; ++cur) {
    double minval = 0.0;
    int nrem = n;
    for (int it = 0; it < n; ++it) remaining[it] = n - it - 1;
    std::fill(SR.begin(), SR.end(), 0);
    std::fill(SC.begin(), SC.end(), 0);
    std::fill(dist.begin(), dist.end(), inf);
    int sink = -1, i = cur;
    while (sink == -1) {
      int index = -1;
      double lowest = inf;
      SR[i] = 1;
      const double* Ci = &C[std::size_t(i) * n];
      const double base = minval - u[i];
      for (int it = 0; it < nrem; ++it) {
        const int j = remaining[it];
        const double r = base + Ci[j] - v[j];
        if (r < dist[j]) {
          path[j] = i;
          dist[j] = r;
        }
        if (dist[j] < lowest || (dist[j] == lowest && row4col[j] == -1)) {
          lowest = dist[j];
          index = it;
        }
      }
      minval = lowest;
      if (index < 0 || minval == inf) throw Error(ErrorKind::NonFinite, "assignment cost is not finite");
      const int j = remaining[index];
      if (row4col[j] == -1)
        sink = j;
      else
        i = row4col[j];
      SC[j] = 1;
      remaining[index] = remaining[--nrem];
    }
    u[cur] += minval;
    for (int r = 0; r < n; ++r)
      if (SR[r] && r != cur) u[r] += minval - dist[col4row[r]];
    for (int c = 0; c < n; ++c)
      if (SC[c]) v[c] -= minval - dist[c];
    int j = sink;
    while (true) {
      const int r = path[j];
      row4col[j] = r;
      std::swap(col4row[r], j);
      if (r == cur) break;
    }
  }
  return col4row;
}

}  // namespace gif
