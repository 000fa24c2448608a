#include "teamrl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "teamrl/common.hpp"

namespace teamrl {

double circle_overlap_area(double d, double r1, double r2) {
  if (r1 <= 0.0 || r2 <= 0.0) throw Error("circle_overlap_area: radii must be positive");
  if (d >= r1 + r2) return 0.0;
  const double r_small = std::min(r1, r2);
  if (d <= std::abs(r1 - r2)) return std::numbers::pi * r_small * r_small;
  // standard two-circle lens
  const double a1 = r1 * r1 * std::acos((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1));
  const double a2 = r2 * r2 * std::acos((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2));
  const double k = (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2);
  return a1 + a2 - 0.5 * std::sqrt(std::max(k, 0.0));
}

double pairwise_overlap(const Eigen::Matrix<double, Eigen::Dynamic, 2>& positions,
                        const Eigen::VectorXd& radii) {
  const Eigen::Index n = positions.rows();
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = (positions.row(i) - positions.row(j)).norm();
      total += circle_overlap_area(d, radii(i), radii(j));
    }
  return total;
}

bool connectivity_check(const Eigen::Matrix<double, Eigen::Dynamic, 2>& positions,
                        const Eigen::VectorXd& radii) {
  const Eigen::Index n = positions.rows();
  if (n <= 1) return true;
  std::vector<Eigen::Index> stack{0};
  std::vector<bool> seen(static_cast<size_t>(n), false);
  seen[0] = true;
  Eigen::Index reached = 1;
  while (!stack.empty()) {
    const Eigen::Index i = stack.back();
    stack.pop_back();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (seen[static_cast<size_t>(j)]) continue;
      const double d = (positions.row(i) - positions.row(j)).norm();
      if (d <= radii(i) + radii(j)) {
        seen[static_cast<size_t>(j)] = true;
        stack.push_back(j);
        ++reached;
      }
    }
  }
  return reached == n;
}

double min_pairwise_distance(const Eigen::Matrix<double, Eigen::Dynamic, 2>& positions) {
  const Eigen::Index n = positions.rows();
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      best = std::min(best, (positions.row(i) - positions.row(j)).norm());
  return best;
}

}  // namespace teamrl
