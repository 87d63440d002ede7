#include "oracles.hpp"

#include <Eigen/Dense>

namespace oracle {

LinregFit normal_equations_fit(const std::vector<std::pair<double, double>>& pts) {
  const auto n = static_cast<double>(pts.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : pts) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  Eigen::Matrix2d a;
  a << n, sx, sx, sxx;
  Eigen::Vector2d b(sy, sxy);
  const Eigen::Vector2d solution = a.fullPivLu().solve(b);
  return LinregFit{solution(1), solution(0)};
}

}  // namespace oracle
