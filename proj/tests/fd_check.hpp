#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "lcr/policy.hpp"

namespace lcr_test {

// Central finite differences over every parameter coordinate, compared to
// the analytic gradient by norm: ||g - fd|| / max(||g||, ||fd||, floor).
inline double gradient_rel_error(
    const std::function<double(const lcr::policy::PolicyParams&)>& value_fn,
    const lcr::policy::PolicyParams& at,
    const std::vector<double>& analytic_grad, double eps = 1e-4) {
  lcr::policy::PolicyParams probe = at;
  std::vector<double> fd(analytic_grad.size(), 0.0);
  for (size_t i = 0; i < fd.size(); ++i) {
    const double saved = probe.values[i];
    probe.values[i] = saved + eps;
    const double up = value_fn(probe);
    probe.values[i] = saved - eps;
    const double down = value_fn(probe);
    probe.values[i] = saved;
    fd[i] = (up - down) / (2.0 * eps);
  }
  double diff2 = 0.0, g2 = 0.0, fd2 = 0.0;
  for (size_t i = 0; i < fd.size(); ++i) {
    const double d = analytic_grad[i] - fd[i];
    diff2 += d * d;
    g2 += analytic_grad[i] * analytic_grad[i];
    fd2 += fd[i] * fd[i];
  }
  const double denom = std::max({std::sqrt(g2), std::sqrt(fd2), 1e-12});
  return std::sqrt(diff2) / denom;
}

}  // namespace lcr_test
