#pragma once

#include <stdexcept>
#include <string>

#include "tomcat/core/binio.hpp"
#include "tomcat/core/types.hpp"

namespace tomcat {

// Forward-process variance schedule; alpha_bar is the running product of the
// per-step alphas and is strictly decreasing. Step indices are 1-based;
// abar(0) == 1 is the clean-data boundary.
struct DiffusionSchedule {
  int K = 0;
  std::string kind;
  VectorXd alpha;      // alpha[k-1] for step k
  VectorXd alpha_bar;  // alpha_bar[k-1] for step k

  double abar(int k) const {
    if (k < 0 || k > K) throw std::out_of_range("schedule: step out of range");
    return k == 0 ? 1.0 : alpha_bar[k - 1];
  }

  void save(ArchiveWriter& w, const std::string& prefix) const;
  static DiffusionSchedule load(const Archive& ar, const std::string& prefix);
};

// kind: "cosine" (default) or "linear".
DiffusionSchedule make_schedule(int K, const std::string& kind = "cosine");

// Closed-form forward process: x_k = sqrt(abar_k) x0 + sqrt(1-abar_k) eps.
template <class S>
MatX<S> q_sample(const MatX<S>& x0, int k, const MatX<S>& eps, const DiffusionSchedule& sched) {
  if (k < 0 || k > sched.K) throw std::out_of_range("q_sample: step out of range");
  if (eps.rows() != x0.rows() || eps.cols() != x0.cols())
    throw std::invalid_argument("q_sample: noise shape mismatch");
  const double ab = sched.abar(k);
  return (std::sqrt(ab) * x0.array() + std::sqrt(1.0 - ab) * eps.array()).matrix();
}

}  // namespace tomcat
