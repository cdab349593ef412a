#include "tomcat/diffusion/schedule.hpp"

#include <cmath>

namespace tomcat {

DiffusionSchedule make_schedule(int K, const std::string& kind) {
  if (K < 1) throw std::invalid_argument("schedule: K must be >= 1");
  DiffusionSchedule s;
  s.K = K;
  s.kind = kind;
  s.alpha.resize(K);
  s.alpha_bar.resize(K);

  if (kind == "cosine") {
    const double eps = 0.008;
    auto f = [&](double t) {
      double v = std::cos((t / K + eps) / (1 + eps) * M_PI / 2.0);
      return v * v;
    };
    double prev = 1.0;
    for (int k = 1; k <= K; ++k) {
      double raw = f(k) / f(0);
      double beta = std::min(1.0 - raw / prev, 0.999);
      s.alpha[k - 1] = 1.0 - beta;
      prev = raw;
    }
  } else if (kind == "linear") {
    const double beta0 = 1e-4, beta1 = 0.02;
    for (int k = 1; k <= K; ++k) {
      double beta = K == 1 ? beta0 : beta0 + (beta1 - beta0) * (k - 1) / (K - 1);
      s.alpha[k - 1] = 1.0 - beta;
    }
  } else {
    throw std::invalid_argument("schedule: unknown kind '" + kind + "'");
  }

  double prod = 1.0;
  for (int k = 0; k < K; ++k) {
    prod *= s.alpha[k];
    s.alpha_bar[k] = prod;
  }
  return s;
}

void DiffusionSchedule::save(ArchiveWriter& w, const std::string& prefix) const {
  w.put_string(prefix + "kind", kind);
  w.put_i32(prefix + "K", {K});
  w.put_f64(prefix + "alpha", alpha);
}

DiffusionSchedule DiffusionSchedule::load(const Archive& ar, const std::string& prefix) {
  DiffusionSchedule s;
  s.kind = ar.get_string(prefix + "kind");
  s.K = ar.get_i32(prefix + "K")[0];
  MatrixXd a = ar.get_f64(prefix + "alpha");
  s.alpha = a.col(0);
  s.alpha_bar.resize(s.K);
  double prod = 1.0;
  for (int k = 0; k < s.K; ++k) {
    prod *= s.alpha[k];
    s.alpha_bar[k] = prod;
  }
  return s;
}

}  // namespace tomcat
