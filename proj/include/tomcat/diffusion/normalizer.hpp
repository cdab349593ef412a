#pragma once

#include <vector>

#include "tomcat/core/binio.hpp"
#include "tomcat/core/types.hpp"

namespace tomcat {

// Per-dimension empirical-CDF normalizer mapping the training support onto
// [-1, 1]. Knots are the distinct sample values with mean-rank CDF heights;
// the endpoints are pinned to 0 and 1 so the sample minimum maps to -1 and
// the maximum to +1. Constant dimensions map to 0 and invert back to the
// constant. Out-of-support inputs clamp to the endpoints.
class Normalizer {
 public:
  Normalizer() = default;

  // samples: one row per sample, one column per dimension.
  static Normalizer fit(const MatrixXf& samples, int max_knots = 1024);

  int dims() const { return static_cast<int>(knots_.size()); }

  double apply1(int dim, double x) const;
  double invert1(int dim, double y) const;

  VectorXd apply(const VectorXd& x) const;
  VectorXd invert(const VectorXd& y) const;
  // Rowwise over (rows = steps, cols = dims) matrices.
  MatrixXf apply_rows(const MatrixXf& rows) const;
  MatrixXf invert_rows(const MatrixXf& rows) const;

  // Largest gap between adjacent knots (round-trip error bound) for a dim.
  double knot_spacing(int dim) const;

  void save(ArchiveWriter& w, const std::string& prefix) const;
  static Normalizer load(const Archive& ar, const std::string& prefix);

 private:
  std::vector<std::vector<double>> knots_;  // ascending distinct values
  std::vector<std::vector<double>> cdf_;    // matching heights in [0,1]
};

}  // namespace tomcat
