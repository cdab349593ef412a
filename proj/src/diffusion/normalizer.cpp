#include "tomcat/diffusion/normalizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tomcat {

Normalizer Normalizer::fit(const MatrixXf& samples, int max_knots) {
  if (samples.rows() < 1) throw std::invalid_argument("normalizer: no samples");
  const int dims = static_cast<int>(samples.cols());
  const Eigen::Index n = samples.rows();
  Normalizer nm;
  nm.knots_.resize(dims);
  nm.cdf_.resize(dims);

  std::vector<double> col(static_cast<size_t>(n));
  for (int d = 0; d < dims; ++d) {
    for (Eigen::Index i = 0; i < n; ++i) col[static_cast<size_t>(i)] = samples(i, d);
    std::sort(col.begin(), col.end());

    std::vector<double> values, heights;
    size_t i = 0;
    while (i < col.size()) {
      size_t j = i;
      while (j + 1 < col.size() && col[j + 1] == col[i]) ++j;
      values.push_back(col[i]);
      heights.push_back(n > 1 ? (static_cast<double>(i) + static_cast<double>(j)) / 2.0 /
                                    static_cast<double>(n - 1)
                              : 0.5);
      i = j + 1;
    }
    if (values.size() == 1) {
      nm.knots_[d] = {values[0]};
      nm.cdf_[d] = {0.5};
      continue;
    }
    heights.front() = 0.0;
    heights.back() = 1.0;

    if (static_cast<int>(values.size()) > max_knots) {
      std::vector<double> sv, sh;
      for (int q = 0; q < max_knots; ++q) {
        size_t idx = static_cast<size_t>(
            std::llround(static_cast<double>(q) * (values.size() - 1) / (max_knots - 1)));
        sv.push_back(values[idx]);
        sh.push_back(heights[idx]);
      }
      values = std::move(sv);
      heights = std::move(sh);
    }
    nm.knots_[d] = std::move(values);
    nm.cdf_[d] = std::move(heights);
  }
  return nm;
}

double Normalizer::apply1(int dim, double x) const {
  const auto& v = knots_[dim];
  const auto& u = cdf_[dim];
  if (v.size() == 1) return 0.0;  // constant dimension
  if (x <= v.front()) return -1.0;
  if (x >= v.back()) return 1.0;
  auto it = std::upper_bound(v.begin(), v.end(), x);
  size_t j = static_cast<size_t>(it - v.begin());  // v[j-1] <= x < v[j]
  double t = (x - v[j - 1]) / (v[j] - v[j - 1]);
  double uu = u[j - 1] + t * (u[j] - u[j - 1]);
  return 2.0 * uu - 1.0;
}

double Normalizer::invert1(int dim, double y) const {
  const auto& v = knots_[dim];
  const auto& u = cdf_[dim];
  if (v.size() == 1) return v[0];
  double uu = std::clamp((y + 1.0) / 2.0, 0.0, 1.0);
  auto it = std::upper_bound(u.begin(), u.end(), uu);
  if (it == u.begin()) return v.front();
  if (it == u.end()) return v.back();
  size_t j = static_cast<size_t>(it - u.begin());
  double span = u[j] - u[j - 1];
  double t = span > 0 ? (uu - u[j - 1]) / span : 0.0;
  return v[j - 1] + t * (v[j] - v[j - 1]);
}

VectorXd Normalizer::apply(const VectorXd& x) const {
  if (x.size() != dims()) throw std::invalid_argument("normalizer: dimension mismatch");
  VectorXd out(x.size());
  for (int d = 0; d < dims(); ++d) out[d] = apply1(d, x[d]);
  return out;
}

VectorXd Normalizer::invert(const VectorXd& y) const {
  if (y.size() != dims()) throw std::invalid_argument("normalizer: dimension mismatch");
  VectorXd out(y.size());
  for (int d = 0; d < dims(); ++d) out[d] = invert1(d, y[d]);
  return out;
}

MatrixXf Normalizer::apply_rows(const MatrixXf& rows) const {
  if (rows.cols() != dims()) throw std::invalid_argument("normalizer: dimension mismatch");
  MatrixXf out(rows.rows(), rows.cols());
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    for (int d = 0; d < dims(); ++d) out(i, d) = static_cast<float>(apply1(d, rows(i, d)));
  return out;
}

MatrixXf Normalizer::invert_rows(const MatrixXf& rows) const {
  if (rows.cols() != dims()) throw std::invalid_argument("normalizer: dimension mismatch");
  MatrixXf out(rows.rows(), rows.cols());
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    for (int d = 0; d < dims(); ++d) out(i, d) = static_cast<float>(invert1(d, rows(i, d)));
  return out;
}

double Normalizer::knot_spacing(int dim) const {
  const auto& v = knots_[dim];
  double worst = 0;
  for (size_t j = 1; j < v.size(); ++j) worst = std::max(worst, v[j] - v[j - 1]);
  return worst;
}

void Normalizer::save(ArchiveWriter& w, const std::string& prefix) const {
  w.put_i32(prefix + "dims", {dims()});
  for (int d = 0; d < dims(); ++d) {
    MatrixXd m(2, static_cast<Eigen::Index>(knots_[d].size()));
    for (size_t j = 0; j < knots_[d].size(); ++j) {
      m(0, static_cast<Eigen::Index>(j)) = knots_[d][j];
      m(1, static_cast<Eigen::Index>(j)) = cdf_[d][j];
    }
    w.put_f64(prefix + "dim" + std::to_string(d), m);
  }
}

Normalizer Normalizer::load(const Archive& ar, const std::string& prefix) {
  Normalizer nm;
  int dims = ar.get_i32(prefix + "dims")[0];
  nm.knots_.resize(dims);
  nm.cdf_.resize(dims);
  for (int d = 0; d < dims; ++d) {
    MatrixXd m = ar.get_f64(prefix + "dim" + std::to_string(d));
    nm.knots_[d].resize(static_cast<size_t>(m.cols()));
    nm.cdf_[d].resize(static_cast<size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      nm.knots_[d][static_cast<size_t>(j)] = m(0, j);
      nm.cdf_[d][static_cast<size_t>(j)] = m(1, j);
    }
  }
  return nm;
}

}  // namespace tomcat
