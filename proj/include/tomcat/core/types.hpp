#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace tomcat {

template <class S> using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S> using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S> using ArrX = Eigen::Array<S, Eigen::Dynamic, 1>;

using MatrixXf = MatX<float>;
using MatrixXd = MatX<double>;
using VectorXf = VecX<float>;
using VectorXd = VecX<double>;

// Fixed dimensions shared across the whole stack.
inline constexpr int kNumActions = 6;
inline constexpr int kObsDim = 33;
inline constexpr int kNumFeatures = 14;
inline constexpr int kAugObsDim = kObsDim + kNumActions;  // obs + teammate prev-action one-hot
inline constexpr int kEmbedDim = 8;                       // e_char / e_mental width

using FeatureVector = Eigen::Matrix<double, kNumFeatures, 1>;
using Observation = VectorXf;

}  // namespace tomcat
