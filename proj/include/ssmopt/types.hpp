#pragma once

#include <complex>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace ssmopt {

using Complex = std::complex<double>;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using SpMat = Eigen::SparseMatrix<double>;

inline constexpr Complex kI{0.0, 1.0};

}  // namespace ssmopt
