#pragma once

#include <algorithm>
#include <cstddef>

#include <Eigen/Dense>

namespace ictac::linalg {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using ConstMatrixRef = Eigen::Ref<const MatrixXd>;

/// Moore-Penrose pseudoinverse of a symmetric positive semi-definite matrix.
/// Eigenvalues at or below cutoff * lambda_max are treated as zero.
inline MatrixXd pinv_psd(const ConstMatrixRef& g, double cutoff) {
    if (g.size() == 0) return MatrixXd(g.cols(), g.rows());
    const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(g);
    const VectorXd& lambda = eig.eigenvalues();
    const double threshold = cutoff * std::max(lambda.maxCoeff(), 0.0);
    VectorXd inv = VectorXd::Zero(lambda.size());
    for (Index i = 0; i < lambda.size(); ++i) {
        if (lambda(i) > threshold && lambda(i) > 0.0) inv(i) = 1.0 / lambda(i);
    }
    return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

/// General pseudoinverse through a full SVD; reference path for small matrices.
inline MatrixXd pinv(const ConstMatrixRef& a, double cutoff) {
    const Eigen::BDCSVD<MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const VectorXd& s = svd.singularValues();
    const double threshold = s.size() ? cutoff * s(0) : 0.0;
    VectorXd inv = VectorXd::Zero(s.size());
    for (Index i = 0; i < s.size(); ++i) {
        if (s(i) > threshold && s(i) > 0.0) inv(i) = 1.0 / s(i);
    }
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

/// X X^T when `left`, X^T X otherwise. Full symmetric result.
inline MatrixXd gram(const ConstMatrixRef& x, bool left) {
    const Index n = left ? x.rows() : x.cols();
    MatrixXd g = MatrixXd::Zero(n, n);
    if (left) {
        g.selfadjointView<Eigen::Lower>().rankUpdate(x);
    } else {
        g.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
    }
    return g.selfadjointView<Eigen::Lower>();
}

/// Squared singular values of x in descending order, from the eigenvalues of
/// the smaller Gram matrix. Negative round-off is clamped to zero.
inline VectorXd squared_singular_values(const ConstMatrixRef& x) {
    const bool left = x.rows() <= x.cols();
    const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(gram(x, left), Eigen::EigenvaluesOnly);
    VectorXd values = eig.eigenvalues().reverse().cwiseMax(0.0);
    return values;
}

/// Leading r left singular vectors of x (m x r). Directions with zero
/// singular value come back as zero columns when m > cols.
inline MatrixXd leading_left_singular_vectors(const ConstMatrixRef& x, Index r) {
    const bool left = x.rows() <= x.cols();
    const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(gram(x, left));
    const Index n = eig.eigenvalues().size();
    if (left) {
        return eig.eigenvectors().rightCols(r).rowwise().reverse();
    }
    // Right singular vectors w_i give u_i = X w_i / sigma_i.
    const MatrixXd w = eig.eigenvectors().rightCols(r).rowwise().reverse();
    const VectorXd lambda = eig.eigenvalues().tail(r).reverse();
    const double threshold = 1e-13 * std::max(eig.eigenvalues()(n - 1), 0.0);
    MatrixXd u = x * w;
    for (Index i = 0; i < r; ++i) {
        if (lambda(i) > threshold && lambda(i) > 0.0) {
            u.col(i) /= std::sqrt(lambda(i));
        } else {
            u.col(i).setZero();
        }
    }
    return u;
}

}  // namespace ictac::linalg
