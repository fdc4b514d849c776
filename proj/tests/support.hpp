#pragma once

#include <gfivs/design.hpp>
#include <gfivs/random.hpp>

#include <random>

namespace gfivs::testing {

inline Matrix gaussian_matrix(int rows, int cols, Rng& rng) {
    std::normal_distribution<double> z;
    Matrix X(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) X(i, j) = z(rng);
    return X;
}

/// y = X[:, :k] * 1 + noise, standardized without centering.
inline StandardizedDesign random_design(int n, int p, int k, double sigma, Rng& rng) {
    const Matrix X = gaussian_matrix(n, p, rng);
    std::normal_distribution<double> z;
    Vector y = Vector::Zero(n);
    for (int j = 0; j < std::min(k, p); ++j) y += X.col(j);
    for (int i = 0; i < n; ++i) y(i) += sigma * z(rng);
    return standardize(y, X, false);
}

/// Uniformly random orthogonal matrix (QR of a Gaussian matrix with sign fix).
inline Matrix random_orthogonal(int n, Rng& rng) {
    const Matrix A = gaussian_matrix(n, n, rng);
    Eigen::HouseholderQR<Matrix> qr(A);
    Matrix Q = qr.householderQ();
    const Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < n; ++j)
        if (R(j, j) < 0) Q.col(j) *= -1.0;
    return Q;
}

}  // namespace gfivs::testing
