#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gfivs {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Malformed or inconsistent user input.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// X_M does not have full column rank.
class RankDeficient : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Cholesky pivots below this value declare X_M rank deficient.
inline constexpr double kRankPivotTolerance = 1e-10;

/** An ordered covariate subset.  Indices are zero-based, strictly increasing and unique.
 *
 * Ordering between two indices is lexicographic on the sorted index lists, which makes
 * ModelIndex usable as a key for visit-count maps with a stable tie-break order.
 */
class ModelIndex {
public:
    ModelIndex() = default;

    explicit ModelIndex(std::vector<int> indices) : idx_(std::move(indices)) {
        std::sort(idx_.begin(), idx_.end());
        if (std::adjacent_find(idx_.begin(), idx_.end()) != idx_.end())
            throw InputError("ModelIndex: duplicate covariate index");
        if (!idx_.empty() && idx_.front() < 0)
            throw InputError("ModelIndex: negative covariate index");
    }

    ModelIndex(std::initializer_list<int> indices) : ModelIndex(std::vector<int>(indices)) {}

    std::size_t size() const noexcept { return idx_.size(); }
    bool empty() const noexcept { return idx_.empty(); }
    int operator[](std::size_t i) const { return idx_[i]; }
    const std::vector<int>& indices() const noexcept { return idx_; }
    auto begin() const noexcept { return idx_.begin(); }
    auto end() const noexcept { return idx_.end(); }

    bool contains(int j) const { return std::binary_search(idx_.begin(), idx_.end(), j); }

    ModelIndex with(int j) const {
        std::vector<int> v = idx_;
        v.insert(std::upper_bound(v.begin(), v.end(), j), j);
        return ModelIndex(std::move(v));
    }

    ModelIndex without(int j) const {
        std::vector<int> v = idx_;
        v.erase(std::remove(v.begin(), v.end(), j), v.end());
        ModelIndex out;
        out.idx_ = std::move(v);
        return out;
    }

    std::string to_string() const {
        std::string s = "{";
        for (std::size_t i = 0; i < idx_.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(idx_[i]);
        }
        return s + "}";
    }

    friend bool operator==(const ModelIndex&, const ModelIndex&) = default;
    friend auto operator<=>(const ModelIndex&, const ModelIndex&) = default;

private:
    std::vector<int> idx_;
};

/** Response and unit-norm design with standardization metadata.
 *
 * Immutable after construction.  The Gram matrix G = X'X, its square G*G, and the
 * Lipschitz constant lambda_max(X'X)^2 of the admissibility objective's gradient are
 * computed once here and shared by every model evaluated on this design.
 */
class StandardizedDesign {
public:
    StandardizedDesign(Vector y, Matrix X, Vector col_norms, Vector col_means, double y_mean,
                       bool centered)
        : y_(std::move(y)), X_(std::move(X)), col_norms_(std::move(col_norms)),
          col_means_(std::move(col_means)), y_mean_(y_mean), centered_(centered) {
        if (X_.rows() != y_.size())
            throw InputError("StandardizedDesign: X has " + std::to_string(X_.rows()) +
                             " rows but y has length " + std::to_string(y_.size()));
        if (X_.rows() < 2) throw InputError("StandardizedDesign: need n >= 2 rows");
        if (X_.cols() < 1) throw InputError("StandardizedDesign: need p >= 1 columns");
        gram_ = X_.transpose() * X_;
        gram_sq_ = gram_ * gram_;
        Xty_ = X_.transpose() * y_;
        Eigen::SelfAdjointEigenSolver<Matrix> eig(gram_, Eigen::EigenvaluesOnly);
        const double lmax = eig.eigenvalues().maxCoeff();
        lipschitz_ = lmax * lmax;
    }

    int n() const noexcept { return static_cast<int>(X_.rows()); }
    int p() const noexcept { return static_cast<int>(X_.cols()); }
    const Vector& y() const noexcept { return y_; }
    const Matrix& X() const noexcept { return X_; }
    const Vector& col_norms() const noexcept { return col_norms_; }
    /// Column means removed before scaling (zeros when not centered).
    const Vector& col_means() const noexcept { return col_means_; }
    double y_mean() const noexcept { return y_mean_; }
    bool centered() const noexcept { return centered_; }

    /// X'X.
    const Matrix& gram() const noexcept { return gram_; }
    /// (X'X)^2.
    const Matrix& gram_sq() const noexcept { return gram_sq_; }
    const Vector& Xty() const noexcept { return Xty_; }
    /// lambda_max(X'X)^2.
    double lipschitz() const noexcept { return lipschitz_; }

    /// Columns of X selected by M.
    Matrix columns(const ModelIndex& M) const {
        Matrix XM(n(), static_cast<Eigen::Index>(M.size()));
        for (std::size_t k = 0; k < M.size(); ++k) XM.col(k) = X_.col(M[k]);
        return XM;
    }

    /// Map raw covariate rows into this design's standardized coordinates.
    Matrix transform(const Matrix& X_raw) const {
        if (X_raw.cols() != X_.cols()) throw InputError("transform: column count mismatch");
        Matrix out = X_raw;
        for (Eigen::Index j = 0; j < out.cols(); ++j)
            out.col(j) = (out.col(j).array() - col_means_(j)) / col_norms_(j);
        return out;
    }

private:
    Vector y_;
    Matrix X_;
    Vector col_norms_;
    Vector col_means_;
    double y_mean_ = 0.0;
    bool centered_ = false;
    Matrix gram_;
    Matrix gram_sq_;
    Vector Xty_;
    double lipschitz_ = 0.0;
};

/// Center (optionally) and scale every column of X_raw to unit L2 norm.
inline StandardizedDesign standardize(const Vector& y_raw, const Matrix& X_raw, bool center) {
    const Eigen::Index n = X_raw.rows();
    const Eigen::Index p = X_raw.cols();
    if (y_raw.size() != n)
        throw InputError("standardize: y has length " + std::to_string(y_raw.size()) +
                         " but X has " + std::to_string(n) + " rows");
    if (n < 2) throw InputError("standardize: need at least 2 observations");
    if (p < 1) throw InputError("standardize: need at least 1 covariate");

    Vector y = y_raw;
    Matrix X = X_raw;
    Vector means = Vector::Zero(p);
    double y_mean = 0.0;
    if (center) {
        y_mean = y.mean();
        y.array() -= y_mean;
        means = X.colwise().mean().transpose();
        X.rowwise() -= means.transpose();
    }
    Vector norms(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double nrm = X.col(j).norm();
        const double raw = X_raw.col(j).norm();
        if (!std::isfinite(nrm) || nrm <= 1e-12 * std::max(1.0, raw))
            throw InputError("standardize: column " + std::to_string(j) +
                             (center ? " is constant" : " has zero norm"));
        norms(j) = nrm;
        X.col(j) /= nrm;
    }
    return StandardizedDesign(std::move(y), std::move(X), std::move(norms), std::move(means),
                              y_mean, center);
}

/// Per-model least-squares artifacts.
struct ModelFit {
    ModelIndex M;
    Vector beta_hat;
    double rss = 0.0;
    double sigma2_hat = 0.0;
    double lambda_M = 0.0;
    Matrix chol;  // lower-triangular L with L L' = X_M' X_M
    double logdet = 0.0;
};

/** Least-squares fit of y on X_M.  Returns std::nullopt when X_M is rank deficient
 * (a Cholesky pivot of X_M'X_M falls below kRankPivotTolerance) or |M| > n.
 * An interpolating fit (|M| = n) reports sigma2_hat = 0.
 */
inline std::optional<ModelFit> try_fit_model(const StandardizedDesign& d, const ModelIndex& M) {
    const int k = static_cast<int>(M.size());
    if (k == 0 || k > d.n()) return std::nullopt;
    if (M.indices().back() >= d.p()) throw InputError("fit_model: covariate index out of range");

    Matrix S(k, k);
    Matrix B(d.p(), k);  // X'X_M
    for (int a = 0; a < k; ++a) {
        B.col(a) = d.gram().col(M[a]);
        for (int b = 0; b < k; ++b) S(a, b) = d.gram()(M[a], M[b]);
    }

    // Unpivoted Cholesky so that the pivots are the squared distances of each column from the
    // span of its predecessors.
    Matrix L = Matrix::Zero(k, k);
    for (int j = 0; j < k; ++j) {
        double pivot = S(j, j) - L.row(j).head(j).squaredNorm();
        if (!(pivot >= kRankPivotTolerance)) return std::nullopt;
        L(j, j) = std::sqrt(pivot);
        for (int i = j + 1; i < k; ++i)
            L(i, j) = (S(i, j) - L.row(i).head(j).dot(L.row(j).head(j))) / L(j, j);
    }

    ModelFit fit;
    fit.M = M;
    Vector Xty(k);
    for (int a = 0; a < k; ++a) Xty(a) = d.Xty()(M[a]);
    const auto Lv = L.triangularView<Eigen::Lower>();
    Vector z = Lv.solve(Xty);
    fit.beta_hat = L.transpose().triangularView<Eigen::Upper>().solve(z);

    Vector resid = d.y();
    for (int a = 0; a < k; ++a) resid -= fit.beta_hat(a) * d.X().col(M[a]);
    fit.rss = resid.squaredNorm();
    fit.sigma2_hat = k < d.n() ? fit.rss / static_cast<double>(d.n() - k) : 0.0;

    Matrix W = Lv.solve(B.transpose());  // L^{-1} B', k x p
    fit.lambda_M = W.squaredNorm();
    fit.logdet = 2.0 * L.diagonal().array().log().sum();
    fit.chol = std::move(L);
    return fit;
}

/// As try_fit_model, but throws RankDeficient.
inline ModelFit fit_model(const StandardizedDesign& d, const ModelIndex& M) {
    auto fit = try_fit_model(d, M);
    if (!fit) throw RankDeficient("fit_model: X_M" + M.to_string() + " is rank deficient");
    return *std::move(fit);
}

/** Squared distance between the true mean X_{M_o} beta0 and its projection onto span(X_M).
 * Diagnostic only.
 */
inline double delta_M(const StandardizedDesign& d, const ModelIndex& M, const ModelIndex& M_o,
                      const Vector& beta0) {
    if (beta0.size() != static_cast<Eigen::Index>(M_o.size()))
        throw InputError("delta_M: beta0 length does not match |M_o|");
    const ModelFit fit = fit_model(d, M);
    Vector mu = d.columns(M_o) * beta0;
    const Matrix XM = d.columns(M);
    const auto Lv = fit.chol.triangularView<Eigen::Lower>();
    Vector coef = fit.chol.transpose().triangularView<Eigen::Upper>().solve(Lv.solve(XM.transpose() * mu));
    return (mu - XM * coef).squaredNorm();
}

}  // namespace gfivs
