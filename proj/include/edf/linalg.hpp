/*
   Copyright 2026 The edf Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>

#include "edf/errors.hpp"

namespace edf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Relative singular-value cutoff used for every rank decision.
inline constexpr double kRankTolerance = 1e-10;

/// Count of singular values above `tol` times the largest one.
inline std::size_t numerical_rank(const Matrix& x, double tol = kRankTolerance)
{
    if (!(tol > 0.0)) {
        throw InvalidArgument("numerical_rank: tolerance must be positive");
    }
    if (x.size() == 0) {
        return 0;
    }
    const Vector sv = Eigen::JacobiSVD<Matrix>(x).singularValues();
    const double largest = sv.size() > 0 ? sv(0) : 0.0;
    if (!(largest > 0.0)) {
        return 0;
    }
    std::size_t rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > tol * largest) {
            ++rank;
        }
    }
    return rank;
}

/// Immutable dense n x p design with its numerical rank cached at construction.
class DesignMatrix {
public:
    explicit DesignMatrix(Matrix values) : values_(std::move(values))
    {
        if (values_.rows() < 1 || values_.cols() < 1) {
            throw InvalidArgument("design matrix needs at least one row and one column");
        }
        if (!values_.allFinite()) {
            throw InvalidArgument("design matrix has non-finite entries");
        }
        rank_ = numerical_rank(values_);
    }

    static DesignMatrix identity(std::size_t n, double scale = 1.0)
    {
        return DesignMatrix(scale * Matrix::Identity(static_cast<Eigen::Index>(n),
                                                     static_cast<Eigen::Index>(n)));
    }

    const Matrix& values() const noexcept { return values_; }
    std::size_t rows() const noexcept { return static_cast<std::size_t>(values_.rows()); }
    std::size_t cols() const noexcept { return static_cast<std::size_t>(values_.cols()); }
    std::size_t rank() const noexcept { return rank_; }
    bool full_column_rank() const noexcept { return rank_ == cols(); }

private:
    Matrix values_;
    std::size_t rank_ = 0;
};

/// Linear subspace of R^n held as an orthonormal basis (n x dim, dim may be 0).
class Subspace {
public:
    /// Span of the columns of `spanning`; dependent columns are dropped.
    static Subspace span_of(const Matrix& spanning)
    {
        const Eigen::Index n = spanning.rows();
        if (spanning.cols() == 0) {
            return Subspace(Matrix(n, 0));
        }
        Eigen::ColPivHouseholderQR<Matrix> qr(spanning);
        qr.setThreshold(kRankTolerance);
        const Eigen::Index r = qr.rank();
        Matrix q = qr.householderQ() * Matrix::Identity(n, r);
        return Subspace(std::move(q));
    }

    /// Takes `basis` as given; its columns must already be orthonormal.
    static Subspace from_orthonormal(Matrix basis)
    {
        const Eigen::Index d = basis.cols();
        const Matrix gram = basis.transpose() * basis;
        if (d > 0 && (gram - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-10) {
            throw InvalidArgument("subspace basis is not orthonormal");
        }
        return Subspace(std::move(basis));
    }

    static Subspace zero(std::size_t n) { return Subspace(Matrix(static_cast<Eigen::Index>(n), 0)); }

    static Subspace full(std::size_t n)
    {
        const auto m = static_cast<Eigen::Index>(n);
        return Subspace(Matrix::Identity(m, m));
    }

    const Matrix& basis() const noexcept { return basis_; }
    std::size_t ambient() const noexcept { return static_cast<std::size_t>(basis_.rows()); }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(basis_.cols()); }

private:
    explicit Subspace(Matrix basis) : basis_(std::move(basis)) {}

    Matrix basis_;
};

inline Vector project_subspace(const Subspace& s, const Vector& y)
{
    if (static_cast<std::size_t>(y.size()) != s.ambient()) {
        throw DimensionMismatch("project_subspace", s.ambient(), static_cast<std::size_t>(y.size()));
    }
    if (s.dim() == 0) {
        return Vector::Zero(y.size());
    }
    return s.basis() * (s.basis().transpose() * y);
}

struct LeastSquaresFit {
    Vector beta;
    Vector fitted;
    double rss = 0.0;
};

/// Least squares by Householder QR. Throws RankDeficient below full column rank.
inline LeastSquaresFit least_squares(const DesignMatrix& x, const Vector& y)
{
    if (static_cast<std::size_t>(y.size()) != x.rows()) {
        throw DimensionMismatch("least_squares", x.rows(), static_cast<std::size_t>(y.size()));
    }
    if (!x.full_column_rank()) {
        throw RankDeficient(x.rank(), x.cols());
    }
    LeastSquaresFit fit;
    fit.beta = x.values().householderQr().solve(y);
    fit.fitted = x.values() * fit.beta;
    fit.rss = (y - fit.fitted).squaredNorm();
    return fit;
}

/// Thin orthogonal factorization X = Q R with Q (n x m), R (m x p), m = min(n, p).
///
/// Every fitter that works inside col(X) runs in the m coordinates of Q.
struct ThinQR {
    Matrix q;
    Matrix r;

    explicit ThinQR(const Matrix& x)
    {
        const Eigen::Index n = x.rows();
        const Eigen::Index m = std::min(x.rows(), x.cols());
        Eigen::HouseholderQR<Matrix> qr(x);
        q = qr.householderQ() * Matrix::Identity(n, m);
        r = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
    }
};

} // namespace edf
