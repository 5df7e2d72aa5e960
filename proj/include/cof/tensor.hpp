#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "cof/errors.hpp"

namespace cof {

// Dense row-major storage. Rank <= 2 covers every operation the encoder and
// training loop need; a 1 x d matrix stands in for a vector-valued tensor.
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Matrix = MatrixX<double>;
using MatrixF = MatrixX<float>;
using Embedding = Eigen::RowVectorXd;
using Index = Eigen::Index;

inline std::string shape_string(Index rows, Index cols) {
    return std::to_string(rows) + "x" + std::to_string(cols);
}

// Shape-checked matrix product.
template <typename DerivedA, typename DerivedB>
MatrixX<typename DerivedA::Scalar> matmul(const Eigen::MatrixBase<DerivedA>& a,
                                          const Eigen::MatrixBase<DerivedB>& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: inner dimensions disagree: " +
                         shape_string(a.rows(), a.cols()) + " * " +
                         shape_string(b.rows(), b.cols()));
    }
    MatrixX<typename DerivedA::Scalar> out(a.rows(), b.cols());
    out.noalias() = a * b;
    return out;
}

// Row-wise softmax over the first valid_cols columns; remaining columns are
// exactly zero. Equivalent to adding -inf to masked keys before a plain
// softmax, computed with row-max subtraction.
template <typename Derived>
MatrixX<typename Derived::Scalar> softmax_rows_masked(const Eigen::MatrixBase<Derived>& m,
                                                      Index valid_cols) {
    using S = typename Derived::Scalar;
    if (valid_cols < 1 || valid_cols > m.cols()) {
        throw ShapeError("softmax_rows_masked: valid_cols " + std::to_string(valid_cols) +
                         " out of range for " + shape_string(m.rows(), m.cols()));
    }
    MatrixX<S> out = MatrixX<S>::Zero(m.rows(), m.cols());
    for (Index r = 0; r < m.rows(); ++r) {
        const auto row = m.row(r).head(valid_cols);
        const S mx = row.maxCoeff();
        auto out_row = out.row(r).head(valid_cols);
        out_row = (row.array() - mx).exp();
        out_row /= out_row.sum();
    }
    return out;
}

template <typename Derived>
MatrixX<typename Derived::Scalar> softmax_rows(const Eigen::MatrixBase<Derived>& m) {
    return softmax_rows_masked(m, m.cols());
}

// Per-row normalization over the last dimension with learned gain/bias
// (population variance): (x - mean) / sqrt(var + eps) * gamma + beta.
template <typename Derived>
MatrixX<typename Derived::Scalar> layer_norm(const Eigen::MatrixBase<Derived>& x,
                                             const MatrixX<typename Derived::Scalar>& gamma,
                                             const MatrixX<typename Derived::Scalar>& beta,
                                             double eps = 1e-5) {
    using S = typename Derived::Scalar;
    if (gamma.rows() != 1 || beta.rows() != 1 || gamma.cols() != x.cols() ||
        beta.cols() != x.cols()) {
        throw ShapeError("layer_norm: gain/bias must be 1x" + std::to_string(x.cols()) +
                         ", got " + shape_string(gamma.rows(), gamma.cols()) + " and " +
                         shape_string(beta.rows(), beta.cols()));
    }
    if (!(eps > 0.0)) {
        throw UsageError("layer_norm: eps must be positive");
    }
    const auto d = static_cast<S>(x.cols());
    MatrixX<S> out(x.rows(), x.cols());
    for (Index r = 0; r < x.rows(); ++r) {
        const S mean = x.row(r).mean();
        const S var = (x.row(r).array() - mean).square().sum() / d;
        const S inv = S(1) / std::sqrt(var + static_cast<S>(eps));
        out.row(r) = ((x.row(r).array() - mean) * inv) * gamma.row(0).array() +
                     beta.row(0).array();
    }
    return out;
}

namespace detail {
constexpr double kGeluCoeff = 0.044715;
inline double gelu_scalar(double x) {
    const double kSqrt2OverPi = std::sqrt(2.0 / M_PI);
    const double inner = kSqrt2OverPi * (x + kGeluCoeff * x * x * x);
    return 0.5 * x * (1.0 + std::tanh(inner));
}
inline double gelu_grad_scalar(double x) {
    const double kSqrt2OverPi = std::sqrt(2.0 / M_PI);
    const double inner = kSqrt2OverPi * (x + kGeluCoeff * x * x * x);
    const double t = std::tanh(inner);
    const double dinner = kSqrt2OverPi * (1.0 + 3.0 * kGeluCoeff * x * x);
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * dinner;
}
}  // namespace detail

// Elementwise GELU, tanh approximation.
template <typename Derived>
MatrixX<typename Derived::Scalar> gelu(const Eigen::MatrixBase<Derived>& x) {
    return x.unaryExpr([](double v) { return detail::gelu_scalar(v); });
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
    return m.allFinite();
}

}  // namespace cof
