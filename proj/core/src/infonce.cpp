#include "eegret/infonce.hpp"

#include <cmath>
#include <limits>

#include "eegret/errors.hpp"

namespace eegret {

namespace {

template <typename T>
RowMatrix<T> normalize_rows(const RowMatrix<T>& x, Vector<T>& norms) {
    norms = x.rowwise().norm();
    for (Eigen::Index i = 0; i < norms.size(); ++i)
        if (!(norms[i] > T(0))) throw DataError("cannot normalise a zero embedding");
    return norms.cwiseInverse().asDiagonal() * x;
}

// d/dx of x/|x| applied to upstream g: (g - u (u . g)) / |x|.
template <typename T>
RowMatrix<T> normalize_backward(const RowMatrix<T>& unit, const Vector<T>& norms, const RowMatrix<T>& g) {
    Vector<T> proj = unit.cwiseProduct(g).rowwise().sum();
    RowMatrix<T> out = g - proj.asDiagonal() * unit;
    return norms.cwiseInverse().asDiagonal() * out;
}

// exp(x - max x) for one logit row or column; terms below exp(cutoff) are
// flushed to zero.
template <typename T, typename Expr>
Eigen::Array<T, Eigen::Dynamic, 1> shifted_exp(const Expr& x, T max) {
    static const T cutoff = static_cast<T>(0.5 * std::log(std::numeric_limits<T>::min()));
    const Eigen::Array<T, Eigen::Dynamic, 1> d = x.array() - max;
    return (d > cutoff).select(d.max(cutoff).exp(), T(0));
}

}  // namespace

template <typename T>
InfoNceResult<T> infonce_loss(const RowMatrix<T>& z_in, const RowMatrix<T>& v_in, double logit_scale,
                              bool normalize) {
    if (z_in.rows() != v_in.rows() || z_in.cols() != v_in.cols())
        throw ShapeError("InfoNCE inputs must have the same shape");
    if (z_in.rows() < 1) throw ShapeError("InfoNCE needs at least one pair");
    if (!z_in.allFinite() || !v_in.allFinite()) throw DataError("InfoNCE inputs must be finite");
    if (!(logit_scale > 0.0)) throw ParameterError("logit scale must be positive");

    Vector<T> z_norms, v_norms;
    const RowMatrix<T> z = normalize ? normalize_rows(z_in, z_norms) : z_in;
    const RowMatrix<T> v = normalize ? normalize_rows(v_in, v_norms) : v_in;

    const Eigen::Index n = z.rows();
    const T s = static_cast<T>(logit_scale);
    const RowMatrix<T> logits = s * (z * v.transpose());

    // Row softmax (EEG -> image) and column softmax (image -> EEG).
    RowMatrix<T> p_row(n, n), p_col(n, n);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const T m = logits.row(i).maxCoeff();
        const auto e = shifted_exp<T>(logits.row(i).transpose(), m);
        const T sum = e.sum();
        p_row.row(i) = (e / sum).matrix().transpose();
        total += static_cast<double>(m) + std::log(static_cast<double>(sum)) - static_cast<double>(logits(i, i));
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        const T m = logits.col(j).maxCoeff();
        const auto e = shifted_exp<T>(logits.col(j), m);
        const T sum = e.sum();
        p_col.col(j) = (e / sum).matrix();
        total += static_cast<double>(m) + std::log(static_cast<double>(sum)) - static_cast<double>(logits(j, j));
    }

    InfoNceResult<T> r;
    r.loss = static_cast<T>(total / (2.0 * static_cast<double>(n)));

    // dLoss/dlogits = (P_row + P_col - 2I) / 2N
    RowMatrix<T> g = p_row + p_col;
    g.diagonal().array() -= T(2);
    g *= static_cast<T>(1.0 / (2.0 * static_cast<double>(n)));
    r.grad_z = s * (g * v);
    r.grad_v = s * (g.transpose() * z);
    if (normalize) {
        r.grad_z = normalize_backward(z, z_norms, r.grad_z);
        r.grad_v = normalize_backward(v, v_norms, r.grad_v);
    }
    return r;
}

template InfoNceResult<float> infonce_loss<float>(const RowMatrix<float>&, const RowMatrix<float>&, double, bool);
template InfoNceResult<double> infonce_loss<double>(const RowMatrix<double>&, const RowMatrix<double>&, double,
                                                    bool);

}  // namespace eegret
