#include "eegret/encoder.hpp"

#include <cmath>

#include "eegret/errors.hpp"
#include "eegret/rng.hpp"

namespace eegret {

namespace {

using Eigen::Index;

template <typename T>
RowMatrix<T> elu(const RowMatrix<T>& z) {
    return z.unaryExpr([](T v) { return v > T(0) ? v : std::expm1(v); });
}

template <typename T>
RowMatrix<T> elu_grad(const RowMatrix<T>& z) {
    return z.unaryExpr([](T v) { return v > T(0) ? T(1) : std::exp(v); });
}

// Inverted-dropout keep mask: 0 with probability p, 1/(1-p) otherwise.
template <typename T>
void fill_keep(RowMatrix<T>& keep, Index rows, Index cols, double p, std::uint64_t key) {
    keep.resize(rows, cols);
    if (p <= 0.0) {
        keep.setOnes();
        return;
    }
    CounterRng rng(key);
    const T scale = static_cast<T>(1.0 / (1.0 - p));
    T* data = keep.data();
    for (Index i = 0; i < keep.size(); ++i) data[i] = rng.uniform() >= p ? scale : T(0);
}

template <typename T>
Eigen::Map<RowMatrix<T>> grad_mat(const EncoderParams<T>& p, Vector<T>& grad, const char* name) {
    const auto& b = p.layout.block(name);
    return {grad.data() + b.offset, static_cast<Index>(b.rows()), static_cast<Index>(b.cols())};
}

template <typename T>
Eigen::Map<Vector<T>> grad_vec(const EncoderParams<T>& p, Vector<T>& grad, const char* name) {
    const auto& b = p.layout.block(name);
    return {grad.data() + b.offset, static_cast<Index>(b.size())};
}

template <typename T>
void check_grad_size(const EncoderParams<T>& p, const Vector<T>& grad) {
    if (grad.size() != p.values.size()) throw ShapeError("gradient vector does not match parameter layout");
}

}  // namespace

template <typename T>
Vector<T> softmax(const Vector<T>& logits) {
    const T m = logits.maxCoeff();
    Vector<T> e = (logits.array() - m).exp().matrix();
    return e / e.sum();
}

namespace {

template <typename T>
RowMatrix<T> eeg_forward_impl(const EncoderParams<T>& p, EncoderParams<T>* stats_owner, const RowMatrix<T>& batch,
                              const ForwardMode& mode, EegCache<T>* cache) {
    using namespace blocks;
    const auto& d = p.dims;
    const Index B = batch.rows();
    const Index C = static_cast<Index>(d.channels);
    const Index Tt = static_cast<Index>(d.timepoints);
    const Index M = static_cast<Index>(d.conv_maps);
    const bool train = mode.mode == Mode::train;
    if (batch.cols() != C * Tt) throw ShapeError("EEG batch rows must hold channels*timepoints values");
    if (B < 1) throw ShapeError("EEG batch is empty");
    if (train && B < 2) throw ModeError("train-mode batch-norm needs a batch of at least two");

    // 1. Spatial convolution over all channels (kernel channels x 1, valid).
    const auto wc = p.mat(conv_w);
    const auto bc = p.vec(conv_b);
    RowMatrix<T> conv(B * M, Tt);
    for (Index b = 0; b < B; ++b) {
        Eigen::Map<const RowMatrix<T>> xb(batch.data() + b * batch.cols(), C, Tt);
        auto out = conv.middleRows(b * M, M);
        out.noalias() = wc * xb;
        out.colwise() += bc;
    }

    // 2. |.| then batch-norm per map over (batch x time).
    const RowMatrix<T> act = conv.cwiseAbs();
    const auto gamma = p.vec(bn_gamma);
    const auto beta = p.vec(bn_beta);
    const auto running_mean = p.vec(bn_running_mean);
    const auto running_var = p.vec(bn_running_var);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(M), var = Eigen::VectorXd::Zero(M);
    const double n = static_cast<double>(B * Tt);
    if (train) {
        for (Index r = 0; r < B * M; ++r) mean[r % M] += static_cast<double>(act.row(r).sum());
        mean /= n;
        for (Index r = 0; r < B * M; ++r)
            var[r % M] += static_cast<double>((act.row(r).array() - static_cast<T>(mean[r % M])).square().sum());
        var /= n;
    } else {
        mean = running_mean.template cast<double>();
        var = running_var.template cast<double>();
    }
    Vector<T> inv_std(M);
    for (Index m = 0; m < M; ++m) inv_std[m] = static_cast<T>(1.0 / std::sqrt(var[m] + d.bn_eps));
    RowMatrix<T> xhat(B * M, Tt), bn_out(B * M, Tt);
    for (Index r = 0; r < B * M; ++r) {
        const Index m = r % M;
        xhat.row(r) = (act.row(r).array() - static_cast<T>(mean[m])) * inv_std[m];
        bn_out.row(r) = (xhat.row(r).array() * gamma[m] + beta[m]).matrix();
    }
    if (train && mode.update_running_stats && stats_owner) {
        const double mom = d.bn_momentum;
        auto rm = stats_owner->vec(bn_running_mean);
        auto rv = stats_owner->vec(bn_running_var);
        for (Index m = 0; m < M; ++m) {
            rm[m] = static_cast<T>((1.0 - mom) * rm[m] + mom * mean[m]);
            rv[m] = static_cast<T>((1.0 - mom) * rv[m] + mom * var[m] * n / (n - 1.0));
        }
    }

    // 3. Shared two-layer MLP applied to every map.
    const auto w1 = p.mat(mlp1_w);
    const auto w2 = p.mat(mlp2_w);
    RowMatrix<T> z1 = bn_out * w1.transpose();
    z1.rowwise() += p.vec(mlp1_b).transpose();
    RowMatrix<T> keep1, keep2;
    RowMatrix<T> d1 = elu(z1);
    if (train) {
        fill_keep(keep1, z1.rows(), z1.cols(), d.dropout_mlp1, derive_key(mode.dropout_seed, {hash_string("mlp1")}));
        d1.array() *= keep1.array();
    }
    RowMatrix<T> z2 = d1 * w2.transpose();
    z2.rowwise() += p.vec(mlp2_b).transpose();
    RowMatrix<T> d2 = elu(z2);
    if (train) {
        fill_keep(keep2, z2.rows(), z2.cols(), d.dropout_mlp2, derive_key(mode.dropout_seed, {hash_string("mlp2")}));
        d2.array() *= keep2.array();
    }

    // 4-5. Flatten (maps x hidden2 per sample) and project.
    Eigen::Map<const RowMatrix<T>> flat(d2.data(), B, M * static_cast<Index>(d.hidden2));
    RowMatrix<T> out = flat * p.mat(proj_w).transpose();
    out.rowwise() += p.vec(proj_b).transpose();

    if (cache) {
        cache->mode = mode.mode;
        cache->batch = B;
        if (train) {
            cache->input = batch;
            cache->conv = std::move(conv);
            cache->xhat = std::move(xhat);
            cache->inv_std = std::move(inv_std);
            cache->bn_out = std::move(bn_out);
            cache->z1 = std::move(z1);
            cache->keep1 = std::move(keep1);
            cache->d1 = std::move(d1);
            cache->z2 = std::move(z2);
            cache->keep2 = std::move(keep2);
            cache->d2 = std::move(d2);
        }
    }
    return out;
}

}  // namespace

template <typename T>
RowMatrix<T> eeg_forward(EncoderParams<T>& p, const RowMatrix<T>& batch, const ForwardMode& mode,
                         EegCache<T>* cache) {
    return eeg_forward_impl(p, &p, batch, mode, cache);
}

template <typename T>
RowMatrix<T> eeg_forward(const EncoderParams<T>& p, const RowMatrix<T>& batch, const ForwardMode& mode,
                         EegCache<T>* cache) {
    if (mode.mode == Mode::train && mode.update_running_stats)
        throw ModeError("updating running statistics needs mutable parameters");
    return eeg_forward_impl(p, static_cast<EncoderParams<T>*>(nullptr), batch, mode, cache);
}

template <typename T>
void eeg_backward(const EncoderParams<T>& p, const EegCache<T>& c, const RowMatrix<T>& upstream, Vector<T>& grad) {
    using namespace blocks;
    if (c.mode != Mode::train) throw ModeError("backward needs a train-mode forward cache");
    check_grad_size(p, grad);
    const auto& d = p.dims;
    const Index B = c.batch;
    const Index C = static_cast<Index>(d.channels);
    const Index Tt = static_cast<Index>(d.timepoints);
    const Index M = static_cast<Index>(d.conv_maps);
    const Index H2 = static_cast<Index>(d.hidden2);
    if (upstream.rows() != B || upstream.cols() != static_cast<Index>(d.embed_dim))
        throw ShapeError("EEG upstream gradient has the wrong shape");

    Eigen::Map<const RowMatrix<T>> flat(c.d2.data(), B, M * H2);
    grad_mat(p, grad, proj_w).noalias() += upstream.transpose() * flat;
    grad_vec(p, grad, proj_b) += upstream.colwise().sum().transpose();
    RowMatrix<T> d_flat = upstream * p.mat(proj_w);
    Eigen::Map<RowMatrix<T>> d_d2(d_flat.data(), B * M, H2);

    RowMatrix<T> dz2 = d_d2.cwiseProduct(c.keep2).cwiseProduct(elu_grad(c.z2));
    grad_mat(p, grad, mlp2_w).noalias() += dz2.transpose() * c.d1;
    grad_vec(p, grad, mlp2_b) += dz2.colwise().sum().transpose();
    RowMatrix<T> dz1 = (dz2 * p.mat(mlp2_w)).cwiseProduct(c.keep1).cwiseProduct(elu_grad(c.z1));
    grad_mat(p, grad, mlp1_w).noalias() += dz1.transpose() * c.bn_out;
    grad_vec(p, grad, mlp1_b) += dz1.colwise().sum().transpose();
    RowMatrix<T> dy = dz1 * p.mat(mlp1_w);

    // Batch-norm backward with batch statistics.
    const auto gamma = p.vec(bn_gamma);
    auto g_gamma = grad_vec(p, grad, bn_gamma);
    auto g_beta = grad_vec(p, grad, bn_beta);
    Eigen::VectorXd s_dy = Eigen::VectorXd::Zero(M), s_dyx = Eigen::VectorXd::Zero(M);
    for (Index r = 0; r < B * M; ++r) {
        s_dy[r % M] += static_cast<double>(dy.row(r).sum());
        s_dyx[r % M] += static_cast<double>(dy.row(r).dot(c.xhat.row(r)));
    }
    const double n = static_cast<double>(B * Tt);
    for (Index m = 0; m < M; ++m) {
        g_gamma[m] += static_cast<T>(s_dyx[m]);
        g_beta[m] += static_cast<T>(s_dy[m]);
    }
    RowMatrix<T> d_conv(B * M, Tt);
    for (Index r = 0; r < B * M; ++r) {
        const Index m = r % M;
        const T scale = gamma[m] * c.inv_std[m];
        const T mean_dy = static_cast<T>(s_dy[m] / n);
        const T mean_dyx = static_cast<T>(s_dyx[m] / n);
        auto dact = ((dy.row(r).array() - mean_dy) - c.xhat.row(r).array() * mean_dyx) * scale;
        // d|a|/da is sign(a), taken as 0 at a == 0.
        d_conv.row(r) = (dact * c.conv.row(r).array().sign()).matrix();
    }

    auto g_wc = grad_mat(p, grad, conv_w);
    auto g_bc = grad_vec(p, grad, conv_b);
    for (Index b = 0; b < B; ++b) {
        Eigen::Map<const RowMatrix<T>> xb(c.input.data() + b * c.input.cols(), C, Tt);
        const auto block = d_conv.middleRows(b * M, M);
        g_wc.noalias() += block * xb.transpose();
        g_bc += block.rowwise().sum();
    }
}

template <typename T>
RowMatrix<T> visual_forward(const EncoderParams<T>& p, const RowMatrix<T>& blur, const RowMatrix<T>* evnet,
                            const ForwardMode& mode, VisualCache<T>* cache) {
    using namespace blocks;
    const auto& d = p.dims;
    const Index B = blur.rows();
    const Index L = static_cast<Index>(d.n_blur);
    const Index D = static_cast<Index>(d.feature_dim);
    const bool train = mode.mode == Mode::train;
    if (blur.cols() != L * D) throw ShapeError("blur features must be n_blur*feature_dim wide");
    if (evnet && (evnet->rows() != B || evnet->cols() != D)) throw ShapeError("EVNet features have the wrong shape");

    const Vector<T> attn = softmax<T>(p.vec(blur_attn_logits));
    RowMatrix<T> v_blur = RowMatrix<T>::Zero(B, D);
    for (Index l = 0; l < L; ++l) v_blur.noalias() += attn[l] * blur.middleCols(l * D, D);

    Vector<T> gate;
    RowMatrix<T> v_in;
    const bool fused = evnet != nullptr;
    if (fused) {
        gate = softmax<T>(p.vec(gate_logits));
        v_in = gate[0] * v_blur + gate[1] * (*evnet);
    } else {
        v_in = v_blur;
    }

    const char* a1w = fused ? fusion_adapter1_w : blur_adapter1_w;
    const char* a1b = fused ? fusion_adapter1_b : blur_adapter1_b;
    const char* a2w = fused ? fusion_adapter2_w : blur_adapter2_w;
    const char* a2b = fused ? fusion_adapter2_b : blur_adapter2_b;
    RowMatrix<T> h1 = v_in * p.mat(a1w).transpose();
    h1.rowwise() += p.vec(a1b).transpose();
    RowMatrix<T> dd = elu(h1);
    RowMatrix<T> keep;
    if (train) {
        fill_keep(keep, h1.rows(), h1.cols(), d.dropout_adapter, derive_key(mode.dropout_seed, {hash_string("adapter")}));
        dd.array() *= keep.array();
    }
    RowMatrix<T> out = dd * p.mat(a2w).transpose();
    out.rowwise() += p.vec(a2b).transpose();

    if (cache) {
        cache->mode = mode.mode;
        cache->fused = fused;
        if (train) {
            cache->attn = attn;
            cache->gate = gate;
            cache->blur = blur;
            if (fused) cache->evnet = *evnet;
            cache->v_blur = std::move(v_blur);
            cache->v_in = std::move(v_in);
            cache->h1 = std::move(h1);
            cache->keep = std::move(keep);
            cache->d = std::move(dd);
        }
    }
    return out;
}

template <typename T>
void visual_backward(const EncoderParams<T>& p, const VisualCache<T>& c, const RowMatrix<T>& upstream,
                     Vector<T>& grad) {
    using namespace blocks;
    if (c.mode != Mode::train) throw ModeError("backward needs a train-mode forward cache");
    check_grad_size(p, grad);
    const Index L = static_cast<Index>(p.dims.n_blur);
    const Index D = static_cast<Index>(p.dims.feature_dim);
    if (upstream.rows() != c.v_in.rows() || upstream.cols() != static_cast<Index>(p.dims.embed_dim))
        throw ShapeError("visual upstream gradient has the wrong shape");

    const char* a1w = c.fused ? fusion_adapter1_w : blur_adapter1_w;
    const char* a1b = c.fused ? fusion_adapter1_b : blur_adapter1_b;
    const char* a2w = c.fused ? fusion_adapter2_w : blur_adapter2_w;
    const char* a2b = c.fused ? fusion_adapter2_b : blur_adapter2_b;

    grad_mat(p, grad, a2w).noalias() += upstream.transpose() * c.d;
    grad_vec(p, grad, a2b) += upstream.colwise().sum().transpose();
    RowMatrix<T> dh1 = (upstream * p.mat(a2w)).cwiseProduct(c.keep).cwiseProduct(elu_grad(c.h1));
    grad_mat(p, grad, a1w).noalias() += dh1.transpose() * c.v_in;
    grad_vec(p, grad, a1b) += dh1.colwise().sum().transpose();
    RowMatrix<T> d_in = dh1 * p.mat(a1w);

    RowMatrix<T> d_blur;
    if (c.fused) {
        const T dw0 = d_in.cwiseProduct(c.v_blur).sum();
        const T dw1 = d_in.cwiseProduct(c.evnet).sum();
        const T mean = c.gate[0] * dw0 + c.gate[1] * dw1;
        auto g_gate = grad_vec(p, grad, gate_logits);
        g_gate[0] += c.gate[0] * (dw0 - mean);
        g_gate[1] += c.gate[1] * (dw1 - mean);
        d_blur = c.gate[0] * d_in;
    } else {
        d_blur = std::move(d_in);
    }

    Vector<T> da(L);
    for (Index l = 0; l < L; ++l) da[l] = d_blur.cwiseProduct(c.blur.middleCols(l * D, D)).sum();
    const T mean = c.attn.dot(da);
    grad_vec(p, grad, blur_attn_logits) += c.attn.cwiseProduct((da.array() - mean).matrix());
}

template <typename T>
Vector<T> backward(const EncoderParams<T>& p, const EegCache<T>& eeg_cache, const VisualCache<T>& visual_cache,
                   const RowMatrix<T>& eeg_upstream, const RowMatrix<T>& visual_upstream) {
    Vector<T> grad = Vector<T>::Zero(p.values.size());
    eeg_backward(p, eeg_cache, eeg_upstream, grad);
    visual_backward(p, visual_cache, visual_upstream, grad);
    return grad;
}

#define EEGRET_INSTANTIATE(T)                                                                                   \
    template Vector<T> softmax<T>(const Vector<T>&);                                                            \
    template RowMatrix<T> eeg_forward<T>(EncoderParams<T>&, const RowMatrix<T>&, const ForwardMode&,           \
                                         EegCache<T>*);                                                         \
    template RowMatrix<T> eeg_forward<T>(const EncoderParams<T>&, const RowMatrix<T>&, const ForwardMode&,     \
                                         EegCache<T>*);                                                         \
    template RowMatrix<T> visual_forward<T>(const EncoderParams<T>&, const RowMatrix<T>&, const RowMatrix<T>*, \
                                            const ForwardMode&, VisualCache<T>*);                               \
    template void eeg_backward<T>(const EncoderParams<T>&, const EegCache<T>&, const RowMatrix<T>&, Vector<T>&); \
    template void visual_backward<T>(const EncoderParams<T>&, const VisualCache<T>&, const RowMatrix<T>&,       \
                                     Vector<T>&);                                                               \
    template Vector<T> backward<T>(const EncoderParams<T>&, const EegCache<T>&, const VisualCache<T>&,          \
                                   const RowMatrix<T>&, const RowMatrix<T>&);

EEGRET_INSTANTIATE(float)
EEGRET_INSTANTIATE(double)

#undef EEGRET_INSTANTIATE

}  // namespace eegret
