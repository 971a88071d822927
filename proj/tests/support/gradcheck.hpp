#pragma once

// Central finite-difference checks of the encoder and InfoNCE gradients.

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "eegret/encoder.hpp"
#include "eegret/infonce.hpp"
#include "eegret/rng.hpp"

namespace gradcheck {

using eegret::EncoderDims;
using eegret::EncoderParams;
using eegret::RowMatrix;
using eegret::Vector;

inline EncoderDims micro_dims() {
    EncoderDims d;
    d.channels = 4;
    d.timepoints = 7;
    d.conv_maps = 3;
    d.hidden1 = 5;
    d.hidden2 = 4;
    d.embed_dim = 6;
    d.feature_dim = 6;
    d.adapter_hidden = 5;
    d.n_blur = 3;
    return d;
}

struct Problem {
    EncoderParams<double> params;
    RowMatrix<double> eeg;
    RowMatrix<double> blur;
    RowMatrix<double> evnet;
    bool fused = true;
    std::uint64_t dropout_seed = 99;
    bool normalize = false;
};

inline void avoid_kinks(Problem& p, double margin, std::uint64_t seed);
inline void centre_elu_gaps(Problem& p);

// Seeded micro-batch at a generic point: biases, logits and batch-norm affine
// parameters are moved off their init, and the output projections are scaled
// by output_scale.
inline Problem make_problem(const EncoderDims& d, std::uint64_t seed, Eigen::Index batch, bool fused,
                            double kink_margin = 0.6, double output_scale = 0.03) {
    Problem p;
    p.params = eegret::init_params<double>(d, seed);
    std::mt19937_64 gen(seed * 7919 + 1);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (const auto& b : p.params.layout.blocks()) {
        if (!b.trainable) continue;
        auto v = p.params.vec(b.name);
        const bool small_init = b.name.ends_with("_b") || b.name.ends_with("logits") || b.name.rfind("bn_", 0) == 0;
        if (small_init)
            for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += 0.3 * nd(gen);
    }
    using namespace eegret::blocks;
    for (const char* n : {proj_w, proj_b, fusion_adapter2_w, fusion_adapter2_b, blur_adapter2_w, blur_adapter2_b})
        p.params.vec(n) *= output_scale;
    auto rm = p.params.vec(eegret::blocks::bn_running_var);
    for (Eigen::Index i = 0; i < rm.size(); ++i) rm[i] = 0.5 + 0.1 * static_cast<double>(i);
    auto rand = [&](Eigen::Index r, Eigen::Index c) {
        RowMatrix<double> m(r, c);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(gen);
        return m;
    };
    p.eeg = rand(batch, static_cast<Eigen::Index>(d.channels * d.timepoints));
    p.blur = rand(batch, static_cast<Eigen::Index>(d.n_blur * d.feature_dim));
    p.evnet = rand(batch, static_cast<Eigen::Index>(d.feature_dim));
    p.fused = fused;
    avoid_kinks(p, kink_margin, seed + 17);
    if (kink_margin > 0) centre_elu_gaps(p);
    return p;
}

// Re-draws input time columns until every conv pre-activation is at least
// margin away from the kink of |.|. Maps keep mixed signs.
inline void avoid_kinks(Problem& p, double margin, std::uint64_t seed) {
    const auto& d = p.params.dims;
    const auto W = p.params.mat(eegret::blocks::conv_w);
    const auto b = p.params.vec(eegret::blocks::conv_b);
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    const auto C = static_cast<Eigen::Index>(d.channels), T = static_cast<Eigen::Index>(d.timepoints);
    Vector<double> x(C);
    for (Eigen::Index s = 0; s < p.eeg.rows(); ++s)
        for (Eigen::Index t = 0; t < T; ++t)
            for (;;) {
                for (Eigen::Index c = 0; c < C; ++c) x[c] = p.eeg(s, c * T + t);
                if ((W * x + b).cwiseAbs().minCoeff() > margin) break;
                for (Eigen::Index c = 0; c < C; ++c) p.eeg(s, c * T + t) = nd(gen);
            }
}

// Shifts each unit's bias to put 0 in the middle of the widest interior gap
// between that unit's batch pre-activations, away from the ELU curvature
// jump. Signs stay mixed.
inline void centre_gap(const RowMatrix<double>& z, Eigen::Ref<Vector<double>> bias) {
    std::vector<double> col(static_cast<std::size_t>(z.rows()));
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
        for (Eigen::Index i = 0; i < z.rows(); ++i) col[static_cast<std::size_t>(i)] = z(i, j);
        std::sort(col.begin(), col.end());
        double best = -1.0, mid = 0.0;
        for (std::size_t i = 1; i < col.size(); ++i)
            if (col[i] - col[i - 1] > best) {
                best = col[i] - col[i - 1];
                mid = 0.5 * (col[i] + col[i - 1]);
            }
        bias[j] -= mid;
    }
}

inline eegret::ForwardMode train_mode(const Problem& p);

inline void centre_elu_gaps(Problem& p) {
    using namespace eegret::blocks;
    const auto mode = train_mode(p);
    eegret::EegCache<double> ec;
    eegret::eeg_forward(p.params, p.eeg, mode, &ec);
    centre_gap(ec.z1, p.params.vec(mlp1_b));
    eegret::eeg_forward(p.params, p.eeg, mode, &ec);
    centre_gap(ec.z2, p.params.vec(mlp2_b));
    eegret::VisualCache<double> vc;
    eegret::visual_forward(p.params, p.blur, p.fused ? &p.evnet : nullptr, mode, &vc);
    centre_gap(vc.h1, p.params.vec(p.fused ? fusion_adapter1_b : blur_adapter1_b));
}

inline eegret::ForwardMode train_mode(const Problem& p) {
    return eegret::ForwardMode{eegret::Mode::train, p.dropout_seed, false};
}

inline double objective(const Problem& p, const EncoderParams<double>& params) {
    const auto mode = train_mode(p);
    const RowMatrix<double> z = eegret::eeg_forward(params, p.eeg, mode);
    const RowMatrix<double> v = eegret::visual_forward(params, p.blur, p.fused ? &p.evnet : nullptr, mode);
    return eegret::infonce_loss<double>(z, v, 1.0, p.normalize).loss;
}

inline Vector<double> analytic(const Problem& p) {
    const auto mode = train_mode(p);
    eegret::EegCache<double> ec;
    eegret::VisualCache<double> vc;
    const RowMatrix<double> z = eegret::eeg_forward(p.params, p.eeg, mode, &ec);
    const RowMatrix<double> v = eegret::visual_forward(p.params, p.blur, p.fused ? &p.evnet : nullptr, mode, &vc);
    const auto loss = eegret::infonce_loss<double>(z, v, 1.0, p.normalize);
    return eegret::backward(p.params, ec, vc, loss.grad_z, loss.grad_v);
}

struct BlockError {
    double relative = 0.0;  // ||analytic - numeric|| / max(||analytic||, ||numeric||)
    double analytic_norm = 0.0;
    std::size_t checked = 0;
};

// Central differences with step h for the listed coordinates of each
// trainable block (all coordinates when per_block == 0).
inline std::map<std::string, BlockError> check(const Problem& p, double h = 1e-3, std::size_t per_block = 0,
                                                std::uint64_t pick_seed = 5) {
    const Vector<double> g = analytic(p);
    std::map<std::string, BlockError> out;
    EncoderParams<double> work = p.params;
    std::mt19937_64 pick(pick_seed);
    for (const auto& b : p.params.layout.blocks()) {
        if (!b.trainable) continue;
        if (!p.fused && (b.name.rfind("fusion_", 0) == 0 || b.name == eegret::blocks::gate_logits)) continue;
        if (p.fused && b.name.rfind("blur_adapter", 0) == 0) continue;
        std::vector<std::size_t> idx;
        if (per_block == 0 || per_block >= b.size()) {
            for (std::size_t i = 0; i < b.size(); ++i) idx.push_back(i);
        } else {
            std::uniform_int_distribution<std::size_t> ud(0, b.size() - 1);
            for (std::size_t i = 0; i < per_block; ++i) idx.push_back(ud(pick));
        }
        double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
        for (std::size_t i : idx) {
            const auto k = static_cast<Eigen::Index>(b.offset + i);
            const double orig = work.values[k];
            work.values[k] = orig + h;
            const double fp = objective(p, work);
            work.values[k] = orig - h;
            const double fm = objective(p, work);
            work.values[k] = orig;
            const double num = (fp - fm) / (2 * h);
            diff2 += (g[k] - num) * (g[k] - num);
            a2 += g[k] * g[k];
            n2 += num * num;
        }
        BlockError e;
        const double denom = std::max(std::sqrt(a2), std::sqrt(n2));
        e.relative = denom > 0 ? std::sqrt(diff2) / denom : std::sqrt(diff2);
        e.analytic_norm = std::sqrt(a2);
        e.checked = idx.size();
        out[b.name] = e;
    }
    return out;
}

// InfoNCE alone: gradients with respect to z and v.
inline double infonce_relative_error(std::uint64_t seed, Eigen::Index n, Eigen::Index dim, bool normalize,
                                     double h = 1e-3) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    RowMatrix<double> z(n, dim), v(n, dim);
    for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = nd(gen);
    for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = nd(gen);
    const auto res = eegret::infonce_loss<double>(z, v, 1.0, normalize);
    double diff2 = 0.0, a2 = 0.0;
    for (int which = 0; which < 2; ++which) {
        RowMatrix<double>& m = which == 0 ? z : v;
        const RowMatrix<double>& g = which == 0 ? res.grad_z : res.grad_v;
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            const double orig = m.data()[i];
            m.data()[i] = orig + h;
            const double fp = eegret::infonce_loss<double>(z, v, 1.0, normalize).loss;
            m.data()[i] = orig - h;
            const double fm = eegret::infonce_loss<double>(z, v, 1.0, normalize).loss;
            m.data()[i] = orig;
            const double num = (fp - fm) / (2 * h);
            diff2 += (g.data()[i] - num) * (g.data()[i] - num);
            a2 += g.data()[i] * g.data()[i];
        }
    }
    return std::sqrt(diff2) / std::sqrt(a2);
}

}  // namespace gradcheck
