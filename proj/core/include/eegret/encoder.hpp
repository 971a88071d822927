#pragma once

#include <cstdint>

#include "eegret/params.hpp"

namespace eegret {

enum class Mode { train, eval };

struct ForwardMode {
    Mode mode = Mode::eval;
    std::uint64_t dropout_seed = 0;
    // Train mode only. Finite-difference checks switch this off so repeated
    // forwards see identical parameters.
    bool update_running_stats = true;
};

// Intermediates of eeg_forward needed by eeg_backward. Rows of the
// (batch*maps x ...) matrices are ordered sample-major.
template <typename T>
struct EegCache {
    Mode mode = Mode::eval;
    Eigen::Index batch = 0;
    RowMatrix<T> input;     // B x (channels*time)
    RowMatrix<T> conv;      // (B*maps) x time, before |.|
    RowMatrix<T> xhat;      // normalised activations
    Vector<T> inv_std;      // per map
    RowMatrix<T> bn_out;    // (B*maps) x time
    RowMatrix<T> z1, keep1, d1;  // hidden1 pre-activation, dropout scale, output
    RowMatrix<T> z2, keep2, d2;  // hidden2 ...; d2 viewed as B x flat_dim is the flatten
};

template <typename T>
struct VisualCache {
    Mode mode = Mode::eval;
    bool fused = false;
    Vector<T> attn;          // softmax(blur_attn_logits)
    Vector<T> gate;          // softmax(gate_logits), fused only
    RowMatrix<T> blur;       // B x (n_blur*feature_dim)
    RowMatrix<T> evnet;      // B x feature_dim, fused only
    RowMatrix<T> v_blur;     // B x feature_dim
    RowMatrix<T> v_in;       // adapter input (v_fused or v_blur)
    RowMatrix<T> h1, keep, d;
};

// Numerically stable softmax.
template <typename T>
Vector<T> softmax(const Vector<T>& logits);

// EEG encoder: conv(channels x 1) -> |.| -> batch-norm -> shared MLP per map
// (linear, ELU, dropout) x 2 -> flatten -> linear to embed_dim.
// batch is B x (channels*timepoints), each row one segment in channel-major
// order. In train mode B must be at least 2.
template <typename T>
RowMatrix<T> eeg_forward(EncoderParams<T>& params, const RowMatrix<T>& batch, const ForwardMode& mode,
                         EegCache<T>* cache = nullptr);
// Same, for callers that must not touch the running statistics (eval mode or
// update_running_stats == false); ModeError otherwise.
template <typename T>
RowMatrix<T> eeg_forward(const EncoderParams<T>& params, const RowMatrix<T>& batch, const ForwardMode& mode,
                         EegCache<T>* cache = nullptr);

// Visual head: softmax-weighted sum of blur-level features; when evnet is
// given, softmax-gated fusion with the EVNet feature and the fusion adapter,
// otherwise the blur-only adapter. blur is B x (n_blur*feature_dim).
template <typename T>
RowMatrix<T> visual_forward(const EncoderParams<T>& params, const RowMatrix<T>& blur, const RowMatrix<T>* evnet,
                            const ForwardMode& mode, VisualCache<T>* cache = nullptr);

// Accumulate parameter gradients into grad (layout of params.values) given
// the gradient of the loss with respect to the forward output. Throws
// ModeError for an eval-mode cache.
template <typename T>
void eeg_backward(const EncoderParams<T>& params, const EegCache<T>& cache, const RowMatrix<T>& upstream,
                  Vector<T>& grad);
template <typename T>
void visual_backward(const EncoderParams<T>& params, const VisualCache<T>& cache, const RowMatrix<T>& upstream,
                     Vector<T>& grad);

// Full gradient for both towers given upstream gradients of both outputs.
template <typename T>
Vector<T> backward(const EncoderParams<T>& params, const EegCache<T>& eeg_cache,
                   const VisualCache<T>& visual_cache, const RowMatrix<T>& eeg_upstream,
                   const RowMatrix<T>& visual_upstream);

}  // namespace eegret
