#include "eegret/adamw.hpp"

#include <cmath>

#include "eegret/errors.hpp"

namespace eegret {

template <typename T>
AdamW<T>::AdamW(const AdamWConfig& cfg, Vector<T> mask)
    : cfg_(cfg), mask_(std::move(mask)), m_(Vector<T>::Zero(mask_.size())), v_(Vector<T>::Zero(mask_.size())) {
    if (cfg.lr < 0.0 || cfg.weight_decay < 0.0) throw ParameterError("AdamW lr and weight_decay must be non-negative");
}

template <typename T>
void AdamW<T>::step(Vector<T>& params, const Vector<T>& grad) {
    if (params.size() != mask_.size() || grad.size() != mask_.size())
        throw ShapeError("AdamW step: parameter/gradient size mismatch");
    ++t_;
    const T lr = static_cast<T>(cfg_.lr);
    const T b1 = static_cast<T>(cfg_.beta1);
    const T b2 = static_cast<T>(cfg_.beta2);
    const T bc1 = static_cast<T>(1.0 - std::pow(cfg_.beta1, static_cast<double>(t_)));
    const T bc2 = static_cast<T>(1.0 - std::pow(cfg_.beta2, static_cast<double>(t_)));
    const T eps = static_cast<T>(cfg_.eps);
    const T decay = static_cast<T>(1.0 - cfg_.lr * cfg_.weight_decay);
    for (Eigen::Index i = 0; i < params.size(); ++i) {
        if (mask_[i] == T(0)) continue;
        const T g = grad[i];
        m_[i] = b1 * m_[i] + (T(1) - b1) * g;
        v_[i] = b2 * v_[i] + (T(1) - b2) * g * g;
        const T mhat = m_[i] / bc1;
        const T vhat = v_[i] / bc2;
        params[i] = params[i] * decay - lr * mhat / (std::sqrt(vhat) + eps);
    }
}

template class AdamW<float>;
template class AdamW<double>;

}  // namespace eegret
