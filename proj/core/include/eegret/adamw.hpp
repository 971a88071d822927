#pragma once

#include <cstdint>

#include "eegret/params.hpp"

namespace eegret {

struct AdamWConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

// AdamW with decoupled weight decay. Coordinates where mask is zero are never
// touched (batch-norm running statistics live in the same vector).
template <typename T>
class AdamW {
public:
    AdamW(const AdamWConfig& cfg, Vector<T> mask);

    void step(Vector<T>& params, const Vector<T>& grad);
    std::int64_t steps() const noexcept { return t_; }

private:
    AdamWConfig cfg_;
    Vector<T> mask_;
    Vector<T> m_;
    Vector<T> v_;
    std::int64_t t_ = 0;
};

}  // namespace eegret
