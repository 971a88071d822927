#pragma once

#include "eegret/params.hpp"

namespace eegret {

template <typename T>
struct InfoNceResult {
    T loss{};
    RowMatrix<T> grad_z;
    RowMatrix<T> grad_v;
};

// Symmetric InfoNCE over an in-batch logit matrix L = scale * z v^T:
//   loss = (1/2N) sum_i [ lse_j L_ij - L_ii  +  lse_j L_ji - L_ii ].
// With normalize set, rows of z and v are l2-normalised first and the
// gradient flows through the normalisation. Throws DataError on non-finite
// input and ShapeError on mismatched shapes.
template <typename T>
InfoNceResult<T> infonce_loss(const RowMatrix<T>& z, const RowMatrix<T>& v, double logit_scale = 1.0,
                              bool normalize = false);

}  // namespace eegret
