#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace eegret {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

// Sizes of every layer of the EEG encoder and the visual fusion head. The
// defaults reproduce the full-size network; tests shrink them for dense
// finite-difference checks.
struct EncoderDims {
    std::size_t channels = 63;
    std::size_t timepoints = 250;
    std::size_t conv_maps = 25;
    std::size_t hidden1 = 200;
    std::size_t hidden2 = 200;
    std::size_t embed_dim = 1024;
    std::size_t feature_dim = 1024;
    std::size_t adapter_hidden = 768;
    std::size_t n_blur = 8;

    double dropout_mlp1 = 0.25;
    double dropout_mlp2 = 0.65;
    double dropout_adapter = 0.85;
    double bn_momentum = 0.1;
    double bn_eps = 1e-5;

    std::size_t flat_dim() const noexcept { return conv_maps * hidden2; }
    bool operator==(const EncoderDims&) const = default;
};

struct ParamBlock {
    std::string name;
    std::size_t offset = 0;
    std::vector<std::size_t> shape;
    bool trainable = true;

    std::size_t size() const noexcept;
    // Leading dimension and product of the rest; weights are [out x in].
    std::size_t rows() const noexcept { return shape.empty() ? 1 : shape.front(); }
    std::size_t cols() const noexcept { return rows() == 0 ? 0 : size() / rows(); }
};

// Name -> (offset, shape) table over one flat parameter vector.
class ParamLayout {
public:
    ParamLayout() = default;
    explicit ParamLayout(const EncoderDims& dims);

    const std::vector<ParamBlock>& blocks() const noexcept { return blocks_; }
    const ParamBlock& block(const std::string& name) const;
    std::size_t total() const noexcept { return total_; }

private:
    void add(std::string name, std::vector<std::size_t> shape, bool trainable = true);

    std::vector<ParamBlock> blocks_;
    std::size_t total_ = 0;
};

// Every learnable parameter (plus batch-norm running statistics, which are
// stored in the same vector but flagged non-trainable).
template <typename T>
struct EncoderParams {
    EncoderDims dims;
    ParamLayout layout;
    Vector<T> values;

    EncoderParams() = default;
    explicit EncoderParams(const EncoderDims& d) : dims(d), layout(d), values(Vector<T>::Zero(static_cast<Eigen::Index>(layout.total()))) {}

    Eigen::Map<RowMatrix<T>> mat(const std::string& name) {
        const auto& b = layout.block(name);
        return {values.data() + b.offset, static_cast<Eigen::Index>(b.rows()), static_cast<Eigen::Index>(b.cols())};
    }
    Eigen::Map<const RowMatrix<T>> mat(const std::string& name) const {
        const auto& b = layout.block(name);
        return {values.data() + b.offset, static_cast<Eigen::Index>(b.rows()), static_cast<Eigen::Index>(b.cols())};
    }
    Eigen::Map<Vector<T>> vec(const std::string& name) {
        const auto& b = layout.block(name);
        return {values.data() + b.offset, static_cast<Eigen::Index>(b.size())};
    }
    Eigen::Map<const Vector<T>> vec(const std::string& name) const {
        const auto& b = layout.block(name);
        return {values.data() + b.offset, static_cast<Eigen::Index>(b.size())};
    }

    template <typename U>
    EncoderParams<U> cast() const {
        EncoderParams<U> out;
        out.dims = dims;
        out.layout = layout;
        out.values = values.template cast<U>();
        return out;
    }
};

// Kaiming-uniform (fan-in, ReLU gain) weights, zero biases, unit batch-norm
// scale, zero attention and gate logits. Deterministic in seed.
template <typename T>
EncoderParams<T> init_params(const EncoderDims& dims, std::uint64_t seed);

// Mask with 1 for trainable coordinates, 0 for running statistics.
template <typename T>
Vector<T> trainable_mask(const ParamLayout& layout);

// Names of the parameter blocks, in layout order.
namespace blocks {
inline constexpr const char* conv_w = "conv_w";
inline constexpr const char* conv_b = "conv_b";
inline constexpr const char* bn_gamma = "bn_gamma";
inline constexpr const char* bn_beta = "bn_beta";
inline constexpr const char* bn_running_mean = "bn_running_mean";
inline constexpr const char* bn_running_var = "bn_running_var";
inline constexpr const char* mlp1_w = "mlp1_w";
inline constexpr const char* mlp1_b = "mlp1_b";
inline constexpr const char* mlp2_w = "mlp2_w";
inline constexpr const char* mlp2_b = "mlp2_b";
inline constexpr const char* proj_w = "proj_w";
inline constexpr const char* proj_b = "proj_b";
inline constexpr const char* blur_attn_logits = "blur_attn_logits";
inline constexpr const char* gate_logits = "gate_logits";
inline constexpr const char* fusion_adapter1_w = "fusion_adapter1_w";
inline constexpr const char* fusion_adapter1_b = "fusion_adapter1_b";
inline constexpr const char* fusion_adapter2_w = "fusion_adapter2_w";
inline constexpr const char* fusion_adapter2_b = "fusion_adapter2_b";
inline constexpr const char* blur_adapter1_w = "blur_adapter1_w";
inline constexpr const char* blur_adapter1_b = "blur_adapter1_b";
inline constexpr const char* blur_adapter2_w = "blur_adapter2_w";
inline constexpr const char* blur_adapter2_b = "blur_adapter2_b";
}  // namespace blocks

}  // namespace eegret
