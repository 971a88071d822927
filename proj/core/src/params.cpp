#include "eegret/params.hpp"

#include <cmath>

#include "eegret/errors.hpp"
#include "eegret/rng.hpp"

namespace eegret {

std::size_t ParamBlock::size() const noexcept {
    std::size_t n = 1;
    for (std::size_t s : shape) n *= s;
    return n;
}

ParamLayout::ParamLayout(const EncoderDims& d) {
    using namespace blocks;
    add(conv_w, {d.conv_maps, 1, d.channels, 1});
    add(conv_b, {d.conv_maps});
    add(bn_gamma, {d.conv_maps});
    add(bn_beta, {d.conv_maps});
    add(bn_running_mean, {d.conv_maps}, false);
    add(bn_running_var, {d.conv_maps}, false);
    add(mlp1_w, {d.hidden1, d.timepoints});
    add(mlp1_b, {d.hidden1});
    add(mlp2_w, {d.hidden2, d.hidden1});
    add(mlp2_b, {d.hidden2});
    add(proj_w, {d.embed_dim, d.flat_dim()});
    add(proj_b, {d.embed_dim});
    add(blur_attn_logits, {d.n_blur});
    add(gate_logits, {2});
    add(fusion_adapter1_w, {d.adapter_hidden, d.feature_dim});
    add(fusion_adapter1_b, {d.adapter_hidden});
    add(fusion_adapter2_w, {d.embed_dim, d.adapter_hidden});
    add(fusion_adapter2_b, {d.embed_dim});
    add(blur_adapter1_w, {d.adapter_hidden, d.feature_dim});
    add(blur_adapter1_b, {d.adapter_hidden});
    add(blur_adapter2_w, {d.embed_dim, d.adapter_hidden});
    add(blur_adapter2_b, {d.embed_dim});
}

void ParamLayout::add(std::string name, std::vector<std::size_t> shape, bool trainable) {
    ParamBlock b{std::move(name), total_, std::move(shape), trainable};
    total_ += b.size();
    blocks_.push_back(std::move(b));
}

const ParamBlock& ParamLayout::block(const std::string& name) const {
    for (const auto& b : blocks_)
        if (b.name == name) return b;
    throw LookupError("no parameter block '" + name + "'");
}

template <typename T>
EncoderParams<T> init_params(const EncoderDims& dims, std::uint64_t seed) {
    using namespace blocks;
    EncoderParams<T> p(dims);
    auto kaiming = [&](const char* name, std::size_t fan_in) {
        CounterRng rng(derive_key(seed, {hash_string("init"), hash_string(name)}));
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        auto w = p.vec(name);
        for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = static_cast<T>((2.0 * rng.uniform() - 1.0) * bound);
    };
    kaiming(conv_w, dims.channels);
    kaiming(mlp1_w, dims.timepoints);
    kaiming(mlp2_w, dims.hidden1);
    kaiming(proj_w, dims.flat_dim());
    kaiming(fusion_adapter1_w, dims.feature_dim);
    kaiming(fusion_adapter2_w, dims.adapter_hidden);
    kaiming(blur_adapter1_w, dims.feature_dim);
    kaiming(blur_adapter2_w, dims.adapter_hidden);
    p.vec(bn_gamma).setOnes();
    p.vec(bn_running_var).setOnes();
    return p;
}

template <typename T>
Vector<T> trainable_mask(const ParamLayout& layout) {
    Vector<T> m = Vector<T>::Zero(static_cast<Eigen::Index>(layout.total()));
    for (const auto& b : layout.blocks())
        if (b.trainable)
            m.segment(static_cast<Eigen::Index>(b.offset), static_cast<Eigen::Index>(b.size())).setOnes();
    return m;
}

template EncoderParams<float> init_params<float>(const EncoderDims&, std::uint64_t);
template EncoderParams<double> init_params<double>(const EncoderDims&, std::uint64_t);
template Vector<float> trainable_mask<float>(const ParamLayout&);
template Vector<double> trainable_mask<double>(const ParamLayout&);

}  // namespace eegret
