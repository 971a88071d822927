#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "eegret/params.hpp"

namespace eegret {

// Which feature-bank streams feed the visual head.
struct StreamConfig {
    std::vector<std::string> blur_streams;
    bool use_evnet = true;
    std::string evnet_stream = "evnet";

    bool operator==(const StreamConfig&) const = default;
};

struct Checkpoint {
    EncoderParams<float> params;
    StreamConfig streams;
    int epoch = -1;
    std::uint64_t seed = 0;
};

// File layout: "EEGRCKPT", u64le header length, JSON header (dims, stream
// config, layout table of name/offset/shape), f32le parameter blob.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace eegret
