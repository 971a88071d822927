#include "container.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "eegret/array.hpp"
#include "eegret/errors.hpp"

namespace fs = std::filesystem;

namespace eegret::detail {

namespace {

fs::path sibling_temp(const fs::path& target, const char* suffix) {
    fs::path p = target;
    p += suffix;
    return p;
}

void write_bytes(const fs::path& path, std::span<const char> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t s : shape) n *= s;
    return n;
}

std::vector<char> encode_f32le(std::span<const float> values) {
    std::vector<char> bytes(values.size() * 4);
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::uint32_t u = std::bit_cast<std::uint32_t>(values[i]);
        for (int b = 0; b < 4; ++b) bytes[i * 4 + b] = static_cast<char>((u >> (8 * b)) & 0xffu);
    }
    return bytes;
}

std::vector<float> decode_f32le(std::span<const char> bytes) {
    std::vector<float> values(bytes.size() / 4);
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::uint32_t u = 0;
        for (int b = 0; b < 4; ++b)
            u |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i * 4 + b])) << (8 * b);
        values[i] = std::bit_cast<float>(u);
    }
    return values;
}

void write_file_atomic(const fs::path& path, std::span<const char> bytes) {
    const fs::path tmp = sibling_temp(path, ".tmp");
    write_bytes(tmp, bytes);
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + " -> " + path.string() + ": " + ec.message());
}

std::vector<char> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

void write_container(const fs::path& dir, nlohmann::json meta, const std::vector<std::size_t>& shape,
                     std::span<const float> values) {
    if (shape_product(shape) != values.size())
        throw ShapeError("container shape does not match value count for " + dir.string());
    meta["shape"] = shape;
    meta["dtype"] = kDtype;

    const fs::path staging = sibling_temp(dir, ".staging");
    const fs::path retired = sibling_temp(dir, ".old");
    std::error_code ec;
    fs::remove_all(staging, ec);
    fs::remove_all(retired, ec);
    if (dir.has_parent_path()) fs::create_directories(dir.parent_path(), ec);
    if (!fs::create_directories(staging, ec) && ec)
        throw IoError("cannot create " + staging.string() + ": " + ec.message());

    const std::string header = meta.dump(2) + "\n";
    write_bytes(staging / kMetaFile, std::span<const char>(header.data(), header.size()));
    write_bytes(staging / kDataFile, encode_f32le(values));

    if (fs::exists(dir)) {
        fs::rename(dir, retired, ec);
        if (ec) throw IoError("cannot retire " + dir.string() + ": " + ec.message());
    }
    fs::rename(staging, dir, ec);
    if (ec) throw IoError("cannot publish " + dir.string() + ": " + ec.message());
    fs::remove_all(retired, ec);
}

RawContainer read_container(const fs::path& dir) {
    const fs::path meta_path = dir / kMetaFile;
    const fs::path data_path = dir / kDataFile;
    if (!fs::exists(meta_path)) throw FormatError("missing header " + meta_path.string());

    RawContainer c;
    {
        const auto text = read_file(meta_path);
        c.meta = nlohmann::json::parse(text.begin(), text.end(), nullptr, false);
        if (c.meta.is_discarded() || !c.meta.is_object())
            throw FormatError("corrupt header " + meta_path.string());
    }
    if (!c.meta.contains("shape") || !c.meta["shape"].is_array())
        throw FormatError("header lacks shape: " + meta_path.string());
    if (c.meta.value("dtype", std::string{}) != kDtype)
        throw FormatError("unsupported dtype in " + meta_path.string());
    for (const auto& s : c.meta["shape"]) {
        if (!s.is_number_unsigned()) throw FormatError("bad shape entry in " + meta_path.string());
        c.shape.push_back(s.get<std::size_t>());
    }

    if (!fs::exists(data_path)) throw IntegrityError("missing payload " + data_path.string());
    const auto bytes = read_file(data_path);
    const std::size_t expected = shape_product(c.shape) * 4;
    if (bytes.size() != expected) {
        std::ostringstream msg;
        msg << "payload " << data_path.string() << " holds " << bytes.size() << " bytes, header implies "
            << expected;
        throw IntegrityError(msg.str());
    }
    c.values = decode_f32le(bytes);
    for (float v : c.values)
        if (!std::isfinite(v)) throw DataError("non-finite value in " + data_path.string());
    return c;
}

}  // namespace eegret::detail

namespace eegret {

std::size_t FloatArray::size() const noexcept {
    return detail::shape_product(shape);
}

void write_array(const fs::path& dir, const FloatArray& array) {
    detail::write_container(dir, nlohmann::json::object(), array.shape, array.values);
}

FloatArray read_array(const fs::path& dir) {
    auto raw = detail::read_container(dir);
    return FloatArray{std::move(raw.shape), std::move(raw.values)};
}

}  // namespace eegret
