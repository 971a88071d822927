#include "eegret/npy.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <regex>
#include <sstream>

#include "container.hpp"
#include "eegret/errors.hpp"

namespace fs = std::filesystem;

namespace eegret {

namespace {

constexpr char kMagic[] = "\x93NUMPY";

std::string shape_literal(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        os << shape[i];
        if (shape.size() == 1 || i + 1 < shape.size()) os << ',';
        if (i + 1 < shape.size()) os << ' ';
    }
    os << ')';
    return os.str();
}

template <typename T>
void write_npy_impl(const fs::path& path, const std::vector<std::size_t>& shape, std::span<const T> values,
                    const char* descr) {
    if (detail::shape_product(shape) != values.size()) throw ShapeError("npy shape does not match value count");
    std::string dict = std::string("{'descr': '") + descr + "', 'fortran_order': False, 'shape': " +
                       shape_literal(shape) + ", }";
    // Pad so that magic + version + len + dict + '\n' is a multiple of 64.
    const std::size_t prefix = 6 + 2 + 2;
    std::size_t total = prefix + dict.size() + 1;
    dict.append((64 - total % 64) % 64, ' ');
    dict.push_back('\n');

    std::vector<char> bytes;
    bytes.insert(bytes.end(), kMagic, kMagic + 6);
    bytes.push_back(1);
    bytes.push_back(0);
    const auto hlen = static_cast<std::uint16_t>(dict.size());
    bytes.push_back(static_cast<char>(hlen & 0xff));
    bytes.push_back(static_cast<char>(hlen >> 8));
    bytes.insert(bytes.end(), dict.begin(), dict.end());
    for (T v : values) {
        using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
        U u = std::bit_cast<U>(v);
        for (std::size_t b = 0; b < sizeof(T); ++b) bytes.push_back(static_cast<char>((u >> (8 * b)) & 0xffu));
    }
    detail::write_file_atomic(path, bytes);
}

}  // namespace

NpyArray read_npy(const fs::path& path) {
    const auto bytes = detail::read_file(path);
    if (bytes.size() < 10 || std::memcmp(bytes.data(), kMagic, 6) != 0)
        throw FormatError("not an NPY file: " + path.string());
    const auto major = static_cast<unsigned char>(bytes[6]);
    const auto minor = static_cast<unsigned char>(bytes[7]);
    if (major != 1 || minor != 0) throw FormatError("only NPY version 1.0 is supported: " + path.string());
    const std::size_t hlen = static_cast<unsigned char>(bytes[8]) | (static_cast<unsigned char>(bytes[9]) << 8);
    if (bytes.size() < 10 + hlen) throw FormatError("truncated NPY header: " + path.string());
    const std::string header(bytes.data() + 10, hlen);

    static const std::regex descr_re(R"('descr'\s*:\s*'([^']*)')");
    static const std::regex order_re(R"('fortran_order'\s*:\s*(True|False))");
    static const std::regex shape_re(R"('shape'\s*:\s*\(([^)]*)\))");
    std::smatch m;
    NpyArray out;
    if (!std::regex_search(header, m, descr_re)) throw FormatError("NPY header lacks descr: " + path.string());
    out.descr = m[1];
    if (out.descr != "<f4" && out.descr != "<f8")
        throw FormatError("unsupported NPY dtype '" + out.descr + "' in " + path.string());
    if (!std::regex_search(header, m, order_re)) throw FormatError("NPY header lacks fortran_order: " + path.string());
    if (m[1] == "True") throw FormatError("Fortran-ordered NPY arrays are not supported: " + path.string());
    if (!std::regex_search(header, m, shape_re)) throw FormatError("NPY header lacks shape: " + path.string());
    {
        std::string dims = m[1];
        std::stringstream ss(dims);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            const auto first = tok.find_first_not_of(" \t");
            if (first == std::string::npos) continue;
            try {
                out.shape.push_back(static_cast<std::size_t>(std::stoull(tok.substr(first))));
            } catch (const std::exception&) {
                throw FormatError("bad NPY shape in " + path.string());
            }
        }
    }

    const std::size_t width = out.descr == "<f4" ? 4 : 8;
    const std::size_t count = detail::shape_product(out.shape);
    const std::size_t offset = 10 + hlen;
    if (bytes.size() - offset != count * width)
        throw IntegrityError("NPY payload size disagrees with shape in " + path.string());
    out.values.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t u = 0;
        for (std::size_t b = 0; b < width; ++b)
            u |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[offset + i * width + b])) << (8 * b);
        out.values[i] = width == 4 ? static_cast<double>(std::bit_cast<float>(static_cast<std::uint32_t>(u)))
                                   : std::bit_cast<double>(u);
    }
    return out;
}

void write_npy(const fs::path& path, const std::vector<std::size_t>& shape, std::span<const float> values) {
    write_npy_impl(path, shape, values, "<f4");
}

void write_npy(const fs::path& path, const std::vector<std::size_t>& shape, std::span<const double> values) {
    write_npy_impl(path, shape, values, "<f8");
}

EegDataset import_npy_dataset(const fs::path& path, std::optional<std::vector<int>> labels, SplitTag split) {
    NpyArray a = read_npy(path);
    EegDataset d;
    if (a.shape.size() == 4) {
        d.n_samples = a.shape[0];
        d.n_reps = a.shape[1];
        d.n_channels = a.shape[2];
        d.n_timepoints = a.shape[3];
    } else if (a.shape.size() == 3) {
        d.n_samples = a.shape[0];
        d.n_channels = a.shape[1];
        d.n_timepoints = a.shape[2];
    } else {
        throw ShapeError("EEG arrays must be 3-D or 4-D: " + path.string());
    }
    d.segments.assign(a.values.begin(), a.values.end());
    if (labels) {
        if (labels->size() != d.n_samples) throw ShapeError("label count does not match sample count");
        d.labels = std::move(*labels);
    } else {
        d.labels.resize(d.n_samples);
        for (std::size_t i = 0; i < d.n_samples; ++i) d.labels[i] = static_cast<int>(i);
    }
    int max_label = -1;
    for (int l : d.labels) max_label = std::max(max_label, l);
    d.class_count = max_label + 1;
    d.split = split;
    d.validate();
    return d;
}

FeatureBank import_npy_bank(const fs::path& path, std::vector<std::string> stream_names,
                            std::vector<std::string> image_ids, std::string provider_tag) {
    NpyArray a = read_npy(path);
    FeatureBank b;
    if (a.shape.size() == 3) {
        b.n_images = a.shape[0];
        b.n_streams = a.shape[1];
        b.feature_dim = a.shape[2];
    } else if (a.shape.size() == 2) {
        b.n_images = a.shape[0];
        b.n_streams = 1;
        b.feature_dim = a.shape[1];
    } else {
        throw ShapeError("feature arrays must be 2-D or 3-D: " + path.string());
    }
    if (stream_names.size() != b.n_streams)
        throw ConfigError("expected " + std::to_string(b.n_streams) + " stream names for " + path.string());
    if (image_ids.empty()) {
        for (std::size_t i = 0; i < b.n_images; ++i) image_ids.push_back("img_" + std::to_string(i));
    }
    b.features.assign(a.values.begin(), a.values.end());
    b.stream_names = std::move(stream_names);
    b.image_ids = std::move(image_ids);
    b.provider_tag = std::move(provider_tag);
    b.validate();
    return b;
}

}  // namespace eegret
