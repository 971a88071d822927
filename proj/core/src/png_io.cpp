#include "eegret/png_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include "eegret/errors.hpp"

namespace eegret {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const noexcept {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

Image read_png(const std::filesystem::path& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str()))
        throw IoError("cannot read PNG " + path.string() + ": " + image.message);
    image.format = PNG_FORMAT_RGB;
    std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        png_image_free(&image);
        throw IoError("cannot decode PNG " + path.string() + ": " + image.message);
    }
    Image out(static_cast<int>(image.height), static_cast<int>(image.width));
    for (std::size_t i = 0; i < out.pixels.size(); ++i) out.pixels[i] = buffer[i] / 255.0;
    return out;
}

void write_png(const std::filesystem::path& path, const Image& img) {
    img.validate();
    std::vector<png_byte> buffer(img.pixels.size());
    for (std::size_t i = 0; i < buffer.size(); ++i)
        buffer[i] = static_cast<png_byte>(std::lround(img.pixels[i] * 255.0));
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width);
    image.height = static_cast<png_uint_32>(img.height);
    image.format = PNG_FORMAT_RGB;
    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) throw IoError("cannot open " + path.string() + " for writing");
    if (!png_image_write_to_stdio(&image, file.get(), 0, buffer.data(), 0, nullptr))
        throw IoError("cannot encode PNG " + path.string() + ": " + image.message);
}

}  // namespace eegret
