#include "wlab/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>
#include <utility>

#include "wlab/errors.hpp"

namespace wlab {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FileHandle = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

void write_gray_png(const std::string& path, std::size_t width,
                    std::size_t height, const std::vector<unsigned char>& pixels) {
    if (pixels.size() != width * height)
        throw ValueError("write_gray_png: pixel buffer size mismatch");
    FileHandle fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("write_gray_png: cannot open " + path);

    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("write_gray_png: png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("write_gray_png: png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("write_gray_png: libpng error writing " + path);
    }

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width),
                 static_cast<png_uint_32>(height), 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (std::size_t r = 0; r < height; ++r)
        png_write_row(png,
                      const_cast<png_bytep>(pixels.data() + r * width));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

std::pair<std::size_t, std::size_t> read_png_dims(const std::string& path) {
    FileHandle fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("read_png_dims: cannot open " + path);

    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("read_png_dims: png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("read_png_dims: png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("read_png_dims: libpng error reading " + path);
    }

    png_init_io(png, fp.get());
    png_read_info(png, info);
    const std::size_t w = png_get_image_width(png, info);
    const std::size_t h = png_get_image_height(png, info);
    png_destroy_read_struct(&png, &info, nullptr);
    return {w, h};
}

}  // namespace wlab
