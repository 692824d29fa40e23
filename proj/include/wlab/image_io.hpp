#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace wlab {

// 8-bit grayscale PNG, rows top to bottom.
void write_gray_png(const std::string& path, std::size_t width,
                    std::size_t height, const std::vector<unsigned char>& pixels);

// width and height of a PNG file (IHDR fields).
std::pair<std::size_t, std::size_t> read_png_dims(const std::string& path);

}  // namespace wlab
