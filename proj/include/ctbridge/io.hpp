#pragma once

#include <filesystem>

#include "ctbridge/geometry.hpp"
#include "ctbridge/image.hpp"

namespace ctbridge {

// Image file: "CTBIMG01", u32 height, u32 width, f64 pixel size, f64 values.
// Sinogram file: "CTBSIN01", u32 kind, u32 n_views, u32 n_detectors,
// u32 view indices, i32 detector indices, f64 values. All little-endian.
void write_image(const std::filesystem::path& path, const ImageGrid& x);
ImageGrid read_image(const std::filesystem::path& path);
void write_sinogram(const std::filesystem::path& path, const Sinogram& y);
Sinogram read_sinogram(const std::filesystem::path& path);

// 8-bit binary PGM, values linearly mapped from [lo, hi] and clamped.
void write_pgm(const std::filesystem::path& path, const ImageGrid& x, double lo,
               double hi);

}  // namespace ctbridge
