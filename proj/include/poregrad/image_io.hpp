#pragma once

#include <filesystem>

#include "poregrad/raster.hpp"

namespace poregrad {

/// Reads a single-channel 8- or 16-bit PNG or a binary PGM (P5). Values are
/// returned as raw integer levels; multi-channel images are rejected.
Image read_gray_levels(const std::filesystem::path& path, int* max_level = nullptr);

/// Reads a radiograph and scales it to [0, 1] by the file's maximum level.
Radiograph read_radiograph(const std::filesystem::path& path, double pixel_pitch = 1.0);

/// Writes levels round(clamp(v * scale, 0, 65535)) as 16-bit grayscale.
void write_png16(const std::filesystem::path& path, const Image& img, double scale = 65535.0);
void write_pgm16(const std::filesystem::path& path, const Image& img, double scale = 65535.0);

/// Masks are 8-bit PNG with 0/255; any nonzero level reads as foreground.
void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask);
BinaryMask read_mask(const std::filesystem::path& path);

}  // namespace poregrad
