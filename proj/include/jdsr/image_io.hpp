#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "jdsr/image.hpp"

namespace jdsr {

// PFM: "PF" (3 channels) or "Pf" (1 channel), "W H", scale line whose sign
// gives endianness, then float32 rows stored bottom-up.
Image read_pfm(const std::filesystem::path& path);
void write_pfm(const std::filesystem::path& path, const Image& img);

// 8-bit PNG, values mapped linearly to [0,1]. Gray+alpha and RGBA drop alpha.
Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& img);

/// Writes a binary mask (nonzero = white) as an 8-bit gray PNG.
void write_mask_png(const std::filesystem::path& path, int width, int height,
                    const std::vector<std::uint8_t>& mask);

}  // namespace jdsr
