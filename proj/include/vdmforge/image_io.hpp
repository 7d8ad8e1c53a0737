#pragma once

#include <string>

#include "vdmforge/render.hpp"

namespace vdmforge {

// 8-bit PNG previews (values clamped to [0,1]).
void write_png(const ImageRgb& img, const std::string& path);
void write_png(const ImageGray& img, const std::string& path);

// Raw float dump: "NRMF" | u32 version=1 | u32 H | u32 W |
// float32 LE row-major RGB. Grayscale images are replicated to RGB.
// Bit-exact round trip; the regression format for renders.
void write_nrmf(const ImageRgb& img, const std::string& path);
void write_nrmf(const ImageGray& img, const std::string& path);
ImageRgb read_nrmf(const std::string& path);

}  // namespace vdmforge
