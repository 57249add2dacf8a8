#pragma once

#include "arealight/env_map.hpp"
#include "arealight/image.hpp"

#include <string>

namespace arealight {

// Format-specific I/O. HDR formats (.hdr, .pfm, .exr) are linear; 8-bit
// PNG applies/removes the sRGB transfer; 16-bit grayscale PNG stores
// value/65535 linearly (used for depth and shadow maps).

ImageRGB load_hdr(const std::string& path);          // Radiance RGBE
void save_hdr(const std::string& path, const ImageRGB& img);

ImageRGB load_pfm(const std::string& path);          // PF (color) or Pf (gray, replicated)
void save_pfm(const std::string& path, const ImageRGB& img);

ImageRGB load_exr(const std::string& path);
void save_exr(const std::string& path, const ImageRGB& img);
ImageScalar load_exr_scalar(const std::string& path);
void save_exr_scalar(const std::string& path, const ImageScalar& img);

ImageRGB load_png(const std::string& path);          // 8-bit sRGB -> linear
void save_png(const std::string& path, const ImageRGB& img);
ImageScalar load_png_gray16(const std::string& path);
void save_png_gray16(const std::string& path, const ImageScalar& img);

/// Loads by extension: .hdr, .pfm, .exr, .png.
ImageRGB load_image(const std::string& path);
/// Saves by extension: .hdr, .pfm, .exr, .png.
void save_image(const std::string& path, const ImageRGB& img);

/// Loads a scalar map by extension: .exr (single channel), .pfm, or
/// 16-bit grayscale .png.
ImageScalar load_scalar_map(const std::string& path);
void save_scalar_map(const std::string& path, const ImageScalar& img);

/// Loads an equirectangular HDR environment map. Rejects non-2:1 inputs.
EnvironmentMap load_env_map(const std::string& path);

} // namespace arealight
