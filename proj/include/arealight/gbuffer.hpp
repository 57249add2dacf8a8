#pragma once

#include "arealight/image.hpp"

#include <string>

namespace arealight {

/// Co-registered per-pixel geometry and material maps for one subject.
/// depth is camera-space in [0, 1] with larger = farther; normals are
/// unit camera-space vectors (x right, y up, z toward the viewer).
///
/// depth_scale is the world length of the [0,1] depth interval divided
/// by the world width of the image. Shadow passes use it to keep the
/// reconstructed mesh similar to the true scene; 1.0 when unknown.
struct GBuffer {
    ImageScalar depth;
    ImageRGB normal;
    ImageRGB albedo;
    ImageScalar specular;
    ImageScalar roughness;
    ImageScalar mask;
    double depth_scale = 1.0;

    int width() const { return depth.width; }
    int height() const { return depth.height; }
    bool masked(int x, int y) const { return mask.at(x, y) > 0.5; }
    size_t mask_count() const;

    /// Throws if resolutions disagree or masked-in texels violate the
    /// depth range / unit-normal invariants.
    void validate() const;
};

/// Reads a G-buffer from a directory of fixed-name maps (depth, normal,
/// albedo, specular, roughness, mask; .exr/.pfm/.png tried in order)
/// plus an optional meta.json carrying depth_scale.
GBuffer load_gbuffer(const std::string& dir);

/// Writes all maps as EXR plus meta.json.
void save_gbuffer(const std::string& dir, const GBuffer& g);

} // namespace arealight
