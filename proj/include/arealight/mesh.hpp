#pragma once

#include "arealight/image.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace arealight {

/// Screen-space geometry reconstructed from a depth map, used for
/// shadow passes. Positions live in "shadow space": x = (i+0.5)/W
/// (right), y = (j+0.5)/W (down, width-normalized so pixels stay
/// square), z = depth * depth_scale (into the screen). This is a
/// uniformly scaled, axis-flipped copy of camera space, so visibility
/// computed here matches the camera-space scene.
struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<uint32_t, 3>> triangles;
    std::vector<std::array<int, 2>> source_pixel; // per-vertex (x, y)

    size_t vertex_count() const { return vertices.size(); }
    size_t triangle_count() const { return triangles.size(); }
};

/// Camera-space direction (x right, y up, z toward viewer) to shadow
/// space (y down, z into the screen).
inline Vec3 shadow_space_dir(const Vec3& cam_dir) { return {cam_dir.x, -cam_dir.y, -cam_dir.z}; }

/// Shadow-space position of pixel (x, y) at the given normalized depth.
inline Vec3 shadow_space_position(int x, int y, double depth, int width, double depth_scale) {
    return {(x + 0.5) / width, (y + 0.5) / width, depth * depth_scale};
}

/// One vertex per masked pixel; two triangles per 2x2 quad whose four
/// pixels are all masked-in and whose max pairwise depth difference is
/// below gap_threshold (quads spanning depth gaps are skipped).
TriangleMesh depth_to_mesh(const ImageScalar& depth, const ImageScalar& mask,
                           double gap_threshold, double depth_scale = 1.0);

} // namespace arealight
