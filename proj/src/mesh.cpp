#include "arealight/mesh.hpp"

#include <stdexcept>

namespace arealight {

TriangleMesh depth_to_mesh(const ImageScalar& depth, const ImageScalar& mask,
                           double gap_threshold, double depth_scale) {
    require_same_size(depth, mask, "depth_to_mesh");
    const int w = depth.width, h = depth.height;

    TriangleMesh mesh;
    std::vector<int32_t> vertex_of(size_t(w) * h, -1);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (mask.at(x, y) <= 0.5) continue;
            vertex_of[size_t(y) * w + x] = int32_t(mesh.vertices.size());
            mesh.vertices.push_back(shadow_space_position(x, y, depth.at(x, y), w, depth_scale));
            mesh.source_pixel.push_back({x, y});
        }
    }
    if (mesh.vertices.empty()) throw std::invalid_argument("depth_to_mesh: empty mask");

    for (int y = 0; y + 1 < h; ++y) {
        for (int x = 0; x + 1 < w; ++x) {
            int32_t v00 = vertex_of[size_t(y) * w + x];
            int32_t v10 = vertex_of[size_t(y) * w + x + 1];
            int32_t v01 = vertex_of[size_t(y + 1) * w + x];
            int32_t v11 = vertex_of[size_t(y + 1) * w + x + 1];
            if (v00 < 0 || v10 < 0 || v01 < 0 || v11 < 0) continue;
            double d00 = depth.at(x, y), d10 = depth.at(x + 1, y);
            double d01 = depth.at(x, y + 1), d11 = depth.at(x + 1, y + 1);
            double lo = std::min(std::min(d00, d10), std::min(d01, d11));
            double hi = std::max(std::max(d00, d10), std::max(d01, d11));
            if (hi - lo >= gap_threshold) continue;
            mesh.triangles.push_back({uint32_t(v00), uint32_t(v10), uint32_t(v01)});
            mesh.triangles.push_back({uint32_t(v10), uint32_t(v11), uint32_t(v01)});
        }
    }
    return mesh;
}

} // namespace arealight
