#pragma once

#include "arealight/image.hpp"

namespace arealight {

/// Equirectangular environment map storing linear-RGB radiance per
/// direction. Width is always twice the height.
///
/// Conventions (right-handed, camera at origin looking along -z, +y up):
///   u = (atan2(x, -z) + pi) / (2 pi)   -- u = 0.5 faces -z
///   v = (pi/2 - asin(y)) / pi          -- v = 0 is the +y zenith row
struct EnvironmentMap {
    ImageRGB radiance;

    EnvironmentMap() = default;
    explicit EnvironmentMap(ImageRGB img);

    int width() const { return radiance.width; }
    int height() const { return radiance.height; }

    /// Bilinear lookup with longitude wraparound and latitude clamp.
    Vec3 sample(double u, double v) const;
    Vec3 sample_dir(const Vec3& dir) const;

    const Vec3& texel(int x, int y) const { return radiance.at(x, y); }

    /// Direction of the texel center (x, y).
    Vec3 texel_dir(int x, int y) const;
    /// Solid angle subtended by texels in row y.
    double texel_solid_angle(int y) const;

    /// Solid-angle-weighted mean radiance.
    Vec3 mean_radiance() const;
};

/// Maps a unit direction to equirect UV in [0,1) x [0,1].
void dir_to_equirect(const Vec3& dir, double& u, double& v);
/// Inverse mapping: UV to a unit direction.
Vec3 equirect_to_dir(double u, double v);

/// Rotation applied to map content by rotate_env: latitude about the
/// camera x-axis composed with longitude about the world y-axis. A
/// source feature at direction w appears at env_rotation(lon,lat) * w.
Mat3 env_rotation(double lon_deg, double lat_deg);

/// Resamples the map so the texel at direction w takes the source value
/// at R^-1 w (bilinear).
EnvironmentMap rotate_env(const EnvironmentMap& env, double lon_deg, double lat_deg);

/// Box-filter downsample to the given size (width = 2 * height).
EnvironmentMap downsample_env(const EnvironmentMap& env, int width, int height);

} // namespace arealight
