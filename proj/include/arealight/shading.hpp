#pragma once

#include "arealight/gbuffer.hpp"
#include "arealight/lights.hpp"

#include <vector>

namespace arealight {

enum class ShadingComponent { Diffuse, Specular };

/// Per-light shadow-less radiance image. Zero outside the mask.
struct ShadingImage {
    ImageRGB radiance;
    ShadingComponent component = ShadingComponent::Diffuse;
    int light_index = -1;
};

/// Per-pixel partial derivatives of a shading image with respect to the
/// light parameters. Shading factors as S_c(x) = intensity_c * shape(x),
/// so the intensity partial is `shape` itself (identical per channel)
/// and the direction partial of channel c is intensity_c * dshape_dir.
///
/// dshape_dir treats the direction as a free 3-vector that the forward
/// pass normalizes: the tangential projection (I - d d^T) is included,
/// evaluated at unit length.
struct ShadingGradients {
    ImageScalar shape;
    ImageScalar dshape_dir[3];
};

/// Lambert diffuse shading: intensity * max(0, n . l) per pixel.
/// No 1/pi factor; the optimizer's intensities absorb constant scale.
ShadingImage lambert(const GBuffer& g, const AreaLight& light, ShadingGradients* grads = nullptr);

/// Simplified Disney principled specular: GTR2/GGX distribution with
/// alpha = roughness^2, Schlick Fresnel with F0 = 0.08 * specular,
/// Smith-GGX masking-shadowing with alpha_g = (0.5 + roughness/2)^2,
/// denominator 4 (n.l)(n.v); multiplied by max(0, n.l). Zero wherever
/// n.l <= 0 or n.v <= 0.
ShadingImage disney_specular(const GBuffer& g, const AreaLight& light, const Vec3& view,
                             ShadingGradients* grads = nullptr);

/// Evaluates the specular lobe (without the n.l factor) for one
/// configuration; used for reference renders and tests.
double disney_specular_lobe(const Vec3& n, const Vec3& l, const Vec3& v,
                            double roughness, double specular);

/// Merges per-light shading into one image:
///   no shadows:   sum_l (A * S_diff_l + S_spec_l)
///   with shadows: sum_l V_l * (A * S_diff_l + S_spec_l)
ImageRGB reconstruct(const GBuffer& g, const std::vector<ShadingImage>& shading_diff,
                     const std::vector<ShadingImage>& shading_spec,
                     const std::vector<ImageScalar>* shadows = nullptr);

/// Mean absolute difference over masked pixels (and channels).
double masked_mean_l1(const ImageRGB& a, const ImageRGB& b, const ImageScalar& mask);
double masked_mean_l1(const ImageScalar& a, const ImageScalar& b, const ImageScalar& mask);

struct DecompositionLosses {
    double texture = 0.0;       // albedo + roughness + specular + normal
    double diff_shading = 0.0;
    double spec_shading = 0.0;
    double diff_recon = 0.0;
    double full_recon = 0.0;
};

/// L1 decomposition losses between a ground-truth G-buffer (plus its
/// reference shading images) and a predicted decomposition. Reference
/// reconstructions are A * S_diff and A * S_diff + S_spec.
DecompositionLosses decomposition_losses(const GBuffer& gt,
                                         const ImageRGB& gt_diff_shading,
                                         const ImageRGB& gt_spec_shading,
                                         const GBuffer& pred,
                                         const std::vector<ShadingImage>& pred_diff,
                                         const std::vector<ShadingImage>& pred_spec);

} // namespace arealight
