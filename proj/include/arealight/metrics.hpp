#pragma once

#include "arealight/image.hpp"

#include <vector>

namespace arealight {

constexpr double kLambdaSlope = 0.01;

/// Root-mean-square error over all pixels and channels.
double rmse(const ImageRGB& a, const ImageRGB& b);

/// Mean local SSIM: 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
/// K2 = 0.03, dynamic range 1, computed per channel on the valid
/// region and averaged.
double ssim(const ImageRGB& a, const ImageRGB& b);

/// Ordered, co-registered frames.
struct FrameSequence {
    std::vector<ImageRGB> frames;
    int count() const { return int(frames.size()); }
};

/// Temporal-consistency metric: RMSE between ground-truth and predicted
/// frame differences at the given time step.
double partial_rmse_t(const FrameSequence& gt, const FrameSequence& pred, int t);
/// Mean of the step-1, step-2, and step-4 terms; needs >= 5 frames.
double partial_rmse(const FrameSequence& gt, const FrameSequence& pred);

/// Scale-invariant L1 depth loss: the masked mean offset between the
/// maps is removed before the masked mean absolute error.
double scale_invariant_l1(const ImageScalar& gt_depth, const ImageScalar& pred_depth,
                          const ImageScalar& mask);

/// L1 between forward-difference gradients of the depth maps (last
/// column/row dropped).
double slope_loss(const ImageScalar& gt_depth, const ImageScalar& pred_depth);

/// scale_invariant_l1 + lambda_slope * slope_loss.
double depth_loss(const ImageScalar& gt_depth, const ImageScalar& pred_depth,
                  const ImageScalar& mask, double lambda_slope = kLambdaSlope);

} // namespace arealight
