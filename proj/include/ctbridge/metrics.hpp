#pragma once

#include "ctbridge/image.hpp"
#include "ctbridge/phantom.hpp"

namespace ctbridge {

double to_hu(double mu, double mu_water = kMuWater);

// Root mean square of per-pixel HU differences.
double rmse_hu(const ImageGrid& x, const ImageGrid& ref, double mu_water = kMuWater);

// ||x - ref|| / ||ref|| over pixels whose centers lie within `radius_mm` of
// the image center.
double relative_rmse_in_circle(const ImageGrid& x, const ImageGrid& ref,
                               double radius_mm);

// Mean local SSIM over all valid 11x11 positions of a Gaussian window
// (sigma 1.5), K1 = 0.01, K2 = 0.03.
double ssim(const ImageGrid& x, const ImageGrid& ref, double data_range);

}  // namespace ctbridge
