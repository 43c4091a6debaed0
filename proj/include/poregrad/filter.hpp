#pragma once

#include <vector>

#include "poregrad/raster.hpp"

namespace poregrad {

/// Half-sample symmetric reflection (d c b a | a b c d | d c b a) of an
/// index into [0, n). Works for offsets larger than n.
int reflect_index(int i, int n) noexcept;

/// Sampled 1D Gaussian truncated at radius ceil(4 sigma), unit sum.
/// Element k corresponds to offset k - radius.
std::vector<double> gaussian_kernel(double sigma);

/// Separable Gaussian blur with reflect borders.
Image gaussian_blur(const Image& img, double sigma);

}  // namespace poregrad
