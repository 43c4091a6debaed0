#pragma once

#include <array>
#include <vector>

#include "poregrad/distfield.hpp"
#include "poregrad/raster.hpp"

namespace poregrad {

/// Pore-free attenuation model I(d) = a * exp(-b * d) + c over distance to
/// the particle boundary.
struct AttenuationFit {
    double a = 0;
    double b = 0;  // 1 / pixel
    double c = 0;
    double rmse = 0;  // count-weighted, over the bins used
    int n_bins_used = 0;
    bool converged = false;
    int iterations = 0;

    double operator()(double distance) const noexcept;
};

struct FitOptions {
    int max_iterations = 200;
    double gradient_tolerance = 1e-10;
    /// Records the objective after every accepted step in `objective_trace`.
    bool record_trace = false;
};

/// Weighted least-squares problem over the nonempty bins of a profile.
/// Weights are bin counts normalised to unit sum.
struct ProfileSamples {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> w;

    static ProfileSamples from_profile(const BinnedProfile& profile);
};

/// sum_i w_i (y_i - a e^{-b x_i} - c)^2 and its gradient in (a, b, c).
double fit_objective(const ProfileSamples& samples, const std::array<double, 3>& params,
                     std::array<double, 3>* gradient = nullptr);

/// Projected Levenberg-Marquardt with a >= 0, b >= 0. Needs at least four
/// nonempty bins; profiles with a value range below 1e-6 give (0, 0, mean).
AttenuationFit fit_attenuation(const BinnedProfile& profile, const FitOptions& options = {},
                               std::vector<double>* objective_trace = nullptr);
AttenuationFit fit_attenuation(const ProfileSamples& samples, const FitOptions& options = {},
                               std::vector<double>* objective_trace = nullptr);

/// Model evaluated at every mask pixel; background pixels copy `image`.
Image ideal_particle(const AttenuationFit& fit, const DistanceField& field,
                     const BinaryMask& mask, const Image& image);

struct ResidualImage {
    Image residual;  // image - ideal inside the mask, 0 outside
    AttenuationFit fit;
};

ResidualImage subtract(const Image& image, const Image& ideal, const BinaryMask& mask,
                       const AttenuationFit& fit = {});

}  // namespace poregrad
