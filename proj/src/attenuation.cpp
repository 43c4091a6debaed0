#include "poregrad/attenuation.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "poregrad/error.hpp"

namespace poregrad {

double AttenuationFit::operator()(double distance) const noexcept
{
    return a * std::exp(-b * distance) + c;
}

ProfileSamples ProfileSamples::from_profile(const BinnedProfile& profile)
{
    ProfileSamples s;
    double total = 0;
    for (std::size_t i = 0; i < profile.bins(); ++i) {
        if (profile.counts[i] <= 0)
            continue;
        if (!std::isfinite(profile.values[i]))
            throw DataError("attenuation fit: non-finite profile value in bin " + std::to_string(i));
        s.x.push_back(profile.midpoint(i));
        s.y.push_back(profile.values[i]);
        s.w.push_back(static_cast<double>(profile.counts[i]));
        total += static_cast<double>(profile.counts[i]);
    }
    for (double& w : s.w)
        w /= total;
    return s;
}

double fit_objective(const ProfileSamples& samples, const std::array<double, 3>& p,
                     std::array<double, 3>* gradient)
{
    double f = 0;
    std::array<double, 3> g{0, 0, 0};
    for (std::size_t i = 0; i < samples.x.size(); ++i) {
        const double e = std::exp(-p[1] * samples.x[i]);
        const double r = p[0] * e + p[2] - samples.y[i];
        const double wr = samples.w[i] * r;
        f += wr * r;
        g[0] += 2 * wr * e;
        g[1] += 2 * wr * (-p[0] * samples.x[i] * e);
        g[2] += 2 * wr;
    }
    if (gradient)
        *gradient = g;
    return f;
}

namespace {

// Gradient with components zeroed where the bound is active and the descent
// direction points out of the feasible set.
double projected_gradient_norm(const std::array<double, 3>& p, const std::array<double, 3>& g)
{
    double sq = 0;
    for (int k = 0; k < 3; ++k) {
        const bool bounded = k < 2;
        if (bounded && p[static_cast<std::size_t>(k)] <= 0.0 && g[static_cast<std::size_t>(k)] > 0.0)
            continue;
        sq += g[static_cast<std::size_t>(k)] * g[static_cast<std::size_t>(k)];
    }
    return std::sqrt(sq);
}

std::array<double, 3> initial_guess(const ProfileSamples& s)
{
    const double c = *std::min_element(s.y.begin(), s.y.end()) - 1e-3;
    // Weighted regression of log(y - c) on x.
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
        const double ly = std::log(s.y[i] - c);
        sw += s.w[i];
        sx += s.w[i] * s.x[i];
        sy += s.w[i] * ly;
        sxx += s.w[i] * s.x[i] * s.x[i];
        sxy += s.w[i] * s.x[i] * ly;
    }
    const double denom = sw * sxx - sx * sx;
    double slope = denom > 0 ? (sw * sxy - sx * sy) / denom : 0.0;
    const double intercept = (sy - slope * sx) / sw;
    const double b = std::max(0.0, -slope);
    return {std::exp(intercept), b, c};
}

}  // namespace

AttenuationFit fit_attenuation(const BinnedProfile& profile, const FitOptions& options,
                               std::vector<double>* objective_trace)
{
    return fit_attenuation(ProfileSamples::from_profile(profile), options, objective_trace);
}

AttenuationFit fit_attenuation(const ProfileSamples& s, const FitOptions& options,
                               std::vector<double>* objective_trace)
{
    const std::size_t n = s.x.size();
    if (n < 4)
        throw FitError("attenuation fit needs at least 4 nonempty bins, got " + std::to_string(n));
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || !std::isfinite(s.w[i]))
            throw DataError("attenuation fit: non-finite sample");

    AttenuationFit fit;
    fit.n_bins_used = static_cast<int>(n);

    const auto [lo, hi] = std::minmax_element(s.y.begin(), s.y.end());
    if (*hi - *lo < 1e-6) {
        double wsum = 0, mean = 0;
        for (std::size_t i = 0; i < n; ++i) {
            mean += s.w[i] * s.y[i];
            wsum += s.w[i];
        }
        fit.c = mean / wsum;
        fit.rmse = std::sqrt(fit_objective(s, {0, 0, fit.c}) / wsum);
        fit.converged = true;
        return fit;
    }

    std::array<double, 3> p = initial_guess(s);
    std::array<double, 3> g{};
    double f = fit_objective(s, p, &g);
    if (objective_trace) {
        objective_trace->clear();
        objective_trace->push_back(f);
    }
    double lambda = 1e-3;
    int it = 0;
    bool converged = false;
    for (; it < options.max_iterations; ++it) {
        if (projected_gradient_norm(p, g) <= options.gradient_tolerance) {
            converged = true;
            break;
        }
        Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
        Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
        for (std::size_t i = 0; i < n; ++i) {
            const double e = std::exp(-p[1] * s.x[i]);
            const Eigen::Vector3d j(e, -p[0] * s.x[i] * e, 1.0);
            const double r = p[0] * e + p[2] - s.y[i];
            h += s.w[i] * j * j.transpose();
            rhs -= s.w[i] * r * j;
        }
        const double floor = 1e-12 * std::max(h.trace(), 1e-300);

        bool accepted = false;
        while (!accepted && lambda < 1e16) {
            Eigen::Matrix3d damped = h;
            for (int k = 0; k < 3; ++k)
                damped(k, k) += lambda * std::max(h(k, k), floor);
            const Eigen::Vector3d step = damped.ldlt().solve(rhs);
            std::array<double, 3> q{std::max(0.0, p[0] + step[0]), std::max(0.0, p[1] + step[1]),
                                    p[2] + step[2]};
            std::array<double, 3> gq{};
            const double fq = fit_objective(s, q, &gq);
            if (std::isfinite(fq) && fq < f) {
                p = q;
                g = gq;
                f = fq;
                lambda = std::max(lambda * 0.1, 1e-12);
                accepted = true;
                if (objective_trace)
                    objective_trace->push_back(f);
            } else {
                lambda *= 10.0;
            }
        }
        if (!accepted) {
            // No descent direction left at working precision.
            converged = projected_gradient_norm(p, g) <= options.gradient_tolerance;
            break;
        }
    }
    if (!converged && it >= options.max_iterations)
        converged = projected_gradient_norm(p, g) <= options.gradient_tolerance;

    fit.a = p[0];
    fit.b = p[1];
    fit.c = p[2];
    fit.rmse = std::sqrt(f);
    fit.converged = converged;
    fit.iterations = it;
    return fit;
}

Image ideal_particle(const AttenuationFit& fit, const DistanceField& field, const BinaryMask& mask,
                     const Image& image)
{
    require_same_shape(field, mask, "ideal_particle");
    require_same_shape(field, image, "ideal_particle");
    Image out = image;
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i])
            out[i] = fit(field[i]);
    return out;
}

ResidualImage subtract(const Image& image, const Image& ideal, const BinaryMask& mask,
                       const AttenuationFit& fit)
{
    require_same_shape(image, ideal, "subtract");
    require_same_shape(image, mask, "subtract");
    ResidualImage out{Image(image.width(), image.height(), 0.0), fit};
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i])
            out.residual[i] = image[i] - ideal[i];
    return out;
}

}  // namespace poregrad
