#include "poregrad/filter.hpp"

#include <cmath>

namespace poregrad {

int reflect_index(int i, int n) noexcept
{
    const int period = 2 * n;
    int m = i % period;
    if (m < 0)
        m += period;
    return m < n ? m : period - 1 - m;
}

std::vector<double> gaussian_kernel(double sigma)
{
    if (!(sigma > 0) || !std::isfinite(sigma))
        throw ParameterError("gaussian sigma must be positive");
    const int radius = static_cast<int>(std::ceil(4.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
        k[static_cast<std::size_t>(i + radius)] = v;
        sum += v;
    }
    for (double& v : k)
        v /= sum;
    return k;
}

Image gaussian_blur(const Image& img, double sigma)
{
    const auto kernel = gaussian_kernel(sigma);
    const int radius = static_cast<int>(kernel.size() / 2);
    const int w = img.width();
    const int h = img.height();

    // Horizontal pass into tmp, then vertical pass into out.
    Image tmp(w, h);
    std::vector<double> line(static_cast<std::size_t>(w + 2 * radius));
    for (int r = 0; r < h; ++r) {
        for (int j = -radius; j < w + radius; ++j)
            line[static_cast<std::size_t>(j + radius)] = img(r, reflect_index(j, w));
        for (int c = 0; c < w; ++c) {
            double acc = 0;
            for (std::size_t k = 0; k < kernel.size(); ++k)
                acc += kernel[k] * line[static_cast<std::size_t>(c) + k];
            tmp(r, c) = acc;
        }
    }

    Image out(w, h);
    line.assign(static_cast<std::size_t>(h + 2 * radius), 0.0);
    for (int c = 0; c < w; ++c) {
        for (int j = -radius; j < h + radius; ++j)
            line[static_cast<std::size_t>(j + radius)] = tmp(reflect_index(j, h), c);
        for (int r = 0; r < h; ++r) {
            double acc = 0;
            for (std::size_t k = 0; k < kernel.size(); ++k)
                acc += kernel[k] * line[static_cast<std::size_t>(r) + k];
            out(r, c) = acc;
        }
    }
    return out;
}

}  // namespace poregrad
