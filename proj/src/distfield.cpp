#include "poregrad/distfield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace poregrad {

namespace {

constexpr double kFar = 1e20;

// Lower envelope of parabolas (Felzenszwalb & Huttenlocher). f and out have
// length n; v and z are scratch.
void envelope_1d(const std::vector<double>& f, std::vector<double>& out, std::vector<int>& v,
                 std::vector<double>& z)
{
    const int n = static_cast<int>(f.size());
    v.assign(static_cast<std::size_t>(n), 0);
    z.assign(static_cast<std::size_t>(n) + 1, 0.0);
    int k = 0;
    v[0] = 0;
    z[0] = -std::numeric_limits<double>::infinity();
    z[1] = std::numeric_limits<double>::infinity();
    for (int q = 1; q < n; ++q) {
        const auto uq = static_cast<std::size_t>(q);
        double s;
        while (true) {
            const int p = v[static_cast<std::size_t>(k)];
            const auto up = static_cast<std::size_t>(p);
            s = ((f[uq] + static_cast<double>(q) * q) - (f[up] + static_cast<double>(p) * p)) /
                (2.0 * (q - p));
            if (s <= z[static_cast<std::size_t>(k)] && k > 0)
                --k;
            else
                break;
        }
        ++k;
        v[static_cast<std::size_t>(k)] = q;
        z[static_cast<std::size_t>(k)] = s;
        z[static_cast<std::size_t>(k) + 1] = std::numeric_limits<double>::infinity();
    }
    k = 0;
    out.resize(static_cast<std::size_t>(n));
    for (int q = 0; q < n; ++q) {
        while (z[static_cast<std::size_t>(k) + 1] < q)
            ++k;
        const int p = v[static_cast<std::size_t>(k)];
        const double d = static_cast<double>(q - p);
        out[static_cast<std::size_t>(q)] = d * d + f[static_cast<std::size_t>(p)];
    }
}

}  // namespace

Grid<long> squared_distance_transform(const BinaryMask& mask)
{
    // Work on a grid padded by one background pixel on every side.
    const int w = mask.width() + 2;
    const int h = mask.height() + 2;
    std::vector<double> grid(static_cast<std::size_t>(w) * h, 0.0);
    for (int r = 0; r < mask.height(); ++r)
        for (int c = 0; c < mask.width(); ++c)
            grid[static_cast<std::size_t>(r + 1) * w + (c + 1)] = mask(r, c) ? kFar : 0.0;

    std::vector<double> f, out, z;
    std::vector<int> v;
    f.resize(static_cast<std::size_t>(h));
    for (int c = 0; c < w; ++c) {
        for (int r = 0; r < h; ++r)
            f[static_cast<std::size_t>(r)] = grid[static_cast<std::size_t>(r) * w + c];
        envelope_1d(f, out, v, z);
        for (int r = 0; r < h; ++r)
            grid[static_cast<std::size_t>(r) * w + c] = out[static_cast<std::size_t>(r)];
    }
    f.resize(static_cast<std::size_t>(w));
    for (int r = 0; r < h; ++r) {
        std::copy_n(grid.begin() + static_cast<std::ptrdiff_t>(r) * w, w, f.begin());
        envelope_1d(f, out, v, z);
        std::copy_n(out.begin(), w, grid.begin() + static_cast<std::ptrdiff_t>(r) * w);
    }

    Grid<long> result(mask.width(), mask.height(), 0);
    for (int r = 0; r < mask.height(); ++r)
        for (int c = 0; c < mask.width(); ++c)
            result(r, c) = std::lround(grid[static_cast<std::size_t>(r + 1) * w + (c + 1)]);
    return result;
}

DistanceField distance_transform(const BinaryMask& mask)
{
    const auto sq = squared_distance_transform(mask);
    DistanceField out(mask.width(), mask.height(), 0.0);
    for (std::size_t i = 0; i < sq.size(); ++i)
        out[i] = std::sqrt(static_cast<double>(sq[i]));
    return out;
}

double percentile(std::vector<double>& values, double pct)
{
    if (values.empty())
        throw ProfileError("percentile of an empty sample");
    std::sort(values.begin(), values.end());
    const double pos = pct / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

std::size_t BinnedProfile::nonempty_bins() const noexcept
{
    return static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](long n) { return n > 0; }));
}

BinnedProfile binned_percentile_profile(const DistanceField& field, const Image& img, const BinaryMask& mask,
                                        int bins, double pct, const BinaryMask* exclude)
{
    require_same_shape(field, img, "binned_percentile_profile");
    require_same_shape(field, mask, "binned_percentile_profile");
    if (exclude)
        require_same_shape(field, *exclude, "binned_percentile_profile");
    if (bins < 2)
        throw ParameterError("profile needs at least 2 bins");
    if (!(pct > 0 && pct < 100))
        throw ParameterError("profile percentile must lie in (0, 100)");

    double max_d = 0;
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i])
            max_d = std::max(max_d, field[i]);
    if (!(max_d > 1.0))
        throw ProfileError("particle too small: maximum distance must exceed 1 pixel");

    BinnedProfile profile;
    profile.edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int i = 0; i <= bins; ++i)
        profile.edges[static_cast<std::size_t>(i)] = 1.0 + (max_d - 1.0) * i / bins;
    profile.edges.back() = max_d;
    const double width = (max_d - 1.0) / bins;

    std::vector<std::vector<double>> samples(static_cast<std::size_t>(bins));
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i] || (exclude && (*exclude)[i]))
            continue;
        const double d = field[i];
        if (d < 1.0)
            continue;
        auto b = static_cast<int>((d - 1.0) / width);
        // Guard against rounding at the edges themselves.
        while (b > 0 && d < profile.edges[static_cast<std::size_t>(b)])
            --b;
        while (b < bins - 1 && d >= profile.edges[static_cast<std::size_t>(b) + 1])
            ++b;
        b = std::clamp(b, 0, bins - 1);
        samples[static_cast<std::size_t>(b)].push_back(img[i]);
    }

    profile.values.assign(static_cast<std::size_t>(bins), std::numeric_limits<double>::quiet_NaN());
    profile.counts.assign(static_cast<std::size_t>(bins), 0);
    bool any = false;
    for (std::size_t b = 0; b < samples.size(); ++b) {
        profile.counts[b] = static_cast<long>(samples[b].size());
        if (!samples[b].empty()) {
            profile.values[b] = percentile(samples[b], pct);
            any = true;
        }
    }
    if (!any)
        throw ProfileError("every particle pixel is excluded; nothing to fit");
    return profile;
}

}  // namespace poregrad
