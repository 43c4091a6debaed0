#pragma once

#include <optional>
#include <vector>

#include "poregrad/raster.hpp"

namespace poregrad {

/// Euclidean distance (pixels) from each foreground pixel center to the
/// nearest background pixel center; 0 on background.
using DistanceField = Image;

/// Exact squared distances. Pixels outside the grid count as background, so
/// a foreground pixel on the border has distance 1.
Grid<long> squared_distance_transform(const BinaryMask& mask);
DistanceField distance_transform(const BinaryMask& mask);

/// Percentile with linear interpolation between closest ranks (the numpy
/// "linear" definition). Sorts `values` in place.
double percentile(std::vector<double>& values, double pct);

struct BinnedProfile {
    std::vector<double> edges;   // bins + 1 uniform edges on [1, max distance]
    std::vector<double> values;  // NaN for empty bins
    std::vector<long> counts;

    std::size_t bins() const noexcept { return counts.size(); }
    double midpoint(std::size_t i) const noexcept { return 0.5 * (edges[i] + edges[i + 1]); }
    std::size_t nonempty_bins() const noexcept;
};

inline constexpr int kDefaultProfileBins = 95;
inline constexpr double kDefaultProfilePercentile = 40.0;

/// Per-bin percentile of intensities over mask pixels whose distance lies in
/// [edge_i, edge_i+1) (the last bin is closed). Pixels in `exclude` are
/// skipped. Throws ProfileError when no pixel remains.
BinnedProfile binned_percentile_profile(const DistanceField& field, const Image& img,
                                        const BinaryMask& mask,
                                        int bins = kDefaultProfileBins,
                                        double pct = kDefaultProfilePercentile,
                                        const BinaryMask* exclude = nullptr);

}  // namespace poregrad
