#pragma once

#include <vector>

#include "poregrad/raster.hpp"

namespace poregrad {

struct Offset {
    int drow;
    int dcol;
};

/// Discrete disk {(dr, dc) : dr^2 + dc^2 <= r^2}.
std::vector<Offset> disk_offsets(int radius);

// Pixels outside the grid count as background for both operations.
BinaryMask erode(const BinaryMask& mask, int radius);
BinaryMask dilate(const BinaryMask& mask, int radius);
BinaryMask opening(const BinaryMask& mask, int radius);
BinaryMask closing(const BinaryMask& mask, int radius);

/// Drops 4-connected foreground components with fewer than min_area pixels.
BinaryMask remove_small_regions(const BinaryMask& mask, long min_area);

/// Fills enclosed background components (4-connected, not touching the
/// grid border) with at most max_hole_area pixels.
BinaryMask remove_small_holes(const BinaryMask& mask, long max_hole_area);

/// Fills every enclosed background component regardless of size.
BinaryMask fill_holes(const BinaryMask& mask);

/// 4-connected labelling. Labels 1..K are assigned in raster order of each
/// component's first pixel.
LabelMap connected_components(const BinaryMask& mask, int* component_count = nullptr);

/// One entry per label 1..K, in label order.
std::vector<RegionProps> region_props(const LabelMap& labels, double pixel_pitch);

/// Foreground pixels carrying the given label.
BinaryMask label_mask(const LabelMap& labels, int label);

/// Keeps only the largest 4-connected component (first in raster order on ties).
BinaryMask largest_component(const BinaryMask& mask);

}  // namespace poregrad
