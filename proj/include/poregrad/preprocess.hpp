#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "poregrad/raster.hpp"

namespace poregrad {

inline constexpr int kCutoutSize = 256;

struct ParticleCutout {
    Radiograph image;  // kCutoutSize x kCutoutSize; pixel_pitch = source pitch * scale
    BinaryMask particle_mask;
    std::string source_id;
    int index = 0;         // component index within the source image
    PixelBox source_bbox;  // square box in source pixels
    double scale = 1.0;    // source pixels per cutout pixel
    double source_pixel_pitch = 1.0;
    std::optional<BinaryMask> pore_truth;

    std::string id() const;  // "<source_id>_p<index>"

    /// Source-frame coordinates (row, col) of a cutout pixel center.
    double source_row(double cutout_row) const noexcept;
    double source_col(double cutout_col) const noexcept;
};

/// Per-image standardisation (mean 0, variance 1) followed by min-max scaling
/// to [0, 1]. Throws NormalizationError for constant images.
Image normalize(const Image& img);
Radiograph normalize(const Radiograph& img);

/// Otsu threshold over a 256-bin histogram of [min, max]. `effectiveness`
/// receives between-class variance over total variance.
double otsu_threshold(const Image& img, double* effectiveness = nullptr);

struct CannyParams {
    double sigma = 1.0;
    double low = 0.1;   // fraction of the maximum gradient magnitude
    double high = 0.2;
};

/// Sobel gradients on a Gaussian-smoothed image, non-maximum suppression and
/// hysteresis (8-connected edge tracking).
BinaryMask canny(const Image& img, const CannyParams& params = {});

struct MaskingParams {
    CannyParams canny;
    int opening_radius = 1;
    long min_particle_area = 64;       // pixels
    double min_otsu_effectiveness = 0.8;  // below: treated as an empty image
};

/// Particle mask for a normalized image with dark particles on bright
/// background: Otsu threshold, union with Canny edges, hole filling, opening,
/// small-region removal.
BinaryMask particle_masks(const Image& normalized, const MaskingParams& params = {});

struct CutoutSkip {
    int label = 0;
    PixelBox bbox;
    std::string reason;
};

struct CutoutSet {
    std::vector<ParticleCutout> cutouts;
    std::vector<CutoutSkip> skipped;
};

/// Square box around the tight bbox, padded by `padding` source pixels on
/// each side. Returns false if the box would leave the image.
bool square_box(const PixelBox& tight, int padding, int image_width, int image_height,
                PixelBox& out);

/// One cutout per connected mask component whose padded square box fits in
/// the image. Intensities are resampled bilinearly, masks by nearest neighbour.
CutoutSet make_cutouts(const Radiograph& img, const BinaryMask& mask,
                       const BinaryMask* pore_truth = nullptr, int padding = 4,
                       int size = kCutoutSize);

/// Maps a cutout-frame mask back into a source-sized mask (nearest).
BinaryMask cutout_to_source(const ParticleCutout& cutout, const BinaryMask& cutout_mask,
                            int source_width, int source_height);

/// Re-extracts a source-frame mask into the cutout frame (nearest).
BinaryMask source_to_cutout(const ParticleCutout& cutout, const BinaryMask& source_mask);

struct SplitSizes {
    std::size_t train = 0;
    std::size_t val = 0;
    std::size_t test = 0;
};

/// Largest-remainder apportionment of n items over the fractions.
std::vector<std::size_t> apportion(std::size_t n, const std::vector<double>& fractions);

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
};

/// Shuffles item indices with the seed and partitions them by the
/// apportioned sizes. Each item is one particle.
SplitIndices split_indices(std::size_t n, const std::vector<double>& fractions,
                           std::uint64_t seed);

struct DatasetSplit {
    std::vector<ParticleCutout> train;
    std::vector<ParticleCutout> val;
    std::vector<ParticleCutout> test;
};

DatasetSplit split_dataset(std::vector<ParticleCutout> cutouts,
                           const std::vector<double>& fractions, std::uint64_t seed);

nlohmann::json cutout_to_json(const ParticleCutout& cutout);

}  // namespace poregrad
