#pragma once

#include <optional>
#include <string>
#include <vector>

#include "poregrad/attenuation.hpp"
#include "poregrad/kvconfig.hpp"
#include "poregrad/metrics.hpp"
#include "poregrad/preprocess.hpp"
#include "poregrad/raster.hpp"

namespace poregrad {

enum class MorphOp { erode, dilate, remove_small_regions, remove_small_holes };

struct MorphStep {
    MorphOp op;
    long parameter;
    friend bool operator==(const MorphStep&, const MorphStep&) = default;
};

/// Ordered binary denoising steps.
class MorphologySequence {
public:
    MorphologySequence() = default;
    explicit MorphologySequence(std::vector<MorphStep> steps);

    /// erode(1), dilate(1), remove_small_holes(16), remove_small_regions(4)
    static MorphologySequence standard();

    /// Parses "erode:1,dilate:1,holes:16,regions:4".
    static MorphologySequence parse(const std::string& text);
    std::string to_string() const;

    BinaryMask apply(const BinaryMask& mask) const;
    const std::vector<MorphStep>& steps() const noexcept { return steps_; }

private:
    std::vector<MorphStep> steps_;
};

struct LocalThresholdParams {
    double sigma = 2.0;        // pixels
    double t_offset = 0.02;    // intensity units
    MorphologySequence denoise = MorphologySequence::standard();

    void validate() const;
    static LocalThresholdParams from_kv(const KeyValueConfig& kv);
    KeyValueConfig to_kv() const;
};

struct AttAdjustParams {
    double residual_threshold = 0.02;   // intensity units
    int boundary_exclusion_radius = 3;  // pixels
    double min_area_fraction = 0.0;     // of the particle bbox area
    bool centroid_prior = false;
    int max_iterations = 6;
    int bins = kDefaultProfileBins;
    double percentile = kDefaultProfilePercentile;
    MorphologySequence denoise = MorphologySequence::standard();

    void validate() const;
    static AttAdjustParams from_kv(const KeyValueConfig& kv);
    KeyValueConfig to_kv() const;
};

enum class ModelKind { local_threshold, att_adjusted };

std::string model_name(ModelKind kind);
ModelKind parse_model(const std::string& name);

struct SegmentationResult {
    BinaryMask pore_mask;
    std::vector<RegionProps> pore_regions;  // radius in source micrometers
    ModelKind model = ModelKind::local_threshold;
    int iterations_run = 0;
    bool converged = false;
    bool profile_exhausted = false;  // stopped early: every pixel excluded
    std::optional<AttenuationFit> fit;
    double scale = 1.0;
};

/// Per-iteration state of the attenuation-adjusted loop.
struct IterationRecord {
    BinaryMask pore_mask;
    AttenuationFit fit;
};

/// Raw inequality I > blur(I, sigma) + t_offset restricted to the mask.
BinaryMask local_threshold_raw(const Image& image, const BinaryMask& particle_mask,
                               double sigma, double t_offset);

SegmentationResult local_threshold(const ParticleCutout& cutout,
                                   const LocalThresholdParams& params);

/// Pixels within `radius` (disk dilation) of the inner boundary of the mask,
/// restricted to the mask. Radius 0 yields the boundary curve itself.
BinaryMask boundary_band(const BinaryMask& mask, int radius);

SegmentationResult att_adjusted_threshold(const ParticleCutout& cutout,
                                          const AttAdjustParams& params,
                                          std::vector<IterationRecord>* trace = nullptr);

struct GridsearchCell {
    double sigma = 0;
    double t_offset = 0;
    double f1 = 0;
    bool degenerate = false;  // no positives anywhere; f1 reported as 0
    ConfusionCounts counts;
};

struct GridsearchResult {
    LocalThresholdParams best;
    GridsearchCell best_cell;
    std::vector<GridsearchCell> surface;  // sigma-major, grids sorted ascending
};

/// Micro-averaged F1 over the validation set for every (sigma, offset) cell.
/// Ties resolve to the smallest sigma, then the smallest offset.
GridsearchResult gridsearch_local(const std::vector<ParticleCutout>& validation,
                                  std::vector<double> sigma_grid,
                                  std::vector<double> offset_grid,
                                  const LocalThresholdParams& base = {}, int jobs = 1);

struct CalibrationCell {
    double threshold = 0;
    double f1 = 0;
    bool degenerate = false;
    ConfusionCounts counts;
};

struct CalibrationResult {
    double best_threshold = 0;
    CalibrationCell best_cell;
    std::vector<CalibrationCell> curve;  // ascending thresholds
};

/// Full attenuation-adjusted pipeline per candidate threshold; ties resolve to
/// the largest threshold.
CalibrationResult calibrate_residual_threshold(const std::vector<ParticleCutout>& validation,
                                               std::vector<double> threshold_grid,
                                               const AttAdjustParams& base = {}, int jobs = 1);

/// Confusion counts of a prediction against a cutout's truth over its
/// particle mask. Throws ParameterError when the cutout carries no truth.
ConfusionCounts evaluate_cutout(const ParticleCutout& cutout, const BinaryMask& prediction);

}  // namespace poregrad
