#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "poregrad/raster.hpp"

namespace poregrad {

struct ConfusionCounts {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t tn = 0;
    std::int64_t fn = 0;

    std::int64_t total() const noexcept { return tp + fp + tn + fn; }
    ConfusionCounts& operator+=(const ConfusionCounts& o) noexcept
    {
        tp += o.tp;
        fp += o.fp;
        tn += o.tn;
        fn += o.fn;
        return *this;
    }
    friend ConfusionCounts operator+(ConfusionCounts a, const ConfusionCounts& b) noexcept
    {
        return a += b;
    }
    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Exact count ratio; `defined` is false when the denominator is zero.
struct Ratio {
    std::int64_t num = 0;
    std::int64_t den = 0;

    bool defined() const noexcept { return den != 0; }
    double value() const noexcept;  // NaN when undefined
};

/// Counts over `eval_region` (whole grid when null).
ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& truth,
                          const BinaryMask* eval_region = nullptr);

Ratio tpr(const ConfusionCounts& c) noexcept;
Ratio fnr(const ConfusionCounts& c) noexcept;
Ratio tnr(const ConfusionCounts& c) noexcept;
Ratio fpr(const ConfusionCounts& c) noexcept;
Ratio f1_ratio(const ConfusionCounts& c) noexcept;

struct F1Score {
    double value = 0;
    /// No positives in truth or prediction; value is then 1.
    bool degenerate = false;
};

F1Score f1(const ConfusionCounts& c) noexcept;

struct MetricsReport {
    std::string model;
    double f1 = 0;
    double tpr = 0;
    double fnr = 0;
    double tnr = 0;
    double fpr = 0;
    bool f1_degenerate = false;
    ConfusionCounts counts;
    std::string scope = "micro";  // pixel counts summed over all cutouts
    std::string eval_region = "particle_mask_union";
    double mean_time_per_particle = 0;  // seconds
    double smallest_detected_pore = 0;  // micrometers, equivalent radius

    static MetricsReport from_counts(const ConfusionCounts& counts, std::string model = {});
};

struct RocCurve {
    std::vector<double> thresholds;  // descending; prediction is p >= threshold
    std::vector<double> fpr_points;  // includes (0,0) first and (1,1) last
    std::vector<double> tpr_points;
    double auc = 0;
    bool defined = true;  // false when truth holds a single class
};

inline constexpr std::size_t kRocMaxThresholds = 10000;

/// Sweep over the sorted unique probabilities (quantile-subsampled above
/// `max_thresholds`), trapezoidal AUC.
RocCurve roc(const Image& prob_map, const BinaryMask& truth, const BinaryMask* eval_region = nullptr,
             std::size_t max_thresholds = kRocMaxThresholds);

/// Pooled ROC over several maps.
RocCurve roc(const std::vector<const Image*>& prob_maps, const std::vector<const BinaryMask*>& truths,
             const std::vector<const BinaryMask*>& eval_regions,
             std::size_t max_thresholds = kRocMaxThresholds);

/// Region areas (cutout pixels) with their cutout scale, for size statistics.
struct PoreRegionSample {
    long area = 0;
    double scale = 1.0;
};

/// Equivalent radius in source micrometers: pitch * scale * sqrt(area / pi).
std::vector<double> pore_size_distribution(const std::vector<PoreRegionSample>& regions,
                                           double pixel_pitch);

/// Two-sample Kolmogorov-Smirnov statistic. Returns 1 if exactly one sample is
/// empty and 0 if both are.
double ks_distance(std::vector<double> a, std::vector<double> b);

}  // namespace poregrad
