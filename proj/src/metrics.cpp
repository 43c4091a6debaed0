#include "poregrad/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace poregrad {

double Ratio::value() const noexcept
{
    if (den == 0)
        return std::numeric_limits<double>::quiet_NaN();
    return static_cast<double>(num) / static_cast<double>(den);
}

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& truth, const BinaryMask* eval_region)
{
    require_same_shape(pred, truth, "confusion");
    if (eval_region)
        require_same_shape(pred, *eval_region, "confusion");
    ConfusionCounts c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (eval_region && !(*eval_region)[i])
            continue;
        const bool p = pred[i] != 0;
        const bool t = truth[i] != 0;
        if (p && t)
            ++c.tp;
        else if (p)
            ++c.fp;
        else if (t)
            ++c.fn;
        else
            ++c.tn;
    }
    return c;
}

Ratio tpr(const ConfusionCounts& c) noexcept { return {c.tp, c.tp + c.fn}; }
Ratio fnr(const ConfusionCounts& c) noexcept { return {c.fn, c.tp + c.fn}; }
Ratio tnr(const ConfusionCounts& c) noexcept { return {c.tn, c.tn + c.fp}; }
Ratio fpr(const ConfusionCounts& c) noexcept { return {c.fp, c.tn + c.fp}; }
Ratio f1_ratio(const ConfusionCounts& c) noexcept { return {2 * c.tp, 2 * c.tp + c.fp + c.fn}; }

F1Score f1(const ConfusionCounts& c) noexcept
{
    const auto r = f1_ratio(c);
    if (!r.defined())
        return {1.0, true};
    return {r.value(), false};
}

MetricsReport MetricsReport::from_counts(const ConfusionCounts& counts, std::string model)
{
    MetricsReport r;
    r.model = std::move(model);
    r.counts = counts;
    const auto score = poregrad::f1(counts);
    r.f1 = score.value;
    r.f1_degenerate = score.degenerate;
    r.tpr = poregrad::tpr(counts).value();
    r.fnr = poregrad::fnr(counts).value();
    r.tnr = poregrad::tnr(counts).value();
    r.fpr = poregrad::fpr(counts).value();
    return r;
}

namespace {

struct Scored {
    double p;
    bool positive;
};

RocCurve roc_from(std::vector<Scored> samples, std::size_t max_thresholds)
{
    RocCurve curve;
    std::sort(samples.begin(), samples.end(), [](const Scored& a, const Scored& b) { return a.p > b.p; });
    std::int64_t pos = 0, neg = 0;
    for (const auto& s : samples)
        (s.positive ? pos : neg) += 1;

    std::vector<double> unique;
    for (const auto& s : samples)
        if (unique.empty() || s.p != unique.back())
            unique.push_back(s.p);
    std::vector<double> thresholds;
    if (max_thresholds > 0 && unique.size() > max_thresholds) {
        for (std::size_t k = 0; k < max_thresholds; ++k) {
            const auto idx = static_cast<std::size_t>(
                std::llround(static_cast<double>(k) * static_cast<double>(unique.size() - 1) /
                             static_cast<double>(max_thresholds - 1)));
            if (thresholds.empty() || unique[idx] != thresholds.back())
                thresholds.push_back(unique[idx]);
        }
    } else {
        thresholds = std::move(unique);
    }

    curve.fpr_points.push_back(0.0);
    curve.tpr_points.push_back(0.0);
    std::int64_t tp = 0, fp = 0;
    std::size_t i = 0;
    for (double t : thresholds) {
        while (i < samples.size() && samples[i].p >= t) {
            (samples[i].positive ? tp : fp) += 1;
            ++i;
        }
        curve.thresholds.push_back(t);
        curve.tpr_points.push_back(pos ? static_cast<double>(tp) / static_cast<double>(pos) : 0.0);
        curve.fpr_points.push_back(neg ? static_cast<double>(fp) / static_cast<double>(neg) : 0.0);
    }
    curve.fpr_points.push_back(1.0);
    curve.tpr_points.push_back(1.0);

    if (pos == 0 || neg == 0) {
        curve.defined = false;
        curve.auc = std::numeric_limits<double>::quiet_NaN();
        return curve;
    }
    double area = 0;
    for (std::size_t k = 1; k < curve.fpr_points.size(); ++k)
        area += (curve.fpr_points[k] - curve.fpr_points[k - 1]) *
                (curve.tpr_points[k] + curve.tpr_points[k - 1]) * 0.5;
    curve.auc = area;
    return curve;
}

void collect(std::vector<Scored>& out, const Image& prob, const BinaryMask& truth, const BinaryMask* region)
{
    require_same_shape(prob, truth, "roc");
    if (region)
        require_same_shape(prob, *region, "roc");
    for (std::size_t i = 0; i < prob.size(); ++i) {
        if (region && !(*region)[i])
            continue;
        const double p = prob[i];
        if (!(p >= 0.0 && p <= 1.0))
            throw ParameterError("roc: probabilities must lie in [0, 1]");
        out.push_back({p, truth[i] != 0});
    }
}

}  // namespace

RocCurve roc(const Image& prob_map, const BinaryMask& truth, const BinaryMask* eval_region,
             std::size_t max_thresholds)
{
    std::vector<Scored> samples;
    collect(samples, prob_map, truth, eval_region);
    return roc_from(std::move(samples), max_thresholds);
}

RocCurve roc(const std::vector<const Image*>& prob_maps, const std::vector<const BinaryMask*>& truths,
             const std::vector<const BinaryMask*>& eval_regions, std::size_t max_thresholds)
{
    if (prob_maps.size() != truths.size() || (!eval_regions.empty() && eval_regions.size() != prob_maps.size()))
        throw ParameterError("roc: mismatched input lists");
    std::vector<Scored> samples;
    for (std::size_t k = 0; k < prob_maps.size(); ++k)
        collect(samples, *prob_maps[k], *truths[k], eval_regions.empty() ? nullptr : eval_regions[k]);
    return roc_from(std::move(samples), max_thresholds);
}

std::vector<double> pore_size_distribution(const std::vector<PoreRegionSample>& regions, double pixel_pitch)
{
    std::vector<double> radii;
    radii.reserve(regions.size());
    for (const auto& r : regions)
        radii.push_back(pixel_pitch * r.scale * std::sqrt(static_cast<double>(r.area) / M_PI));
    return radii;
}

double ks_distance(std::vector<double> a, std::vector<double> b)
{
    if (a.empty() && b.empty())
        return 0.0;
    if (a.empty() || b.empty())
        return 1.0;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x)
            ++i;
        while (j < b.size() && b[j] <= x)
            ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
    }
    return d;
}

}  // namespace poregrad
