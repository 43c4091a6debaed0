#include "poregrad/segment.hpp"

#include <charconv>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "poregrad/distfield.hpp"
#include "poregrad/filter.hpp"
#include "poregrad/morphology.hpp"
#include "poregrad/parallel.hpp"

namespace poregrad {

MorphologySequence::MorphologySequence(std::vector<MorphStep> steps) : steps_(std::move(steps))
{
    if (steps_.empty())
        throw ParameterError("morphology sequence must not be empty");
    for (const auto& s : steps_) {
        const bool radius_op = s.op == MorphOp::erode || s.op == MorphOp::dilate;
        if (radius_op ? s.parameter < 1 : s.parameter < 0)
            throw ParameterError("invalid morphology step parameter " + std::to_string(s.parameter));
    }
}

MorphologySequence MorphologySequence::standard()
{
    return MorphologySequence({{MorphOp::erode, 1},
                               {MorphOp::dilate, 1},
                               {MorphOp::remove_small_holes, 16},
                               {MorphOp::remove_small_regions, 4}});
}

MorphologySequence MorphologySequence::parse(const std::string& text)
{
    std::vector<MorphStep> steps;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
        if (item.empty())
            continue;
        const auto colon = item.find(':');
        if (colon == std::string::npos)
            throw ParameterError("morphology step needs name:parameter, got " + item);
        const auto name = item.substr(0, colon);
        long parameter = 0;
        try {
            parameter = std::stol(item.substr(colon + 1));
        } catch (const std::exception&) {
            throw ParameterError("morphology step parameter is not an integer: " + item);
        }
        MorphOp op;
        if (name == "erode")
            op = MorphOp::erode;
        else if (name == "dilate")
            op = MorphOp::dilate;
        else if (name == "holes" || name == "remove_small_holes")
            op = MorphOp::remove_small_holes;
        else if (name == "regions" || name == "remove_small_regions")
            op = MorphOp::remove_small_regions;
        else
            throw ParameterError("unknown morphology step " + name);
        steps.push_back({op, parameter});
    }
    return MorphologySequence(std::move(steps));
}

std::string MorphologySequence::to_string() const
{
    std::string out;
    for (const auto& s : steps_) {
        if (!out.empty())
            out += ',';
        switch (s.op) {
        case MorphOp::erode: out += "erode"; break;
        case MorphOp::dilate: out += "dilate"; break;
        case MorphOp::remove_small_holes: out += "holes"; break;
        case MorphOp::remove_small_regions: out += "regions"; break;
        }
        out += ':' + std::to_string(s.parameter);
    }
    return out;
}

BinaryMask MorphologySequence::apply(const BinaryMask& mask) const
{
    BinaryMask m = mask;
    for (const auto& s : steps_) {
        switch (s.op) {
        case MorphOp::erode: m = erode(m, static_cast<int>(s.parameter)); break;
        case MorphOp::dilate: m = dilate(m, static_cast<int>(s.parameter)); break;
        case MorphOp::remove_small_holes: m = remove_small_holes(m, s.parameter); break;
        case MorphOp::remove_small_regions: m = remove_small_regions(m, s.parameter); break;
        }
    }
    return m;
}

namespace {

// shortest text that round-trips
std::string fmt(double v)
{
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

}  // namespace

void LocalThresholdParams::validate() const
{
    if (!(sigma > 0))
        throw ParameterError("local threshold: sigma must be positive");
    if (!std::isfinite(t_offset))
        throw ParameterError("local threshold: t_offset must be finite");
}

LocalThresholdParams LocalThresholdParams::from_kv(const KeyValueConfig& kv)
{
    LocalThresholdParams p;
    p.sigma = kv.get_double("sigma", p.sigma);
    p.t_offset = kv.get_double("t_offset", p.t_offset);
    if (const auto d = kv.get("denoise"))
        p.denoise = MorphologySequence::parse(*d);
    p.validate();
    return p;
}

KeyValueConfig LocalThresholdParams::to_kv() const
{
    KeyValueConfig kv;
    kv.set("model", "local");
    kv.set("sigma", fmt(sigma));
    kv.set("t_offset", fmt(t_offset));
    kv.set("denoise", denoise.to_string());
    return kv;
}

void AttAdjustParams::validate() const
{
    if (max_iterations < 1)
        throw ParameterError("att-adjusted: max_iterations must be >= 1");
    if (boundary_exclusion_radius < 0)
        throw ParameterError("att-adjusted: boundary_exclusion_radius must be >= 0");
    if (!(min_area_fraction >= 0))
        throw ParameterError("att-adjusted: min_area_fraction must be >= 0");
    if (!std::isfinite(residual_threshold))
        throw ParameterError("att-adjusted: residual_threshold must be finite");
    if (bins < 2 || !(percentile > 0 && percentile < 100))
        throw ParameterError("att-adjusted: invalid profile bins or percentile");
}

AttAdjustParams AttAdjustParams::from_kv(const KeyValueConfig& kv)
{
    AttAdjustParams p;
    p.residual_threshold = kv.get_double("residual_threshold", p.residual_threshold);
    p.boundary_exclusion_radius =
        static_cast<int>(kv.get_int("boundary_exclusion_radius", p.boundary_exclusion_radius));
    p.min_area_fraction = kv.get_double("min_area_fraction", p.min_area_fraction);
    p.centroid_prior = kv.get_bool("centroid_prior", p.centroid_prior);
    p.max_iterations = static_cast<int>(kv.get_int("max_iterations", p.max_iterations));
    p.bins = static_cast<int>(kv.get_int("bins", p.bins));
    p.percentile = kv.get_double("percentile", p.percentile);
    if (const auto d = kv.get("denoise"))
        p.denoise = MorphologySequence::parse(*d);
    p.validate();
    return p;
}

KeyValueConfig AttAdjustParams::to_kv() const
{
    KeyValueConfig kv;
    kv.set("model", "attadj");
    kv.set("residual_threshold", fmt(residual_threshold));
    kv.set("boundary_exclusion_radius", std::to_string(boundary_exclusion_radius));
    kv.set("min_area_fraction", fmt(min_area_fraction));
    kv.set("centroid_prior", centroid_prior ? "true" : "false");
    kv.set("max_iterations", std::to_string(max_iterations));
    kv.set("bins", std::to_string(bins));
    kv.set("percentile", fmt(percentile));
    kv.set("denoise", denoise.to_string());
    return kv;
}

std::string model_name(ModelKind kind)
{
    return kind == ModelKind::local_threshold ? "local" : "attadj";
}

ModelKind parse_model(const std::string& name)
{
    if (name == "local")
        return ModelKind::local_threshold;
    if (name == "attadj")
        return ModelKind::att_adjusted;
    throw ParameterError("unknown model " + name + " (expected local or attadj)");
}

BinaryMask local_threshold_raw(const Image& image, const BinaryMask& particle_mask, double sigma,
                               double t_offset)
{
    require_same_shape(image, particle_mask, "local_threshold");
    const Image blurred = gaussian_blur(image, sigma);
    BinaryMask raw(image.width(), image.height());
    for (std::size_t i = 0; i < image.size(); ++i)
        raw[i] = (particle_mask[i] && image[i] > blurred[i] + t_offset) ? 1 : 0;
    return raw;
}

namespace {

SegmentationResult finish(BinaryMask pores, const ParticleCutout& cutout, ModelKind model)
{
    SegmentationResult result;
    result.pore_regions = region_props(connected_components(pores), cutout.image.pixel_pitch);
    result.pore_mask = std::move(pores);
    result.model = model;
    result.scale = cutout.scale;
    return result;
}

BinaryMask threshold_from_blur(const Image& image, const Image& blurred, const BinaryMask& mask,
                               double t_offset, const MorphologySequence& denoise)
{
    BinaryMask raw(image.width(), image.height());
    for (std::size_t i = 0; i < image.size(); ++i)
        raw[i] = (mask[i] && image[i] > blurred[i] + t_offset) ? 1 : 0;
    return intersect(denoise.apply(raw), mask);
}

BinaryMask apply_priors(const BinaryMask& candidates, const BinaryMask& particle_mask,
                        const AttAdjustParams& params)
{
    int k = 0;
    const auto labels = connected_components(candidates, &k);
    if (k == 0)
        return candidates;
    const auto regions = region_props(labels, 1.0);
    std::vector<bool> keep(static_cast<std::size_t>(k) + 1, true);
    keep[0] = false;

    PixelBox box;
    if (params.min_area_fraction > 0 && bounding_box(particle_mask, box)) {
        const double min_area = params.min_area_fraction * box.height() * box.width();
        for (const auto& r : regions)
            if (static_cast<double>(r.area) < min_area)
                keep[static_cast<std::size_t>(r.label)] = false;
    }

    if (params.centroid_prior) {
        double sr = 0, sc = 0;
        long n = 0;
        for (int r = 0; r < particle_mask.height(); ++r)
            for (int c = 0; c < particle_mask.width(); ++c)
                if (particle_mask(r, c)) {
                    sr += r;
                    sc += c;
                    ++n;
                }
        const double cr = n ? sr / n : 0.0;
        const double cc = n ? sc / n : 0.0;
        int nearest = 0;
        double best = std::numeric_limits<double>::infinity();
        for (int r = 0; r < labels.height(); ++r)
            for (int c = 0; c < labels.width(); ++c) {
                const int l = labels(r, c);
                if (l == 0 || !keep[static_cast<std::size_t>(l)])
                    continue;
                const double d = (r - cr) * (r - cr) + (c - cc) * (c - cc);
                if (d < best) {
                    best = d;
                    nearest = l;
                }
            }
        for (int l = 1; l <= k; ++l)
            if (l != nearest)
                keep[static_cast<std::size_t>(l)] = false;
    }

    BinaryMask out(candidates.width(), candidates.height());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = keep[static_cast<std::size_t>(labels[i])] ? 1 : 0;
    return out;
}

}  // namespace

SegmentationResult local_threshold(const ParticleCutout& cutout, const LocalThresholdParams& params)
{
    params.validate();
    const auto& image = cutout.image.pixels;
    require_same_shape(image, cutout.particle_mask, "local_threshold");
    const Image blurred = gaussian_blur(image, params.sigma);
    return finish(threshold_from_blur(image, blurred, cutout.particle_mask, params.t_offset, params.denoise),
                  cutout, ModelKind::local_threshold);
}

BinaryMask boundary_band(const BinaryMask& mask, int radius)
{
    if (radius < 0)
        throw ParameterError("boundary band radius must be >= 0");
    const BinaryMask curve = subtract_mask(mask, erode(mask, 1));
    if (radius == 0)
        return curve;
    return intersect(dilate(curve, radius), mask);
}

SegmentationResult att_adjusted_threshold(const ParticleCutout& cutout, const AttAdjustParams& params,
                                          std::vector<IterationRecord>* trace)
{
    params.validate();
    const auto& image = cutout.image.pixels;
    const auto& mask = cutout.particle_mask;
    require_same_shape(image, mask, "att_adjusted_threshold");

    const DistanceField field = distance_transform(mask);
    const BinaryMask band = boundary_band(mask, params.boundary_exclusion_radius);
    const BinaryMask allowed = subtract_mask(mask, band);

    if (trace)
        trace->clear();
    BinaryMask exclusion(mask.width(), mask.height());
    BinaryMask current = exclusion;
    std::optional<AttenuationFit> last_fit;
    bool converged = false;
    bool exhausted = false;
    int it = 0;
    for (; it < params.max_iterations; ++it) {
        AttenuationFit fit;
        try {
            const auto profile = binned_percentile_profile(field, image, mask, params.bins, params.percentile,
                                                           it == 0 ? nullptr : &exclusion);
            fit = fit_attenuation(profile);
        } catch (const ProfileError&) {
            if (it == 0)
                throw;
            exhausted = true;
            break;
        } catch (const FitError&) {
            if (it == 0)
                throw;
            exhausted = true;
            break;
        }

        const Image ideal = ideal_particle(fit, field, mask, image);
        const auto residual = subtract(image, ideal, mask, fit);
        BinaryMask candidates(mask.width(), mask.height());
        for (std::size_t i = 0; i < candidates.size(); ++i)
            candidates[i] = (allowed[i] && residual.residual[i] > params.residual_threshold) ? 1 : 0;
        candidates = intersect(params.denoise.apply(candidates), allowed);
        candidates = apply_priors(candidates, mask, params);

        current = std::move(candidates);
        last_fit = fit;
        if (trace)
            trace->push_back({current, fit});
        if (current == exclusion) {
            converged = true;
            ++it;
            break;
        }
        exclusion = current;
    }

    auto result = finish(std::move(current), cutout, ModelKind::att_adjusted);
    result.iterations_run = it;
    result.converged = converged;
    result.profile_exhausted = exhausted;
    result.fit = last_fit;
    return result;
}

ConfusionCounts evaluate_cutout(const ParticleCutout& cutout, const BinaryMask& prediction)
{
    if (!cutout.pore_truth)
        throw ParameterError("cutout " + cutout.id() + " carries no pore truth");
    return confusion(prediction, *cutout.pore_truth, &cutout.particle_mask);
}

namespace {

std::vector<double> sorted_unique(std::vector<double> v, const char* what)
{
    if (v.empty())
        throw ParameterError(std::string(what) + " grid is empty");
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

void require_truth(const std::vector<ParticleCutout>& set)
{
    for (const auto& c : set)
        if (!c.pore_truth)
            throw ParameterError("validation cutout " + c.id() + " carries no pore truth");
}

}  // namespace

GridsearchResult gridsearch_local(const std::vector<ParticleCutout>& validation, std::vector<double> sigma_grid,
                                  std::vector<double> offset_grid, const LocalThresholdParams& base, int jobs)
{
    sigma_grid = sorted_unique(std::move(sigma_grid), "sigma");
    offset_grid = sorted_unique(std::move(offset_grid), "offset");
    for (double s : sigma_grid)
        if (!(s > 0))
            throw ParameterError("gridsearch: sigma values must be positive");
    require_truth(validation);

    const std::size_t n_off = offset_grid.size();
    // per_cutout[k][cell] so that summation order is independent of jobs.
    std::vector<std::vector<ConfusionCounts>> per_cutout(validation.size(),
                                                         std::vector<ConfusionCounts>(sigma_grid.size() * n_off));
    parallel_for(validation.size(), jobs, [&](std::size_t k) {
        const auto& cut = validation[k];
        for (std::size_t si = 0; si < sigma_grid.size(); ++si) {
            const Image blurred = gaussian_blur(cut.image.pixels, sigma_grid[si]);
            for (std::size_t oi = 0; oi < n_off; ++oi) {
                const auto pred = threshold_from_blur(cut.image.pixels, blurred, cut.particle_mask,
                                                      offset_grid[oi], base.denoise);
                per_cutout[k][si * n_off + oi] = evaluate_cutout(cut, pred);
            }
        }
    });

    GridsearchResult result;
    bool have_best = false;
    for (std::size_t si = 0; si < sigma_grid.size(); ++si)
        for (std::size_t oi = 0; oi < n_off; ++oi) {
            GridsearchCell cell;
            cell.sigma = sigma_grid[si];
            cell.t_offset = offset_grid[oi];
            for (const auto& counts : per_cutout)
                cell.counts += counts[si * n_off + oi];
            const auto score = f1(cell.counts);
            cell.degenerate = score.degenerate;
            cell.f1 = score.degenerate ? 0.0 : score.value;
            if (!have_best || cell.f1 > result.best_cell.f1) {
                result.best_cell = cell;
                have_best = true;
            }
            result.surface.push_back(cell);
        }
    result.best = base;
    result.best.sigma = result.best_cell.sigma;
    result.best.t_offset = result.best_cell.t_offset;
    return result;
}

CalibrationResult calibrate_residual_threshold(const std::vector<ParticleCutout>& validation,
                                               std::vector<double> threshold_grid, const AttAdjustParams& base,
                                               int jobs)
{
    threshold_grid = sorted_unique(std::move(threshold_grid), "threshold");
    require_truth(validation);

    const std::size_t n = threshold_grid.size();
    std::vector<std::vector<ConfusionCounts>> per_cutout(validation.size(), std::vector<ConfusionCounts>(n));
    parallel_for(validation.size(), jobs, [&](std::size_t k) {
        AttAdjustParams params = base;
        for (std::size_t ti = 0; ti < n; ++ti) {
            params.residual_threshold = threshold_grid[ti];
            const auto res = att_adjusted_threshold(validation[k], params);
            per_cutout[k][ti] = evaluate_cutout(validation[k], res.pore_mask);
        }
    });

    CalibrationResult result;
    bool have_best = false;
    for (std::size_t ti = 0; ti < n; ++ti) {
        CalibrationCell cell;
        cell.threshold = threshold_grid[ti];
        for (const auto& counts : per_cutout)
            cell.counts += counts[ti];
        const auto score = f1(cell.counts);
        cell.degenerate = score.degenerate;
        cell.f1 = score.degenerate ? 0.0 : score.value;
        // Ascending sweep with >= keeps the largest threshold among ties.
        if (!have_best || cell.f1 >= result.best_cell.f1) {
            result.best_cell = cell;
            have_best = true;
        }
        result.curve.push_back(cell);
    }
    result.best_threshold = result.best_cell.threshold;
    return result;
}

}  // namespace poregrad
