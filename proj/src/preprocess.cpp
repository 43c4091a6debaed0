#include "poregrad/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "poregrad/filter.hpp"
#include "poregrad/morphology.hpp"
#include "poregrad/rng.hpp"

namespace poregrad {

std::string ParticleCutout::id() const
{
    return source_id + "_p" + std::to_string(index);
}

double ParticleCutout::source_row(double cutout_row) const noexcept
{
    return source_bbox.min_row + (cutout_row + 0.5) * scale - 0.5;
}

double ParticleCutout::source_col(double cutout_col) const noexcept
{
    return source_bbox.min_col + (cutout_col + 0.5) * scale - 0.5;
}

Image normalize(const Image& img)
{
    require_finite(img, "normalize");
    const double n = static_cast<double>(img.size());
    const double mean = mean_value(img);
    double var = 0;
    for (double v : img.values())
        var += (v - mean) * (v - mean);
    var /= n;
    if (!(var > 0))
        throw NormalizationError("normalize: image is constant");
    const double sd = std::sqrt(var);

    Image z(img.width(), img.height());
    for (std::size_t i = 0; i < img.size(); ++i)
        z[i] = (img[i] - mean) / sd;
    const double lo = min_value(z);
    const double hi = max_value(z);
    if (!(hi > lo))
        throw NormalizationError("normalize: image is constant");
    for (double& v : z.values())
        v = (v - lo) / (hi - lo);
    return z;
}

Radiograph normalize(const Radiograph& img)
{
    return {normalize(img.pixels), img.pixel_pitch, img.id};
}

double otsu_threshold(const Image& img, double* effectiveness)
{
    constexpr int kBins = 256;
    const double lo = min_value(img);
    const double hi = max_value(img);
    if (!(hi > lo)) {
        if (effectiveness)
            *effectiveness = 0.0;
        return lo;
    }
    const double width = (hi - lo) / kBins;
    std::vector<double> hist(kBins, 0.0);
    for (double v : img.values()) {
        const int b = std::min(kBins - 1, static_cast<int>((v - lo) / width));
        hist[static_cast<std::size_t>(b)] += 1.0;
    }
    auto center = [&](int b) { return lo + (b + 0.5) * width; };

    const double total = static_cast<double>(img.size());
    double sum_all = 0, sum_sq = 0;
    for (int b = 0; b < kBins; ++b) {
        sum_all += hist[static_cast<std::size_t>(b)] * center(b);
        sum_sq += hist[static_cast<std::size_t>(b)] * center(b) * center(b);
    }
    const double mean_all = sum_all / total;
    const double var_total = sum_sq / total - mean_all * mean_all;

    double w0 = 0, sum0 = 0, best = -1.0;
    int best_bin = 0;
    for (int b = 0; b < kBins - 1; ++b) {
        w0 += hist[static_cast<std::size_t>(b)];
        sum0 += hist[static_cast<std::size_t>(b)] * center(b);
        const double w1 = total - w0;
        if (w0 == 0 || w1 == 0)
            continue;
        const double m0 = sum0 / w0;
        const double m1 = (sum_all - sum0) / w1;
        const double between = (w0 / total) * (w1 / total) * (m0 - m1) * (m0 - m1);
        if (between > best) {
            best = between;
            best_bin = b;
        }
    }
    if (effectiveness)
        *effectiveness = var_total > 0 ? std::max(0.0, best) / var_total : 0.0;
    return center(best_bin);
}

BinaryMask canny(const Image& img, const CannyParams& params)
{
    if (!(params.low >= 0) || !(params.high >= params.low))
        throw ParameterError("canny: thresholds must satisfy 0 <= low <= high");
    const Image smooth = gaussian_blur(img, params.sigma);
    const int w = img.width();
    const int h = img.height();
    auto at = [&](int r, int c) { return smooth(reflect_index(r, h), reflect_index(c, w)); };

    Image gx(w, h), gy(w, h), mag(w, h);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            gx(r, c) = (at(r - 1, c + 1) + 2 * at(r, c + 1) + at(r + 1, c + 1)) -
                       (at(r - 1, c - 1) + 2 * at(r, c - 1) + at(r + 1, c - 1));
            gy(r, c) = (at(r + 1, c - 1) + 2 * at(r + 1, c) + at(r + 1, c + 1)) -
                       (at(r - 1, c - 1) + 2 * at(r - 1, c) + at(r - 1, c + 1));
            mag(r, c) = std::hypot(gx(r, c), gy(r, c));
        }
    const double max_mag = max_value(mag);
    BinaryMask edges(w, h);
    if (!(max_mag > 0))
        return edges;

    // Non-maximum suppression along the quantised gradient direction.
    Image thin(w, h, 0.0);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const double m = mag(r, c);
            if (m == 0)
                continue;
            double angle = std::atan2(gy(r, c), gx(r, c)) * 180.0 / M_PI;
            if (angle < 0)
                angle += 180.0;
            int dr = 0, dc = 0;
            if (angle < 22.5 || angle >= 157.5) {
                dc = 1;
            } else if (angle < 67.5) {
                dr = 1;
                dc = 1;
            } else if (angle < 112.5) {
                dr = 1;
            } else {
                dr = 1;
                dc = -1;
            }
            auto neighbour = [&](int rr, int cc) { return mag.contains(rr, cc) ? mag(rr, cc) : 0.0; };
            if (m >= neighbour(r + dr, c + dc) && m >= neighbour(r - dr, c - dc))
                thin(r, c) = m;
        }

    const double low = params.low * max_mag;
    const double high = params.high * max_mag;
    std::vector<std::pair<int, int>> stack;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            if (thin(r, c) >= high && !edges(r, c)) {
                edges(r, c) = 1;
                stack.emplace_back(r, c);
                while (!stack.empty()) {
                    const auto [pr, pc] = stack.back();
                    stack.pop_back();
                    for (int dr = -1; dr <= 1; ++dr)
                        for (int dc = -1; dc <= 1; ++dc) {
                            const int rr = pr + dr;
                            const int cc = pc + dc;
                            if (edges.contains(rr, cc) && !edges(rr, cc) && thin(rr, cc) >= low &&
                                thin(rr, cc) > 0) {
                                edges(rr, cc) = 1;
                                stack.emplace_back(rr, cc);
                            }
                        }
                }
            }
    return edges;
}

BinaryMask particle_masks(const Image& normalized, const MaskingParams& params)
{
    BinaryMask empty(normalized.width(), normalized.height());
    double effectiveness = 0;
    const double t = otsu_threshold(normalized, &effectiveness);
    if (effectiveness < params.min_otsu_effectiveness)
        return empty;

    BinaryMask dark(normalized.width(), normalized.height());
    for (std::size_t i = 0; i < normalized.size(); ++i)
        dark[i] = normalized[i] <= t ? 1 : 0;
    BinaryMask mask = fill_holes(unite(dark, canny(normalized, params.canny)));
    if (params.opening_radius > 0)
        mask = opening(mask, params.opening_radius);
    return remove_small_regions(mask, params.min_particle_area);
}

bool square_box(const PixelBox& tight, int padding, int image_width, int image_height, PixelBox& out)
{
    const int side = std::max(tight.height(), tight.width()) + 2 * padding;
    const int r0 = tight.min_row - (side - tight.height()) / 2;
    const int c0 = tight.min_col - (side - tight.width()) / 2;
    PixelBox box{r0, c0, r0 + side - 1, c0 + side - 1};
    if (box.min_row < 0 || box.min_col < 0 || box.max_row >= image_height || box.max_col >= image_width)
        return false;
    out = box;
    return true;
}

namespace {

double sample_bilinear(const Image& img, double r, double c)
{
    r = std::clamp(r, 0.0, img.height() - 1.0);
    c = std::clamp(c, 0.0, img.width() - 1.0);
    const int r0 = static_cast<int>(std::floor(r));
    const int c0 = static_cast<int>(std::floor(c));
    const int r1 = std::min(r0 + 1, img.height() - 1);
    const int c1 = std::min(c0 + 1, img.width() - 1);
    const double fr = r - r0;
    const double fc = c - c0;
    const double top = img(r0, c0) + fc * (img(r0, c1) - img(r0, c0));
    const double bottom = img(r1, c0) + fc * (img(r1, c1) - img(r1, c0));
    return top + fr * (bottom - top);
}

template <typename Pred>
BinaryMask sample_nearest(const ParticleCutout& cut, int size, int src_w, int src_h, Pred&& pred)
{
    BinaryMask out(size, size);
    for (int r = 0; r < size; ++r) {
        const int sr = std::clamp(static_cast<int>(std::lround(cut.source_row(r))), 0, src_h - 1);
        for (int c = 0; c < size; ++c) {
            const int sc = std::clamp(static_cast<int>(std::lround(cut.source_col(c))), 0, src_w - 1);
            out(r, c) = pred(sr, sc) ? 1 : 0;
        }
    }
    return out;
}

}  // namespace

CutoutSet make_cutouts(const Radiograph& img, const BinaryMask& mask, const BinaryMask* pore_truth,
                       int padding, int size)
{
    require_same_shape(img.pixels, mask, "make_cutouts");
    if (pore_truth)
        require_same_shape(img.pixels, *pore_truth, "make_cutouts truth");
    if (size <= 0 || padding < 0)
        throw ParameterError("make_cutouts: invalid size or padding");

    const int w = mask.width();
    const int h = mask.height();
    const auto labels = connected_components(mask);
    const auto props = region_props(labels, img.pixel_pitch);

    CutoutSet out;
    for (const auto& region : props) {
        const auto& tight = region.bbox;
        if (tight.min_row == 0 || tight.min_col == 0 || tight.max_row == h - 1 || tight.max_col == w - 1) {
            out.skipped.push_back({region.label, tight, "component touches the image border"});
            continue;
        }
        PixelBox box;
        if (!square_box(tight, padding, w, h, box)) {
            out.skipped.push_back({region.label, tight, "padded square box leaves the image"});
            continue;
        }

        ParticleCutout cut;
        cut.source_id = img.id;
        cut.index = static_cast<int>(out.cutouts.size());
        cut.source_bbox = box;
        cut.scale = static_cast<double>(box.height()) / size;
        cut.source_pixel_pitch = img.pixel_pitch;

        Image pixels(size, size);
        for (int r = 0; r < size; ++r)
            for (int c = 0; c < size; ++c)
                pixels(r, c) = sample_bilinear(img.pixels, cut.source_row(r), cut.source_col(c));
        cut.image = {std::move(pixels), img.pixel_pitch * cut.scale, cut.id()};

        const int label = region.label;
        cut.particle_mask = largest_component(
            sample_nearest(cut, size, w, h, [&](int r, int c) { return labels(r, c) == label; }));
        if (pore_truth) {
            const auto& truth = *pore_truth;
            cut.pore_truth = intersect(
                sample_nearest(cut, size, w, h, [&](int r, int c) { return labels(r, c) == label && truth(r, c); }),
                cut.particle_mask);
        }
        out.cutouts.push_back(std::move(cut));
    }
    return out;
}

BinaryMask cutout_to_source(const ParticleCutout& cutout, const BinaryMask& cutout_mask, int source_width,
                            int source_height)
{
    BinaryMask out(source_width, source_height);
    const auto& box = cutout.source_bbox;
    for (int r = std::max(0, box.min_row); r <= std::min(source_height - 1, box.max_row); ++r)
        for (int c = std::max(0, box.min_col); c <= std::min(source_width - 1, box.max_col); ++c) {
            const long cr = std::lround((r - box.min_row + 0.5) / cutout.scale - 0.5);
            const long cc = std::lround((c - box.min_col + 0.5) / cutout.scale - 0.5);
            if (cutout_mask.contains(static_cast<int>(cr), static_cast<int>(cc)))
                out(r, c) = cutout_mask(static_cast<int>(cr), static_cast<int>(cc));
        }
    return out;
}

BinaryMask source_to_cutout(const ParticleCutout& cutout, const BinaryMask& source_mask)
{
    return sample_nearest(cutout, cutout.particle_mask.width(), source_mask.width(), source_mask.height(),
                          [&](int r, int c) { return source_mask(r, c) != 0; });
}

std::vector<std::size_t> apportion(std::size_t n, const std::vector<double>& fractions)
{
    if (fractions.empty())
        throw ParameterError("split: no fractions given");
    double sum = 0;
    for (double f : fractions) {
        if (!(f >= 0))
            throw ParameterError("split: fractions must be non-negative");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw ParameterError("split: fractions must sum to 1");

    std::vector<std::size_t> sizes(fractions.size());
    std::vector<double> remainder(fractions.size());
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        double quota = static_cast<double>(n) * fractions[i];
        if (std::abs(quota - std::round(quota)) < 1e-9)
            quota = std::round(quota);
        sizes[i] = static_cast<std::size_t>(std::floor(quota));
        remainder[i] = quota - std::floor(quota);
        assigned += sizes[i];
    }
    std::vector<std::size_t> order(fractions.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; assigned < n; ++k, ++assigned)
        ++sizes[order[k % order.size()]];
    return sizes;
}

SplitIndices split_indices(std::size_t n, const std::vector<double>& fractions, std::uint64_t seed)
{
    if (fractions.size() != 3)
        throw ParameterError("split: expected train/val/test fractions");
    if (n < fractions.size())
        throw DataError("split: " + std::to_string(n) + " particles cannot fill " +
                        std::to_string(fractions.size()) + " parts");
    const auto sizes = apportion(n, fractions);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng = make_rng(seed, "split");
    for (std::size_t i = n - 1; i > 0; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i);
        std::swap(order[i], order[pick(rng)]);
    }
    SplitIndices out;
    auto it = order.begin();
    out.train.assign(it, it + static_cast<std::ptrdiff_t>(sizes[0]));
    it += static_cast<std::ptrdiff_t>(sizes[0]);
    out.val.assign(it, it + static_cast<std::ptrdiff_t>(sizes[1]));
    it += static_cast<std::ptrdiff_t>(sizes[1]);
    out.test.assign(it, order.end());
    return out;
}

DatasetSplit split_dataset(std::vector<ParticleCutout> cutouts, const std::vector<double>& fractions,
                           std::uint64_t seed)
{
    const auto idx = split_indices(cutouts.size(), fractions, seed);
    DatasetSplit out;
    for (auto i : idx.train)
        out.train.push_back(std::move(cutouts[i]));
    for (auto i : idx.val)
        out.val.push_back(std::move(cutouts[i]));
    for (auto i : idx.test)
        out.test.push_back(std::move(cutouts[i]));
    return out;
}

nlohmann::json cutout_to_json(const ParticleCutout& cutout)
{
    const auto& b = cutout.source_bbox;
    return {
        {"id", cutout.id()},
        {"source_id", cutout.source_id},
        {"index", cutout.index},
        {"source_bbox", {b.min_row, b.min_col, b.max_row, b.max_col}},
        {"scale", cutout.scale},
        {"source_pixel_pitch_um", cutout.source_pixel_pitch},
        {"size", cutout.particle_mask.width()},
        {"has_truth", cutout.pore_truth.has_value()},
    };
}

}  // namespace poregrad
