#include "poregrad/morphology.hpp"

#include <cmath>
#include <vector>

namespace poregrad {

std::vector<Offset> disk_offsets(int radius)
{
    if (radius < 0)
        throw ParameterError("structuring element radius must be non-negative");
    std::vector<Offset> out;
    for (int dr = -radius; dr <= radius; ++dr)
        for (int dc = -radius; dc <= radius; ++dc)
            if (dr * dr + dc * dc <= radius * radius)
                out.push_back({dr, dc});
    return out;
}

namespace {

void require_radius(int radius)
{
    if (radius < 1)
        throw ParameterError("morphology radius must be >= 1");
}

}  // namespace

BinaryMask erode(const BinaryMask& mask, int radius)
{
    require_radius(radius);
    const auto disk = disk_offsets(radius);
    BinaryMask out(mask.width(), mask.height());
    for (int r = 0; r < mask.height(); ++r)
        for (int c = 0; c < mask.width(); ++c) {
            if (!mask(r, c))
                continue;
            bool keep = true;
            for (const auto& o : disk) {
                const int rr = r + o.drow;
                const int cc = c + o.dcol;
                if (!mask.contains(rr, cc) || !mask(rr, cc)) {
                    keep = false;
                    break;
                }
            }
            out(r, c) = keep ? 1 : 0;
        }
    return out;
}

BinaryMask dilate(const BinaryMask& mask, int radius)
{
    require_radius(radius);
    const auto disk = disk_offsets(radius);
    BinaryMask out(mask.width(), mask.height());
    for (int r = 0; r < mask.height(); ++r)
        for (int c = 0; c < mask.width(); ++c) {
            if (!mask(r, c))
                continue;
            for (const auto& o : disk) {
                const int rr = r + o.drow;
                const int cc = c + o.dcol;
                if (mask.contains(rr, cc))
                    out(rr, cc) = 1;
            }
        }
    return out;
}

BinaryMask opening(const BinaryMask& mask, int radius)
{
    return dilate(erode(mask, radius), radius);
}

BinaryMask closing(const BinaryMask& mask, int radius)
{
    return erode(dilate(mask, radius), radius);
}

LabelMap connected_components(const BinaryMask& mask, int* component_count)
{
    LabelMap labels(mask.width(), mask.height(), 0);
    std::vector<std::pair<int, int>> stack;
    int next = 0;
    constexpr int kDr[4] = {-1, 1, 0, 0};
    constexpr int kDc[4] = {0, 0, -1, 1};
    for (int r = 0; r < mask.height(); ++r)
        for (int c = 0; c < mask.width(); ++c) {
            if (!mask(r, c) || labels(r, c) != 0)
                continue;
            ++next;
            labels(r, c) = next;
            stack.assign(1, {r, c});
            while (!stack.empty()) {
                const auto [pr, pc] = stack.back();
                stack.pop_back();
                for (int k = 0; k < 4; ++k) {
                    const int rr = pr + kDr[k];
                    const int cc = pc + kDc[k];
                    if (mask.contains(rr, cc) && mask(rr, cc) && labels(rr, cc) == 0) {
                        labels(rr, cc) = next;
                        stack.emplace_back(rr, cc);
                    }
                }
            }
        }
    if (component_count)
        *component_count = next;
    return labels;
}

std::vector<RegionProps> region_props(const LabelMap& labels, double pixel_pitch)
{
    int k = 0;
    for (int v : labels.values())
        k = std::max(k, v);
    std::vector<RegionProps> props(static_cast<std::size_t>(k));
    std::vector<double> sum_r(props.size(), 0.0);
    std::vector<double> sum_c(props.size(), 0.0);
    for (std::size_t i = 0; i < props.size(); ++i) {
        props[i].label = static_cast<int>(i) + 1;
        props[i].bbox = {labels.height(), labels.width(), -1, -1};
    }
    for (int r = 0; r < labels.height(); ++r)
        for (int c = 0; c < labels.width(); ++c) {
            const int l = labels(r, c);
            if (l <= 0)
                continue;
            auto& p = props[static_cast<std::size_t>(l - 1)];
            ++p.area;
            sum_r[static_cast<std::size_t>(l - 1)] += r;
            sum_c[static_cast<std::size_t>(l - 1)] += c;
            p.bbox.min_row = std::min(p.bbox.min_row, r);
            p.bbox.min_col = std::min(p.bbox.min_col, c);
            p.bbox.max_row = std::max(p.bbox.max_row, r);
            p.bbox.max_col = std::max(p.bbox.max_col, c);
        }
    for (std::size_t i = 0; i < props.size(); ++i) {
        auto& p = props[i];
        if (p.area == 0)
            continue;
        p.centroid_row = sum_r[i] / static_cast<double>(p.area);
        p.centroid_col = sum_c[i] / static_cast<double>(p.area);
        p.equivalent_radius = pixel_pitch * std::sqrt(static_cast<double>(p.area) / M_PI);
    }
    return props;
}

BinaryMask label_mask(const LabelMap& labels, int label)
{
    BinaryMask out(labels.width(), labels.height());
    for (std::size_t i = 0; i < labels.size(); ++i)
        out[i] = labels[i] == label ? 1 : 0;
    return out;
}

BinaryMask remove_small_regions(const BinaryMask& mask, long min_area)
{
    if (min_area < 0)
        throw ParameterError("min_area must be non-negative");
    int k = 0;
    const auto labels = connected_components(mask, &k);
    std::vector<long> area(static_cast<std::size_t>(k) + 1, 0);
    for (int l : labels.values())
        ++area[static_cast<std::size_t>(l)];
    BinaryMask out(mask.width(), mask.height());
    for (std::size_t i = 0; i < mask.size(); ++i) {
        const int l = labels[i];
        out[i] = (l > 0 && area[static_cast<std::size_t>(l)] >= min_area) ? 1 : 0;
    }
    return out;
}

namespace {

BinaryMask fill_enclosed(const BinaryMask& mask, long max_hole_area, bool any_size)
{
    int k = 0;
    const auto holes = connected_components(complement(mask), &k);
    std::vector<long> area(static_cast<std::size_t>(k) + 1, 0);
    std::vector<bool> touches_border(static_cast<std::size_t>(k) + 1, false);
    for (int r = 0; r < mask.height(); ++r)
        for (int c = 0; c < mask.width(); ++c) {
            const int l = holes(r, c);
            if (l == 0)
                continue;
            ++area[static_cast<std::size_t>(l)];
            if (r == 0 || c == 0 || r == mask.height() - 1 || c == mask.width() - 1)
                touches_border[static_cast<std::size_t>(l)] = true;
        }
    BinaryMask out = mask;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        const auto l = static_cast<std::size_t>(holes[i]);
        if (l != 0 && !touches_border[l] && (any_size || area[l] <= max_hole_area))
            out[i] = 1;
    }
    return out;
}

}  // namespace

BinaryMask remove_small_holes(const BinaryMask& mask, long max_hole_area)
{
    if (max_hole_area < 0)
        throw ParameterError("max_hole_area must be non-negative");
    return fill_enclosed(mask, max_hole_area, false);
}

BinaryMask fill_holes(const BinaryMask& mask)
{
    return fill_enclosed(mask, 0, true);
}

BinaryMask largest_component(const BinaryMask& mask)
{
    int k = 0;
    const auto labels = connected_components(mask, &k);
    if (k <= 1)
        return mask;
    std::vector<long> area(static_cast<std::size_t>(k) + 1, 0);
    for (int l : labels.values())
        ++area[static_cast<std::size_t>(l)];
    int best = 1;
    for (int l = 2; l <= k; ++l)
        if (area[static_cast<std::size_t>(l)] > area[static_cast<std::size_t>(best)])
            best = l;
    return label_mask(labels, best);
}

}  // namespace poregrad
