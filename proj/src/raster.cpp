#include "poregrad/raster.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace poregrad {

void require_finite(const Image& img, const char* what)
{
    for (double v : img.values())
        if (!std::isfinite(v))
            throw DataError(std::string(what) + ": non-finite intensity");
}

long count(const BinaryMask& mask)
{
    return static_cast<long>(std::count_if(mask.values().begin(), mask.values().end(),
                                           [](std::uint8_t v) { return v != 0; }));
}

BinaryMask complement(const BinaryMask& mask)
{
    BinaryMask out(mask.width(), mask.height());
    for (std::size_t i = 0; i < mask.size(); ++i)
        out[i] = mask[i] ? 0 : 1;
    return out;
}

BinaryMask intersect(const BinaryMask& a, const BinaryMask& b)
{
    require_same_shape(a, b, "intersect");
    BinaryMask out(a.width(), a.height());
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = (a[i] && b[i]) ? 1 : 0;
    return out;
}

BinaryMask unite(const BinaryMask& a, const BinaryMask& b)
{
    require_same_shape(a, b, "unite");
    BinaryMask out(a.width(), a.height());
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = (a[i] || b[i]) ? 1 : 0;
    return out;
}

BinaryMask subtract_mask(const BinaryMask& a, const BinaryMask& b)
{
    require_same_shape(a, b, "subtract_mask");
    BinaryMask out(a.width(), a.height());
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = (a[i] && !b[i]) ? 1 : 0;
    return out;
}

bool is_subset(const BinaryMask& inner, const BinaryMask& outer)
{
    require_same_shape(inner, outer, "is_subset");
    for (std::size_t i = 0; i < inner.size(); ++i)
        if (inner[i] && !outer[i])
            return false;
    return true;
}

bool bounding_box(const BinaryMask& mask, PixelBox& box)
{
    bool any = false;
    PixelBox b{mask.height(), mask.width(), -1, -1};
    for (int r = 0; r < mask.height(); ++r)
        for (int c = 0; c < mask.width(); ++c)
            if (mask(r, c)) {
                any = true;
                b.min_row = std::min(b.min_row, r);
                b.min_col = std::min(b.min_col, c);
                b.max_row = std::max(b.max_row, r);
                b.max_col = std::max(b.max_col, c);
            }
    if (any)
        box = b;
    return any;
}

double min_value(const Image& img)
{
    return *std::min_element(img.values().begin(), img.values().end());
}

double max_value(const Image& img)
{
    return *std::max_element(img.values().begin(), img.values().end());
}

double mean_value(const Image& img)
{
    return std::accumulate(img.values().begin(), img.values().end(), 0.0) /
           static_cast<double>(img.size());
}

}  // namespace poregrad
