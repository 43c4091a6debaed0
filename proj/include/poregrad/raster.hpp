#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "poregrad/error.hpp"

namespace poregrad {

/// Row-major 2D grid. Element (row, col) lives at index row * width + col.
template <typename T>
class Grid {
public:
    Grid() = default;
    Grid(int width, int height, T fill = T{})
        : width_(width), height_(height)
    {
        if (width <= 0 || height <= 0)
            throw ParameterError("grid dimensions must be positive");
        data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
    }
    Grid(int width, int height, std::vector<T> values)
        : width_(width), height_(height), data_(std::move(values))
    {
        if (width <= 0 || height <= 0)
            throw ParameterError("grid dimensions must be positive");
        if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
            throw ParameterError("grid value count does not match dimensions");
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(int row, int col) noexcept { return data_[index(row, col)]; }
    const T& operator()(int row, int col) const noexcept { return data_[index(row, col)]; }
    T& operator[](std::size_t i) noexcept { return data_[i]; }
    const T& operator[](std::size_t i) const noexcept { return data_[i]; }

    bool contains(int row, int col) const noexcept
    {
        return row >= 0 && col >= 0 && row < height_ && col < width_;
    }

    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }

    template <typename U>
    bool same_shape(const Grid<U>& other) const noexcept
    {
        return width_ == other.width() && height_ == other.height();
    }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    std::size_t index(int row, int col) const noexcept
    {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(col);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

using Image = Grid<double>;
using BinaryMask = Grid<std::uint8_t>;  // 0 = background, 1 = foreground
using LabelMap = Grid<int>;             // 0 = background, 1..K components

/// A single-channel radiograph with its physical sampling.
struct Radiograph {
    Image pixels;
    double pixel_pitch = 1.0;  // micrometers per pixel
    std::string id;
};

struct PixelBox {
    int min_row = 0;
    int min_col = 0;
    int max_row = 0;  // inclusive
    int max_col = 0;  // inclusive

    int height() const noexcept { return max_row - min_row + 1; }
    int width() const noexcept { return max_col - min_col + 1; }
    friend bool operator==(const PixelBox&, const PixelBox&) = default;
};

struct RegionProps {
    int label = 0;
    long area = 0;            // pixels
    double centroid_row = 0;  // subpixel
    double centroid_col = 0;
    PixelBox bbox;
    double equivalent_radius = 0;  // micrometers
};

template <typename U, typename V>
void require_same_shape(const Grid<U>& a, const Grid<V>& b, const char* what)
{
    if (!a.same_shape(b))
        throw ParameterError(std::string(what) + ": geometry mismatch");
}

/// Throws DataError if any value is NaN or infinite.
void require_finite(const Image& img, const char* what);

long count(const BinaryMask& mask);
BinaryMask complement(const BinaryMask& mask);
BinaryMask intersect(const BinaryMask& a, const BinaryMask& b);
BinaryMask unite(const BinaryMask& a, const BinaryMask& b);
BinaryMask subtract_mask(const BinaryMask& a, const BinaryMask& b);
bool is_subset(const BinaryMask& inner, const BinaryMask& outer);

/// Tight bounding box of the foreground; returns false for an empty mask.
bool bounding_box(const BinaryMask& mask, PixelBox& box);

double min_value(const Image& img);
double max_value(const Image& img);
double mean_value(const Image& img);

}  // namespace poregrad
