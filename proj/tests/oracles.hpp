#pragma once

// Slow, obviously-correct reference implementations used by the tests. None
// of these call into the library's kernels.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <queue>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "poregrad/raster.hpp"

namespace oracle {

using poregrad::BinaryMask;
using poregrad::Image;
using poregrad::LabelMap;

inline int reflect(int i, int n)
{
    while (i < 0 || i >= n) {
        if (i < 0)
            i = -i - 1;
        if (i >= n)
            i = 2 * n - i - 1;
    }
    return i;
}

/// Full 2D convolution with the outer-product Gaussian, reflect border.
inline Image blur(const Image& img, double sigma)
{
    const int r = static_cast<int>(std::ceil(4 * sigma));
    std::vector<double> w;
    double sum = 0;
    for (int k = -r; k <= r; ++k) {
        w.push_back(std::exp(-0.5 * k * k / (sigma * sigma)));
        sum += w.back();
    }
    for (double& v : w)
        v /= sum;
    Image out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            double acc = 0;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx)
                    acc += w[dy + r] * w[dx + r] * img(reflect(y + dy, img.height()), reflect(x + dx, img.width()));
            out(y, x) = acc;
        }
    return out;
}

inline bool in_disk(int dr, int dc, int r) { return dr * dr + dc * dc <= r * r; }

/// Min filter over a disk; outside the grid is 0.
inline BinaryMask erode(const BinaryMask& m, int r)
{
    BinaryMask out(m.width(), m.height());
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x) {
            bool all = true;
            for (int dy = -r; dy <= r && all; ++dy)
                for (int dx = -r; dx <= r && all; ++dx)
                    if (in_disk(dy, dx, r))
                        all = m.contains(y + dy, x + dx) && m(y + dy, x + dx);
            out(y, x) = all ? 1 : 0;
        }
    return out;
}

/// Max filter over a disk; outside the grid is 0.
inline BinaryMask dilate(const BinaryMask& m, int r)
{
    BinaryMask out(m.width(), m.height());
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x) {
            bool any = false;
            for (int dy = -r; dy <= r && !any; ++dy)
                for (int dx = -r; dx <= r && !any; ++dx)
                    if (in_disk(dy, dx, r))
                        any = m.contains(y + dy, x + dx) && m(y + dy, x + dx);
            out(y, x) = any ? 1 : 0;
        }
    return out;
}

struct Component {
    std::vector<std::pair<int, int>> pixels;
    bool touches_border = false;
};

/// 4-connected components of pixels equal to `value`, by BFS.
inline std::vector<Component> components(const BinaryMask& m, std::uint8_t value = 1)
{
    std::vector<Component> out;
    std::vector<char> seen(m.size(), 0);
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x) {
            if ((m(y, x) != 0) != (value != 0) || seen[y * m.width() + x])
                continue;
            Component c;
            std::queue<std::pair<int, int>> q;
            q.push({y, x});
            seen[y * m.width() + x] = 1;
            while (!q.empty()) {
                auto [cy, cx] = q.front();
                q.pop();
                c.pixels.push_back({cy, cx});
                if (cy == 0 || cx == 0 || cy == m.height() - 1 || cx == m.width() - 1)
                    c.touches_border = true;
                const int dy[] = {-1, 1, 0, 0}, dx[] = {0, 0, -1, 1};
                for (int k = 0; k < 4; ++k) {
                    const int ny = cy + dy[k], nx = cx + dx[k];
                    if (m.contains(ny, nx) && (m(ny, nx) != 0) == (value != 0) && !seen[ny * m.width() + nx]) {
                        seen[ny * m.width() + nx] = 1;
                        q.push({ny, nx});
                    }
                }
            }
            out.push_back(std::move(c));
        }
    return out;
}

/// True when two labelings induce the same partition of the foreground.
inline bool same_partition(const LabelMap& a, const LabelMap& b)
{
    if (!a.same_shape(b))
        return false;
    std::map<int, int> ab, ba;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if ((a[i] == 0) != (b[i] == 0))
            return false;
        if (a[i] == 0)
            continue;
        auto [it1, new1] = ab.emplace(a[i], b[i]);
        auto [it2, new2] = ba.emplace(b[i], a[i]);
        if (it1->second != b[i] || it2->second != a[i])
            return false;
    }
    return true;
}

/// Squared distance to the nearest background pixel center; pixels outside
/// the grid count as background.
inline std::vector<long> squared_edt(const BinaryMask& m)
{
    const int H = m.height(), W = m.width();
    std::vector<long> out(m.size(), 0);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            if (!m(y, x))
                continue;
            long best = std::min({long(y + 1) * (y + 1), long(H - y) * (H - y), long(x + 1) * (x + 1),
                                  long(W - x) * (W - x)});
            for (int v = 0; v < H; ++v)
                for (int u = 0; u < W; ++u)
                    if (!m(v, u))
                        best = std::min(best, long(v - y) * (v - y) + long(u - x) * (u - x));
            out[y * W + x] = best;
        }
    return out;
}

/// Linear interpolation between closest ranks (numpy's default).
inline double percentile(std::vector<double> v, double pct)
{
    std::sort(v.begin(), v.end());
    const double pos = pct / 100.0 * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct Tally {
    long tp = 0, fp = 0, tn = 0, fn = 0;
};

inline Tally tally(const BinaryMask& pred, const BinaryMask& truth, const BinaryMask* region = nullptr)
{
    Tally t;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (region && !(*region)[i])
            continue;
        const bool p = pred[i] != 0, g = truth[i] != 0;
        if (p && g)
            ++t.tp;
        else if (p)
            ++t.fp;
        else if (g)
            ++t.fn;
        else
            ++t.tn;
    }
    return t;
}

/// Probability that a random positive outscores a random negative, ties 1/2.
inline double mann_whitney_auc(const std::vector<double>& score, const std::vector<bool>& positive)
{
    double wins = 0;
    long pairs = 0;
    for (std::size_t i = 0; i < score.size(); ++i) {
        if (!positive[i])
            continue;
        for (std::size_t j = 0; j < score.size(); ++j) {
            if (positive[j])
                continue;
            ++pairs;
            if (score[i] > score[j])
                wins += 1;
            else if (score[i] == score[j])
                wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

struct Sphere {
    double x, y, z, r;
};

/// Transmitted intensity along the beam (z) through (x, y): material inside
/// `particle` but outside every pore, integrated by the midpoint rule.
inline double ray_march(const Sphere& particle, const std::vector<Sphere>& pores, double x, double y,
                        double mu, double i0, double step)
{
    double t = 0;
    const double z0 = particle.z - particle.r, z1 = particle.z + particle.r;
    const long n = static_cast<long>(std::ceil((z1 - z0) / step));
    for (long k = 0; k < n; ++k) {
        const double z = z0 + (static_cast<double>(k) + 0.5) * step;
        auto inside = [&](const Sphere& s) {
            return (x - s.x) * (x - s.x) + (y - s.y) * (y - s.y) + (z - s.z) * (z - s.z) < s.r * s.r;
        };
        if (!inside(particle))
            continue;
        bool in_pore = false;
        for (const auto& p : pores)
            in_pore = in_pore || inside(p);
        if (!in_pore)
            t += step;
    }
    return i0 * std::exp(-mu * t);
}

inline BinaryMask random_mask(int w, int h, double p, std::mt19937_64& rng)
{
    std::bernoulli_distribution coin(p);
    BinaryMask m(w, h);
    for (auto& v : m.values())
        v = coin(rng) ? 1 : 0;
    return m;
}

inline Image random_image(int w, int h, std::mt19937_64& rng, double lo = 0, double hi = 1)
{
    std::uniform_real_distribution<double> u(lo, hi);
    Image img(w, h);
    for (auto& v : img.values())
        v = u(rng);
    return img;
}

inline BinaryMask disk(int w, int h, double cy, double cx, double r)
{
    BinaryMask m(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            m(y, x) = (y - cy) * (y - cy) + (x - cx) * (x - cx) <= r * r ? 1 : 0;
    return m;
}

}  // namespace oracle
