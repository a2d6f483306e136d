// Test-only oracles, independent of the implementation paths they check.
#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <vector>

#include "ecg/geometry.hpp"
#include "ecg/maskops.hpp"
#include "ecg/raster.hpp"

namespace oracles {

// O(n^3) half-plane convex hull: a point is a hull vertex iff some line
// through it and another point has all remaining points strictly on one side
// and it is not interior to any segment of the hull boundary. Implemented the
// blunt way: keep points that are vertices of the hull polygon by testing
// every ordered pair.
inline std::vector<ecg::geometry::Point2> brute_force_hull(
    const std::vector<ecg::geometry::Point2>& pts) {
    using ecg::geometry::Point2;
    auto cross = [](const Point2& o, const Point2& a, const Point2& b) {
        return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
    };

    std::vector<Point2> hull;
    for (size_t i = 0; i < pts.size(); ++i) {
        bool vertex = false;
        for (size_t j = 0; j < pts.size() && !vertex; ++j) {
            if (j == i) continue;
            // edge candidate i -> j: all other points strictly left?
            bool all_left = true;
            bool degenerate = false;
            for (size_t k = 0; k < pts.size(); ++k) {
                if (k == i || k == j) continue;
                double c = cross(pts[i], pts[j], pts[k]);
                if (c < 0) { all_left = false; break; }
                if (c == 0) {
                    // collinear: i is a vertex only if it is an endpoint
                    double t = std::abs(pts[j].x - pts[i].x) > std::abs(pts[j].y - pts[i].y)
                                   ? (pts[k].x - pts[i].x) / (pts[j].x - pts[i].x)
                                   : (pts[k].y - pts[i].y) / (pts[j].y - pts[i].y);
                    if (t < 0) { degenerate = true; break; } // k behind i on the ray
                }
            }
            if (all_left && !degenerate) vertex = true;
        }
        if (vertex) hull.push_back(pts[i]);
    }
    // order counter-clockwise about the centroid
    Point2 c{0, 0};
    for (const Point2& p : hull) { c.x += p.x; c.y += p.y; }
    c.x /= double(hull.size());
    c.y /= double(hull.size());
    std::sort(hull.begin(), hull.end(), [&](const Point2& a, const Point2& b) {
        return std::atan2(a.y - c.y, a.x - c.x) < std::atan2(b.y - c.y, b.x - c.x);
    });
    return hull;
}

// BFS flood-fill connected-component labeling, 8-way, labels assigned in
// raster-scan order of each component's first pixel.
inline std::vector<int32_t> flood_fill_labels(const ecg::raster::BinaryMask& m) {
    std::vector<int32_t> labels(m.bits.size(), 0);
    int32_t next = 0;
    for (int y0 = 0; y0 < m.height; ++y0) {
        for (int x0 = 0; x0 < m.width; ++x0) {
            size_t idx0 = size_t(y0) * m.width + x0;
            if (!m.bits[idx0] || labels[idx0]) continue;
            ++next;
            std::deque<std::pair<int, int>> q{{x0, y0}};
            labels[idx0] = next;
            while (!q.empty()) {
                auto [x, y] = q.front();
                q.pop_front();
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        int nx = x + dx, ny = y + dy;
                        if (nx < 0 || nx >= m.width || ny < 0 || ny >= m.height) continue;
                        size_t ni = size_t(ny) * m.width + nx;
                        if (m.bits[ni] && !labels[ni]) {
                            labels[ni] = next;
                            q.emplace_back(nx, ny);
                        }
                    }
            }
        }
    }
    return labels;
}

// O(n^2) pair-counting AUROC with 0.5 credit for ties.
inline double pair_counting_auroc(const std::vector<double>& scores,
                                  const std::vector<int>& labels) {
    double wins = 0.0;
    size_t pairs = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
        if (!labels[i]) continue;
        for (size_t j = 0; j < scores.size(); ++j) {
            if (labels[j]) continue;
            ++pairs;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    return wins / double(pairs);
}

// Reference global histogram equalization: out = cdf(bin)/N, 256 bins,
// round-half-up binning.
inline ecg::raster::Raster global_he(const ecg::raster::Raster& r) {
    std::vector<double> hist(256, 0.0);
    auto bin_of = [](float v) {
        int b = int(v * 255.0f + 0.5f);
        return b < 0 ? 0 : (b > 255 ? 255 : b);
    };
    for (float v : r.data) hist[size_t(bin_of(v))] += 1.0;
    std::vector<double> cdf(256, 0.0);
    double acc = 0.0;
    for (int b = 0; b < 256; ++b) {
        acc += hist[size_t(b)];
        cdf[size_t(b)] = acc / double(r.data.size());
    }
    ecg::raster::Raster out(r.width, r.height, 1);
    for (size_t i = 0; i < r.data.size(); ++i) out.data[i] = float(cdf[size_t(bin_of(r.data[i]))]);
    return out;
}

} // namespace oracles
