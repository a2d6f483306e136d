#include <algorithm>
#include <array>
#include <cmath>
#include <deque>

#include "ecg/kernels.hpp"
#include "ecg/maskops.hpp"
#include "ecg/raster.hpp"

namespace ecg::raster {

Raster to_grayscale(const Raster& r) {
    r.validate();
    if (r.channels == 1) return r;
    Raster out(r.width, r.height, 1);
    const float* p = r.data.data();
    for (size_t i = 0; i < out.data.size(); ++i, p += 3)
        out.data[i] = 0.299f * p[0] + 0.587f * p[1] + 0.114f * p[2];
    return out;
}

Raster invert(const Raster& r) {
    r.validate();
    Raster out(r.width, r.height, r.channels);
    kernels::one_minus(r.data.size(), r.data.data(), out.data.data());
    return out;
}

namespace {

constexpr int kBins = 256;

inline int bin_of(float v) {
    int b = quantize255(v);
    return b < 0 ? 0 : (b > 255 ? 255 : b);
}

// CDF-based tile mapping after clipping: m(b) = cdf(b) / N, range (0, 1].
std::array<double, kBins> tile_mapping(const std::array<double, kBins>& hist, double n_pixels,
                                       double clip_limit) {
    std::array<double, kBins> h = hist;
    if (std::isfinite(clip_limit)) {
        double ceil_count = clip_limit * n_pixels / kBins;
        double excess = 0.0;
        for (double& c : h) {
            if (c > ceil_count) {
                excess += c - ceil_count;
                c = ceil_count;
            }
        }
        double share = excess / kBins;
        for (double& c : h) c += share;
    }
    std::array<double, kBins> map{};
    double cdf = 0.0;
    double total = 0.0;
    for (double c : h) total += c;
    for (int b = 0; b < kBins; ++b) {
        cdf += h[b];
        map[b] = cdf / total;
    }
    return map;
}

} // namespace

Raster clahe(const Raster& r, int tiles_x, int tiles_y, double clip_limit) {
    r.validate();
    if (r.channels != 1) fail(ErrorKind::Parameter, "clahe expects a single-channel raster");
    if (tiles_x < 1 || tiles_y < 1) fail(ErrorKind::Parameter, "tile counts must be >= 1");
    if (tiles_x > r.width || tiles_y > r.height)
        fail(ErrorKind::Parameter, "more tiles than pixels along an axis");
    if (!(clip_limit > 0.0)) fail(ErrorKind::Parameter, "clip_limit must be positive");

    const int tw = r.width / tiles_x;
    const int th = r.height / tiles_y;

    auto tile_x0 = [&](int tx) { return tx * tw; };
    auto tile_x1 = [&](int tx) { return tx == tiles_x - 1 ? r.width : (tx + 1) * tw; };
    auto tile_y0 = [&](int ty) { return ty * th; };
    auto tile_y1 = [&](int ty) { return ty == tiles_y - 1 ? r.height : (ty + 1) * th; };

    std::vector<std::array<double, kBins>> maps(size_t(tiles_x) * tiles_y);
    std::vector<double> centers_x(tiles_x), centers_y(tiles_y);
    for (int ty = 0; ty < tiles_y; ++ty) {
        for (int tx = 0; tx < tiles_x; ++tx) {
            std::array<double, kBins> hist{};
            for (int y = tile_y0(ty); y < tile_y1(ty); ++y)
                for (int x = tile_x0(tx); x < tile_x1(tx); ++x)
                    hist[bin_of(r.at(x, y))] += 1.0;
            double n = double(tile_x1(tx) - tile_x0(tx)) * (tile_y1(ty) - tile_y0(ty));
            maps[size_t(ty) * tiles_x + tx] = tile_mapping(hist, n, clip_limit);
        }
    }
    for (int tx = 0; tx < tiles_x; ++tx)
        centers_x[tx] = 0.5 * (tile_x0(tx) + tile_x1(tx) - 1);
    for (int ty = 0; ty < tiles_y; ++ty)
        centers_y[ty] = 0.5 * (tile_y0(ty) + tile_y1(ty) - 1);

    auto lower_tile = [](const std::vector<double>& centers, double v) {
        int i = 0;
        while (i + 1 < int(centers.size()) && centers[i + 1] <= v) ++i;
        return i;
    };

    Raster out(r.width, r.height, 1);
    for (int y = 0; y < r.height; ++y) {
        int ty0 = lower_tile(centers_y, y);
        int ty1 = std::min(ty0 + 1, tiles_y - 1);
        double fy = 0.0;
        if (ty1 != ty0 && double(y) >= centers_y[ty0])
            fy = (y - centers_y[ty0]) / (centers_y[ty1] - centers_y[ty0]);
        if (double(y) < centers_y[0]) { ty1 = ty0 = 0; fy = 0.0; }
        for (int x = 0; x < r.width; ++x) {
            int tx0 = lower_tile(centers_x, x);
            int tx1 = std::min(tx0 + 1, tiles_x - 1);
            double fx = 0.0;
            if (tx1 != tx0 && double(x) >= centers_x[tx0])
                fx = (x - centers_x[tx0]) / (centers_x[tx1] - centers_x[tx0]);
            if (double(x) < centers_x[0]) { tx1 = tx0 = 0; fx = 0.0; }

            int b = bin_of(r.at(x, y));
            double m00 = maps[size_t(ty0) * tiles_x + tx0][b];
            double m01 = maps[size_t(ty0) * tiles_x + tx1][b];
            double m10 = maps[size_t(ty1) * tiles_x + tx0][b];
            double m11 = maps[size_t(ty1) * tiles_x + tx1][b];
            double v = (1 - fy) * ((1 - fx) * m00 + fx * m01) + fy * ((1 - fx) * m10 + fx * m11);
            out.at(x, y) = float(v);
        }
    }
    return out;
}

namespace {

// Otsu's method over a 256-bin histogram. Returns the bin index t maximizing
// between-class variance with both classes non-empty, or -1 if no such split
// exists (single-bin image).
int otsu_threshold(const std::vector<double>& hist, double total) {
    double sum_all = 0.0;
    for (int b = 0; b < kBins; ++b) sum_all += b * hist[b];
    double w0 = 0.0, sum0 = 0.0;
    double best = -1.0;
    int best_t = -1;
    for (int t = 0; t < kBins - 1; ++t) {
        w0 += hist[t];
        sum0 += t * hist[t];
        double w1 = total - w0;
        if (w0 <= 0.0 || w1 <= 0.0) continue;
        double mu0 = sum0 / w0;
        double mu1 = (sum_all - sum0) / w1;
        double var_between = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if (var_between > best) {
            best = var_between;
            best_t = t;
        }
    }
    return best_t;
}

// Fills false pixels not 4-connected to the border (8-connected foreground
// pairs with 4-connected background).
void fill_holes(BinaryMask& m) {
    std::vector<uint8_t> outside(m.bits.size(), 0);
    std::deque<std::pair<int, int>> queue;
    auto push = [&](int x, int y) {
        size_t i = size_t(y) * m.width + x;
        if (m.bits[i] || outside[i]) return;
        outside[i] = 1;
        queue.emplace_back(x, y);
    };
    for (int x = 0; x < m.width; ++x) { push(x, 0); push(x, m.height - 1); }
    for (int y = 0; y < m.height; ++y) { push(0, y); push(m.width - 1, y); }
    while (!queue.empty()) {
        auto [x, y] = queue.front();
        queue.pop_front();
        if (x > 0) push(x - 1, y);
        if (x + 1 < m.width) push(x + 1, y);
        if (y > 0) push(x, y - 1);
        if (y + 1 < m.height) push(x, y + 1);
    }
    for (size_t i = 0; i < m.bits.size(); ++i)
        if (!m.bits[i] && !outside[i]) m.bits[i] = 1;
}

} // namespace

BinaryMask segment_background(const Raster& r) {
    Raster luma = to_grayscale(r);
    std::vector<double> hist(kBins, 0.0);
    for (float v : luma.data) hist[bin_of(v)] += 1.0;
    double total = double(luma.data.size());

    int t = otsu_threshold(hist, total);
    if (t < 0) fail(ErrorKind::Segmentation, "no foreground: image has a single intensity level");

    BinaryMask fg(luma.width, luma.height);
    size_t n_fg = 0;
    for (size_t i = 0; i < luma.data.size(); ++i) {
        fg.bits[i] = bin_of(luma.data[i]) > t ? 1 : 0;
        n_fg += fg.bits[i];
    }
    if (n_fg == 0) fail(ErrorKind::Segmentation, "no foreground above Otsu threshold");

    maskops::LabeledMask lm = maskops::label_components(fg);
    std::vector<size_t> areas = maskops::component_areas(lm);
    int32_t largest = 1;
    for (int32_t l = 2; l <= lm.num_labels; ++l)
        if (areas[l] > areas[largest]) largest = l;

    BinaryMask out(fg.width, fg.height);
    for (size_t i = 0; i < out.bits.size(); ++i)
        out.bits[i] = lm.labels[i] == largest ? 1 : 0;
    fill_holes(out);
    return out;
}

Raster resample_area(const Raster& r, int out_w, int out_h) {
    r.validate();
    if (out_w < 1 || out_h < 1) fail(ErrorKind::Parameter, "output dimensions must be positive");
    if (out_w == r.width && out_h == r.height) return r;

    Raster out(out_w, out_h, r.channels);
    const double sx = double(r.width) / out_w;
    const double sy = double(r.height) / out_h;
    for (int oy = 0; oy < out_h; ++oy) {
        double y0 = oy * sy, y1 = (oy + 1) * sy;
        int iy0 = int(std::floor(y0));
        int iy1 = std::min(r.height, int(std::ceil(y1)));
        for (int ox = 0; ox < out_w; ++ox) {
            double x0 = ox * sx, x1 = (ox + 1) * sx;
            int ix0 = int(std::floor(x0));
            int ix1 = std::min(r.width, int(std::ceil(x1)));
            for (int c = 0; c < r.channels; ++c) {
                double acc = 0.0, area = 0.0;
                for (int iy = iy0; iy < iy1; ++iy) {
                    double hy = std::min<double>(iy + 1, y1) - std::max<double>(iy, y0);
                    if (hy <= 0) continue;
                    for (int ix = ix0; ix < ix1; ++ix) {
                        double wx = std::min<double>(ix + 1, x1) - std::max<double>(ix, x0);
                        if (wx <= 0) continue;
                        acc += hy * wx * r.at(ix, iy, c);
                        area += hy * wx;
                    }
                }
                out.at(ox, oy, c) = float(acc / area);
            }
        }
    }
    return out;
}

} // namespace ecg::raster
