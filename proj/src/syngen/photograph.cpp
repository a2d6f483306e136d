#include <algorithm>
#include <cmath>

#include "ecg/syngen.hpp"

namespace ecg::syngen {

namespace {

constexpr float kCanvasShade = 0.06f;
constexpr double kCornerJitterFrac = 0.02; // of min(paper_w, paper_h)
constexpr double kPlacementMargin = 2.0;

double rotated_extent_w(double w, double h, double deg) {
    double rad = std::abs(deg) * 3.14159265358979323846 / 180.0;
    return w * std::cos(rad) + h * std::sin(rad);
}

double rotated_extent_h(double w, double h, double deg) {
    double rad = std::abs(deg) * 3.14159265358979323846 / 180.0;
    return w * std::sin(rad) + h * std::cos(rad);
}

void box_blur(raster::Raster& img, int radius) {
    if (radius <= 0) return;
    int W = img.width, H = img.height, C = img.channels;
    auto clamp_x = [&](int x) { return std::clamp(x, 0, W - 1); };
    auto clamp_y = [&](int y) { return std::clamp(y, 0, H - 1); };
    double norm = 1.0 / (2 * radius + 1);

    raster::Raster tmp(W, H, C);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < C; ++c) {
                double acc = 0.0;
                for (int k = -radius; k <= radius; ++k) acc += img.at(clamp_x(x + k), y, c);
                tmp.at(x, y, c) = float(acc * norm);
            }
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < C; ++c) {
                double acc = 0.0;
                for (int k = -radius; k <= radius; ++k) acc += tmp.at(x, clamp_y(y + k), c);
                img.at(x, y, c) = float(acc * norm);
            }
}

// bilinear paper sample with out-of-bounds taps falling back to the canvas
// shade, which feathers the paper edge into the background
float sample_paper(const raster::Raster& paper, double sx, double sy, int c) {
    int x0 = int(std::floor(sx)), y0 = int(std::floor(sy));
    double fx = sx - x0, fy = sy - y0;
    auto tap = [&](int px, int py) -> double {
        if (px < 0 || px >= paper.width || py < 0 || py >= paper.height) return kCanvasShade;
        return paper.at(px, py, c);
    };
    return float((1 - fy) * ((1 - fx) * tap(x0, y0) + fx * tap(x0 + 1, y0)) +
                 fy * ((1 - fx) * tap(x0, y0 + 1) + fx * tap(x0 + 1, y0 + 1)));
}

} // namespace

void GenConfig::validate() const {
    if (n < 0) fail(ErrorKind::Parameter, "gen: n must be >= 0");
    if (paper_w < 40 || paper_h < 30) fail(ErrorKind::Parameter, "gen: paper too small");
    if (canvas_w <= 0 || canvas_h <= 0) fail(ErrorKind::Parameter, "gen: canvas dims must be positive");
    if (max_tilt_deg < 0 || max_tilt_deg >= 45)
        fail(ErrorKind::Parameter, "gen: max tilt must lie in [0, 45)");
    if (!(contrast_low > 0) || contrast_low > contrast_high)
        fail(ErrorKind::Parameter, "gen: contrast band must satisfy 0 < low <= high");
    if (noise_std < 0) fail(ErrorKind::Parameter, "gen: noise_std must be >= 0");
    if (blur_radius < 0) fail(ErrorKind::Parameter, "gen: blur_radius must be >= 0");
    for (double p : class_priors)
        if (p < 0 || p > 1) fail(ErrorKind::Parameter, "gen: class priors must lie in [0,1]");

    double jitter = kCornerJitterFrac * std::min(paper_w, paper_h);
    double need_w = rotated_extent_w(paper_w, paper_h, max_tilt_deg) + 2 * (jitter + kPlacementMargin);
    double need_h = rotated_extent_h(paper_w, paper_h, max_tilt_deg) + 2 * (jitter + kPlacementMargin);
    if (need_w > canvas_w || need_h > canvas_h)
        fail(ErrorKind::Parameter, "gen: paper does not fit the canvas under max tilt");
}

std::pair<raster::Raster, GroundTruth> photograph(const raster::Raster& paper,
                                                  const GenConfig& cfg, rng::Xoshiro256pp& gen,
                                                  const LabelVector& labels,
                                                  raster::BinaryMask mask) {
    cfg.validate();
    paper.validate();
    const int W = cfg.canvas_w, H = cfg.canvas_h;
    const int pw = paper.width, ph = paper.height;

    raster::Raster canvas(W, H, 3, kCanvasShade);
    GroundTruth gt;
    gt.labels = labels;
    gt.mask = std::move(mask);

    std::array<geometry::Point2, 4> src = {
        geometry::Point2{0, 0}, geometry::Point2{double(pw - 1), 0},
        geometry::Point2{double(pw - 1), double(ph - 1)}, geometry::Point2{0, double(ph - 1)}};

    if (cfg.max_tilt_deg == 0.0) {
        // axis-aligned pixel-exact copy at an integer offset
        int slack_x = W - pw, slack_y = H - ph;
        int ox = int(gen.below(uint64_t(slack_x + 1)));
        int oy = int(gen.below(uint64_t(slack_y + 1)));
        for (int y = 0; y < ph; ++y)
            for (int x = 0; x < pw; ++x)
                for (int c = 0; c < 3; ++c)
                    canvas.at(ox + x, oy + y, c) = paper.channels == 3 ? paper.at(x, y, c)
                                                                       : paper.at(x, y, 0);
        for (int i = 0; i < 4; ++i)
            gt.corners[size_t(i)] = {src[size_t(i)].x + ox, src[size_t(i)].y + oy};
    } else {
        double angle = gen.uniform(-cfg.max_tilt_deg, cfg.max_tilt_deg);
        double rad = angle * 3.14159265358979323846 / 180.0;
        double ca = std::cos(rad), sa = std::sin(rad);
        double pcx = (pw - 1) * 0.5, pcy = (ph - 1) * 0.5;
        double jitter = kCornerJitterFrac * std::min(pw, ph);

        std::array<geometry::Point2, 4> dst;
        for (int i = 0; i < 4; ++i) {
            double dx = src[size_t(i)].x - pcx, dy = src[size_t(i)].y - pcy;
            dst[size_t(i)] = {ca * dx - sa * dy + gen.uniform(-jitter, jitter),
                              sa * dx + ca * dy + gen.uniform(-jitter, jitter)};
        }
        double min_x = dst[0].x, max_x = dst[0].x, min_y = dst[0].y, max_y = dst[0].y;
        for (const auto& p : dst) {
            min_x = std::min(min_x, p.x);
            max_x = std::max(max_x, p.x);
            min_y = std::min(min_y, p.y);
            max_y = std::max(max_y, p.y);
        }
        double slack_x = (W - 1 - (max_x - min_x)) * 0.5 - kPlacementMargin;
        double slack_y = (H - 1 - (max_y - min_y)) * 0.5 - kPlacementMargin;
        double cx = (W - 1) * 0.5 + gen.uniform(-std::max(0.0, slack_x), std::max(0.0, slack_x));
        double cy = (H - 1) * 0.5 + gen.uniform(-std::max(0.0, slack_y), std::max(0.0, slack_y));
        double mid_x = 0.5 * (min_x + max_x), mid_y = 0.5 * (min_y + max_y);
        for (auto& p : dst) {
            p.x += cx - mid_x;
            p.y += cy - mid_y;
        }

        geometry::Quad src_quad{src}, dst_quad{dst};
        geometry::Homography h = geometry::solve_homography(src_quad, dst_quad);
        geometry::Homography inv = h.inverse();
        const auto& m = inv.matrix();
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x) {
                double w = m[2][0] * x + m[2][1] * y + 1.0;
                double sx = (m[0][0] * x + m[0][1] * y + m[0][2]) / w;
                double sy = (m[1][0] * x + m[1][1] * y + m[1][2]) / w;
                if (sx < -1 || sx > pw || sy < -1 || sy > ph) continue;
                for (int c = 0; c < 3; ++c)
                    canvas.at(x, y, c) = sample_paper(paper, sx, sy, paper.channels == 3 ? c : 0);
            }
        }
        gt.corners = dst;
    }
    gt.paper_region = gt.corners;

    // multiplicative contrast field from a bilinear 4x4 grid
    if (cfg.contrast_low != 1.0 || cfg.contrast_high != 1.0) {
        double grid[4][4];
        for (auto& row : grid)
            for (double& v : row) v = gen.uniform(cfg.contrast_low, cfg.contrast_high);
        for (int y = 0; y < H; ++y) {
            double gy = double(y) / (H - 1) * 3.0;
            int y0 = std::min(2, int(gy));
            double fy = gy - y0;
            for (int x = 0; x < W; ++x) {
                double gx = double(x) / (W - 1) * 3.0;
                int x0 = std::min(2, int(gx));
                double fx = gx - x0;
                double f = (1 - fy) * ((1 - fx) * grid[y0][x0] + fx * grid[y0][x0 + 1]) +
                           fy * ((1 - fx) * grid[y0 + 1][x0] + fx * grid[y0 + 1][x0 + 1]);
                for (int c = 0; c < 3; ++c)
                    canvas.at(x, y, c) = std::clamp(float(canvas.at(x, y, c) * f), 0.0f, 1.0f);
            }
        }
    }

    box_blur(canvas, cfg.blur_radius);

    // sensor noise, shared across channels so flat-region luma std matches
    if (cfg.noise_std > 0.0) {
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                float e = float(gen.normal() * cfg.noise_std);
                for (int c = 0; c < 3; ++c)
                    canvas.at(x, y, c) = std::clamp(canvas.at(x, y, c) + e, 0.0f, 1.0f);
            }
    }

    return {std::move(canvas), std::move(gt)};
}

} // namespace ecg::syngen
