#include <algorithm>
#include <cmath>

#include "ecg/syngen.hpp"

namespace ecg::syngen {

namespace {

constexpr int kMinorGrid = 4;
constexpr int kMajorGrid = 20;
constexpr double kStrokeWidth = 1.6;
constexpr double kAmpRange = 1.9; // design max |voltage| after label scaling

void set_min_rgb(raster::Raster& img, int x, int y, float r, float g, float b) {
    img.at(x, y, 0) = std::min(img.at(x, y, 0), r);
    img.at(x, y, 1) = std::min(img.at(x, y, 1), g);
    img.at(x, y, 2) = std::min(img.at(x, y, 2), b);
}

void draw_grid(raster::Raster& paper) {
    for (int y = 0; y < paper.height; ++y)
        for (int x = 0; x < paper.width; ++x) {
            bool major = (x % kMajorGrid == 0) || (y % kMajorGrid == 0);
            bool minor = (x % kMinorGrid == 0) || (y % kMinorGrid == 0);
            if (major) set_min_rgb(paper, x, y, 1.0f, 0.60f, 0.60f);
            else if (minor) set_min_rgb(paper, x, y, 1.0f, 0.82f, 0.82f);
        }
}

// accumulates anti-aliased segment coverage: full ink within
// kStrokeWidth/2 - 0.5 of the segment, 1 px feather outside
void stroke_segment(std::vector<float>& cov, int W, int H, double x0, double y0, double x1,
                    double y1) {
    int lo_x = std::max(0, int(std::floor(std::min(x0, x1) - 2)));
    int hi_x = std::min(W - 1, int(std::ceil(std::max(x0, x1) + 2)));
    int lo_y = std::max(0, int(std::floor(std::min(y0, y1) - 2)));
    int hi_y = std::min(H - 1, int(std::ceil(std::max(y0, y1) + 2)));
    double dx = x1 - x0, dy = y1 - y0;
    double len2 = dx * dx + dy * dy;
    for (int y = lo_y; y <= hi_y; ++y) {
        for (int x = lo_x; x <= hi_x; ++x) {
            double t = len2 > 0 ? ((x - x0) * dx + (y - y0) * dy) / len2 : 0.0;
            t = std::clamp(t, 0.0, 1.0);
            double px = x0 + t * dx, py = y0 + t * dy;
            double d = std::hypot(x - px, y - py);
            double c = std::clamp(0.5 + (kStrokeWidth * 0.5 - d), 0.0, 1.0);
            float& slot = cov[size_t(y) * W + x];
            slot = std::max(slot, float(c));
        }
    }
}

} // namespace

std::pair<raster::Raster, raster::BinaryMask> render_paper(
    const std::array<Waveform, kNumLeads>& waveforms, const GenConfig& cfg,
    rng::Xoshiro256pp& gen) {
    const int W = cfg.paper_w, H = cfg.paper_h;
    const int cell_w = W / 4, cell_h = H / 3;
    const int pad = 3;
    if (cell_w <= 2 * pad + 2 || cell_h <= 2 * pad + 2)
        fail(ErrorKind::Config, "render_paper: lead cells too small for the layout");

    raster::Raster paper(W, H, 3, 1.0f);
    draw_grid(paper);

    // slight per-lead ink darkness variation
    std::array<float, kNumLeads> ink_jitter;
    for (float& j : ink_jitter) j = float(gen.uniform(-0.02, 0.02));

    std::vector<float> cov(size_t(W) * H, 0.0f);
    for (int lead = 0; lead < kNumLeads; ++lead) {
        int row = lead % 3, col = lead / 3;
        double x_lo = col * cell_w + pad;
        double x_hi = (col + 1) * cell_w - pad - 1;
        double baseline = row * cell_h + cell_h * 0.55;
        double y_scale = (cell_h * 0.5 - pad) / kAmpRange;

        const std::vector<double>& s = waveforms[size_t(lead)].samples;
        int n = int(s.size());
        // two polyline points per pixel column keeps steep QRS slopes joined
        int steps = std::max(2, int((x_hi - x_lo) * 2));
        double prev_x = 0.0, prev_y = 0.0;
        for (int i = 0; i <= steps; ++i) {
            double u = double(i) / steps;
            double fi = u * (n - 1);
            int i0 = int(fi);
            double frac = fi - i0;
            double v = i0 + 1 < n ? s[size_t(i0)] * (1 - frac) + s[size_t(i0) + 1] * frac
                                  : s[size_t(i0)];
            v = std::clamp(v, -kAmpRange, kAmpRange);
            double px = x_lo + u * (x_hi - x_lo);
            double py = baseline - v * y_scale;
            if (i > 0) stroke_segment(cov, W, H, prev_x, prev_y, px, py);
            prev_x = px;
            prev_y = py;
        }
    }

    // lead cells are disjoint, so the ink color at a pixel is its cell's
    raster::BinaryMask mask(W, H);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            float c = cov[size_t(y) * W + x];
            if (c <= 0.0f) continue;
            int lead = std::min(2, y / cell_h) + 3 * std::min(3, x / cell_w);
            float ink = 0.10f + ink_jitter[size_t(lead)];
            paper.at(x, y, 0) = (1 - c) * paper.at(x, y, 0) + c * ink;
            paper.at(x, y, 1) = (1 - c) * paper.at(x, y, 1) + c * ink;
            paper.at(x, y, 2) = (1 - c) * paper.at(x, y, 2) + c * (ink + 0.02f);
            if (c > 0.5f) mask.set(x, y, 1);
        }
    }
    return {std::move(paper), std::move(mask)};
}

} // namespace ecg::syngen
