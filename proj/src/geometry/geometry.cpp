#include "ecg/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace ecg::geometry {

namespace {

constexpr double kDetEps = 1e-12;
constexpr double kHorizonEps = 1e-12;
constexpr double kCornerResidual = 1e-9;

double cross(const Point2& o, const Point2& a, const Point2& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

double shoelace(const std::array<Point2, 4>& p) {
    double s = 0.0;
    for (int i = 0; i < 4; ++i) {
        const Point2& a = p[i];
        const Point2& b = p[(i + 1) % 4];
        s += a.x * b.y - b.x * a.y;
    }
    return 0.5 * s;
}

} // namespace

Homography Homography::identity() {
    Homography h;
    h.h_ = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    return h;
}

double Homography::det() const {
    const auto& m = h_;
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

Homography Homography::from_matrix(const std::array<std::array<double, 3>, 3>& m) {
    if (std::abs(m[2][2]) < kHorizonEps)
        fail(ErrorKind::Degeneracy, "homography h33 vanishes, cannot normalize");
    Homography h;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) h.h_[r][c] = m[r][c] / m[2][2];
    if (std::abs(h.det()) <= kDetEps)
        fail(ErrorKind::Degeneracy, "homography is singular");
    return h;
}

Homography Homography::inverse() const {
    const auto& m = h_;
    double d = det();
    if (std::abs(d) <= kDetEps) fail(ErrorKind::Degeneracy, "homography is singular");
    std::array<std::array<double, 3>, 3> adj;
    adj[0][0] = m[1][1] * m[2][2] - m[1][2] * m[2][1];
    adj[0][1] = m[0][2] * m[2][1] - m[0][1] * m[2][2];
    adj[0][2] = m[0][1] * m[1][2] - m[0][2] * m[1][1];
    adj[1][0] = m[1][2] * m[2][0] - m[1][0] * m[2][2];
    adj[1][1] = m[0][0] * m[2][2] - m[0][2] * m[2][0];
    adj[1][2] = m[0][2] * m[1][0] - m[0][0] * m[1][2];
    adj[2][0] = m[1][0] * m[2][1] - m[1][1] * m[2][0];
    adj[2][1] = m[0][1] * m[2][0] - m[0][0] * m[2][1];
    adj[2][2] = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    for (auto& row : adj)
        for (double& v : row) v /= d;
    return from_matrix(adj);
}

Homography compose(const Homography& h2, const Homography& h1) {
    const auto& a = h2.matrix();
    const auto& b = h1.matrix();
    std::array<std::array<double, 3>, 3> m{};
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            for (int k = 0; k < 3; ++k) m[r][c] += a[r][k] * b[k][c];
    return Homography::from_matrix(m);
}

double Quad::area() const { return shoelace(corners); }

void Quad::validate() const {
    for (const Point2& p : corners)
        if (!std::isfinite(p.x) || !std::isfinite(p.y))
            fail(ErrorKind::Degeneracy, "quad corner is not finite");
    if (!(area() > 0.0)) fail(ErrorKind::Degeneracy, "quad area must be positive");
    for (int i = 0; i < 4; ++i) {
        double c = cross(corners[i], corners[(i + 1) % 4], corners[(i + 2) % 4]);
        if (!(c > 0.0)) fail(ErrorKind::Degeneracy, "quad is not strictly convex");
    }
}

std::vector<Point2> convex_hull(std::vector<Point2> pts) {
    if (pts.size() < 3) fail(ErrorKind::Degeneracy, "convex hull needs at least 3 points");
    std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Point2& a, const Point2& b) {
                              return a.x == b.x && a.y == b.y;
                          }),
              pts.end());

    size_t n = pts.size();
    if (n < 3) fail(ErrorKind::Degeneracy, "convex hull needs at least 3 distinct points");

    std::vector<Point2> hull(2 * n);
    size_t k = 0;
    // lower chain
    for (size_t i = 0; i < n; ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    // upper chain
    for (size_t i = n - 1, lower = k + 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    if (hull.size() < 3) fail(ErrorKind::Degeneracy, "all points are collinear");
    return hull;
}

Quad simplify_to_quad(const std::vector<Point2>& hull) {
    size_t h = hull.size();
    if (h < 4) fail(ErrorKind::Degeneracy, "hull has fewer than 4 vertices");

    std::array<size_t, 4> best{0, 1, 2, 3};
    double best_area = -1.0;
    // exhaustive over all index 4-subsets in hull order; lexicographically
    // first subset wins ties because the comparison is strict
    for (size_t i = 0; i + 3 < h; ++i)
        for (size_t j = i + 1; j + 2 < h; ++j)
            for (size_t k = j + 1; k + 1 < h; ++k)
                for (size_t l = k + 1; l < h; ++l) {
                    std::array<Point2, 4> q{hull[i], hull[j], hull[k], hull[l]};
                    double a = std::abs(shoelace(q));
                    if (a > best_area) {
                        best_area = a;
                        best = {i, j, k, l};
                    }
                }

    std::array<Point2, 4> pts{hull[best[0]], hull[best[1]], hull[best[2]], hull[best[3]]};
    Point2 centroid{(pts[0].x + pts[1].x + pts[2].x + pts[3].x) / 4.0,
                    (pts[0].y + pts[1].y + pts[2].y + pts[3].y) / 4.0};
    // ascending atan2 with y down walks the corners clockwise on screen
    std::sort(pts.begin(), pts.end(), [&](const Point2& a, const Point2& b) {
        return std::atan2(a.y - centroid.y, a.x - centroid.x) <
               std::atan2(b.y - centroid.y, b.x - centroid.x);
    });
    // rotate so the top-left-most corner (min x+y) comes first
    size_t first = 0;
    for (size_t i = 1; i < 4; ++i)
        if (pts[i].x + pts[i].y < pts[first].x + pts[first].y) first = i;
    Quad q;
    for (size_t i = 0; i < 4; ++i) q.corners[i] = pts[(first + i) % 4];
    q.validate();
    return q;
}

namespace {

// Gaussian elimination with partial pivoting on an n x (n+1) augmented system.
bool solve_linear(std::vector<std::vector<double>>& a, std::vector<double>& out) {
    size_t n = a.size();
    for (size_t col = 0; col < n; ++col) {
        size_t pivot = col;
        for (size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        if (std::abs(a[pivot][col]) < 1e-14) return false;
        std::swap(a[col], a[pivot]);
        for (size_t r = col + 1; r < n; ++r) {
            double f = a[r][col] / a[col][col];
            for (size_t c = col; c <= n; ++c) a[r][c] -= f * a[col][c];
        }
    }
    out.assign(n, 0.0);
    for (size_t r = n; r-- > 0;) {
        double v = a[r][n];
        for (size_t c = r + 1; c < n; ++c) v -= a[r][c] * out[c];
        out[r] = v / a[r][r];
    }
    return true;
}

} // namespace

Homography solve_homography(const Quad& src, const Quad& dst) {
    src.validate();
    dst.validate();

    std::vector<std::vector<double>> sys(8, std::vector<double>(9, 0.0));
    for (int i = 0; i < 4; ++i) {
        const Point2& s = src.corners[i];
        const Point2& d = dst.corners[i];
        sys[2 * i] = {s.x, s.y, 1, 0, 0, 0, -d.x * s.x, -d.x * s.y, d.x};
        sys[2 * i + 1] = {0, 0, 0, s.x, s.y, 1, -d.y * s.x, -d.y * s.y, d.y};
    }
    std::vector<double> sol;
    if (!solve_linear(sys, sol))
        fail(ErrorKind::Degeneracy, "homography system is singular");

    Homography h = Homography::from_matrix(
        {{{sol[0], sol[1], sol[2]}, {sol[3], sol[4], sol[5]}, {sol[6], sol[7], 1.0}}});

    for (int i = 0; i < 4; ++i) {
        Point2 mapped = apply_homography(h, src.corners[i]);
        double rx = mapped.x - dst.corners[i].x;
        double ry = mapped.y - dst.corners[i].y;
        if (std::hypot(rx, ry) >= kCornerResidual)
            fail(ErrorKind::Degeneracy, "homography residual exceeds 1e-9 px");
    }
    return h;
}

Point2 apply_homography(const Homography& h, const Point2& p) {
    const auto& m = h.matrix();
    double w = m[2][0] * p.x + m[2][1] * p.y + 1.0;
    if (std::abs(w) <= kHorizonEps)
        fail(ErrorKind::Horizon, "point maps to the horizon (denominator ~ 0)");
    return {(m[0][0] * p.x + m[0][1] * p.y + m[0][2]) / w,
            (m[1][0] * p.x + m[1][1] * p.y + m[1][2]) / w};
}

raster::Raster warp_perspective(const raster::Raster& img, const Homography& h, int out_w,
                                int out_h) {
    img.validate();
    if (out_w < 1 || out_h < 1) fail(ErrorKind::Parameter, "warp output dims must be positive");
    Homography inv = h.inverse();
    raster::Raster out(out_w, out_h, img.channels);
    const auto& m = inv.matrix();
    for (int y = 0; y < out_h; ++y) {
        for (int x = 0; x < out_w; ++x) {
            double w = m[2][0] * x + m[2][1] * y + 1.0;
            if (std::abs(w) <= kHorizonEps) {
                for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = 1.0f;
                continue;
            }
            double sx = (m[0][0] * x + m[0][1] * y + m[0][2]) / w;
            double sy = (m[1][0] * x + m[1][1] * y + m[1][2]) / w;

            int x0 = int(std::floor(sx));
            int y0 = int(std::floor(sy));
            double fx = sx - x0;
            double fy = sy - y0;
            for (int c = 0; c < img.channels; ++c) {
                auto sample = [&](int px, int py) -> double {
                    if (px < 0 || px >= img.width || py < 0 || py >= img.height) return 1.0;
                    return img.at(px, py, c);
                };
                double v = (1 - fy) * ((1 - fx) * sample(x0, y0) + fx * sample(x0 + 1, y0)) +
                           fy * ((1 - fx) * sample(x0, y0 + 1) + fx * sample(x0 + 1, y0 + 1));
                out.at(x, y, c) = float(v);
            }
        }
    }
    return out;
}

Quad detect_paper_quad(const raster::Raster& img) {
    raster::Raster luma = raster::to_grayscale(img);
    raster::Raster normalized = raster::clahe(luma);
    raster::BinaryMask mask = raster::segment_background(normalized);

    std::vector<Point2> pts;
    pts.reserve(mask.count());
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            if (mask.at(x, y)) pts.push_back({double(x), double(y)});
    std::vector<Point2> hull = convex_hull(std::move(pts));
    if (hull.size() == 3)
        fail(ErrorKind::Degeneracy, "paper region is triangular, no quadrilateral fit");
    return simplify_to_quad(hull);
}

std::pair<int, int> rectified_size(const Quad& quad) {
    auto len = [](const Point2& a, const Point2& b) { return std::hypot(b.x - a.x, b.y - a.y); };
    const auto& c = quad.corners;
    double top = len(c[0], c[1]), bottom = len(c[3], c[2]);
    double left = len(c[0], c[3]), right = len(c[1], c[2]);
    // pixel extent is the center-to-center edge length plus one, so an
    // axis-aligned detection maps back onto the exact crop
    int w = std::max(2, int(std::lround(std::max(top, bottom))) + 1);
    int h = std::max(2, int(std::lround(std::max(left, right))) + 1);
    return {w, h};
}

raster::Raster rectify_with_quad(const raster::Raster& img, const Quad& quad) {
    auto [w, h] = rectified_size(quad);
    Quad dst;
    dst.corners = {Point2{0, 0}, Point2{double(w - 1), 0}, Point2{double(w - 1), double(h - 1)},
                   Point2{0, double(h - 1)}};
    Homography hom = solve_homography(quad, dst);
    return warp_perspective(img, hom, w, h);
}

raster::Raster rectify(const raster::Raster& img) {
    return rectify_with_quad(img, detect_paper_quad(img));
}

} // namespace ecg::geometry
