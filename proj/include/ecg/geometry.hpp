#pragma once

#include <array>
#include <vector>

#include "ecg/raster.hpp"

namespace ecg::geometry {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

// 3x3 projective map with h[2][2] normalized to 1 and |det| > 1e-12.
class Homography {
public:
    static Homography identity();
    // Normalizes by m[2][2]; throws Error(Degeneracy) if m[2][2] ~ 0 or the
    // matrix is not invertible.
    static Homography from_matrix(const std::array<std::array<double, 3>, 3>& m);

    double at(int r, int c) const { return h_[r][c]; }
    const std::array<std::array<double, 3>, 3>& matrix() const { return h_; }

    Homography inverse() const;
    double det() const;

private:
    Homography() = default;
    std::array<std::array<double, 3>, 3> h_{};
};

// compose(h2, h1): apply h1 first, then h2; result renormalized to h33 = 1.
Homography compose(const Homography& h2, const Homography& h1);

// Corners ordered top-left, top-right, bottom-right, bottom-left; strictly
// convex with positive area under that ordering (clockwise on screen with y
// pointing down).
struct Quad {
    std::array<Point2, 4> corners;

    void validate() const; // throws Error(Degeneracy) on violations
    double area() const;
};

// Convex hull in counter-clockwise order (mathematical convention, shoelace
// positive), collinear vertices stripped. Throws Error(Degeneracy) when all
// points are collinear.
std::vector<Point2> convex_hull(std::vector<Point2> points);

// The 4 hull vertices enclosing maximal quadrilateral area, found by
// exhausting all C(h,4) index subsets (ties broken by lexicographic subset
// order), then reordered to the Quad corner convention by angle about the
// centroid.
Quad simplify_to_quad(const std::vector<Point2>& hull);

// Unique H with h33 = 1 mapping each src corner onto its dst corner, from the
// 8x8 correspondence system solved by partial-pivot elimination. Residual per
// corner is verified < 1e-9 px.
Homography solve_homography(const Quad& src, const Quad& dst);

// (x', y') per the homogeneous-normalization formulas; throws Error(Horizon)
// when the denominator magnitude falls below 1e-12.
Point2 apply_homography(const Homography& h, const Point2& p);

// Inverse-mapped warp: each destination pixel center samples the source at
// H^-1 (x', y') with bilinear interpolation; out-of-bounds reads as 1.0
// (paper white).
raster::Raster warp_perspective(const raster::Raster& img, const Homography& h, int out_w,
                                int out_h);

// Paper-boundary detection: CLAHE on luma -> background segmentation ->
// convex hull of mask pixels -> maximal-area quadrilateral.
Quad detect_paper_quad(const raster::Raster& img);

// Destination rectangle for a detected quad: width = round(max(top, bottom)
// edge length) + 1 pixels, height = round(max(left, right) edge length) + 1
// (center-to-center distance plus one, the covered pixel extent).
std::pair<int, int> rectified_size(const Quad& quad);

// Full rectification: detect the paper quad and warp the original image onto
// the destination rectangle.
raster::Raster rectify(const raster::Raster& img);
raster::Raster rectify_with_quad(const raster::Raster& img, const Quad& quad);

} // namespace ecg::geometry
