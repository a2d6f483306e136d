#include <cmath>

#include "ecg/nn.hpp"

namespace ecg::nn {

Tensor pixel_dropout(const Tensor& img, double apply_prob, double per_pixel_prob,
                     rng::Xoshiro256pp& gen) {
    if (apply_prob < 0 || apply_prob > 1 || per_pixel_prob < 0 || per_pixel_prob > 1)
        fail(ErrorKind::Parameter, "pixel_dropout: probabilities must lie in [0,1]");
    Tensor out = img;
    if (gen.uniform() >= apply_prob) return out;
    for (float& v : out.data)
        if (gen.uniform() < per_pixel_prob) v = 0.0f;
    return out;
}

Tensor random_rotation(const Tensor& img, double limit_deg, double apply_prob,
                       rng::Xoshiro256pp& gen) {
    if (limit_deg < 0) fail(ErrorKind::Parameter, "random_rotation: limit must be >= 0");
    if (apply_prob < 0 || apply_prob > 1)
        fail(ErrorKind::Parameter, "random_rotation: apply_prob must lie in [0,1]");
    if (gen.uniform() >= apply_prob) return img;
    return rotate_bilinear(img, gen.uniform(-limit_deg, limit_deg));
}

Tensor rotate_bilinear(const Tensor& img, double angle_deg) {
    if (img.rank() != 3) fail(ErrorKind::Shape, "rotate_bilinear: expects a (C,H,W) tensor");
    if (angle_deg == 0.0) return img;
    double angle = angle_deg;

    int C = img.dim(0), H = img.dim(1), W = img.dim(2);
    double rad = angle * 3.14159265358979323846 / 180.0;
    double ca = std::cos(rad), sa = std::sin(rad);
    double cx = (W - 1) * 0.5, cy = (H - 1) * 0.5;

    Tensor out(img.shape);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            // inverse rotation of the destination pixel center
            double dx = x - cx, dy = y - cy;
            double sx = ca * dx + sa * dy + cx;
            double sy = -sa * dx + ca * dy + cy;
            int x0 = int(std::floor(sx)), y0 = int(std::floor(sy));
            double fx = sx - x0, fy = sy - y0;
            for (int c = 0; c < C; ++c) {
                const float* plane = img.ptr() + size_t(c) * H * W;
                auto tap = [&](int px, int py) -> double {
                    if (px < 0 || px >= W || py < 0 || py >= H) return 0.0;
                    return plane[size_t(py) * W + px];
                };
                double v = (1 - fy) * ((1 - fx) * tap(x0, y0) + fx * tap(x0 + 1, y0)) +
                           fy * ((1 - fx) * tap(x0, y0 + 1) + fx * tap(x0 + 1, y0 + 1));
                out.data[(size_t(c) * H + y) * W + x] = float(v);
            }
        }
    }
    return out;
}

} // namespace ecg::nn
