#include <algorithm>
#include <cmath>

#include "ecg/explain.hpp"

namespace ecg::explain {

namespace {

constexpr double kDenomGuard = 1e-8;

// piecewise-linear blue (0) -> green (0.5) -> red (1)
void ramp(double h, float& r, float& g, float& b) {
    if (h < 0.5) {
        double t = h * 2.0;
        r = 0.0f;
        g = float(t);
        b = float(1.0 - t);
    } else {
        double t = (h - 0.5) * 2.0;
        r = float(t);
        g = float(1.0 - t);
        b = 0.0f;
    }
}

} // namespace

CamGradients cam_gradients(const nn::ModelParams& params, const nn::Tensor& input,
                           int class_index) {
    if (params.arch.kind != nn::ArchKind::classifier)
        fail(ErrorKind::Compatibility, "cam_gradients: classifier weights required");
    if (class_index < 0 || class_index >= params.arch.out_dim)
        fail(ErrorKind::Parameter, "cam_gradients: class index out of range");
    if (input.shape != std::vector<int>{params.arch.in_channels, params.arch.in_h, params.arch.in_w})
        fail(ErrorKind::Compatibility, "cam_gradients: input does not match the model descriptor");

    nn::ForwardCache cache;
    nn::model_forward(params, input, nn::Mode::train, &cache);

    nn::Tensor onehot(std::vector<int>{1, params.arch.out_dim});
    onehot.data[size_t(class_index)] = 1.0f;
    nn::model_backward(params, cache, onehot);

    CamGradients out;
    out.activations = nn::last_conv_activation(cache, 0);
    out.gradients = cache.last_conv_grad[0];
    return out;
}

Heatmap xgradcam(const nn::ModelParams& params, const nn::Tensor& input, int class_index) {
    CamGradients cg = cam_gradients(params, input, class_index);
    const nn::Tensor& A = cg.activations;
    const nn::Tensor& G = cg.gradients;
    int C = A.dim(0), h = A.dim(1), w = A.dim(2);
    size_t plane = size_t(h) * w;

    std::vector<double> weights(static_cast<size_t>(C));
    for (int c = 0; c < C; ++c) {
        double ga = 0.0, asum = 0.0;
        const float* ap = A.ptr() + size_t(c) * plane;
        const float* gp = G.ptr() + size_t(c) * plane;
        for (size_t i = 0; i < plane; ++i) {
            ga += double(gp[i]) * ap[i];
            asum += ap[i];
        }
        weights[size_t(c)] = ga / (asum + kDenomGuard);
    }

    std::vector<double> coarse(plane, 0.0);
    for (int c = 0; c < C; ++c) {
        const float* ap = A.ptr() + size_t(c) * plane;
        for (size_t i = 0; i < plane; ++i) coarse[i] += weights[size_t(c)] * ap[i];
    }
    double max_v = 0.0;
    for (double& v : coarse) {
        v = std::max(v, 0.0);
        max_v = std::max(max_v, v);
    }

    Heatmap heat;
    heat.source_class = class_index;
    heat.map = raster::Raster(params.arch.in_w, params.arch.in_h, 1);
    int H = params.arch.in_h, W = params.arch.in_w;
    for (int y = 0; y < H; ++y) {
        double sy = (double(y) + 0.5) / H * h - 0.5;
        int y0 = std::clamp(int(std::floor(sy)), 0, h - 1);
        int y1 = std::min(y0 + 1, h - 1);
        double fy = std::clamp(sy - y0, 0.0, 1.0);
        for (int x = 0; x < W; ++x) {
            double sx = (double(x) + 0.5) / W * w - 0.5;
            int x0 = std::clamp(int(std::floor(sx)), 0, w - 1);
            int x1 = std::min(x0 + 1, w - 1);
            double fx = std::clamp(sx - x0, 0.0, 1.0);
            double v = (1 - fy) * ((1 - fx) * coarse[size_t(y0) * w + x0] +
                                   fx * coarse[size_t(y0) * w + x1]) +
                       fy * ((1 - fx) * coarse[size_t(y1) * w + x0] +
                             fx * coarse[size_t(y1) * w + x1]);
            heat.map.at(x, y) = max_v > 0.0 ? float(v / max_v) : 0.0f;
        }
    }
    return heat;
}

raster::Raster overlay(const raster::Raster& base, const Heatmap& heat, double alpha) {
    base.validate();
    heat.map.validate();
    if (alpha < 0.0 || alpha > 1.0) fail(ErrorKind::Parameter, "overlay: alpha must lie in [0,1]");
    if (base.width != heat.map.width || base.height != heat.map.height)
        fail(ErrorKind::Shape, "overlay: base and heatmap dimensions differ");

    raster::Raster gray = raster::to_grayscale(base);
    raster::Raster out(base.width, base.height, 3);
    for (int y = 0; y < base.height; ++y) {
        for (int x = 0; x < base.width; ++x) {
            float r, g, b;
            ramp(heat.map.at(x, y), r, g, b);
            float base_v = gray.at(x, y);
            out.at(x, y, 0) = float((1.0 - alpha) * base_v + alpha * r);
            out.at(x, y, 1) = float((1.0 - alpha) * base_v + alpha * g);
            out.at(x, y, 2) = float((1.0 - alpha) * base_v + alpha * b);
        }
    }
    return out;
}

} // namespace ecg::explain
