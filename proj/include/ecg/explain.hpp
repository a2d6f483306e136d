#pragma once

#include "ecg/nn.hpp"
#include "ecg/raster.hpp"

namespace ecg::explain {

struct Heatmap {
    raster::Raster map; // single channel, input resolution, max-normalized
    int source_class = 0;
};

// Introspection pair for the CAM computation: post-ReLU last-conv activations
// A and the gradient of logit[class_index] with respect to them.
struct CamGradients {
    nn::Tensor activations;
    nn::Tensor gradients;
};

CamGradients cam_gradients(const nn::ModelParams& params, const nn::Tensor& input,
                           int class_index);

// XGrad-CAM: channel weights w_k = sum_i(G_i * A_i) / (sum_j A_j + 1e-8),
// map = relu(sum_k w_k A^k) bilinearly upsampled to the input size, then
// max-normalized (an identically zero map stays zero).
Heatmap xgradcam(const nn::ModelParams& params, const nn::Tensor& input, int class_index);

// Heat through a fixed blue->green->red ramp, alpha-blended over the
// grayscale base; channels=3 output.
raster::Raster overlay(const raster::Raster& base, const Heatmap& heat, double alpha);

} // namespace ecg::explain
