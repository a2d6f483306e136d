#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ecg/rng.hpp"
#include "ecg/tensor.hpp"

namespace ecg::nn {

// ---------------------------------------------------------------------------
// architectures

enum class ArchKind { classifier, segmenter };

// Descriptor of the compact networks.
//
// classifier: per entry c in `channels`, a conv3x3(pad 1) -> ReLU ->
// maxpool2x2 block; then global average pooling and an affine head with
// `out_dim` logits. Input spatial dims must be divisible by 2^blocks.
//
// segmenter: `channels` = [d1, d2] encoder blocks (conv3x3 -> ReLU ->
// maxpool2x2), then two nearest-neighbor-upsample x2 + conv3x3 decoder blocks
// (d2 -> d1 with ReLU, d1 -> out_dim) and a sigmoid map output. Input spatial
// dims must be divisible by 4.
struct ArchDescriptor {
    ArchKind kind = ArchKind::classifier;
    int in_channels = 1;
    int in_h = 0;
    int in_w = 0;
    std::vector<int> channels;
    int out_dim = 5;
    // free-form metadata (config hash etc.); not part of compatibility
    std::map<std::string, std::string> meta;

    void validate() const;
    bool compatible_with(const ArchDescriptor& o) const; // ignores meta
    std::string canonical_json() const;
    static ArchDescriptor from_json_text(const std::string& text);

    // shapes of the parameter tensors in serialization order
    std::vector<std::vector<int>> tensor_shapes() const;
    int blocks() const { return int(channels.size()); }
};

ArchDescriptor compact_classifier(int in_h, int in_w);
ArchDescriptor compact_segmenter(int in_h, int in_w);

struct ModelParams {
    ArchDescriptor arch;
    std::vector<Tensor> tensors;

    void validate() const;
};

ModelParams init_params(const ArchDescriptor& arch, uint64_t seed);

// ---------------------------------------------------------------------------
// forward / backward

enum class Mode { train, eval };

// Opaque per-batch activation cache produced by model_forward in train mode.
struct ForwardCache {
    bool valid = false;
    Mode mode = Mode::eval;
    const ModelParams* params = nullptr;
    int batch = 0;
    // per-sample stacks of activations; layout documented in model.cpp
    std::vector<std::vector<Tensor>> acts;
    std::vector<std::vector<std::vector<int32_t>>> pool_idx;
    // filled by model_backward: gradient at the last conv's post-ReLU
    // activations (classifier only), one tensor per sample
    std::vector<Tensor> last_conv_grad;
};

struct BackwardResult {
    std::vector<Tensor> param_grads;
    Tensor input_grad;
};

// input: (N, C, H, W) or (C, H, W) for a single sample. classifier output
// (N, out_dim) logits; segmenter output (N, out_dim, H, W) sigmoid map.
Tensor model_forward(const ModelParams& params, const Tensor& input, Mode mode,
                     ForwardCache* cache = nullptr);

// Exact gradients of the forward computation. Per-sample gradients are
// accumulated into param_grads in sample index order, so results do not
// depend on the number of worker threads.
BackwardResult model_backward(const ModelParams& params, ForwardCache& cache,
                              const Tensor& output_grad);

// Post-ReLU activation of the last conv block, before its pool (classifier
// introspection for class-activation maps).
Tensor last_conv_activation(const ForwardCache& cache, int sample);

// Logits recomputed from a last-conv activation tensor (c_B, h, w): maxpool
// -> GAP -> head. Independent entry point used to sanity-check activation
// gradients.
Tensor classifier_tail_logits(const ModelParams& params, const Tensor& last_conv_act);

// ---------------------------------------------------------------------------
// losses (sums accumulate in double, sequential element order)

// Focal Tversky loss, binary single-foreground-class case:
// TI = (sum p*g + eps) / (sum p*g + alpha*sum p*(1-g) + beta*sum (1-p)*g + eps),
// loss = (1 - TI)^(1/gamma).
double ftl(const Tensor& pred, const Tensor& truth, double alpha = 1.0, double beta = 10.0,
           double gamma = 0.75, double eps = 1e-6);
Tensor ftl_grad(const Tensor& pred, const Tensor& truth, double alpha = 1.0, double beta = 10.0,
                double gamma = 0.75, double eps = 1e-6);

// Mean over all elements of the numerically stable rearrangement
// max(z,0) - z*y + log(1 + exp(-|z|)).
double bce_logits(const Tensor& logits, const Tensor& labels);
Tensor bce_grad(const Tensor& logits, const Tensor& labels); // (sigmoid(z)-y)/N

double sigmoid(double z);

// ---------------------------------------------------------------------------
// training configuration and optimizer

struct PixelDropCfg {
    double apply_prob = 0.8;
    double per_pixel_prob = 0.01;
};

struct RotationCfg {
    double limit_deg = 10.0;
    double apply_prob = 0.5;
};

struct TrainConfig {
    int batch_size = 16;
    int epochs = 100;
    double lr0 = 0.001;
    double lr_min = 0.0;
    PixelDropCfg pixel_drop;
    RotationCfg rotation;
    uint64_t seed = 0;

    void validate() const;
};

// lr_min + 0.5*(lr0 - lr_min)*(1 + cos(pi*t/epochs)); t in [0, epochs].
double cosine_lr(int t, const TrainConfig& cfg);

// theta -= lr * grad, plain SGD.
void sgd_step(ModelParams& params, const std::vector<Tensor>& grads, double lr);

// ---------------------------------------------------------------------------
// augmentations (spec'd semantics of the Table-I settings)

// With probability apply_prob, zeroes each element independently with
// probability per_pixel_prob; otherwise identity.
Tensor pixel_dropout(const Tensor& img, double apply_prob, double per_pixel_prob,
                     rng::Xoshiro256pp& gen);

// With probability apply_prob, rotates (C, H, W) about the image center by a
// uniform angle in [-limit_deg, limit_deg], bilinear sampling, fill 0.
Tensor random_rotation(const Tensor& img, double limit_deg, double apply_prob,
                       rng::Xoshiro256pp& gen);

// Deterministic core of random_rotation: rotate (C, H, W) about the image
// center by angle_deg, bilinear, fill 0.
Tensor rotate_bilinear(const Tensor& img, double angle_deg);

// ---------------------------------------------------------------------------
// weight files ("ECGW": magic, u32 LE version, u32 LE descriptor length,
// canonical descriptor JSON, then tensors as little-endian f32 in descriptor
// order)

void save_weights(const ModelParams& params, const std::string& path);
ModelParams load_weights(const std::string& path);

} // namespace ecg::nn
