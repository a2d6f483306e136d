#include <cmath>

#include "ecg/kernels.hpp"
#include "ecg/nn.hpp"

namespace ecg::nn {

namespace {

struct TverskyTerms {
    double tp = 0.0; // sum p*g
    double fp = 0.0; // sum p*(1-g)
    double fn = 0.0; // sum (1-p)*g
};

TverskyTerms tversky_terms(const Tensor& pred, const Tensor& truth) {
    require_same_shape(pred, truth, "ftl");
    TverskyTerms t;
    for (size_t i = 0; i < pred.numel(); ++i) {
        double p = pred.data[i];
        double g = truth.data[i];
        t.tp += p * g;
        t.fp += p * (1.0 - g);
        t.fn += (1.0 - p) * g;
    }
    return t;
}

} // namespace

double ftl(const Tensor& pred, const Tensor& truth, double alpha, double beta, double gamma,
           double eps) {
    TverskyTerms t = tversky_terms(pred, truth);
    double ti = (t.tp + eps) / (t.tp + alpha * t.fp + beta * t.fn + eps);
    double base = 1.0 - ti;
    if (base < 0.0) base = 0.0;
    return std::pow(base, 1.0 / gamma);
}

Tensor ftl_grad(const Tensor& pred, const Tensor& truth, double alpha, double beta, double gamma,
                double eps) {
    if (!(gamma > 0.0)) fail(ErrorKind::Parameter, "ftl_grad: gamma must be positive");
    TverskyTerms t = tversky_terms(pred, truth);
    double num = t.tp + eps;
    double den = t.tp + alpha * t.fp + beta * t.fn + eps;
    double ti = num / den;
    double base = 1.0 - ti;
    if (base < 0.0) base = 0.0;
    double expo = 1.0 / gamma - 1.0;
    // d loss / d TI = -(1/gamma) * (1-TI)^(1/gamma - 1)
    double floor = expo < 0.0 ? 1e-12 : 0.0;
    double dloss_dti = -(1.0 / gamma) * std::pow(std::max(base, floor), expo);

    Tensor grad(pred.shape);
    for (size_t i = 0; i < pred.numel(); ++i) {
        double g = truth.data[i];
        double dnum = g;
        double dden = g + alpha * (1.0 - g) - beta * g;
        double dti = (dnum * den - num * dden) / (den * den);
        grad.data[i] = float(dloss_dti * dti);
    }
    return grad;
}

double bce_logits(const Tensor& logits, const Tensor& labels) {
    require_same_shape(logits, labels, "bce_logits");
    double acc = 0.0;
    for (size_t i = 0; i < logits.numel(); ++i) {
        double z = logits.data[i];
        double y = labels.data[i];
        acc += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    }
    return acc / double(logits.numel());
}

Tensor bce_grad(const Tensor& logits, const Tensor& labels) {
    require_same_shape(logits, labels, "bce_grad");
    Tensor grad(logits.shape);
    double inv_n = 1.0 / double(logits.numel());
    for (size_t i = 0; i < logits.numel(); ++i)
        grad.data[i] = float((sigmoid(logits.data[i]) - labels.data[i]) * inv_n);
    return grad;
}

void TrainConfig::validate() const {
    if (batch_size < 1) fail(ErrorKind::Parameter, "batch_size must be >= 1");
    // epochs == 0 is allowed by the training entry points (no-op run); the
    // scheduler itself needs epochs >= 1
    if (epochs < 0) fail(ErrorKind::Parameter, "epochs must be >= 0");
    if (!(lr0 > lr_min) || lr_min < 0.0)
        fail(ErrorKind::Parameter, "learning rates must satisfy lr0 > lr_min >= 0");
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob(pixel_drop.apply_prob) || !prob(pixel_drop.per_pixel_prob) ||
        !prob(rotation.apply_prob))
        fail(ErrorKind::Parameter, "probabilities must lie in [0,1]");
    if (rotation.limit_deg < 0.0) fail(ErrorKind::Parameter, "rotation limit must be >= 0");
}

double cosine_lr(int t, const TrainConfig& cfg) {
    cfg.validate();
    if (cfg.epochs < 1) fail(ErrorKind::Parameter, "cosine_lr: epochs must be >= 1");
    if (t < 0 || t > cfg.epochs) fail(ErrorKind::Parameter, "cosine_lr: epoch out of range");
    return cfg.lr_min +
           0.5 * (cfg.lr0 - cfg.lr_min) *
               (1.0 + std::cos(3.14159265358979323846 * double(t) / double(cfg.epochs)));
}

void sgd_step(ModelParams& params, const std::vector<Tensor>& grads, double lr) {
    if (grads.size() != params.tensors.size())
        fail(ErrorKind::Shape, "sgd_step: gradient count mismatch");
    for (size_t i = 0; i < grads.size(); ++i) {
        if (grads[i].shape != params.tensors[i].shape)
            fail(ErrorKind::Shape, "sgd_step: gradient shape mismatch");
        kernels::axpy(grads[i].numel(), float(-lr), grads[i].ptr(), params.tensors[i].ptr());
    }
}

} // namespace ecg::nn
