#include "ecg/kernels.hpp"

namespace ecg::kernels::scalar {

void axpy(size_t n, float a, const float* x, float* y) {
    for (size_t i = 0; i < n; ++i) y[i] = y[i] + a * x[i];
}

void add(size_t n, const float* x, const float* y, float* out) {
    for (size_t i = 0; i < n; ++i) out[i] = x[i] + y[i];
}

void mul(size_t n, const float* x, const float* y, float* out) {
    for (size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

void affine(size_t n, float a, float b, const float* x, float* out) {
    for (size_t i = 0; i < n; ++i) out[i] = a * x[i] + b;
}

void one_minus(size_t n, const float* x, float* out) {
    for (size_t i = 0; i < n; ++i) out[i] = 1.0f - x[i];
}

void relu(size_t n, const float* x, float* out) {
    for (size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_backward(size_t n, const float* act, const float* g, float* out) {
    for (size_t i = 0; i < n; ++i) out[i] = act[i] > 0.0f ? g[i] : 0.0f;
}

float dot(size_t n, const float* x, const float* y) {
    float acc = 0.0f;
    for (size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

float sum(size_t n, const float* x) {
    float acc = 0.0f;
    for (size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

} // namespace ecg::kernels::scalar
