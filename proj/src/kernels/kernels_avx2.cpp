// AVX2 variants. Compiled with -mavx2 only for this translation unit; the
// dispatcher never calls these unless the CPU reports AVX2.
#include "ecg/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>

namespace ecg::kernels::avx2 {

void axpy(size_t n, float a, const float* x, float* y) {
    size_t head = n & ~size_t(7);
    __m256 va = _mm256_set1_ps(a);
    for (size_t i = 0; i < head; i += 8) {
        __m256 vx = _mm256_loadu_ps(x + i);
        __m256 vy = _mm256_loadu_ps(y + i);
        vy = _mm256_add_ps(vy, _mm256_mul_ps(va, vx));
        _mm256_storeu_ps(y + i, vy);
    }
    for (size_t i = head; i < n; ++i) y[i] = y[i] + a * x[i];
}

void add(size_t n, const float* x, const float* y, float* out) {
    size_t head = n & ~size_t(7);
    for (size_t i = 0; i < head; i += 8) {
        _mm256_storeu_ps(out + i, _mm256_add_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
    }
    for (size_t i = head; i < n; ++i) out[i] = x[i] + y[i];
}

void mul(size_t n, const float* x, const float* y, float* out) {
    size_t head = n & ~size_t(7);
    for (size_t i = 0; i < head; i += 8) {
        _mm256_storeu_ps(out + i, _mm256_mul_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
    }
    for (size_t i = head; i < n; ++i) out[i] = x[i] * y[i];
}

void affine(size_t n, float a, float b, const float* x, float* out) {
    size_t head = n & ~size_t(7);
    __m256 va = _mm256_set1_ps(a);
    __m256 vb = _mm256_set1_ps(b);
    for (size_t i = 0; i < head; i += 8) {
        _mm256_storeu_ps(out + i, _mm256_add_ps(_mm256_mul_ps(va, _mm256_loadu_ps(x + i)), vb));
    }
    for (size_t i = head; i < n; ++i) out[i] = a * x[i] + b;
}

void one_minus(size_t n, const float* x, float* out) {
    size_t head = n & ~size_t(7);
    __m256 one = _mm256_set1_ps(1.0f);
    for (size_t i = 0; i < head; i += 8) {
        _mm256_storeu_ps(out + i, _mm256_sub_ps(one, _mm256_loadu_ps(x + i)));
    }
    for (size_t i = head; i < n; ++i) out[i] = 1.0f - x[i];
}

void relu(size_t n, const float* x, float* out) {
    size_t head = n & ~size_t(7);
    __m256 zero = _mm256_setzero_ps();
    for (size_t i = 0; i < head; i += 8) {
        _mm256_storeu_ps(out + i, _mm256_max_ps(_mm256_loadu_ps(x + i), zero));
    }
    for (size_t i = head; i < n; ++i) out[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_backward(size_t n, const float* act, const float* g, float* out) {
    size_t head = n & ~size_t(7);
    __m256 zero = _mm256_setzero_ps();
    for (size_t i = 0; i < head; i += 8) {
        __m256 mask = _mm256_cmp_ps(_mm256_loadu_ps(act + i), zero, _CMP_GT_OQ);
        _mm256_storeu_ps(out + i, _mm256_and_ps(_mm256_loadu_ps(g + i), mask));
    }
    for (size_t i = head; i < n; ++i) out[i] = act[i] > 0.0f ? g[i] : 0.0f;
}

// Reductions: a vector accumulator summed lane 0..7, then the scalar tail.
// The order differs from the scalar path, so callers treat cross-level
// equality as approximate.
float dot(size_t n, const float* x, const float* y) {
    size_t head = n & ~size_t(7);
    __m256 acc = _mm256_setzero_ps();
    for (size_t i = 0; i < head; i += 8) {
        acc = _mm256_add_ps(acc, _mm256_mul_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
    }
    alignas(32) float lanes[8];
    _mm256_store_ps(lanes, acc);
    float r = 0.0f;
    for (float lane : lanes) r += lane;
    for (size_t i = head; i < n; ++i) r += x[i] * y[i];
    return r;
}

float sum(size_t n, const float* x) {
    size_t head = n & ~size_t(7);
    __m256 acc = _mm256_setzero_ps();
    for (size_t i = 0; i < head; i += 8) {
        acc = _mm256_add_ps(acc, _mm256_loadu_ps(x + i));
    }
    alignas(32) float lanes[8];
    _mm256_store_ps(lanes, acc);
    float r = 0.0f;
    for (float lane : lanes) r += lane;
    for (size_t i = head; i < n; ++i) r += x[i];
    return r;
}

} // namespace ecg::kernels::avx2

#endif // x86-64
