#pragma once

#include <cstddef>
#include <string>

// Data-parallel float kernels backing the hot loops (convolutions, image
// arithmetic, loss reductions). Every kernel has a scalar reference
// implementation and, on x86-64 with AVX2, a vector implementation chosen at
// runtime. Elementwise kernels are bit-identical across implementations: each
// output element is produced by the same sequence of IEEE single-precision
// operations (multiply then add, no FMA). Reductions accumulate in an
// implementation-defined order and are only equivalent up to rounding.
namespace ecg::kernels {

enum class Level {
    scalar,
    avx2,
};

// Level selected for this process (highest supported unless forced).
Level active_level();
const char* level_name(Level level);

// Force a specific level; throws Error(Parameter) if unsupported on this
// machine. Used by the equivalence tests.
void force_level(Level level);
void reset_level();

bool supported(Level level);

// y[i] += a * x[i]
void axpy(size_t n, float a, const float* x, float* y);
// out[i] = x[i] + y[i]
void add(size_t n, const float* x, const float* y, float* out);
// out[i] = x[i] * y[i]
void mul(size_t n, const float* x, const float* y, float* out);
// out[i] = a * x[i] + b
void affine(size_t n, float a, float b, const float* x, float* out);
// out[i] = 1 - x[i]
void one_minus(size_t n, const float* x, float* out);
// out[i] = max(x[i], 0)
void relu(size_t n, const float* x, float* out);
// out[i] = act[i] > 0 ? g[i] : 0
void relu_backward(size_t n, const float* act, const float* g, float* out);

// sum_i x[i] * y[i]
float dot(size_t n, const float* x, const float* y);
// sum_i x[i]
float sum(size_t n, const float* x);

// Scalar reference entry points, callable directly regardless of the active
// level. The dispatch layer and the equivalence tests are built on these.
namespace scalar {
void axpy(size_t n, float a, const float* x, float* y);
void add(size_t n, const float* x, const float* y, float* out);
void mul(size_t n, const float* x, const float* y, float* out);
void affine(size_t n, float a, float b, const float* x, float* out);
void one_minus(size_t n, const float* x, float* out);
void relu(size_t n, const float* x, float* out);
void relu_backward(size_t n, const float* act, const float* g, float* out);
float dot(size_t n, const float* x, const float* y);
float sum(size_t n, const float* x);
} // namespace scalar

} // namespace ecg::kernels
