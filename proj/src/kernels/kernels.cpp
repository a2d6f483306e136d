#include "ecg/kernels.hpp"

#include "ecg/error.hpp"

namespace ecg::kernels {

#if defined(__x86_64__) || defined(_M_X64)
#define ECG_HAVE_AVX2_TU 1
namespace avx2 {
void axpy(size_t n, float a, const float* x, float* y);
void add(size_t n, const float* x, const float* y, float* out);
void mul(size_t n, const float* x, const float* y, float* out);
void affine(size_t n, float a, float b, const float* x, float* out);
void one_minus(size_t n, const float* x, float* out);
void relu(size_t n, const float* x, float* out);
void relu_backward(size_t n, const float* act, const float* g, float* out);
float dot(size_t n, const float* x, const float* y);
float sum(size_t n, const float* x);
} // namespace avx2
#endif

namespace {

struct Table {
    void (*axpy)(size_t, float, const float*, float*);
    void (*add)(size_t, const float*, const float*, float*);
    void (*mul)(size_t, const float*, const float*, float*);
    void (*affine)(size_t, float, float, const float*, float*);
    void (*one_minus)(size_t, const float*, float*);
    void (*relu)(size_t, const float*, float*);
    void (*relu_backward)(size_t, const float*, const float*, float*);
    float (*dot)(size_t, const float*, const float*);
    float (*sum)(size_t, const float*);
};

constexpr Table kScalarTable = {
    scalar::axpy, scalar::add,  scalar::mul, scalar::affine, scalar::one_minus,
    scalar::relu, scalar::relu_backward, scalar::dot, scalar::sum,
};

#ifdef ECG_HAVE_AVX2_TU
constexpr Table kAvx2Table = {
    avx2::axpy, avx2::add,  avx2::mul, avx2::affine, avx2::one_minus,
    avx2::relu, avx2::relu_backward, avx2::dot, avx2::sum,
};
#endif

bool cpu_has_avx2() {
#ifdef ECG_HAVE_AVX2_TU
    return __builtin_cpu_supports("avx2") != 0;
#else
    return false;
#endif
}

Level detect_best() {
    return cpu_has_avx2() ? Level::avx2 : Level::scalar;
}

Level g_level = detect_best();

const Table& table_for(Level level) {
#ifdef ECG_HAVE_AVX2_TU
    if (level == Level::avx2) return kAvx2Table;
#endif
    (void)level;
    return kScalarTable;
}

const Table* g_table = &table_for(g_level);

} // namespace

Level active_level() { return g_level; }

const char* level_name(Level level) {
    switch (level) {
        case Level::scalar: return "scalar";
        case Level::avx2: return "avx2";
    }
    return "?";
}

bool supported(Level level) {
    if (level == Level::scalar) return true;
    return cpu_has_avx2();
}

void force_level(Level level) {
    if (!supported(level))
        fail(ErrorKind::Parameter,
             std::string("kernel level not supported on this machine: ") + level_name(level));
    g_level = level;
    g_table = &table_for(level);
}

void reset_level() { force_level(detect_best()); }

void axpy(size_t n, float a, const float* x, float* y) { g_table->axpy(n, a, x, y); }
void add(size_t n, const float* x, const float* y, float* out) { g_table->add(n, x, y, out); }
void mul(size_t n, const float* x, const float* y, float* out) { g_table->mul(n, x, y, out); }
void affine(size_t n, float a, float b, const float* x, float* out) { g_table->affine(n, a, b, x, out); }
void one_minus(size_t n, const float* x, float* out) { g_table->one_minus(n, x, out); }
void relu(size_t n, const float* x, float* out) { g_table->relu(n, x, out); }
void relu_backward(size_t n, const float* act, const float* g, float* out) { g_table->relu_backward(n, act, g, out); }
float dot(size_t n, const float* x, const float* y) { return g_table->dot(n, x, y); }
float sum(size_t n, const float* x) { return g_table->sum(n, x); }

} // namespace ecg::kernels
