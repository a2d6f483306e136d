#pragma once

#include <cstddef>
#include <numeric>
#include <vector>

#include "ecg/error.hpp"

namespace ecg::nn {

// Dense row-major float tensor.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s, float fill = 0.0f) : shape(std::move(s)) {
        data.assign(numel_of(shape), fill);
    }

    static size_t numel_of(const std::vector<int>& s) {
        size_t n = 1;
        for (int d : s) {
            if (d <= 0) fail(ErrorKind::Shape, "tensor dimensions must be positive");
            n *= size_t(d);
        }
        return n;
    }

    size_t numel() const { return data.size(); }
    int dim(int i) const { return shape[size_t(i)]; }
    int rank() const { return int(shape.size()); }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    float* ptr() { return data.data(); }
    const float* ptr() const { return data.data(); }
};

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b)) fail(ErrorKind::Shape, std::string(what) + ": tensor shapes differ");
}

} // namespace ecg::nn
