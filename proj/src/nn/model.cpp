#include <cmath>
#include <cstring>

#include <nlohmann/json.hpp>

#include "ecg/kernels.hpp"
#include "ecg/nn.hpp"
#include "ecg/parallel.hpp"

namespace ecg::nn {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// descriptor

void ArchDescriptor::validate() const {
    if (in_channels != 1 && in_channels != 3)
        fail(ErrorKind::Format, "descriptor: in_channels must be 1 or 3");
    if (in_h <= 0 || in_w <= 0) fail(ErrorKind::Format, "descriptor: input dims must be positive");
    if (channels.empty()) fail(ErrorKind::Format, "descriptor: channels must be non-empty");
    for (int c : channels)
        if (c <= 0) fail(ErrorKind::Format, "descriptor: channel counts must be positive");
    if (out_dim <= 0) fail(ErrorKind::Format, "descriptor: out_dim must be positive");
    if (kind == ArchKind::classifier) {
        int div = 1 << blocks();
        if (in_h % div != 0 || in_w % div != 0)
            fail(ErrorKind::Format, "descriptor: classifier input dims must divide by 2^blocks");
    } else {
        if (channels.size() != 2)
            fail(ErrorKind::Format, "descriptor: segmenter takes exactly 2 encoder channels");
        if (in_h % 4 != 0 || in_w % 4 != 0)
            fail(ErrorKind::Format, "descriptor: segmenter input dims must divide by 4");
    }
}

bool ArchDescriptor::compatible_with(const ArchDescriptor& o) const {
    return kind == o.kind && in_channels == o.in_channels && in_h == o.in_h && in_w == o.in_w &&
           channels == o.channels && out_dim == o.out_dim;
}

std::string ArchDescriptor::canonical_json() const {
    json j;
    j["kind"] = kind == ArchKind::classifier ? "classifier" : "segmenter";
    j["in_channels"] = in_channels;
    j["in_h"] = in_h;
    j["in_w"] = in_w;
    j["channels"] = channels;
    j["out_dim"] = out_dim;
    json m = json::object();
    for (const auto& [k, v] : meta) m[k] = v; // std::map keeps keys sorted
    j["meta"] = m;
    return j.dump();
}

ArchDescriptor ArchDescriptor::from_json_text(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        fail(ErrorKind::Format, "descriptor is not a JSON object");
    static const char* known[] = {"kind", "in_channels", "in_h", "in_w", "channels", "out_dim", "meta"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known) ok = ok || it.key() == k;
        if (!ok) fail(ErrorKind::Format, "descriptor: unknown key '" + it.key() + "'");
    }
    for (const char* k : known)
        if (!j.contains(k)) fail(ErrorKind::Format, std::string("descriptor: missing key '") + k + "'");

    ArchDescriptor d;
    std::string kind = j["kind"].get<std::string>();
    if (kind == "classifier") d.kind = ArchKind::classifier;
    else if (kind == "segmenter") d.kind = ArchKind::segmenter;
    else fail(ErrorKind::Format, "descriptor: unknown kind '" + kind + "'");
    if (!j["in_channels"].is_number_integer() || !j["in_h"].is_number_integer() ||
        !j["in_w"].is_number_integer() || !j["out_dim"].is_number_integer() ||
        !j["channels"].is_array() || !j["meta"].is_object())
        fail(ErrorKind::Format, "descriptor: field has wrong type");
    d.in_channels = j["in_channels"].get<int>();
    d.in_h = j["in_h"].get<int>();
    d.in_w = j["in_w"].get<int>();
    d.out_dim = j["out_dim"].get<int>();
    for (const auto& c : j["channels"]) {
        if (!c.is_number_integer()) fail(ErrorKind::Format, "descriptor: channels must be integers");
        d.channels.push_back(c.get<int>());
    }
    for (auto it = j["meta"].begin(); it != j["meta"].end(); ++it) {
        if (!it.value().is_string()) fail(ErrorKind::Format, "descriptor: meta values must be strings");
        d.meta[it.key()] = it.value().get<std::string>();
    }
    d.validate();
    return d;
}

std::vector<std::vector<int>> ArchDescriptor::tensor_shapes() const {
    std::vector<std::vector<int>> shapes;
    int prev = in_channels;
    for (int c : channels) {
        shapes.push_back({c, prev, 3, 3});
        shapes.push_back({c});
        prev = c;
    }
    if (kind == ArchKind::classifier) {
        shapes.push_back({out_dim, channels.back()});
        shapes.push_back({out_dim});
    } else {
        shapes.push_back({channels[0], channels[1], 3, 3});
        shapes.push_back({channels[0]});
        shapes.push_back({out_dim, channels[0], 3, 3});
        shapes.push_back({out_dim});
    }
    return shapes;
}

ArchDescriptor compact_classifier(int in_h, int in_w) {
    ArchDescriptor d;
    d.kind = ArchKind::classifier;
    d.in_channels = 1;
    d.in_h = in_h;
    d.in_w = in_w;
    d.channels = {8, 16, 32, 64};
    d.out_dim = 5;
    d.validate();
    return d;
}

ArchDescriptor compact_segmenter(int in_h, int in_w) {
    ArchDescriptor d;
    d.kind = ArchKind::segmenter;
    d.in_channels = 1;
    d.in_h = in_h;
    d.in_w = in_w;
    d.channels = {8, 16};
    d.out_dim = 1;
    d.validate();
    return d;
}

void ModelParams::validate() const {
    arch.validate();
    auto shapes = arch.tensor_shapes();
    if (tensors.size() != shapes.size())
        fail(ErrorKind::Format, "model params: tensor count does not match descriptor");
    for (size_t i = 0; i < shapes.size(); ++i)
        if (tensors[i].shape != shapes[i])
            fail(ErrorKind::Format, "model params: tensor shape does not match descriptor");
}

ModelParams init_params(const ArchDescriptor& arch, uint64_t seed) {
    arch.validate();
    ModelParams p;
    p.arch = arch;
    auto shapes = arch.tensor_shapes();
    for (size_t i = 0; i < shapes.size(); ++i) {
        Tensor t(shapes[i]);
        if (shapes[i].size() > 1) {
            // weight tensor: normal(0, sqrt(2/fan_in)), biases stay zero
            size_t fan_in = 1;
            for (size_t d = 1; d < shapes[i].size(); ++d) fan_in *= size_t(shapes[i][d]);
            double std_dev = std::sqrt(2.0 / double(fan_in));
            auto gen = rng::stream(seed, rng::kInit, i);
            for (float& v : t.data) v = float(gen.normal() * std_dev);
        }
        p.tensors.push_back(std::move(t));
    }
    return p;
}

// ---------------------------------------------------------------------------
// layer primitives

namespace {

// zero-padded 3x3 convolution expressed as shifted row-axpy
void conv3x3_forward(const float* in, int ic, const float* w, const float* bias, float* out,
                     int oc, int H, int W) {
    size_t plane = size_t(H) * W;
    for (int o = 0; o < oc; ++o) {
        float* out_plane = out + size_t(o) * plane;
        for (size_t i = 0; i < plane; ++i) out_plane[i] = bias[o];
        for (int c = 0; c < ic; ++c) {
            const float* in_plane = in + size_t(c) * plane;
            const float* wk = w + (size_t(o) * ic + c) * 9;
            for (int ky = 0; ky < 3; ++ky) {
                int dy = ky - 1;
                int y0 = std::max(0, -dy), y1 = std::min(H, H - dy);
                for (int kx = 0; kx < 3; ++kx) {
                    int dx = kx - 1;
                    int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
                    if (x0 >= x1) continue;
                    float wv = wk[ky * 3 + kx];
                    for (int y = y0; y < y1; ++y)
                        kernels::axpy(size_t(x1 - x0), wv, in_plane + size_t(y + dy) * W + x0 + dx,
                                      out_plane + size_t(y) * W + x0);
                }
            }
        }
    }
}

void conv3x3_backward_input(const float* w, const float* dout, float* din, int oc, int ic, int H,
                            int W) {
    size_t plane = size_t(H) * W;
    std::memset(din, 0, sizeof(float) * plane * ic);
    for (int o = 0; o < oc; ++o) {
        const float* dout_plane = dout + size_t(o) * plane;
        for (int c = 0; c < ic; ++c) {
            float* din_plane = din + size_t(c) * plane;
            const float* wk = w + (size_t(o) * ic + c) * 9;
            for (int ky = 0; ky < 3; ++ky) {
                int dy = ky - 1;
                int y0 = std::max(0, -dy), y1 = std::min(H, H - dy);
                for (int kx = 0; kx < 3; ++kx) {
                    int dx = kx - 1;
                    int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
                    if (x0 >= x1) continue;
                    float wv = wk[ky * 3 + kx];
                    for (int y = y0; y < y1; ++y)
                        kernels::axpy(size_t(x1 - x0), wv, dout_plane + size_t(y) * W + x0,
                                      din_plane + size_t(y + dy) * W + x0 + dx);
                }
            }
        }
    }
}

void conv3x3_backward_params(const float* in, const float* dout, float* dw, float* db, int oc,
                             int ic, int H, int W) {
    size_t plane = size_t(H) * W;
    for (int o = 0; o < oc; ++o) {
        const float* dout_plane = dout + size_t(o) * plane;
        double bacc = 0.0;
        for (int y = 0; y < H; ++y) bacc += kernels::sum(size_t(W), dout_plane + size_t(y) * W);
        db[o] += float(bacc);
        for (int c = 0; c < ic; ++c) {
            const float* in_plane = in + size_t(c) * plane;
            float* wk = dw + (size_t(o) * ic + c) * 9;
            for (int ky = 0; ky < 3; ++ky) {
                int dy = ky - 1;
                int y0 = std::max(0, -dy), y1 = std::min(H, H - dy);
                for (int kx = 0; kx < 3; ++kx) {
                    int dx = kx - 1;
                    int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
                    if (x0 >= x1) continue;
                    double acc = 0.0;
                    for (int y = y0; y < y1; ++y)
                        acc += kernels::dot(size_t(x1 - x0), in_plane + size_t(y + dy) * W + x0 + dx,
                                            dout_plane + size_t(y) * W + x0);
                    wk[ky * 3 + kx] += float(acc);
                }
            }
        }
    }
}

// 2x2 stride-2 max pooling; records the flat argmax index (first max wins in
// (0,0),(0,1),(1,0),(1,1) scan order)
void maxpool2(const float* in, float* out, int32_t* idx, int C, int H, int W) {
    int OH = H / 2, OW = W / 2;
    for (int c = 0; c < C; ++c) {
        const float* ip = in + size_t(c) * H * W;
        float* op = out + size_t(c) * OH * OW;
        int32_t* xp = idx + size_t(c) * OH * OW;
        for (int oy = 0; oy < OH; ++oy) {
            for (int ox = 0; ox < OW; ++ox) {
                int y = oy * 2, x = ox * 2;
                int best = y * W + x;
                float bv = ip[best];
                const int cand[3] = {y * W + x + 1, (y + 1) * W + x, (y + 1) * W + x + 1};
                for (int k : cand) {
                    if (ip[k] > bv) {
                        bv = ip[k];
                        best = k;
                    }
                }
                op[oy * OW + ox] = bv;
                xp[oy * OW + ox] = int32_t(size_t(c) * H * W + best);
            }
        }
    }
}

void maxpool2_backward(const float* dout, const int32_t* idx, float* din, int C, int OH, int OW) {
    size_t n = size_t(C) * OH * OW;
    for (size_t i = 0; i < n; ++i) din[idx[i]] += dout[i];
}

void upsample2_nearest(const float* in, float* out, int C, int H, int W) {
    int OH = H * 2, OW = W * 2;
    for (int c = 0; c < C; ++c) {
        const float* ip = in + size_t(c) * H * W;
        float* op = out + size_t(c) * OH * OW;
        for (int y = 0; y < OH; ++y)
            for (int x = 0; x < OW; ++x) op[size_t(y) * OW + x] = ip[size_t(y / 2) * W + x / 2];
    }
}

void upsample2_backward(const float* dout, float* din, int C, int H, int W) {
    // din has shape (C, H, W); dout (C, 2H, 2W); each source cell sums its 4 copies
    int OH = H * 2, OW = W * 2;
    for (int c = 0; c < C; ++c) {
        const float* gp = dout + size_t(c) * OH * OW;
        float* dp = din + size_t(c) * H * W;
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x) {
                double acc = double(gp[size_t(2 * y) * OW + 2 * x]) +
                             gp[size_t(2 * y) * OW + 2 * x + 1] +
                             gp[size_t(2 * y + 1) * OW + 2 * x] +
                             gp[size_t(2 * y + 1) * OW + 2 * x + 1];
                dp[size_t(y) * W + x] = float(acc);
            }
        }
    }
}

double plane_sum(const float* p, int H, int W) {
    double acc = 0.0;
    for (int y = 0; y < H; ++y) acc += kernels::sum(size_t(W), p + size_t(y) * W);
    return acc;
}

struct SampleShapes {
    int H, W;
};

// activation stack layout per sample:
// classifier: [input, r1, a1, r2, a2, ..., rB, aB, gap]
// segmenter:  [input, r1, a1, r2, a2, u1, r3, u2, pmap]
void forward_sample(const ModelParams& params, const float* input, Tensor* out_row,
                    std::vector<Tensor>* acts, std::vector<std::vector<int32_t>>* pool_idx) {
    const ArchDescriptor& a = params.arch;
    int H = a.in_h, W = a.in_w;
    int B = a.blocks();

    std::vector<Tensor> stack;
    stack.emplace_back(std::vector<int>{a.in_channels, H, W});
    std::memcpy(stack[0].ptr(), input, stack[0].numel() * sizeof(float));

    std::vector<std::vector<int32_t>> idx;
    int prev_c = a.in_channels;
    int h = H, w = W;
    int down_blocks = a.kind == ArchKind::classifier ? B : 2;
    for (int i = 0; i < down_blocks; ++i) {
        int c = a.channels[i];
        const Tensor& wt = params.tensors[size_t(2 * i)];
        const Tensor& bt = params.tensors[size_t(2 * i) + 1];
        Tensor z(std::vector<int>{c, h, w});
        conv3x3_forward(stack.back().ptr(), prev_c, wt.ptr(), bt.ptr(), z.ptr(), c, h, w);
        kernels::relu(z.numel(), z.ptr(), z.ptr());
        Tensor pooled(std::vector<int>{c, h / 2, w / 2});
        std::vector<int32_t> pidx(pooled.numel());
        maxpool2(z.ptr(), pooled.ptr(), pidx.data(), c, h, w);
        stack.push_back(std::move(z));
        stack.push_back(std::move(pooled));
        idx.push_back(std::move(pidx));
        prev_c = c;
        h /= 2;
        w /= 2;
    }

    if (a.kind == ArchKind::classifier) {
        Tensor gap(std::vector<int>{prev_c});
        const Tensor& last = stack.back();
        size_t plane = size_t(h) * w;
        for (int c = 0; c < prev_c; ++c)
            gap.data[size_t(c)] = float(plane_sum(last.ptr() + size_t(c) * plane, h, w) / double(plane));
        const Tensor& hw = params.tensors[size_t(2 * B)];
        const Tensor& hb = params.tensors[size_t(2 * B) + 1];
        for (int o = 0; o < a.out_dim; ++o)
            out_row->data[size_t(o)] =
                hb.data[size_t(o)] +
                kernels::dot(size_t(prev_c), hw.ptr() + size_t(o) * prev_c, gap.ptr());
        stack.push_back(std::move(gap));
    } else {
        // decoder: upsample -> conv(d2->d1) + relu, upsample -> conv(d1->out), sigmoid
        int d1 = a.channels[0], d2 = a.channels[1];
        const Tensor& w3 = params.tensors[4];
        const Tensor& b3 = params.tensors[5];
        const Tensor& w4 = params.tensors[6];
        const Tensor& b4 = params.tensors[7];

        Tensor u1(std::vector<int>{d2, h * 2, w * 2});
        upsample2_nearest(stack.back().ptr(), u1.ptr(), d2, h, w);
        h *= 2;
        w *= 2;
        Tensor r3(std::vector<int>{d1, h, w});
        conv3x3_forward(u1.ptr(), d2, w3.ptr(), b3.ptr(), r3.ptr(), d1, h, w);
        kernels::relu(r3.numel(), r3.ptr(), r3.ptr());

        Tensor u2(std::vector<int>{d1, h * 2, w * 2});
        upsample2_nearest(r3.ptr(), u2.ptr(), d1, h, w);
        h *= 2;
        w *= 2;
        Tensor pmap(std::vector<int>{a.out_dim, h, w});
        conv3x3_forward(u2.ptr(), d1, w4.ptr(), b4.ptr(), pmap.ptr(), a.out_dim, h, w);
        for (float& v : pmap.data) v = float(sigmoid(v));

        std::memcpy(out_row->ptr(), pmap.ptr(), pmap.numel() * sizeof(float));
        stack.push_back(std::move(u1));
        stack.push_back(std::move(r3));
        stack.push_back(std::move(u2));
        stack.push_back(std::move(pmap));
    }

    if (acts) {
        *acts = std::move(stack);
        *pool_idx = std::move(idx);
    }
}

void backward_sample(const ModelParams& params, const std::vector<Tensor>& acts,
                     const std::vector<std::vector<int32_t>>& pool_idx, const float* dout,
                     std::vector<Tensor>& grads, float* dinput, Tensor* last_conv_grad) {
    const ArchDescriptor& a = params.arch;
    int B = a.blocks();

    if (a.kind == ArchKind::classifier) {
        int cB = a.channels.back();
        int h = a.in_h >> B, w = a.in_w >> B;
        const Tensor& gap = acts.back();
        const Tensor& hw = params.tensors[size_t(2 * B)];

        Tensor dgap(std::vector<int>{cB});
        for (int o = 0; o < a.out_dim; ++o) {
            float g = dout[o];
            grads[size_t(2 * B) + 1].data[size_t(o)] += g;
            kernels::axpy(size_t(cB), g, gap.ptr(), grads[size_t(2 * B)].ptr() + size_t(o) * cB);
            kernels::axpy(size_t(cB), g, hw.ptr() + size_t(o) * cB, dgap.ptr());
        }

        size_t plane = size_t(h) * w;
        Tensor da(std::vector<int>{cB, h, w});
        for (int c = 0; c < cB; ++c) {
            float v = dgap.data[size_t(c)] / float(plane);
            float* p = da.ptr() + size_t(c) * plane;
            for (size_t i = 0; i < plane; ++i) p[i] = v;
        }

        for (int i = B - 1; i >= 0; --i) {
            int c = a.channels[size_t(i)];
            int prev_c = i == 0 ? a.in_channels : a.channels[size_t(i) - 1];
            int rh = h * 2, rw = w * 2;
            const Tensor& r = acts[size_t(2 * i) + 1];      // post-relu pre-pool
            const Tensor& below = acts[size_t(2 * i)];      // input of this block

            Tensor dr(std::vector<int>{c, rh, rw});
            maxpool2_backward(da.ptr(), pool_idx[size_t(i)].data(), dr.ptr(), c, h, w);
            // gradient w.r.t. the post-ReLU activations, before masking down
            // to the pre-activation gradient
            if (i == B - 1 && last_conv_grad) *last_conv_grad = dr;
            kernels::relu_backward(dr.numel(), r.ptr(), dr.ptr(), dr.ptr());

            conv3x3_backward_params(below.ptr(), dr.ptr(), grads[size_t(2 * i)].ptr(),
                                    grads[size_t(2 * i) + 1].ptr(), c, prev_c, rh, rw);
            if (i > 0) {
                Tensor dbelow(std::vector<int>{prev_c, rh, rw});
                conv3x3_backward_input(params.tensors[size_t(2 * i)].ptr(), dr.ptr(), dbelow.ptr(),
                                       c, prev_c, rh, rw);
                da = std::move(dbelow);
                h = rh;
                w = rw;
            } else if (dinput) {
                conv3x3_backward_input(params.tensors[0].ptr(), dr.ptr(), dinput, c, prev_c, rh,
                                       rw);
            }
        }
        return;
    }

    // segmenter: acts = [input, r1, a1, r2, a2, u1, r3, u2, pmap]
    int d1 = a.channels[0], d2 = a.channels[1];
    int H = a.in_h, W = a.in_w;
    const Tensor& pmap = acts[8];
    const Tensor& u2 = acts[7];
    const Tensor& r3 = acts[6];
    const Tensor& u1 = acts[5];

    // through the sigmoid
    Tensor dz4(std::vector<int>{a.out_dim, H, W});
    for (size_t i = 0; i < dz4.numel(); ++i) {
        float p = pmap.data[i];
        dz4.data[i] = dout[i] * p * (1.0f - p);
    }

    conv3x3_backward_params(u2.ptr(), dz4.ptr(), grads[6].ptr(), grads[7].ptr(), a.out_dim, d1, H, W);
    Tensor du2(std::vector<int>{d1, H, W});
    conv3x3_backward_input(params.tensors[6].ptr(), dz4.ptr(), du2.ptr(), a.out_dim, d1, H, W);

    Tensor dr3(std::vector<int>{d1, H / 2, W / 2});
    upsample2_backward(du2.ptr(), dr3.ptr(), d1, H / 2, W / 2);
    kernels::relu_backward(dr3.numel(), r3.ptr(), dr3.ptr(), dr3.ptr());

    conv3x3_backward_params(u1.ptr(), dr3.ptr(), grads[4].ptr(), grads[5].ptr(), d1, d2, H / 2, W / 2);
    Tensor du1(std::vector<int>{d2, H / 2, W / 2});
    conv3x3_backward_input(params.tensors[4].ptr(), dr3.ptr(), du1.ptr(), d1, d2, H / 2, W / 2);

    Tensor da2(std::vector<int>{d2, H / 4, W / 4});
    upsample2_backward(du1.ptr(), da2.ptr(), d2, H / 4, W / 4);

    // encoder blocks mirror the classifier path
    Tensor da = std::move(da2);
    int h = H / 4, w = W / 4;
    for (int i = 1; i >= 0; --i) {
        int c = a.channels[size_t(i)];
        int prev_c = i == 0 ? a.in_channels : a.channels[size_t(i) - 1];
        int rh = h * 2, rw = w * 2;
        const Tensor& r = acts[size_t(2 * i) + 1];
        const Tensor& below = acts[size_t(2 * i)];

        Tensor dr(std::vector<int>{c, rh, rw});
        maxpool2_backward(da.ptr(), pool_idx[size_t(i)].data(), dr.ptr(), c, h, w);
        kernels::relu_backward(dr.numel(), r.ptr(), dr.ptr(), dr.ptr());

        conv3x3_backward_params(below.ptr(), dr.ptr(), grads[size_t(2 * i)].ptr(),
                                grads[size_t(2 * i) + 1].ptr(), c, prev_c, rh, rw);
        if (i > 0) {
            Tensor dbelow(std::vector<int>{prev_c, rh, rw});
            conv3x3_backward_input(params.tensors[size_t(2 * i)].ptr(), dr.ptr(), dbelow.ptr(), c,
                                   prev_c, rh, rw);
            da = std::move(dbelow);
            h = rh;
            w = rw;
        } else if (dinput) {
            conv3x3_backward_input(params.tensors[0].ptr(), dr.ptr(), dinput, c, prev_c, rh, rw);
        }
    }
}

} // namespace

// ---------------------------------------------------------------------------

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

Tensor model_forward(const ModelParams& params, const Tensor& input, Mode mode,
                     ForwardCache* cache) {
    params.validate();
    const ArchDescriptor& a = params.arch;

    std::vector<int> sample_shape{a.in_channels, a.in_h, a.in_w};
    int batch;
    if (input.rank() == 4 && std::vector<int>(input.shape.begin() + 1, input.shape.end()) == sample_shape) {
        batch = input.dim(0);
    } else if (input.rank() == 3 && input.shape == sample_shape) {
        batch = 1;
    } else {
        fail(ErrorKind::Shape, "model_forward: input shape does not match descriptor");
    }

    std::vector<int> out_shape = a.kind == ArchKind::classifier
                                     ? std::vector<int>{batch, a.out_dim}
                                     : std::vector<int>{batch, a.out_dim, a.in_h, a.in_w};
    Tensor out(out_shape);
    size_t in_stride = Tensor::numel_of(sample_shape);
    size_t out_stride = out.numel() / size_t(batch);

    bool keep = cache != nullptr && mode == Mode::train;
    if (cache) {
        cache->valid = keep;
        cache->mode = mode;
        cache->params = &params;
        cache->batch = batch;
        cache->acts.assign(keep ? size_t(batch) : 0, {});
        cache->pool_idx.assign(keep ? size_t(batch) : 0, {});
        cache->last_conv_grad.clear();
    }

    parallel_for(size_t(batch), [&](size_t s) {
        Tensor row(a.kind == ArchKind::classifier
                       ? std::vector<int>{a.out_dim}
                       : std::vector<int>{a.out_dim, a.in_h, a.in_w});
        forward_sample(params, input.ptr() + s * in_stride, &row, keep ? &cache->acts[s] : nullptr,
                       keep ? &cache->pool_idx[s] : nullptr);
        std::memcpy(out.ptr() + s * out_stride, row.ptr(), out_stride * sizeof(float));
    });
    return out;
}

BackwardResult model_backward(const ModelParams& params, ForwardCache& cache,
                              const Tensor& output_grad) {
    if (!cache.valid || cache.mode != Mode::train)
        fail(ErrorKind::State, "model_backward: cache missing or not from a train-mode forward");
    if (cache.params != &params)
        fail(ErrorKind::State, "model_backward: cache was produced by different params");
    const ArchDescriptor& a = params.arch;
    int batch = cache.batch;
    size_t out_stride = a.kind == ArchKind::classifier ? size_t(a.out_dim)
                                                       : size_t(a.out_dim) * a.in_h * a.in_w;
    if (output_grad.numel() != out_stride * size_t(batch))
        fail(ErrorKind::Shape, "model_backward: output_grad shape mismatch");

    auto shapes = a.tensor_shapes();
    size_t in_stride = size_t(a.in_channels) * a.in_h * a.in_w;

    // per-sample gradient buffers reduced in sample order
    std::vector<std::vector<Tensor>> local(static_cast<size_t>(batch));
    BackwardResult res;
    res.input_grad = Tensor(std::vector<int>{batch, a.in_channels, a.in_h, a.in_w});
    cache.last_conv_grad.assign(size_t(batch), Tensor());

    parallel_for(size_t(batch), [&](size_t s) {
        std::vector<Tensor> g;
        g.reserve(shapes.size());
        for (const auto& sh : shapes) g.emplace_back(sh);
        backward_sample(params, cache.acts[s], cache.pool_idx[s],
                        output_grad.ptr() + s * out_stride, g, res.input_grad.ptr() + s * in_stride,
                        a.kind == ArchKind::classifier ? &cache.last_conv_grad[s] : nullptr);
        local[s] = std::move(g);
    });

    for (const auto& sh : shapes) res.param_grads.emplace_back(sh);
    for (int s = 0; s < batch; ++s)
        for (size_t t = 0; t < shapes.size(); ++t)
            kernels::scalar::add(res.param_grads[t].numel(), res.param_grads[t].ptr(),
                                 local[size_t(s)][t].ptr(), res.param_grads[t].ptr());
    return res;
}

Tensor last_conv_activation(const ForwardCache& cache, int sample) {
    if (!cache.valid) fail(ErrorKind::State, "cache is not valid");
    if (sample < 0 || sample >= cache.batch) fail(ErrorKind::Parameter, "sample out of range");
    const ArchDescriptor& a = cache.params->arch;
    if (a.kind != ArchKind::classifier)
        fail(ErrorKind::Compatibility, "last_conv_activation: classifier models only");
    return cache.acts[size_t(sample)][size_t(2 * a.blocks()) - 1];
}

Tensor classifier_tail_logits(const ModelParams& params, const Tensor& last_conv_act) {
    const ArchDescriptor& a = params.arch;
    if (a.kind != ArchKind::classifier)
        fail(ErrorKind::Compatibility, "classifier_tail_logits: classifier models only");
    int B = a.blocks();
    int cB = a.channels.back();
    int rh = a.in_h >> (B - 1), rw = a.in_w >> (B - 1);
    if (last_conv_act.shape != std::vector<int>{cB, rh, rw})
        fail(ErrorKind::Shape, "classifier_tail_logits: activation shape mismatch");

    Tensor pooled(std::vector<int>{cB, rh / 2, rw / 2});
    std::vector<int32_t> idx(pooled.numel());
    maxpool2(last_conv_act.ptr(), pooled.ptr(), idx.data(), cB, rh, rw);

    size_t plane = size_t(rh / 2) * (rw / 2);
    Tensor gap(std::vector<int>{cB});
    for (int c = 0; c < cB; ++c)
        gap.data[size_t(c)] = float(plane_sum(pooled.ptr() + size_t(c) * plane, rh / 2, rw / 2) /
                                    double(plane));
    const Tensor& hw = params.tensors[size_t(2 * B)];
    const Tensor& hb = params.tensors[size_t(2 * B) + 1];
    Tensor logits(std::vector<int>{a.out_dim});
    for (int o = 0; o < a.out_dim; ++o)
        logits.data[size_t(o)] =
            hb.data[size_t(o)] + kernels::dot(size_t(cB), hw.ptr() + size_t(o) * cB, gap.ptr());
    return logits;
}

} // namespace ecg::nn
