#include <algorithm>
#include <cmath>

#include "ecg/maskops.hpp"
#include "ecg/parallel.hpp"
#include "ecg/pipeline.hpp"

namespace ecg::pipeline {

namespace {

// Per-epoch sample order from the seeded shuffle stream.
std::vector<size_t> epoch_order(size_t n, uint64_t seed, int epoch) {
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    auto gen = rng::stream(seed, rng::kShuffle, uint64_t(epoch));
    for (size_t i = n; i > 1; --i) std::swap(order[i - 1], order[gen.below(i)]);
    return order;
}

// Augmentation stream is keyed by (epoch, original sample index), so results
// do not depend on batch composition or visit order.
nn::Tensor augment(const nn::Tensor& base, const nn::TrainConfig& cfg, int epoch, size_t index) {
    auto gen = rng::stream(cfg.seed, rng::kAugment, uint64_t(epoch), uint64_t(index));
    nn::Tensor t = nn::pixel_dropout(base, cfg.pixel_drop.apply_prob, cfg.pixel_drop.per_pixel_prob,
                                     gen);
    return nn::random_rotation(t, cfg.rotation.limit_deg, cfg.rotation.apply_prob, gen);
}

std::vector<nn::Tensor> preload_inputs(const Dataset& data, InputKind kind, int in_h, int in_w) {
    std::vector<nn::Tensor> inputs(data.size());
    parallel_for(data.size(), [&](size_t i) {
        inputs[i] = load_input_tensor(data[i], kind, in_h, in_w);
    });
    return inputs;
}

double val_macro_auroc(const nn::ModelParams& params, const std::vector<nn::Tensor>& val_inputs,
                       const Dataset& val) {
    std::vector<ProbVector> probs(val.size());
    parallel_for(val.size(), [&](size_t i) {
        nn::Tensor logits = nn::model_forward(params, val_inputs[i], nn::Mode::eval);
        for (size_t c = 0; c < 5; ++c) probs[i][c] = float(nn::sigmoid(logits.data[c]));
    });
    double acc = 0.0;
    int defined = 0;
    for (size_t c = 0; c < 5; ++c) {
        std::vector<double> scores(val.size());
        std::vector<int> truth(val.size());
        for (size_t i = 0; i < val.size(); ++i) {
            scores[i] = probs[i][c];
            truth[i] = val[i].labels[c];
        }
        try {
            acc += auroc(scores, truth);
            ++defined;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::UndefinedMetric) throw;
        }
    }
    return defined == 0 ? 0.0 : acc / defined;
}

} // namespace

nn::ModelParams train_stage(const std::optional<nn::ModelParams>& init, const Dataset& data,
                            InputKind input_kind, const nn::TrainConfig& cfg, int in_h, int in_w,
                            TrainLog* log, const StageOptions& opts) {
    cfg.validate();
    if (data.empty()) fail(ErrorKind::Parameter, "train_stage: empty dataset");
    if (input_kind == InputKind::mask)
        for (const SampleRecord& rec : data)
            if (!rec.mask) fail(ErrorKind::Data, "train_stage: record " + rec.id + " has no mask");

    nn::ModelParams params =
        init ? *init : nn::init_params(nn::compact_classifier(in_h, in_w), cfg.seed);
    if (params.arch.kind != nn::ArchKind::classifier)
        fail(ErrorKind::Compatibility, "train_stage: init weights are not a classifier");
    if (params.arch.in_h != in_h || params.arch.in_w != in_w)
        fail(ErrorKind::Compatibility, "train_stage: init weights expect different input dims");

    std::vector<nn::Tensor> inputs = preload_inputs(data, input_kind, in_h, in_w);
    std::vector<nn::Tensor> val_inputs;
    if (opts.val)
        val_inputs = preload_inputs(*opts.val, InputKind::grayscale_inverted, in_h, in_w);

    const size_t n = data.size();
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double lr = nn::cosine_lr(epoch, cfg);
        std::vector<size_t> order = epoch_order(n, cfg.seed, epoch);

        double loss_sum = 0.0;
        size_t loss_batches = 0;
        for (size_t start = 0; start < n; start += size_t(cfg.batch_size)) {
            size_t bsz = std::min(size_t(cfg.batch_size), n - start);
            nn::Tensor batch(std::vector<int>{int(bsz), 1, in_h, in_w});
            nn::Tensor labels(std::vector<int>{int(bsz), 5});
            parallel_for(bsz, [&](size_t b) {
                size_t idx = order[start + b];
                nn::Tensor aug = augment(inputs[idx], cfg, epoch, idx);
                std::copy(aug.data.begin(), aug.data.end(),
                          batch.data.begin() + b * aug.numel());
                for (size_t c = 0; c < 5; ++c)
                    labels.data[b * 5 + c] = float(data[idx].labels[c]);
            });

            nn::ForwardCache cache;
            nn::Tensor logits = nn::model_forward(params, batch, nn::Mode::train, &cache);
            loss_sum += nn::bce_logits(logits, labels);
            ++loss_batches;
            nn::Tensor grad = nn::bce_grad(logits, labels);
            nn::BackwardResult back = nn::model_backward(params, cache, grad);
            nn::sgd_step(params, back.param_grads, lr);
        }

        if (log) {
            log->loss.push_back(loss_sum / double(loss_batches));
            log->lr.push_back(lr);
        }
        if (opts.val) {
            double va = val_macro_auroc(params, val_inputs, *opts.val);
            if (log) log->val_auroc.push_back(va);
            if (opts.target_auroc >= 0.0 && va >= opts.target_auroc) {
                if (log && log->epochs_to_target < 0) log->epochs_to_target = epoch + 1;
                if (opts.stop_at_target) break;
            }
        }
    }
    return params;
}

nn::ModelParams train_segmenter(const Dataset& data, const nn::TrainConfig& cfg, int in_h,
                                int in_w, TrainLog* log) {
    cfg.validate();
    if (data.empty()) fail(ErrorKind::Parameter, "train_segmenter: empty dataset");
    for (const SampleRecord& rec : data)
        if (!rec.mask) fail(ErrorKind::Data, "train_segmenter: record " + rec.id + " has no mask");

    nn::ModelParams params = nn::init_params(nn::compact_segmenter(in_h, in_w), cfg.seed);

    std::vector<nn::Tensor> inputs = preload_inputs(data, InputKind::grayscale_inverted, in_h, in_w);
    std::vector<nn::Tensor> targets(data.size());
    parallel_for(data.size(), [&](size_t i) {
        // area-averaged mask re-binarized: any quarter-covered pixel is ink
        nn::Tensor t = load_input_tensor(data[i], InputKind::mask, in_h, in_w);
        for (float& v : t.data) v = v > 0.25f ? 1.0f : 0.0f;
        targets[i] = std::move(t);
    });

    const size_t n = data.size();
    const size_t map_elems = size_t(in_h) * in_w;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double lr = nn::cosine_lr(epoch, cfg);
        std::vector<size_t> order = epoch_order(n, cfg.seed, epoch);

        double loss_sum = 0.0;
        size_t loss_count = 0;
        for (size_t start = 0; start < n; start += size_t(cfg.batch_size)) {
            size_t bsz = std::min(size_t(cfg.batch_size), n - start);
            nn::Tensor batch(std::vector<int>{int(bsz), 1, in_h, in_w});
            parallel_for(bsz, [&](size_t b) {
                size_t idx = order[start + b];
                std::copy(inputs[idx].data.begin(), inputs[idx].data.end(),
                          batch.data.begin() + b * map_elems);
            });

            nn::ForwardCache cache;
            nn::Tensor maps = nn::model_forward(params, batch, nn::Mode::train, &cache);
            nn::Tensor grad(maps.shape);
            // per-sample loss averaged over the batch
            for (size_t b = 0; b < bsz; ++b) {
                size_t idx = order[start + b];
                nn::Tensor pred(std::vector<int>{1, in_h, in_w});
                std::copy(maps.data.begin() + b * map_elems,
                          maps.data.begin() + (b + 1) * map_elems, pred.data.begin());
                loss_sum += nn::ftl(pred, targets[idx]);
                ++loss_count;
                nn::Tensor g = nn::ftl_grad(pred, targets[idx]);
                float scale = 1.0f / float(bsz);
                for (size_t i = 0; i < map_elems; ++i)
                    grad.data[b * map_elems + i] = g.data[i] * scale;
            }

            nn::BackwardResult back = nn::model_backward(params, cache, grad);
            nn::sgd_step(params, back.param_grads, lr);
        }
        if (log) {
            log->loss.push_back(loss_sum / double(loss_count));
            log->lr.push_back(lr);
        }
    }
    return params;
}

std::vector<std::pair<raster::Raster, raster::BinaryMask>> pseudo_label(
    const nn::ModelParams& params, const std::vector<raster::Raster>& images, double threshold,
    int window_h, int min_area) {
    if (params.arch.kind != nn::ArchKind::segmenter)
        fail(ErrorKind::Compatibility, "pseudo_label: segmenter weights required");

    std::vector<std::pair<raster::Raster, raster::BinaryMask>> out(images.size());
    parallel_for(images.size(), [&](size_t i) {
        const raster::Raster& img = images[i];
        nn::Tensor input = tensor_from_raster(img, params.arch.in_h, params.arch.in_w, true);
        nn::Tensor map = nn::model_forward(params, input, nn::Mode::eval);

        // bilinear map resize back to the image's resolution
        int mh = params.arch.in_h, mw = params.arch.in_w;
        raster::BinaryMask mask(img.width, img.height);
        for (int y = 0; y < img.height; ++y) {
            double sy = (double(y) + 0.5) / img.height * mh - 0.5;
            int y0 = std::clamp(int(std::floor(sy)), 0, mh - 1);
            int y1 = std::min(y0 + 1, mh - 1);
            double fy = std::clamp(sy - y0, 0.0, 1.0);
            for (int x = 0; x < img.width; ++x) {
                double sx = (double(x) + 0.5) / img.width * mw - 0.5;
                int x0 = std::clamp(int(std::floor(sx)), 0, mw - 1);
                int x1 = std::min(x0 + 1, mw - 1);
                double fx = std::clamp(sx - x0, 0.0, 1.0);
                double v = (1 - fy) * ((1 - fx) * map.data[size_t(y0) * mw + x0] +
                                       fx * map.data[size_t(y0) * mw + x1]) +
                           fy * ((1 - fx) * map.data[size_t(y1) * mw + x0] +
                                 fx * map.data[size_t(y1) * mw + x1]);
                if (v >= threshold) mask.set(x, y, 1);
            }
        }
        mask = maskops::sliding_window_filter(mask, window_h);
        maskops::LabeledMask lm = maskops::label_components(mask);
        mask = maskops::filter_components(lm, min_area);
        out[i] = {img, std::move(mask)};
    });
    return out;
}

} // namespace ecg::pipeline
