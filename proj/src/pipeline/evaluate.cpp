#include <cstdio>
#include <filesystem>

#include "ecg/geometry.hpp"
#include "ecg/parallel.hpp"
#include "ecg/pipeline.hpp"

namespace ecg::pipeline {

namespace fs = std::filesystem;

LogitVector ensemble_logits(const std::vector<nn::ModelParams>& models, const nn::Tensor& input) {
    if (models.empty()) fail(ErrorKind::Parameter, "ensemble_logits: no models");
    for (const auto& m : models)
        if (!m.arch.compatible_with(models[0].arch))
            fail(ErrorKind::Compatibility, "ensemble_logits: model descriptors differ");
    if (models[0].arch.out_dim != 5)
        fail(ErrorKind::Compatibility, "ensemble_logits: models must emit 5 logits");

    std::array<double, 5> acc{};
    for (const auto& m : models) {
        nn::Tensor logits = nn::model_forward(m, input, nn::Mode::eval);
        for (size_t c = 0; c < 5; ++c) acc[c] += logits.data[c];
    }
    LogitVector out;
    for (size_t c = 0; c < 5; ++c) out[c] = float(acc[c] / double(models.size()));
    return out;
}

std::vector<ProbVector> predict_probs(const std::vector<nn::ModelParams>& models,
                                      const Dataset& data) {
    if (models.empty()) fail(ErrorKind::Parameter, "predict_probs: no models");
    int in_h = models[0].arch.in_h, in_w = models[0].arch.in_w;
    std::vector<ProbVector> probs(data.size());
    parallel_for(data.size(), [&](size_t i) {
        nn::Tensor input = load_input_tensor(data[i], InputKind::grayscale_inverted, in_h, in_w);
        LogitVector logits = ensemble_logits(models, input);
        for (size_t c = 0; c < 5; ++c) probs[i][c] = float(nn::sigmoid(logits[c]));
    });
    return probs;
}

MetricsReport evaluate(const std::vector<nn::ModelParams>& models, const Dataset& data,
                       const ThresholdVector& t) {
    if (data.empty()) fail(ErrorKind::Parameter, "evaluate: empty dataset");
    std::vector<ProbVector> probs = predict_probs(models, data);

    MetricsReport report;
    report.thresholds = t;
    report.n_samples = data.size();

    double auroc_sum = 0.0;
    int auroc_defined = 0;
    double f1_sum = 0.0;
    for (size_t c = 0; c < 5; ++c) {
        std::vector<double> scores(data.size());
        std::vector<int> truth(data.size()), preds(data.size());
        for (size_t i = 0; i < data.size(); ++i) {
            scores[i] = probs[i][c];
            truth[i] = data[i].labels[c];
            preds[i] = double(probs[i][c]) > t[c] ? 1 : 0;
        }
        try {
            double a = auroc(scores, truth);
            report.per_class_auroc[c] = a;
            auroc_sum += a;
            ++auroc_defined;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::UndefinedMetric) throw;
            std::fprintf(stderr, "warning: AUROC undefined for class %s (single-class labels)\n",
                         kClassNames[c]);
        }
        report.per_class_f1[c] = f1(preds, truth);
        f1_sum += report.per_class_f1[c];
    }
    report.macro_auroc = auroc_defined > 0 ? auroc_sum / auroc_defined : 0.0;
    report.macro_f1 = f1_sum / 5.0;
    return report;
}

PreprocessResult preprocess_dataset(const Dataset& data, const std::string& out_dir,
                                    bool emit_gray_inverted) {
    fs::create_directories(out_dir);
    PreprocessResult res;
    std::vector<std::optional<SampleRecord>> slots(data.size());

    parallel_for(data.size(), [&](size_t i) {
        const SampleRecord& rec = data[i];
        try {
            raster::Raster img = raster::read_image(rec.image);
            raster::Raster rectified = geometry::rectify(img);
            SampleRecord out = rec;
            std::string img_path = (fs::path(out_dir) / ("rect_" + rec.id + ".ppm")).string();
            raster::write_image(rectified, img_path);
            out.image = img_path;
            if (emit_gray_inverted) {
                raster::Raster gray = raster::invert(raster::to_grayscale(rectified));
                raster::write_image(gray,
                                    (fs::path(out_dir) / ("gray_" + rec.id + ".pgm")).string());
            }
            out.has_corners = false; // canvas corners do not apply to the rectified frame
            slots[i] = std::move(out);
        } catch (const Error& e) {
            std::fprintf(stderr, "preprocess: sample %s failed: %s\n", rec.id.c_str(), e.what());
        }
    });

    for (auto& s : slots) {
        if (s) res.output.push_back(std::move(*s));
        else ++res.n_failed;
    }
    return res;
}

} // namespace ecg::pipeline
