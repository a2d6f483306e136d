#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "ecg/nn.hpp"
#include "ecg/raster.hpp"
#include "ecg/syngen.hpp"

namespace ecg::pipeline {

using syngen::kClassNames;
using syngen::LabelVector;
using ProbVector = std::array<float, 5>;
using LogitVector = std::array<float, 5>;
using ThresholdVector = std::array<double, 5>;

struct SampleRecord {
    std::string id;
    std::string image;              // resolved path
    std::optional<std::string> mask; // resolved path
    LabelVector labels{};
    bool has_corners = false;
    std::array<std::array<double, 2>, 4> corners{};
};

using Dataset = std::vector<SampleRecord>;

// Manifest files are JSON arrays of records; relative paths resolve against
// the manifest's directory.
Dataset load_manifest(const std::string& path);
void save_manifest(const Dataset& data, const std::string& path);

// Seeded Fisher-Yates shuffle, then prefix split of round(train_frac * n).
std::pair<Dataset, Dataset> split_dataset(const Dataset& records, double train_frac,
                                          uint64_t seed);

// ---------------------------------------------------------------------------
// metrics

// Rank-based AUROC with ties credited 0.5. Throws Error(UndefinedMetric)
// when labels are single-class.
double auroc(const std::vector<double>& scores, const std::vector<int>& labels);

// 2TP / (2TP + FP + FN), 0 when the denominator is 0.
double f1(const std::vector<int>& preds, const std::vector<int>& labels);

// Per class: sweep thresholds k*0.01 for k = 0..100 and keep the smallest
// maximizer of F1 with the strict prob > t rule.
ThresholdVector fit_thresholds(const std::vector<ProbVector>& probs,
                               const std::vector<LabelVector>& labels);

// 1 iff prob > threshold (strict), prob widened to double.
LabelVector binarize(const ProbVector& probs, const ThresholdVector& t);

struct MetricsReport {
    double macro_auroc = 0.0;
    std::array<std::optional<double>, 5> per_class_auroc{};
    double macro_f1 = 0.0;
    std::array<double, 5> per_class_f1{};
    ThresholdVector thresholds{};
    size_t n_samples = 0;

    std::string to_json(const std::string& config_hash = "") const;
};

// ---------------------------------------------------------------------------
// model input loading

enum class InputKind { mask, grayscale_inverted };

// Loads a record's image (or mask) as a (1, in_h, in_w) tensor: grayscale ->
// invert for images, raw values for masks, area-resampled to the target dims.
nn::Tensor load_input_tensor(const SampleRecord& rec, InputKind kind, int in_h, int in_w);
nn::Tensor tensor_from_raster(const raster::Raster& r, int in_h, int in_w, bool invert_gray);

// ---------------------------------------------------------------------------
// training

struct TrainLog {
    std::vector<double> loss;      // per-epoch mean training loss
    std::vector<double> lr;        // per-epoch learning rate
    std::vector<double> val_auroc; // per-epoch validation macro AUROC (if val given)
    int epochs_to_target = -1;     // first epoch count reaching target_auroc, -1 if never
};

struct StageOptions {
    const Dataset* val = nullptr;  // optional validation set for per-epoch AUROC
    double target_auroc = -1.0;    // fills epochs_to_target when >= 0
    bool stop_at_target = false;   // halt training once the target is reached
};

// Curriculum classifier stage: BCE-with-logits training with pixel-dropout
// and rotation augmentations. init empty => fresh seeded initialization.
nn::ModelParams train_stage(const std::optional<nn::ModelParams>& init, const Dataset& data,
                            InputKind input_kind, const nn::TrainConfig& cfg, int in_h, int in_w,
                            TrainLog* log = nullptr, const StageOptions& opts = {});

// Segmenter training with focal Tversky loss on (grayscale-inverted image,
// mask) pairs. Records without masks raise Error(Data).
nn::ModelParams train_segmenter(const Dataset& data, const nn::TrainConfig& cfg, int in_h,
                                int in_w, TrainLog* log = nullptr);

// Number of segmenter-labeled samples folded back into the training set by
// the self-supervision recipe.
inline constexpr int kDefaultPseudoLabelCount = 29;

// Predicted map thresholded then cleaned with the maskops chain
// (sliding-window filter, labeling, small-component removal); masks are
// returned at each image's resolution.
std::vector<std::pair<raster::Raster, raster::BinaryMask>> pseudo_label(
    const nn::ModelParams& params, const std::vector<raster::Raster>& images, double threshold,
    int window_h = 10, int min_area = 20);

// ---------------------------------------------------------------------------
// inference

// Arithmetic mean of per-model logits; throws Error(Compatibility) on
// descriptor mismatch.
LogitVector ensemble_logits(const std::vector<nn::ModelParams>& models, const nn::Tensor& input);

// Per-sample ensemble probabilities over a dataset (grayscale-inverted
// image inputs at the models' descriptor dims).
std::vector<ProbVector> predict_probs(const std::vector<nn::ModelParams>& models,
                                      const Dataset& data);

// Full evaluation: ensemble -> sigmoid -> per-class AUROC on probabilities
// and F1 after threshold binarization; macro = unweighted class means,
// single-class AUROC reported absent with a stderr warning.
MetricsReport evaluate(const std::vector<nn::ModelParams>& models, const Dataset& data,
                       const ThresholdVector& t);

// ---------------------------------------------------------------------------
// preprocessing

struct PreprocessResult {
    Dataset output;
    size_t n_failed = 0;
};

// Rectifies every record's image into out_dir (and optionally the
// grayscale-inverted variant); failures are skipped and counted.
PreprocessResult preprocess_dataset(const Dataset& data, const std::string& out_dir,
                                    bool emit_gray_inverted);

} // namespace ecg::pipeline
