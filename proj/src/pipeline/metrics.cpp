#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "ecg/pipeline.hpp"

namespace ecg::pipeline {

using json = nlohmann::ordered_json;

double auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size() || scores.empty())
        fail(ErrorKind::Parameter, "auroc: scores and labels must align and be non-empty");
    size_t pos = 0;
    for (int l : labels) pos += size_t(l != 0);
    size_t neg = labels.size() - pos;
    if (pos == 0 || neg == 0)
        fail(ErrorKind::UndefinedMetric, "auroc undefined: labels are single-class");

    // average ranks with ties, then the Mann-Whitney identity
    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), size_t(0));
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] < scores[b]; });

    double pos_rank_sum = 0.0;
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        double avg_rank = 0.5 * double(i + 1 + j + 1); // ranks are 1-based
        for (size_t k = i; k <= j; ++k)
            if (labels[order[k]] != 0) pos_rank_sum += avg_rank;
        i = j + 1;
    }
    return (pos_rank_sum - 0.5 * double(pos) * double(pos + 1)) / (double(pos) * double(neg));
}

double f1(const std::vector<int>& preds, const std::vector<int>& labels) {
    if (preds.size() != labels.size())
        fail(ErrorKind::Parameter, "f1: preds and labels must align");
    size_t tp = 0, fp = 0, fn = 0;
    for (size_t i = 0; i < preds.size(); ++i) {
        if (preds[i] && labels[i]) ++tp;
        else if (preds[i] && !labels[i]) ++fp;
        else if (!preds[i] && labels[i]) ++fn;
    }
    size_t denom = 2 * tp + fp + fn;
    return denom == 0 ? 0.0 : 2.0 * double(tp) / double(denom);
}

ThresholdVector fit_thresholds(const std::vector<ProbVector>& probs,
                               const std::vector<LabelVector>& labels) {
    if (probs.empty() || probs.size() != labels.size())
        fail(ErrorKind::Parameter, "fit_thresholds: inputs must align and be non-empty");

    ThresholdVector out{};
    for (size_t c = 0; c < 5; ++c) {
        std::vector<int> truth(labels.size());
        for (size_t i = 0; i < labels.size(); ++i) truth[i] = labels[i][c];

        double best_f1 = -1.0;
        double best_t = 0.0;
        for (int k = 0; k <= 100; ++k) {
            double t = k * 0.01;
            std::vector<int> preds(probs.size());
            for (size_t i = 0; i < probs.size(); ++i) preds[i] = double(probs[i][c]) > t ? 1 : 0;
            double score = f1(preds, truth);
            if (score > best_f1) { // strict: smallest maximizer wins
                best_f1 = score;
                best_t = t;
            }
        }
        out[c] = best_t;
    }
    return out;
}

LabelVector binarize(const ProbVector& probs, const ThresholdVector& t) {
    LabelVector out{};
    for (size_t c = 0; c < 5; ++c) out[c] = double(probs[c]) > t[c] ? 1 : 0;
    return out;
}

std::string MetricsReport::to_json(const std::string& config_hash) const {
    json j;
    j["n_samples"] = n_samples;
    j["macro_auroc"] = macro_auroc;
    json pa;
    for (size_t c = 0; c < 5; ++c) {
        if (per_class_auroc[c]) pa[kClassNames[c]] = *per_class_auroc[c];
        else pa[kClassNames[c]] = nullptr;
    }
    j["per_class_auroc"] = pa;
    j["macro_f1"] = macro_f1;
    json pf;
    for (size_t c = 0; c < 5; ++c) pf[kClassNames[c]] = per_class_f1[c];
    j["per_class_f1"] = pf;
    json th;
    for (size_t c = 0; c < 5; ++c) th[kClassNames[c]] = thresholds[c];
    j["thresholds"] = th;
    if (!config_hash.empty()) j["config_hash"] = config_hash;
    return j.dump(2);
}

} // namespace ecg::pipeline
