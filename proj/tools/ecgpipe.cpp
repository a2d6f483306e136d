// ecgpipe: command-line frontend for the synthetic-ECG classification
// pipeline. Subcommands: gen, preprocess, train, fit-thresholds, eval,
// explain. Exit codes: 0 success, 1 runtime failure, 2 usage/config error.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ecg/explain.hpp"
#include "ecg/geometry.hpp"
#include "ecg/hash.hpp"
#include "ecg/nn.hpp"
#include "ecg/pipeline.hpp"
#include "ecg/syngen.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace ecg;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open JSON file: " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw UsageError("invalid JSON: " + path);
    return j;
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known,
                    const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : known) ok = ok || it.key() == k;
        if (!ok) throw UsageError("unknown key '" + it.key() + "' in " + where);
    }
}

struct CliConfig {
    nn::TrainConfig train;
    int input_w = 64;
    int input_h = 48;
    syngen::GenConfig gen;
    int window_h = 10;
    int min_area = 20;
};

CliConfig parse_config(const std::string& path) {
    CliConfig cfg;
    if (path.empty()) return cfg;
    json j = load_json_file(path);
    if (!j.is_object()) throw UsageError("config root must be a JSON object");
    reject_unknown(j, {"train", "gen", "maskops"}, "config");

    if (j.contains("train")) {
        const json& t = j["train"];
        reject_unknown(t,
                       {"batch_size", "epochs", "lr0", "lr_min", "pixel_drop", "rotation", "seed",
                        "input_w", "input_h"},
                       "config.train");
        if (t.contains("batch_size")) cfg.train.batch_size = t["batch_size"].get<int>();
        if (t.contains("epochs")) cfg.train.epochs = t["epochs"].get<int>();
        if (t.contains("lr0")) cfg.train.lr0 = t["lr0"].get<double>();
        if (t.contains("lr_min")) cfg.train.lr_min = t["lr_min"].get<double>();
        if (t.contains("seed")) cfg.train.seed = t["seed"].get<uint64_t>();
        if (t.contains("input_w")) cfg.input_w = t["input_w"].get<int>();
        if (t.contains("input_h")) cfg.input_h = t["input_h"].get<int>();
        if (t.contains("pixel_drop")) {
            const json& p = t["pixel_drop"];
            reject_unknown(p, {"apply_prob", "per_pixel_prob"}, "config.train.pixel_drop");
            if (p.contains("apply_prob")) cfg.train.pixel_drop.apply_prob = p["apply_prob"].get<double>();
            if (p.contains("per_pixel_prob"))
                cfg.train.pixel_drop.per_pixel_prob = p["per_pixel_prob"].get<double>();
        }
        if (t.contains("rotation")) {
            const json& r = t["rotation"];
            reject_unknown(r, {"limit_deg", "apply_prob"}, "config.train.rotation");
            if (r.contains("limit_deg")) cfg.train.rotation.limit_deg = r["limit_deg"].get<double>();
            if (r.contains("apply_prob")) cfg.train.rotation.apply_prob = r["apply_prob"].get<double>();
        }
    }
    if (j.contains("gen"))
        cfg.gen = syngen::gen_config_from_json_text(j["gen"].dump());
    if (j.contains("maskops")) {
        const json& m = j["maskops"];
        reject_unknown(m, {"window_h", "min_area"}, "config.maskops");
        if (m.contains("window_h")) cfg.window_h = m["window_h"].get<int>();
        if (m.contains("min_area")) cfg.min_area = m["min_area"].get<int>();
    }
    return cfg;
}

std::string train_config_canonical(const nn::TrainConfig& t, const std::string& stage, int in_h,
                                   int in_w) {
    json j;
    j["stage"] = stage;
    j["batch_size"] = t.batch_size;
    j["epochs"] = t.epochs;
    j["lr0"] = t.lr0;
    j["lr_min"] = t.lr_min;
    j["pixel_drop"] = {{"apply_prob", t.pixel_drop.apply_prob},
                       {"per_pixel_prob", t.pixel_drop.per_pixel_prob}};
    j["rotation"] = {{"limit_deg", t.rotation.limit_deg}, {"apply_prob", t.rotation.apply_prob}};
    j["seed"] = t.seed;
    j["input_h"] = in_h;
    j["input_w"] = in_w;
    return j.dump();
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::vector<nn::ModelParams> load_models(const std::string& weights_arg) {
    std::vector<nn::ModelParams> models;
    for (const std::string& path : split_commas(weights_arg))
        models.push_back(nn::load_weights(path));
    if (models.empty()) throw UsageError("--weights lists no files");
    for (const auto& m : models)
        if (!m.arch.compatible_with(models[0].arch))
            fail(ErrorKind::Compatibility,
                 "ensemble weight files have incompatible descriptors");
    return models;
}

pipeline::ThresholdVector load_thresholds(const std::string& path) {
    json j = load_json_file(path);
    reject_unknown(j, {"MI", "STTC", "CD", "HYP", "AF", "config_hash"}, "thresholds file");
    pipeline::ThresholdVector t{};
    for (size_t c = 0; c < 5; ++c) {
        if (!j.contains(pipeline::kClassNames[c]))
            throw UsageError(std::string("thresholds file missing class ") +
                             pipeline::kClassNames[c]);
        t[c] = j[pipeline::kClassNames[c]].get<double>();
    }
    return t;
}

void write_thresholds(const pipeline::ThresholdVector& t, const std::string& path,
                      const std::string& hash) {
    json j;
    for (size_t c = 0; c < 5; ++c) j[pipeline::kClassNames[c]] = t[c];
    j["config_hash"] = hash;
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Io, "cannot write thresholds: " + path);
    out << j.dump(2) << "\n";
}

int class_index_of(const std::string& name) {
    for (size_t c = 0; c < 5; ++c)
        if (name == pipeline::kClassNames[c]) return int(c);
    std::string valid;
    for (size_t c = 0; c < 5; ++c)
        valid += std::string(c ? ", " : "") + pipeline::kClassNames[c];
    throw UsageError("unknown class '" + name + "'; valid classes: " + valid);
}

// ---------------------------------------------------------------------------

int cmd_gen(int n, const std::string& out_dir, uint64_t seed, const std::string& config_path) {
    CliConfig cfg = parse_config(config_path);
    cfg.gen.n = n;
    cfg.gen.seed = seed;
    std::string manifest = syngen::gen_dataset(cfg.gen, out_dir);
    std::printf("%s\n", manifest.c_str());
    return 0;
}

int cmd_preprocess(const std::string& manifest, const std::string& out_dir, bool emit_gray) {
    pipeline::Dataset data = pipeline::load_manifest(manifest);
    pipeline::PreprocessResult res = pipeline::preprocess_dataset(data, out_dir, emit_gray);
    std::string out_manifest = (fs::path(out_dir) / "manifest.json").string();
    pipeline::save_manifest(res.output, out_manifest);
    std::printf("%s\n", out_manifest.c_str());
    if (!data.empty() && double(res.n_failed) / double(data.size()) > 0.01) {
        std::fprintf(stderr, "preprocess: %zu of %zu samples failed (over the 1%% budget)\n",
                     res.n_failed, data.size());
        return 1;
    }
    return 0;
}

int cmd_train(const std::string& stage, const std::string& manifest,
              const std::string& config_path, const std::string& init_path,
              const std::string& out_path) {
    if (stage != "masks" && stage != "images" && stage != "seg")
        throw UsageError("--stage must be one of: masks, images, seg");
    CliConfig cfg = parse_config(config_path);
    pipeline::Dataset data = pipeline::load_manifest(manifest);

    std::string canonical = train_config_canonical(cfg.train, stage, cfg.input_h, cfg.input_w);
    std::string hash = config_hash(canonical);

    pipeline::TrainLog log;
    nn::ModelParams params;
    if (stage == "seg") {
        if (!init_path.empty()) throw UsageError("--init does not apply to --stage seg");
        params = pipeline::train_segmenter(data, cfg.train, cfg.input_h, cfg.input_w, &log);
    } else {
        std::optional<nn::ModelParams> init;
        if (!init_path.empty()) init = nn::load_weights(init_path);
        pipeline::InputKind kind = stage == "masks" ? pipeline::InputKind::mask
                                                    : pipeline::InputKind::grayscale_inverted;
        params = pipeline::train_stage(init, data, kind, cfg.train, cfg.input_h, cfg.input_w, &log);
    }

    params.arch.meta["config_hash"] = hash;
    nn::save_weights(params, out_path);

    json jlog;
    jlog["stage"] = stage;
    jlog["config_hash"] = hash;
    jlog["lr"] = log.lr;
    jlog["loss"] = log.loss;
    std::ofstream lout(out_path + ".log.json");
    if (!lout) fail(ErrorKind::Io, "cannot write training log");
    lout << jlog.dump(2) << "\n";

    std::printf("%s\n", out_path.c_str());
    return 0;
}

int cmd_fit_thresholds(const std::string& weights, const std::string& manifest,
                       const std::string& out_path) {
    std::vector<nn::ModelParams> models = load_models(weights);
    pipeline::Dataset data = pipeline::load_manifest(manifest);
    std::vector<pipeline::ProbVector> probs = pipeline::predict_probs(models, data);
    std::vector<pipeline::LabelVector> labels;
    for (const auto& rec : data) labels.push_back(rec.labels);
    pipeline::ThresholdVector t = pipeline::fit_thresholds(probs, labels);

    json eff;
    eff["command"] = "fit-thresholds";
    json w = json::array();
    for (const std::string& p : split_commas(weights)) w.push_back(fs::path(p).filename().string());
    eff["weights"] = w;
    write_thresholds(t, out_path, config_hash(eff.dump()));
    std::printf("%s\n", out_path.c_str());
    return 0;
}

int cmd_eval(const std::string& weights, const std::string& manifest,
             const std::string& thresholds_path, const std::string& report_path) {
    std::vector<nn::ModelParams> models = load_models(weights);
    pipeline::Dataset data = pipeline::load_manifest(manifest);
    pipeline::ThresholdVector t{};
    if (!thresholds_path.empty()) t = load_thresholds(thresholds_path);
    else t.fill(0.5);

    pipeline::MetricsReport report = pipeline::evaluate(models, data, t);

    json eff;
    eff["command"] = "eval";
    json w = json::array();
    for (const std::string& p : split_commas(weights)) w.push_back(fs::path(p).filename().string());
    eff["weights"] = w;
    json th;
    for (size_t c = 0; c < 5; ++c) th[pipeline::kClassNames[c]] = t[c];
    eff["thresholds"] = th;

    std::string text = report.to_json(config_hash(eff.dump()));
    if (report_path.empty()) {
        std::printf("%s\n", text.c_str());
    } else {
        std::ofstream out(report_path);
        if (!out) fail(ErrorKind::Io, "cannot write report: " + report_path);
        out << text << "\n";
        std::printf("%s\n", report_path.c_str());
    }
    return 0;
}

int cmd_explain(const std::string& weights_path, const std::string& image_path,
                const std::string& class_name, const std::string& out_path, double alpha) {
    int class_index = class_index_of(class_name);
    nn::ModelParams params = nn::load_weights(weights_path);
    raster::Raster img = raster::read_image(image_path);

    // the model sees the grayscale-inverted resampled image; the overlay base
    // is the same view without inversion
    nn::Tensor input =
        pipeline::tensor_from_raster(img, params.arch.in_h, params.arch.in_w, true);
    explain::Heatmap heat = explain::xgradcam(params, input, class_index);

    raster::Raster base =
        raster::resample_area(raster::to_grayscale(img), params.arch.in_w, params.arch.in_h);
    raster::Raster blended = explain::overlay(base, heat, alpha);
    raster::write_image(blended, out_path);
    std::printf("%s\n", out_path.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ecgpipe: synthetic ECG-photo generation, rectification, curriculum training, "
                 "ensemble evaluation, and XGrad-CAM heatmaps"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
    int gen_n = 100;
    uint64_t gen_seed = 0;
    std::string gen_out, gen_config;
    gen->add_option("--n", gen_n, "sample count")->required();
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--seed", gen_seed, "generator seed")->required();
    gen->add_option("--config", gen_config, "JSON config file (gen section)");

    // preprocess
    auto* pre = app.add_subcommand("preprocess", "rectify photographed ECGs");
    std::string pre_manifest, pre_out;
    bool pre_gray = false;
    pre->add_option("--manifest", pre_manifest, "input manifest")->required();
    pre->add_option("--out", pre_out, "output directory")->required();
    pre->add_flag("--emit-gray-inverted", pre_gray, "also write grayscale-inverted PGMs");

    // train
    auto* train = app.add_subcommand("train", "train a classifier stage or the segmenter");
    std::string train_stage_name, train_manifest, train_config, train_init, train_out;
    train->add_option("--stage", train_stage_name, "masks | images | seg")->required();
    train->add_option("--manifest", train_manifest, "training manifest")->required();
    train->add_option("--config", train_config, "JSON config file");
    train->add_option("--init", train_init, "initial weights (curriculum transfer)");
    train->add_option("--out", train_out, "output weight file")->required();

    // fit-thresholds
    auto* fit = app.add_subcommand("fit-thresholds", "per-class F1-maximizing threshold sweep");
    std::string fit_weights, fit_manifest, fit_out;
    fit->add_option("--weights", fit_weights, "comma-separated weight files")->required();
    fit->add_option("--manifest", fit_manifest, "validation manifest")->required();
    fit->add_option("--out", fit_out, "output thresholds JSON")->required();

    // eval
    auto* eval = app.add_subcommand("eval", "ensemble evaluation with AUROC/F1 report");
    std::string eval_weights, eval_manifest, eval_thresholds, eval_report;
    eval->add_option("--weights", eval_weights, "comma-separated weight files")->required();
    eval->add_option("--manifest", eval_manifest, "evaluation manifest")->required();
    eval->add_option("--thresholds", eval_thresholds, "thresholds JSON (default: uniform 0.5)");
    eval->add_option("--report", eval_report, "output report JSON (default: stdout)");

    // explain
    auto* expl = app.add_subcommand("explain", "XGrad-CAM heatmap overlay for one image");
    std::string expl_weights, expl_image, expl_class, expl_out;
    double expl_alpha = 0.5;
    expl->add_option("--weights", expl_weights, "classifier weight file")->required();
    expl->add_option("--image", expl_image, "input image (PGM/PPM)")->required();
    expl->add_option("--class", expl_class, "class name (MI, STTC, CD, HYP, AF)")->required();
    expl->add_option("--out", expl_out, "output overlay PPM")->required();
    expl->add_option("--alpha", expl_alpha, "heatmap blend fraction (default 0.5)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (gen->parsed()) return cmd_gen(gen_n, gen_out, gen_seed, gen_config);
        if (pre->parsed()) return cmd_preprocess(pre_manifest, pre_out, pre_gray);
        if (train->parsed())
            return cmd_train(train_stage_name, train_manifest, train_config, train_init, train_out);
        if (fit->parsed()) return cmd_fit_thresholds(fit_weights, fit_manifest, fit_out);
        if (eval->parsed()) return cmd_eval(eval_weights, eval_manifest, eval_thresholds, eval_report);
        if (expl->parsed())
            return cmd_explain(expl_weights, expl_image, expl_class, expl_out, expl_alpha);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const Error& e) {
        bool usage = e.kind() == ErrorKind::Config || e.kind() == ErrorKind::Parameter;
        std::fprintf(stderr, "error: %s\n", e.what());
        return usage ? 2 : 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
