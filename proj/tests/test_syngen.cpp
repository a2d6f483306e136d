#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "ecg/pipeline.hpp"
#include "ecg/syngen.hpp"
#include "oracles.hpp"

using namespace ecg;
using syngen::GenConfig;
using syngen::LabelVector;

namespace {

namespace fs = std::filesystem;

std::string read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("waveforms: determinism and baseline morphology") {
    LabelVector none{};
    auto g1 = rng::stream(5, rng::kSample, 0);
    auto g2 = rng::stream(5, rng::kSample, 0);
    auto a = syngen::gen_waveforms(none, g1);
    auto b = syngen::gen_waveforms(none, g2);
    for (int lead = 0; lead < syngen::kNumLeads; ++lead)
        CHECK(a[size_t(lead)].samples == b[size_t(lead)].samples);

    syngen::WaveformFeatures f = syngen::measure_features(a[0]);
    CHECK(f.qrs_amp > 0.5);
    CHECK(f.p_energy > 1e-4);       // P bump present
    CHECK(f.interval_cv < 0.10);    // regular rhythm
    CHECK(std::abs(f.st_offset) < 0.08);
    CHECK(f.t_extremum > 0.1);      // upright T
}

TEST_CASE("waveforms: label-conditioned morphology switches") {
    for (uint64_t seed = 1; seed <= 5; ++seed) {
        LabelVector none{};

        auto gb = rng::stream(seed, rng::kSample, 1);
        auto base = syngen::gen_waveforms(none, gb);
        syngen::WaveformFeatures fb = syngen::measure_features(base[0]);

        // CD: QRS half-height width ratio ~ 1.8
        LabelVector cd{};
        cd[syngen::kCD] = 1;
        auto gc = rng::stream(seed, rng::kSample, 1);
        auto wide = syngen::gen_waveforms(cd, gc);
        syngen::WaveformFeatures fc = syngen::measure_features(wide[0]);
        CHECK(fc.qrs_width / fb.qrs_width == doctest::Approx(1.8).epsilon(0.2 / 1.8));

        // HYP: QRS amplitude ratio ~ 1.7
        LabelVector hyp{};
        hyp[syngen::kHYP] = 1;
        auto gh = rng::stream(seed, rng::kSample, 1);
        auto tall = syngen::gen_waveforms(hyp, gh);
        syngen::WaveformFeatures fh = syngen::measure_features(tall[0]);
        CHECK(fh.qrs_amp / fb.qrs_amp == doctest::Approx(1.7).epsilon(0.2 / 1.7));

        // STTC: T extremum flips sign
        LabelVector sttc{};
        sttc[syngen::kSTTC] = 1;
        auto gs = rng::stream(seed, rng::kSample, 1);
        auto flipped = syngen::gen_waveforms(sttc, gs);
        CHECK(syngen::measure_features(flipped[0]).t_extremum < -0.05);

        // MI: elevated ST segment
        LabelVector mi{};
        mi[syngen::kMI] = 1;
        auto gm = rng::stream(seed, rng::kSample, 1);
        auto elevated = syngen::gen_waveforms(mi, gm);
        CHECK(syngen::measure_features(elevated[0]).st_offset > fb.st_offset + 0.1);

        // AF: irregular intervals, vanished P energy
        LabelVector af{};
        af[syngen::kAF] = 1;
        auto ga = rng::stream(seed, rng::kSample, 1);
        auto irregular = syngen::gen_waveforms(af, ga);
        syngen::WaveformFeatures fa = syngen::measure_features(irregular[0]);
        CHECK(fa.interval_cv >= 0.25);
        CHECK(fa.p_energy < 0.05 * fb.p_energy + 1e-4);
    }
}

TEST_CASE("render_paper: ink is darkest, every lead leaves trace support") {
    GenConfig cfg;
    LabelVector none{};
    auto gen = rng::stream(9, rng::kSample, 2);
    auto waves = syngen::gen_waveforms(none, gen);
    auto [paper, mask] = syngen::render_paper(waves, cfg, gen);

    // mask pixels are darker than any grid or background pixel
    raster::Raster luma = raster::to_grayscale(paper);
    float max_ink = 0.0f, min_rest = 1.0f;
    for (int y = 0; y < paper.height; ++y)
        for (int x = 0; x < paper.width; ++x) {
            if (mask.at(x, y)) max_ink = std::max(max_ink, luma.at(x, y));
            else min_rest = std::min(min_rest, luma.at(x, y));
        }
    CHECK(max_ink < min_rest);

    // per-lead cell: trace pixels exist and span rows around the baseline
    int cell_w = cfg.paper_w / 4, cell_h = cfg.paper_h / 3;
    for (int lead = 0; lead < 12; ++lead) {
        int row = lead % 3, col = lead / 3;
        size_t count = 0;
        int min_y = cfg.paper_h, max_y = 0;
        for (int y = row * cell_h; y < (row + 1) * cell_h; ++y)
            for (int x = col * cell_w; x < (col + 1) * cell_w; ++x)
                if (mask.at(x, y)) {
                    ++count;
                    min_y = std::min(min_y, y);
                    max_y = std::max(max_y, y);
                }
        CHECK(count > 0);
        CHECK(max_y - min_y > cell_h / 4); // QRS swings across the band
    }

    // determinism
    auto gen2 = rng::stream(9, rng::kSample, 2);
    auto waves2 = syngen::gen_waveforms(none, gen2);
    auto [paper2, mask2] = syngen::render_paper(waves2, cfg, gen2);
    CHECK(paper2.data == paper.data);
    CHECK(mask2.bits == mask.bits);
}

TEST_CASE("photograph: degenerate settings give a pixel-exact copy") {
    GenConfig cfg;
    cfg.max_tilt_deg = 0.0;
    cfg.contrast_low = cfg.contrast_high = 1.0;
    cfg.noise_std = 0.0;
    cfg.blur_radius = 0;

    LabelVector none{};
    auto gen = rng::stream(11, rng::kSample, 3);
    auto waves = syngen::gen_waveforms(none, gen);
    auto [paper, mask] = syngen::render_paper(waves, cfg, gen);
    auto [canvas, gt] = syngen::photograph(paper, cfg, gen, none, std::move(mask));

    int ox = int(gt.corners[0].x), oy = int(gt.corners[0].y);
    CHECK(gt.corners[0].x == double(ox)); // integer offset
    for (int y = 0; y < paper.height; ++y)
        for (int x = 0; x < paper.width; ++x)
            for (int c = 0; c < 3; ++c)
                CHECK(canvas.at(ox + x, oy + y, c) == paper.at(x, y, c));
}

TEST_CASE("photograph: flat-region noise std lands in the configured band") {
    GenConfig cfg;
    cfg.max_tilt_deg = 0.0;
    cfg.contrast_low = cfg.contrast_high = 1.0;
    cfg.noise_std = 0.05;
    cfg.blur_radius = 0;

    raster::Raster flat(cfg.paper_w, cfg.paper_h, 3, 0.5f);
    auto gen = rng::stream(13, rng::kSample, 4);
    auto [canvas, gt] = syngen::photograph(flat, cfg, gen);

    int ox = int(gt.corners[0].x), oy = int(gt.corners[0].y);
    double sum = 0.0, sum2 = 0.0;
    size_t n = 0;
    for (int y = 8; y < cfg.paper_h - 8; ++y)
        for (int x = 8; x < cfg.paper_w - 8; ++x) {
            double v = canvas.at(ox + x, oy + y, 0);
            sum += v;
            sum2 += v * v;
            ++n;
        }
    double mean = sum / double(n);
    double std_dev = std::sqrt(sum2 / double(n) - mean * mean);
    CHECK(std_dev > 0.045);
    CHECK(std_dev < 0.055);
}

TEST_CASE("gen_dataset: byte-identical reruns, loadable manifest") {
    GenConfig cfg;
    cfg.n = 10;
    cfg.seed = 99;

    auto d1 = fresh_dir("ecg_syngen_a");
    auto d2 = fresh_dir("ecg_syngen_b");
    std::string m1 = syngen::gen_dataset(cfg, d1.string());
    std::string m2 = syngen::gen_dataset(cfg, d2.string());

    size_t files = 0;
    for (const auto& entry : fs::directory_iterator(d1)) {
        fs::path other = d2 / entry.path().filename();
        REQUIRE(fs::exists(other));
        CHECK(read_bytes(entry.path()) == read_bytes(other));
        ++files;
    }
    CHECK(files == 2 * 10 + 2); // images + masks + manifest + gen_meta

    pipeline::Dataset data = pipeline::load_manifest(m1);
    REQUIRE(data.size() == 10);
    for (const auto& rec : data) {
        CHECK(fs::exists(rec.image));
        REQUIRE(rec.mask.has_value());
        CHECK(fs::exists(*rec.mask));
        CHECK(rec.has_corners);
        for (int v : rec.labels) CHECK((v == 0 || v == 1));
        raster::Raster img = raster::read_image(rec.image);
        CHECK(img.width == cfg.canvas_w);
        CHECK(img.channels == 3);
        raster::BinaryMask m = raster::read_mask(*rec.mask);
        CHECK(m.width == cfg.paper_w);
        CHECK(m.count() > 0);
    }
    (void)m2;
}

TEST_CASE("learnability probe: logistic regression on waveform features") {
    // 1000 label vectors, features from lead 0; held-out logistic probe must
    // reach AUROC >= 0.9 per class, so image-pipeline failures cannot be
    // blamed on the generator
    const int n = 1000;
    std::vector<std::array<double, 6>> feats(n);
    std::vector<LabelVector> labels(n);
    GenConfig cfg;

    for (int i = 0; i < n; ++i) {
        auto gen = rng::stream(321, rng::kSample, uint64_t(i));
        LabelVector lv{};
        for (size_t c = 0; c < 5; ++c) lv[c] = gen.uniform() < cfg.class_priors[c] ? 1 : 0;
        auto waves = syngen::gen_waveforms(lv, gen);
        syngen::WaveformFeatures f = syngen::measure_features(waves[0]);
        feats[size_t(i)] = {f.qrs_width, f.qrs_amp, f.st_offset,
                            f.t_extremum, f.p_energy, f.interval_cv};
        labels[size_t(i)] = lv;
    }

    // standardize features on the training half
    const int n_train = n / 2;
    for (size_t c = 0; c < 5; ++c) {
        std::array<double, 6> mu{}, sd{};
        for (int i = 0; i < n_train; ++i)
            for (int k = 0; k < 6; ++k) mu[size_t(k)] += feats[size_t(i)][size_t(k)];
        for (auto& m : mu) m /= n_train;
        for (int i = 0; i < n_train; ++i)
            for (int k = 0; k < 6; ++k) {
                double d = feats[size_t(i)][size_t(k)] - mu[size_t(k)];
                sd[size_t(k)] += d * d;
            }
        for (auto& s : sd) s = std::sqrt(s / n_train) + 1e-9;

        auto x_of = [&](int i, int k) {
            return (feats[size_t(i)][size_t(k)] - mu[size_t(k)]) / sd[size_t(k)];
        };

        // plain gradient-descent logistic regression
        std::array<double, 7> w{}; // 6 weights + bias
        for (int iter = 0; iter < 400; ++iter) {
            std::array<double, 7> g{};
            for (int i = 0; i < n_train; ++i) {
                double z = w[6];
                for (int k = 0; k < 6; ++k) z += w[size_t(k)] * x_of(i, k);
                double p = 1.0 / (1.0 + std::exp(-z));
                double err = p - labels[size_t(i)][c];
                for (int k = 0; k < 6; ++k) g[size_t(k)] += err * x_of(i, k);
                g[6] += err;
            }
            for (int k = 0; k < 7; ++k) w[size_t(k)] -= 0.05 * g[size_t(k)] / n_train;
        }

        std::vector<double> scores;
        std::vector<int> truth;
        for (int i = n_train; i < n; ++i) {
            double z = w[6];
            for (int k = 0; k < 6; ++k) z += w[size_t(k)] * x_of(i, k);
            scores.push_back(z);
            truth.push_back(labels[size_t(i)][c]);
        }
        double auc = oracles::pair_counting_auroc(scores, truth);
        INFO("class ", syngen::kClassNames[c], " probe AUROC ", auc);
        CHECK(auc >= 0.9);
    }
}

TEST_CASE("gen config JSON round trip is strict") {
    GenConfig cfg;
    cfg.n = 7;
    cfg.noise_std = 0.013;
    std::string text = syngen::gen_config_canonical_json(cfg);
    GenConfig back = syngen::gen_config_from_json_text(text);
    CHECK(syngen::gen_config_canonical_json(back) == text);

    CHECK_THROWS_AS(syngen::gen_config_from_json_text("{\"bogus\": 1}"), Error);
    CHECK_THROWS_AS(syngen::gen_config_from_json_text("{\"max_tilt_deg\": 80}"), Error);
}
