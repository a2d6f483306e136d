#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "ecg/hash.hpp"
#include "ecg/parallel.hpp"
#include "ecg/syngen.hpp"

namespace ecg::syngen {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string gen_config_canonical_json(const GenConfig& cfg) {
    json j;
    j["n"] = cfg.n;
    j["seed"] = cfg.seed;
    j["paper_w"] = cfg.paper_w;
    j["paper_h"] = cfg.paper_h;
    j["canvas_w"] = cfg.canvas_w;
    j["canvas_h"] = cfg.canvas_h;
    j["max_tilt_deg"] = cfg.max_tilt_deg;
    j["contrast_low"] = cfg.contrast_low;
    j["contrast_high"] = cfg.contrast_high;
    j["noise_std"] = cfg.noise_std;
    j["blur_radius"] = cfg.blur_radius;
    j["class_priors"] = cfg.class_priors;
    return j.dump();
}

GenConfig gen_config_from_json_text(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        fail(ErrorKind::Config, "gen config must be a JSON object");

    GenConfig cfg;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        const auto& v = it.value();
        if (k == "n") cfg.n = v.get<int>();
        else if (k == "seed") cfg.seed = v.get<uint64_t>();
        else if (k == "paper_w") cfg.paper_w = v.get<int>();
        else if (k == "paper_h") cfg.paper_h = v.get<int>();
        else if (k == "canvas_w") cfg.canvas_w = v.get<int>();
        else if (k == "canvas_h") cfg.canvas_h = v.get<int>();
        else if (k == "max_tilt_deg") cfg.max_tilt_deg = v.get<double>();
        else if (k == "contrast_low") cfg.contrast_low = v.get<double>();
        else if (k == "contrast_high") cfg.contrast_high = v.get<double>();
        else if (k == "noise_std") cfg.noise_std = v.get<double>();
        else if (k == "blur_radius") cfg.blur_radius = v.get<int>();
        else if (k == "class_priors") {
            if (!v.is_array() || v.size() != 5)
                fail(ErrorKind::Config, "class_priors must hold 5 values");
            for (size_t i = 0; i < 5; ++i) cfg.class_priors[i] = v[i].get<double>();
        } else {
            fail(ErrorKind::Config, "gen config: unknown key '" + k + "'");
        }
    }
    cfg.validate();
    return cfg;
}

std::string gen_dataset(const GenConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    fs::create_directories(out_dir);

    struct Entry {
        std::string id, image, mask;
        LabelVector labels;
        std::array<geometry::Point2, 4> corners;
    };
    std::vector<Entry> entries(size_t(cfg.n));

    parallel_for(size_t(cfg.n), [&](size_t i) {
        auto gen = rng::stream(cfg.seed, rng::kSample, uint64_t(i));

        LabelVector labels{};
        for (size_t c = 0; c < 5; ++c) labels[c] = gen.uniform() < cfg.class_priors[c] ? 1 : 0;

        auto waveforms = gen_waveforms(labels, gen);
        auto [paper, mask] = render_paper(waveforms, cfg, gen);
        auto [canvas, gt] = photograph(paper, cfg, gen, labels, std::move(mask));

        char id[16];
        std::snprintf(id, sizeof id, "%05zu", i);
        Entry& e = entries[i];
        e.id = id;
        e.image = std::string("ecg_") + id + ".ppm";
        e.mask = std::string("mask_") + id + ".pgm";
        e.labels = labels;
        e.corners = gt.corners;

        raster::write_image(canvas, (fs::path(out_dir) / e.image).string());
        raster::write_mask(gt.mask, (fs::path(out_dir) / e.mask).string());
    });

    json arr = json::array();
    for (const Entry& e : entries) {
        json rec;
        rec["id"] = e.id;
        rec["image"] = e.image;
        rec["mask"] = e.mask;
        json labels;
        for (size_t c = 0; c < 5; ++c) labels[kClassNames[c]] = e.labels[c];
        rec["labels"] = labels;
        json corners = json::array();
        for (const auto& p : e.corners) corners.push_back({p.x, p.y});
        rec["corners"] = corners;
        arr.push_back(std::move(rec));
    }

    std::string manifest_path = (fs::path(out_dir) / "manifest.json").string();
    {
        std::ofstream out(manifest_path);
        if (!out) fail(ErrorKind::Io, "cannot write manifest: " + manifest_path);
        out << arr.dump(2) << "\n";
        if (!out) fail(ErrorKind::Io, "short write: " + manifest_path);
    }
    {
        std::string canonical = gen_config_canonical_json(cfg);
        json meta;
        meta["config"] = json::parse(canonical);
        meta["config_hash"] = config_hash(canonical);
        std::ofstream out((fs::path(out_dir) / "gen_meta.json").string());
        if (!out) fail(ErrorKind::Io, "cannot write gen_meta.json");
        out << meta.dump(2) << "\n";
    }
    return manifest_path;
}

} // namespace ecg::syngen
