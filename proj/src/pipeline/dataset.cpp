#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "ecg/pipeline.hpp"
#include "ecg/rng.hpp"

namespace ecg::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    if (path.is_absolute()) return path.lexically_normal().string();
    return (base / path).lexically_normal().string();
}

} // namespace

Dataset load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open manifest: " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_array())
        fail(ErrorKind::Format, "manifest must be a JSON array: " + path);

    fs::path base = fs::path(path).parent_path();
    Dataset data;
    for (const auto& e : j) {
        if (!e.is_object() || !e.contains("id") || !e.contains("image") || !e.contains("labels"))
            fail(ErrorKind::Format, "manifest record missing id/image/labels");
        SampleRecord rec;
        rec.id = e["id"].get<std::string>();
        rec.image = resolve(base, e["image"].get<std::string>());
        if (e.contains("mask") && !e["mask"].is_null())
            rec.mask = resolve(base, e["mask"].get<std::string>());

        const auto& labels = e["labels"];
        if (!labels.is_object() || labels.size() != 5)
            fail(ErrorKind::Format, "labels must hold exactly the 5 canonical classes");
        for (size_t c = 0; c < 5; ++c) {
            if (!labels.contains(kClassNames[c]))
                fail(ErrorKind::Format, std::string("labels missing class ") + kClassNames[c]);
            int v = labels[kClassNames[c]].get<int>();
            if (v != 0 && v != 1) fail(ErrorKind::Format, "labels must be 0 or 1");
            rec.labels[c] = v;
        }
        if (e.contains("corners")) {
            const auto& c = e["corners"];
            if (!c.is_array() || c.size() != 4)
                fail(ErrorKind::Format, "corners must be a 4-point array");
            for (size_t i = 0; i < 4; ++i) {
                rec.corners[i][0] = c[i][0].get<double>();
                rec.corners[i][1] = c[i][1].get<double>();
            }
            rec.has_corners = true;
        }
        data.push_back(std::move(rec));
    }
    return data;
}

void save_manifest(const Dataset& data, const std::string& path) {
    fs::path base = fs::path(path).parent_path();
    json arr = json::array();
    for (const SampleRecord& rec : data) {
        json e;
        e["id"] = rec.id;
        e["image"] = fs::path(rec.image).lexically_proximate(base).string();
        if (rec.mask) e["mask"] = fs::path(*rec.mask).lexically_proximate(base).string();
        json labels;
        for (size_t c = 0; c < 5; ++c) labels[kClassNames[c]] = rec.labels[c];
        e["labels"] = labels;
        if (rec.has_corners) {
            json corners = json::array();
            for (const auto& p : rec.corners) corners.push_back({p[0], p[1]});
            e["corners"] = corners;
        }
        arr.push_back(std::move(e));
    }
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Io, "cannot write manifest: " + path);
    out << arr.dump(2) << "\n";
    if (!out) fail(ErrorKind::Io, "short write: " + path);
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& records, double train_frac,
                                          uint64_t seed) {
    if (records.empty()) fail(ErrorKind::Parameter, "split_dataset: empty input");
    if (!(train_frac > 0.0) || !(train_frac < 1.0))
        fail(ErrorKind::Parameter, "split_dataset: train_frac must lie in (0, 1)");

    std::vector<size_t> order(records.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    auto gen = rng::stream(seed, rng::kSplit);
    for (size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[gen.below(i)]);

    size_t n_train = size_t(std::llround(train_frac * double(records.size())));
    n_train = std::min(n_train, records.size());
    std::pair<Dataset, Dataset> out;
    for (size_t i = 0; i < order.size(); ++i)
        (i < n_train ? out.first : out.second).push_back(records[order[i]]);
    return out;
}

nn::Tensor tensor_from_raster(const raster::Raster& r, int in_h, int in_w, bool invert_gray) {
    raster::Raster g = raster::to_grayscale(r);
    if (invert_gray) g = raster::invert(g);
    g = raster::resample_area(g, in_w, in_h);
    nn::Tensor t(std::vector<int>{1, in_h, in_w});
    std::copy(g.data.begin(), g.data.end(), t.data.begin());
    return t;
}

nn::Tensor load_input_tensor(const SampleRecord& rec, InputKind kind, int in_h, int in_w) {
    if (kind == InputKind::mask) {
        if (!rec.mask) fail(ErrorKind::Data, "record " + rec.id + " has no mask");
        raster::Raster m = raster::read_image(*rec.mask);
        return tensor_from_raster(m, in_h, in_w, false);
    }
    raster::Raster img = raster::read_image(rec.image);
    return tensor_from_raster(img, in_h, in_w, true);
}

} // namespace ecg::pipeline
