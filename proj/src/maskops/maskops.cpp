#include "ecg/maskops.hpp"

#include <numeric>

namespace ecg::maskops {

namespace {

// Union-find over provisional labels, path compression on find.
struct UnionFind {
    std::vector<int32_t> parent;

    int32_t make() {
        parent.push_back(int32_t(parent.size()));
        return int32_t(parent.size()) - 1;
    }

    int32_t find(int32_t x) {
        int32_t root = x;
        while (parent[root] != root) root = parent[root];
        while (parent[x] != root) {
            int32_t next = parent[x];
            parent[x] = root;
            x = next;
        }
        return root;
    }

    void merge(int32_t a, int32_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (a < b) parent[b] = a;
        else parent[a] = b;
    }
};

} // namespace

BinaryMask sliding_window_filter(const BinaryMask& m, int window_h) {
    if (window_h < 1) fail(ErrorKind::Parameter, "window_h must be >= 1");
    BinaryMask out(m.width, m.height);
    for (int y0 = 0; y0 < m.height; y0 += window_h) {
        int y1 = std::min(m.height, y0 + window_h);
        bool has_signal = false;
        for (int y = y0; y < y1 && !has_signal; ++y)
            for (int x = 0; x < m.width; ++x)
                if (m.at(x, y)) { has_signal = true; break; }
        if (!has_signal) continue;
        for (int y = y0; y < y1; ++y)
            for (int x = 0; x < m.width; ++x)
                out.set(x, y, m.at(x, y));
    }
    return out;
}

LabeledMask label_components(const BinaryMask& m) {
    LabeledMask lm;
    lm.width = m.width;
    lm.height = m.height;
    lm.labels.assign(size_t(m.width) * m.height, 0);

    UnionFind uf;
    uf.make(); // slot 0 reserved for background

    std::vector<int32_t> prov(lm.labels.size(), 0);

    // first pass: assign provisional labels, record 8-neighbor merges
    for (int y = 0; y < m.height; ++y) {
        for (int x = 0; x < m.width; ++x) {
            if (!m.at(x, y)) continue;
            size_t idx = size_t(y) * m.width + x;
            int32_t label = 0;
            // previously visited neighbors: W, NW, N, NE
            const int nx[4] = {x - 1, x - 1, x, x + 1};
            const int ny[4] = {y, y - 1, y - 1, y - 1};
            for (int k = 0; k < 4; ++k) {
                if (nx[k] < 0 || nx[k] >= m.width || ny[k] < 0) continue;
                int32_t nb = prov[size_t(ny[k]) * m.width + nx[k]];
                if (nb == 0) continue;
                if (label == 0) label = nb;
                else uf.merge(label, nb);
            }
            if (label == 0) label = uf.make();
            prov[idx] = label;
        }
    }

    // second pass: flatten and renumber in raster-scan order of first pixel
    std::vector<int32_t> remap(uf.parent.size(), 0);
    int32_t next = 0;
    for (size_t i = 0; i < prov.size(); ++i) {
        if (prov[i] == 0) continue;
        int32_t root = uf.find(prov[i]);
        if (remap[root] == 0) remap[root] = ++next;
        lm.labels[i] = remap[root];
    }
    lm.num_labels = next;
    return lm;
}

std::vector<size_t> component_areas(const LabeledMask& lm) {
    std::vector<size_t> areas(size_t(lm.num_labels) + 1, 0);
    for (int32_t l : lm.labels)
        if (l > 0) ++areas[l];
    return areas;
}

BinaryMask filter_components(const LabeledMask& lm, int min_area) {
    if (min_area < 0) fail(ErrorKind::Parameter, "min_area must be >= 0");
    std::vector<size_t> areas = component_areas(lm);
    BinaryMask out(lm.width, lm.height);
    for (size_t i = 0; i < lm.labels.size(); ++i) {
        int32_t l = lm.labels[i];
        out.bits[i] = (l > 0 && areas[l] >= size_t(min_area)) ? 1 : 0;
    }
    return out;
}

} // namespace ecg::maskops
