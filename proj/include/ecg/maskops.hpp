#pragma once

#include <cstdint>
#include <vector>

#include "ecg/raster.hpp"

namespace ecg::maskops {

using raster::BinaryMask;

// Connected-component labeling result. Labels are contiguous 1..K in
// raster-scan order of each component's first pixel; 0 is background.
struct LabeledMask {
    int width = 0;
    int height = 0;
    int num_labels = 0;
    std::vector<int32_t> labels;

    int32_t at(int x, int y) const { return labels[size_t(y) * width + x]; }
};

// Zeroes every non-overlapping horizontal window (window_h rows, last window
// may be shorter) that contains no true pixel; windows with signal are kept
// verbatim.
BinaryMask sliding_window_filter(const BinaryMask& m, int window_h);

// Two-pass union-find labeling with 8-way connectivity.
LabeledMask label_components(const BinaryMask& m);

// True exactly where the component's pixel count is >= min_area.
BinaryMask filter_components(const LabeledMask& lm, int min_area);

// Pixel count per label, index 0 unused.
std::vector<size_t> component_areas(const LabeledMask& lm);

} // namespace ecg::maskops
