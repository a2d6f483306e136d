#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ecg/error.hpp"

namespace ecg::raster {

// 2D intensity grid, 1 or 3 interleaved channels, values in [0,1].
// data[(y*width + x)*channels + c], row-major.
struct Raster {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<float> data;

    Raster() = default;
    Raster(int w, int h, int c, float fill = 0.0f);

    float& at(int x, int y, int c = 0) { return data[(size_t(y) * width + x) * channels + c]; }
    float at(int x, int y, int c = 0) const { return data[(size_t(y) * width + x) * channels + c]; }
    size_t size() const { return data.size(); }

    void validate() const; // throws Error(Shape/Parameter) on broken invariants
};

struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> bits; // 0 or 1, row-major

    BinaryMask() = default;
    BinaryMask(int w, int h, uint8_t fill = 0)
        : width(w), height(h), bits(size_t(w) * h, fill) {}

    uint8_t at(int x, int y) const { return bits[size_t(y) * width + x]; }
    void set(int x, int y, uint8_t v) { bits[size_t(y) * width + x] = v; }
    size_t count() const;
};

// Binary PGM (P5) / PPM (P6), maxval 255. The only image formats the project
// reads or writes.
Raster read_image(const std::string& path);
void write_image(const Raster& r, const std::string& path);

// Masks persist as PGM with values {0, 255}.
BinaryMask read_mask(const std::string& path);
void write_mask(const BinaryMask& m, const std::string& path);

// Quantization convention used by file IO and histogram binning:
// round-half-up of v*255.
inline int quantize255(float v) { return int(v * 255.0f + 0.5f); }

Raster to_grayscale(const Raster& r);
Raster invert(const Raster& r);

// Contrast-limited adaptive histogram equalization on a single-channel
// raster. Tiles are width/tiles_x wide (the last tile absorbs the division
// remainder), 256-bin histograms, per-tile clipping at clip_limit times the
// uniform bin height with the excess redistributed uniformly, and per-pixel
// bilinear blending of the four nearest tile mappings.
Raster clahe(const Raster& r, int tiles_x = 8, int tiles_y = 8, double clip_limit = 2.0);

// Otsu threshold on luma, keep the brighter side, retain the largest
// 8-connected component, then fill enclosed holes. Throws
// Error(Segmentation) when thresholding yields no foreground.
BinaryMask segment_background(const Raster& r);

// Exact area-average resampling to (out_w, out_h); each output pixel is the
// mean of the source region it covers. Used to anti-alias rasters down to
// network input size.
Raster resample_area(const Raster& r, int out_w, int out_h);

} // namespace ecg::raster
