#include <cstdio>
#include <memory>

#include "ecg/raster.hpp"

namespace ecg::raster {

Raster::Raster(int w, int h, int c, float fill)
    : width(w), height(h), channels(c), data(size_t(w) * h * c, fill) {
    validate();
}

void Raster::validate() const {
    if (width <= 0 || height <= 0)
        fail(ErrorKind::Shape, "raster dimensions must be positive");
    if (channels != 1 && channels != 3)
        fail(ErrorKind::Shape, "raster channels must be 1 or 3");
    if (data.size() != size_t(width) * height * channels)
        fail(ErrorKind::Shape, "raster data length does not match dimensions");
}

size_t BinaryMask::count() const {
    size_t n = 0;
    for (uint8_t b : bits) n += b;
    return n;
}

namespace {

struct File {
    FILE* f = nullptr;
    explicit File(FILE* f) : f(f) {}
    ~File() { if (f) std::fclose(f); }
    File(const File&) = delete;
    File& operator=(const File&) = delete;
};

// Reads one whitespace-delimited unsigned decimal token. No comment support:
// the project writes plain three-token headers and reads the same.
bool read_uint_token(FILE* f, int& out) {
    int ch = std::fgetc(f);
    while (ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n') ch = std::fgetc(f);
    if (ch == EOF || ch < '0' || ch > '9') return false;
    long v = 0;
    while (ch >= '0' && ch <= '9') {
        v = v * 10 + (ch - '0');
        if (v > 1 << 28) return false;
        ch = std::fgetc(f);
    }
    if (ch == EOF) return false;
    if (ch != ' ' && ch != '\t' && ch != '\r' && ch != '\n') return false;
    std::ungetc(ch, f);
    out = int(v);
    return true;
}

Raster read_pnm(const std::string& path) {
    File file(std::fopen(path.c_str(), "rb"));
    if (!file.f) fail(ErrorKind::Io, "cannot open image: " + path);

    int m0 = std::fgetc(file.f);
    int m1 = std::fgetc(file.f);
    int channels;
    if (m0 == 'P' && m1 == '5') channels = 1;
    else if (m0 == 'P' && m1 == '6') channels = 3;
    else fail(ErrorKind::Format, "not a binary PGM/PPM file: " + path);

    int w = 0, h = 0, maxval = 0;
    if (!read_uint_token(file.f, w) || !read_uint_token(file.f, h) ||
        !read_uint_token(file.f, maxval))
        fail(ErrorKind::Format, "malformed PNM header: " + path);
    if (w <= 0 || h <= 0) fail(ErrorKind::Format, "bad PNM dimensions: " + path);
    if (maxval != 255) fail(ErrorKind::Format, "PNM maxval must be 255: " + path);

    // exactly one whitespace byte separates header and payload
    int sep = std::fgetc(file.f);
    if (sep != ' ' && sep != '\t' && sep != '\r' && sep != '\n')
        fail(ErrorKind::Format, "missing header/payload separator: " + path);

    size_t n = size_t(w) * h * channels;
    std::vector<uint8_t> bytes(n);
    if (std::fread(bytes.data(), 1, n, file.f) != n)
        fail(ErrorKind::Io, "truncated PNM payload: " + path);

    Raster r(w, h, channels);
    for (size_t i = 0; i < n; ++i) r.data[i] = float(bytes[i]) / 255.0f;
    return r;
}

} // namespace

Raster read_image(const std::string& path) { return read_pnm(path); }

void write_image(const Raster& r, const std::string& path) {
    r.validate();
    File file(std::fopen(path.c_str(), "wb"));
    if (!file.f) fail(ErrorKind::Io, "cannot write image: " + path);
    std::fprintf(file.f, "P%c\n%d %d\n255\n", r.channels == 1 ? '5' : '6', r.width, r.height);
    std::vector<uint8_t> bytes(r.data.size());
    for (size_t i = 0; i < r.data.size(); ++i) {
        int q = quantize255(r.data[i]);
        bytes[i] = uint8_t(q < 0 ? 0 : (q > 255 ? 255 : q));
    }
    if (std::fwrite(bytes.data(), 1, bytes.size(), file.f) != bytes.size())
        fail(ErrorKind::Io, "short write: " + path);
    if (std::fflush(file.f) != 0) fail(ErrorKind::Io, "flush failed: " + path);
}

BinaryMask read_mask(const std::string& path) {
    Raster r = read_image(path);
    if (r.channels != 1) fail(ErrorKind::Format, "mask must be single-channel PGM: " + path);
    BinaryMask m(r.width, r.height);
    for (size_t i = 0; i < r.data.size(); ++i) m.bits[i] = r.data[i] >= 0.5f ? 1 : 0;
    return m;
}

void write_mask(const BinaryMask& m, const std::string& path) {
    Raster r(m.width, m.height, 1);
    for (size_t i = 0; i < m.bits.size(); ++i) r.data[i] = m.bits[i] ? 1.0f : 0.0f;
    write_image(r, path);
}

} // namespace ecg::raster
