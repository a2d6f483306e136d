#include <bit>
#include <cstdio>
#include <cstring>

#include "ecg/nn.hpp"

namespace ecg::nn {

static_assert(std::endian::native == std::endian::little,
              "ECGW serialization assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'E', 'C', 'G', 'W'};
constexpr uint32_t kVersion = 1;

struct File {
    FILE* f = nullptr;
    explicit File(FILE* f) : f(f) {}
    ~File() { if (f) std::fclose(f); }
    File(const File&) = delete;
    File& operator=(const File&) = delete;
};

void write_u32(FILE* f, uint32_t v) {
    if (std::fwrite(&v, 4, 1, f) != 1) fail(ErrorKind::Io, "weight file: short write");
}

uint32_t read_u32(FILE* f) {
    uint32_t v = 0;
    if (std::fread(&v, 4, 1, f) != 1) fail(ErrorKind::Format, "weight file: truncated");
    return v;
}

} // namespace

void save_weights(const ModelParams& params, const std::string& path) {
    params.validate();
    File file(std::fopen(path.c_str(), "wb"));
    if (!file.f) fail(ErrorKind::Io, "cannot write weights: " + path);

    if (std::fwrite(kMagic, 1, 4, file.f) != 4) fail(ErrorKind::Io, "weight file: short write");
    write_u32(file.f, kVersion);
    std::string desc = params.arch.canonical_json();
    write_u32(file.f, uint32_t(desc.size()));
    if (std::fwrite(desc.data(), 1, desc.size(), file.f) != desc.size())
        fail(ErrorKind::Io, "weight file: short write");
    for (const Tensor& t : params.tensors) {
        if (std::fwrite(t.ptr(), sizeof(float), t.numel(), file.f) != t.numel())
            fail(ErrorKind::Io, "weight file: short write");
    }
    if (std::fflush(file.f) != 0) fail(ErrorKind::Io, "weight file: flush failed");
}

ModelParams load_weights(const std::string& path) {
    File file(std::fopen(path.c_str(), "rb"));
    if (!file.f) fail(ErrorKind::Io, "cannot open weights: " + path);

    char magic[4];
    if (std::fread(magic, 1, 4, file.f) != 4 || std::memcmp(magic, kMagic, 4) != 0)
        fail(ErrorKind::Format, "weight file: bad magic: " + path);
    uint32_t version = read_u32(file.f);
    if (version != kVersion) fail(ErrorKind::Format, "weight file: unsupported version");
    uint32_t desc_len = read_u32(file.f);
    if (desc_len == 0 || desc_len > (1u << 20))
        fail(ErrorKind::Format, "weight file: implausible descriptor length");
    std::string desc(desc_len, '\0');
    if (std::fread(desc.data(), 1, desc_len, file.f) != desc_len)
        fail(ErrorKind::Format, "weight file: truncated descriptor");

    ModelParams params;
    params.arch = ArchDescriptor::from_json_text(desc);
    for (const auto& shape : params.arch.tensor_shapes()) {
        Tensor t(shape);
        if (std::fread(t.ptr(), sizeof(float), t.numel(), file.f) != t.numel())
            fail(ErrorKind::Format, "weight file: truncated tensor payload");
        params.tensors.push_back(std::move(t));
    }
    // any trailing bytes mean the descriptor disagrees with the payload
    if (std::fgetc(file.f) != EOF)
        fail(ErrorKind::Format, "weight file: trailing bytes after tensors");
    params.validate();
    return params;
}

} // namespace ecg::nn
