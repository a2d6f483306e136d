#pragma once

#include <cstdint>
#include <string>

namespace ecg {

// FNV-1a 64-bit over the canonical JSON text of a config; the hex digest is
// what output artifacts embed.
inline uint64_t fnv1a64(const std::string& text) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string config_hash(const std::string& canonical_json) {
    static const char* digits = "0123456789abcdef";
    uint64_t h = fnv1a64(canonical_json);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[size_t(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

} // namespace ecg
