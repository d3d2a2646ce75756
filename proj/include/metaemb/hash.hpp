// Content hashing for pipeline cache keys (FNV-1a 64, hex-encoded).
#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <string_view>

#include "metaemb/error.hpp"

namespace metaemb {

class Fnv1a64 {
public:
    Fnv1a64& update(const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            state_ ^= p[i];
            state_ *= 0x100000001b3ull;
        }
        return *this;
    }

    Fnv1a64& update(std::string_view s) { return update(s.data(), s.size()); }

    template <typename T>
    Fnv1a64& update_pod(const T& value) {
        static_assert(std::is_trivially_copyable_v<T>);
        return update(&value, sizeof(value));
    }

    std::uint64_t value() const { return state_; }

    std::string hex() const {
        char buf[17];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(state_));
        return std::string(buf);
    }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ull;
};

inline std::uint64_t digest_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file for hashing: " + path);
    Fnv1a64 h;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        h.update(buf, static_cast<std::size_t>(in.gcount()));
        if (!in) break;
    }
    return h.value();
}

}  // namespace metaemb
