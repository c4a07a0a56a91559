#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "airfed/common.hpp"
#include "airfed/tensor.hpp"

namespace airfed::ckpt {

// Versioned flat binary: header (magic, version, tensor count), shape
// table (rows, cols per tensor), then all values as little-endian f64 in
// declaration order. The same flattening order feeds the FL quantizer.

constexpr uint32_t kMagic = 0x4B434641;  // "AFCK"
constexpr uint32_t kVersion = 1;

namespace detail {

inline void put_u32(std::ofstream& os, uint32_t v) {
    char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    os.write(buf, 4);
}

inline uint32_t get_u32(std::ifstream& is) {
    unsigned char buf[4];
    is.read(reinterpret_cast<char*>(buf), 4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(buf[i]) << (8 * i);
    return v;
}

}  // namespace detail

inline void save_params(const std::vector<nn::Param*>& params, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw SimError("checkpoint: cannot open " + path + " for writing");
    detail::put_u32(os, kMagic);
    detail::put_u32(os, kVersion);
    detail::put_u32(os, static_cast<uint32_t>(params.size()));
    for (const auto* p : params) {
        detail::put_u32(os, static_cast<uint32_t>(p->w.rows()));
        detail::put_u32(os, static_cast<uint32_t>(p->w.cols()));
    }
    for (const auto* p : params)
        os.write(reinterpret_cast<const char*>(p->w.data()),
                 static_cast<std::streamsize>(p->w.size() * 8));
    if (!os) throw SimError("checkpoint: write failed for " + path);
}

inline void load_params(const std::vector<nn::Param*>& params, const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw SimError("checkpoint: cannot open " + path);
    if (detail::get_u32(is) != kMagic) throw SimError("checkpoint: bad magic in " + path);
    if (detail::get_u32(is) != kVersion) throw SimError("checkpoint: unsupported version");
    uint32_t count = detail::get_u32(is);
    if (count != params.size()) throw SimError("checkpoint: tensor count mismatch");
    for (auto* p : params) {
        uint32_t rows = detail::get_u32(is);
        uint32_t cols = detail::get_u32(is);
        if (rows != static_cast<uint32_t>(p->w.rows()) ||
            cols != static_cast<uint32_t>(p->w.cols()))
            throw SimError("checkpoint: shape mismatch");
    }
    for (auto* p : params) {
        is.read(reinterpret_cast<char*>(p->w.data()),
                static_cast<std::streamsize>(p->w.size() * 8));
    }
    if (!is) throw SimError("checkpoint: truncated file " + path);
}

}  // namespace airfed::ckpt
