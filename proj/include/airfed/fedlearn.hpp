#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <numeric>
#include <vector>

#include "airfed/common.hpp"
#include "airfed/world.hpp"

namespace airfed::fl {

// --- reputation -----------------------------------------------------------------

struct ReputationRecord {
    int uav = -1;
    long tasks_assigned = 0;
    long tasks_completed = 0;
    long fl_attempts = 0;
    long fl_successes = 0;
    double rep = 1.0;
    double rep_prev = 1.0;
};

// EMA-smoothed convex blend of task success and FL communication
// stability. Zero denominators default the component to 1 (optimistic
// prior for fresh UAVs).
inline ReputationRecord update_reputation(ReputationRecord r, double alpha_succ,
                                          double alpha_stab, double rho) {
    double succ = r.tasks_assigned > 0
        ? static_cast<double>(r.tasks_completed) / static_cast<double>(r.tasks_assigned)
        : 1.0;
    double stab = r.fl_attempts > 0
        ? static_cast<double>(r.fl_successes) / static_cast<double>(r.fl_attempts)
        : 1.0;
    double instant = alpha_succ * succ + alpha_stab * stab;
    r.rep_prev = r.rep;
    r.rep = rho * r.rep_prev + (1.0 - rho) * instant;
    r.rep = clamp(r.rep, 0.0, 1.0);
    return r;
}

// --- neighbor selection -----------------------------------------------------------

// Communication neighbors whose link RSSI clears the FL threshold.
inline std::vector<int> select_fl_neighbors(const WorldState& w, int uav) {
    std::vector<int> out;
    const auto& p = w.cfg.radio;
    for (int j = 0; j < static_cast<int>(w.uavs.size()); ++j) {
        if (j == uav || !w.uav(j).active) continue;
        if (!airfed::radio::inter_uav_connected(p, w.uav(uav).pos, w.uav(j).pos)) continue;
        if (airfed::radio::inter_uav_rssi(p, w.uav(uav).pos, w.uav(j).pos) >= p.rssi_fl_w)
            out.push_back(j);
    }
    return out;
}

// Aggregation cadence grows with flight speed.
inline double aggregation_frequency(const Vec2& v, double f_base, double alpha_mobility) {
    return f_base * (1.0 + alpha_mobility * v.norm());
}

// --- gradient-sensitive quantization ----------------------------------------------

// Rank-based bit allocation: rank 1 (largest |g|) gets b_max, the smallest
// gets b_min; ties rank by parameter index.
inline std::vector<uint8_t> bit_width_schedule(const std::vector<double>& grad_mags, int b_min,
                                               int b_max) {
    size_t n = grad_mags.size();
    std::vector<uint8_t> bits(n, static_cast<uint8_t>(b_max));
    if (n <= 1) return bits;  // degenerate map: single parameter gets b_max
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (grad_mags[a] != grad_mags[b]) return grad_mags[a] > grad_mags[b];
        return a < b;
    });
    for (size_t pos = 0; pos < n; ++pos) {
        double rank = static_cast<double>(pos + 1);
        double frac = 1.0 - (rank - 1.0) / (static_cast<double>(n) - 1.0);
        bits[order[pos]] =
            static_cast<uint8_t>(b_min + static_cast<int>(std::floor(frac * (b_max - b_min))));
    }
    return bits;
}

struct QuantizedBlob {
    std::vector<uint32_t> codes;
    std::vector<uint8_t> bits;
    double theta_min = 0.0;
    double theta_max = 0.0;
    bool range_collapsed = false;
    bool raw32 = false;                // full-precision transmission (quantization off)
    std::vector<double> raw_values;    // payload of a raw32 blob

    size_t param_count() const { return raw32 ? raw_values.size() : codes.size(); }
};

inline QuantizedBlob quantize(const std::vector<double>& params,
                              const std::vector<uint8_t>& bits) {
    if (params.size() != bits.size()) throw SimError("quantize: bits/params size mismatch");
    QuantizedBlob b;
    b.bits = bits;
    b.codes.resize(params.size());
    double lo = params.empty() ? 0.0 : params[0];
    double hi = lo;
    for (double v : params) {
        if (!std::isfinite(v)) throw SimError("quantize: non-finite parameter");
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    b.theta_min = lo;
    b.theta_max = hi;
    if (hi == lo) {
        b.range_collapsed = true;  // all codes zero; dequantizes to theta_min
        std::fill(b.codes.begin(), b.codes.end(), 0u);
        return b;
    }
    double range = hi - lo;
    for (size_t i = 0; i < params.size(); ++i) {
        double levels = std::pow(2.0, bits[i]) - 1.0;
        double code = std::round((params[i] - lo) / range * levels);
        b.codes[i] = static_cast<uint32_t>(code);
    }
    return b;
}

inline std::vector<double> dequantize(const QuantizedBlob& b) {
    if (b.raw32) return b.raw_values;
    std::vector<double> out(b.codes.size());
    double range = b.theta_max - b.theta_min;
    for (size_t i = 0; i < b.codes.size(); ++i) {
        if (b.range_collapsed || range == 0.0) {
            out[i] = b.theta_min;
            continue;
        }
        double levels = std::pow(2.0, b.bits[i]) - 1.0;
        out[i] = b.theta_min + static_cast<double>(b.codes[i]) / levels * range;
    }
    return out;
}

// Full-precision stand-in used when quantization is disabled; values pass
// through untouched and the cost model charges 32 bits per parameter.
inline QuantizedBlob raw_blob(const std::vector<double>& params) {
    QuantizedBlob b;
    b.raw32 = true;
    b.bits.assign(params.size(), 32);
    b.raw_values = params;
    return b;
}

// --- message & byte accounting -----------------------------------------------------

struct FlMessage {
    int sender = -1;
    double sender_rep = 1.0;
    std::vector<QuantizedBlob> blobs;
};

constexpr size_t kHeaderBytes = 16;  // magic, version, sender, blob count
constexpr size_t kRepBytes = 8;

// Declared accounting formula for the communication-overhead metric:
// packed value bits + 4-bit width side channel (quantized blobs only) +
// min/max bounds per blob + reputation + fixed header.
inline size_t comm_cost(const FlMessage& msg) {
    size_t total = kHeaderBytes + kRepBytes;
    for (const auto& b : msg.blobs) {
        size_t value_bits = 0;
        for (uint8_t bit : b.bits) value_bits += bit;
        total += (value_bits + 7) / 8;
        if (!b.raw32) total += (b.param_count() * 4 + 7) / 8;  // width side channel
        total += 16;  // theta_min / theta_max
    }
    return total;
}

// --- wire format ---------------------------------------------------------------------
//
// Little-endian layout: 16-byte header (magic 'AIRF', version, sender id,
// blob count), then per blob: n_p u32, theta_min f64, theta_max f64,
// packed 4-bit (b_i - 4) width codes, packed value codes MSB-first within
// each code; trailing 8-byte sender reputation.

constexpr uint32_t kWireMagic = 0x46524941;  // "AIRF" little-endian
constexpr uint32_t kWireVersion = 1;

namespace detail {

inline void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xFF));
}

inline void put_f64(std::vector<uint8_t>& out, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>((bits >> (8 * i)) & 0xFF));
}

inline uint32_t get_u32(const uint8_t* p) {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(p[i]) << (8 * i);
    return v;
}

inline double get_f64(const uint8_t* p) {
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(p[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

class BitWriter {
public:
    explicit BitWriter(std::vector<uint8_t>& out) : out_(out) {}
    void write(uint32_t value, int bits) {
        for (int i = bits - 1; i >= 0; --i) {  // MSB first
            cur_ = static_cast<uint8_t>((cur_ << 1) | ((value >> i) & 1u));
            if (++filled_ == 8) {
                out_.push_back(cur_);
                cur_ = 0;
                filled_ = 0;
            }
        }
    }
    void flush() {
        if (filled_ > 0) {
            out_.push_back(static_cast<uint8_t>(cur_ << (8 - filled_)));
            cur_ = 0;
            filled_ = 0;
        }
    }

private:
    std::vector<uint8_t>& out_;
    uint8_t cur_ = 0;
    int filled_ = 0;
};

class BitReader {
public:
    BitReader(const uint8_t* data, size_t size) : data_(data), size_(size) {}
    uint32_t read(int bits) {
        uint32_t v = 0;
        for (int i = 0; i < bits; ++i) {
            size_t byte = pos_ >> 3;
            if (byte >= size_) throw SimError("FlMessage: truncated bit stream");
            int off = 7 - static_cast<int>(pos_ & 7);
            v = (v << 1) | ((data_[byte] >> off) & 1u);
            ++pos_;
        }
        return v;
    }
    void align() { pos_ = (pos_ + 7) & ~static_cast<size_t>(7); }
    size_t byte_pos() const { return (pos_ + 7) >> 3; }

private:
    const uint8_t* data_;
    size_t size_;
    size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<uint8_t> serialize(const FlMessage& msg) {
    std::vector<uint8_t> out;
    detail::put_u32(out, kWireMagic);
    detail::put_u32(out, kWireVersion);
    detail::put_u32(out, static_cast<uint32_t>(msg.sender));
    detail::put_u32(out, static_cast<uint32_t>(msg.blobs.size()));
    for (const auto& b : msg.blobs) {
        if (b.raw32) throw SimError("serialize: raw32 blobs are in-memory only");
        detail::put_u32(out, static_cast<uint32_t>(b.param_count()));
        detail::put_f64(out, b.theta_min);
        detail::put_f64(out, b.theta_max);
        detail::BitWriter widths(out);
        for (uint8_t bit : b.bits) {
            if (bit < 4 || bit > 19) throw SimError("serialize: width outside 4-bit offset range");
            widths.write(static_cast<uint32_t>(bit - 4), 4);
        }
        widths.flush();
        detail::BitWriter values(out);
        for (size_t i = 0; i < b.codes.size(); ++i) values.write(b.codes[i], b.bits[i]);
        values.flush();
    }
    detail::put_f64(out, msg.sender_rep);
    return out;
}

inline FlMessage deserialize(const std::vector<uint8_t>& data) {
    if (data.size() < kHeaderBytes + kRepBytes) throw SimError("FlMessage: short buffer");
    if (detail::get_u32(data.data()) != kWireMagic) throw SimError("FlMessage: bad magic");
    if (detail::get_u32(data.data() + 4) != kWireVersion)
        throw SimError("FlMessage: unsupported version");
    FlMessage msg;
    msg.sender = static_cast<int>(detail::get_u32(data.data() + 8));
    uint32_t blob_count = detail::get_u32(data.data() + 12);
    size_t pos = kHeaderBytes;
    for (uint32_t bi = 0; bi < blob_count; ++bi) {
        if (pos + 20 > data.size()) throw SimError("FlMessage: truncated blob header");
        QuantizedBlob b;
        uint32_t n = detail::get_u32(data.data() + pos);
        b.theta_min = detail::get_f64(data.data() + pos + 4);
        b.theta_max = detail::get_f64(data.data() + pos + 12);
        pos += 20;
        b.range_collapsed = b.theta_max == b.theta_min;
        detail::BitReader widths(data.data() + pos, data.size() - pos);
        b.bits.resize(n);
        for (uint32_t i = 0; i < n; ++i)
            b.bits[i] = static_cast<uint8_t>(widths.read(4) + 4);
        pos += widths.byte_pos();
        detail::BitReader values(data.data() + pos, data.size() - pos);
        b.codes.resize(n);
        for (uint32_t i = 0; i < n; ++i) b.codes[i] = values.read(b.bits[i]);
        pos += values.byte_pos();
        msg.blobs.push_back(std::move(b));
    }
    if (pos + 8 > data.size()) throw SimError("FlMessage: missing reputation trailer");
    msg.sender_rep = detail::get_f64(data.data() + pos);
    return msg;
}

// --- aggregation -----------------------------------------------------------------------

struct Contribution {
    std::vector<double> params;
    double rep = 1.0;
};

// Reputation-weighted convex combination over self plus whichever
// neighbors actually delivered. All-zero reputations degrade to uniform
// weights. Returns the weights actually used (audited to sum to 1).
inline std::vector<double> aggregation_weights(const std::vector<double>& reps) {
    std::vector<double> w(reps.size(), 0.0);
    double total = 0.0;
    for (double r : reps) total += r;
    if (total <= 0.0) {
        std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(reps.size()));
        return w;
    }
    for (size_t i = 0; i < reps.size(); ++i) w[i] = reps[i] / total;
    return w;
}

inline std::vector<double> aggregate(const std::vector<double>& own, double own_rep,
                                     const std::vector<Contribution>& received,
                                     std::vector<double>* weights_out = nullptr) {
    std::vector<double> reps{own_rep};
    for (const auto& c : received) reps.push_back(c.rep);
    auto w = aggregation_weights(reps);
    std::vector<double> out(own.size(), 0.0);
    for (size_t i = 0; i < own.size(); ++i) out[i] = w[0] * own[i];
    for (size_t c = 0; c < received.size(); ++c) {
        if (received[c].params.size() != own.size())
            throw SimError("aggregate: mismatched parameter vectors");
        for (size_t i = 0; i < own.size(); ++i) out[i] += w[c + 1] * received[c].params[i];
    }
    if (weights_out) *weights_out = w;
    return out;
}

}  // namespace airfed::fl
