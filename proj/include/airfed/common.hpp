#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace airfed {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double norm() const { return std::hypot(x, y); }
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

inline double dbm_to_watts(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w * 1e3); }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

inline double clamp(double v, double lo, double hi) { return v < lo ? lo : (v > hi ? hi : v); }

struct SimError : std::runtime_error {
    explicit SimError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DegenerateGeometry : SimError {
    explicit DegenerateGeometry(const std::string& msg) : SimError(msg) {}
};

struct InfeasiblePath : SimError {
    explicit InfeasiblePath(const std::string& msg) : SimError(msg) {}
};

// FNV-1a, used for config hashes embedded in run outputs.
inline uint64_t fnv1a(const void* data, size_t n, uint64_t h = 1469598103934665603ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

inline uint64_t fnv1a(const std::string& s) { return fnv1a(s.data(), s.size()); }

}  // namespace airfed
