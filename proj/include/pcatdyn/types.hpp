#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pcatdyn {

// Error categories map onto CLI exit codes (2/3/4).
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct config_error : error {
    using error::error;
};
struct data_error : error {
    using error::error;
};
struct numeric_error : error {
    using error::error;
};

// Voxel label codes shared by all masks.
enum class label : std::uint8_t {
    bg = 0,
    myo,
    aorta,
    lumen_lad,
    lumen_rca,
    sub,
    pat,
    eat,
    paat,
    pcat,
    pcat_prox,
    pcat_dist,
    eat_remote,
};
inline constexpr std::uint8_t label_count = 13;

inline const char* label_name(label l) {
    switch (l) {
    case label::bg: return "BG";
    case label::myo: return "MYO";
    case label::aorta: return "AORTA";
    case label::lumen_lad: return "LUMEN_LAD";
    case label::lumen_rca: return "LUMEN_RCA";
    case label::sub: return "SUB";
    case label::pat: return "PAT";
    case label::eat: return "EAT";
    case label::paat: return "PAAT";
    case label::pcat: return "PCAT";
    case label::pcat_prox: return "PCAT_PROX";
    case label::pcat_dist: return "PCAT_DIST";
    case label::eat_remote: return "EAT_REMOTE";
    }
    throw data_error("unknown label code " + std::to_string(int(l)));
}

inline label label_from_name(const std::string& s) {
    for (std::uint8_t c = 0; c < label_count; ++c)
        if (s == label_name(label(c))) return label(c);
    throw config_error("unknown label name '" + s + "'");
}

struct vec3 {
    double x = 0, y = 0, z = 0;

    double operator[](int i) const { return i == 0 ? x : i == 1 ? y : z; }
    vec3 operator+(const vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    vec3 operator-(const vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double norm2() const { return x * x + y * y + z * z; }
    double norm() const { return std::sqrt(norm2()); }
};

struct dims3 {
    int nx = 0, ny = 0, nz = 0;

    std::size_t count() const {
        return std::size_t(nx) * std::size_t(ny) * std::size_t(nz);
    }
    bool operator==(const dims3&) const = default;
};

// Closed HU interval; both ends inclusive.
struct hu_window {
    double lo = 0, hi = 0;
    bool contains(double v) const { return v >= lo && v <= hi; }
};

inline constexpr hu_window fat_window_standard{-190.0, -30.0};
inline constexpr hu_window fat_window_extended{-190.0, -10.0};

// 3D scalar grid in Hounsfield units. Storage is x-fastest, then y, then z.
struct volume_grid {
    dims3 dim;
    vec3 spacing{1, 1, 1};
    vec3 origin{0, 0, 0};
    std::optional<double> time_s;
    std::vector<float> values;

    std::size_t index(int i, int j, int k) const {
        return std::size_t(i) +
               std::size_t(dim.nx) * (std::size_t(j) + std::size_t(dim.ny) * std::size_t(k));
    }
    float at(int i, int j, int k) const { return values[index(i, j, k)]; }
    float& at(int i, int j, int k) { return values[index(i, j, k)]; }

    vec3 voxel_center(int i, int j, int k) const {
        return {origin.x + i * spacing.x, origin.y + j * spacing.y, origin.z + k * spacing.z};
    }
    double voxel_volume_mm3() const { return spacing.x * spacing.y * spacing.z; }

    void validate() const {
        if (dim.nx < 1 || dim.ny < 1 || dim.nz < 1)
            throw data_error("volume dims must all be >= 1");
        if (!(spacing.x > 0 && spacing.y > 0 && spacing.z > 0))
            throw data_error("volume spacing must be positive");
        if (values.size() != dim.count())
            throw data_error("volume value count does not match dims");
        for (float v : values)
            if (!std::isfinite(v)) throw data_error("volume contains non-finite value");
    }
};

struct label_mask {
    dims3 dim;
    vec3 spacing{1, 1, 1};
    vec3 origin{0, 0, 0};
    std::vector<std::uint8_t> labels;

    std::size_t index(int i, int j, int k) const {
        return std::size_t(i) +
               std::size_t(dim.nx) * (std::size_t(j) + std::size_t(dim.ny) * std::size_t(k));
    }
    std::uint8_t at(int i, int j, int k) const { return labels[index(i, j, k)]; }
    std::uint8_t& at(int i, int j, int k) { return labels[index(i, j, k)]; }

    vec3 voxel_center(int i, int j, int k) const {
        return {origin.x + i * spacing.x, origin.y + j * spacing.y, origin.z + k * spacing.z};
    }

    std::size_t count(label code) const {
        std::size_t n = 0;
        for (auto l : labels) n += (l == std::uint8_t(code));
        return n;
    }

    // Anatomy masks use the label enum; partition maps (annular rings) use
    // plain ring indices and skip this check.
    void validate(bool enum_codes = true) const {
        if (dim.nx < 1 || dim.ny < 1 || dim.nz < 1)
            throw data_error("mask dims must all be >= 1");
        if (!(spacing.x > 0 && spacing.y > 0 && spacing.z > 0))
            throw data_error("mask spacing must be positive");
        if (labels.size() != dim.count())
            throw data_error("mask label count does not match dims");
        if (enum_codes)
            for (auto l : labels)
                if (l >= label_count) throw data_error("mask contains out-of-range label code");
    }
};

inline bool same_geometry(const dims3& da, const vec3& sa, const vec3& oa, const dims3& db,
                          const vec3& sb, const vec3& ob) {
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9 * (1 + std::abs(a)); };
    return da == db && close(sa.x, sb.x) && close(sa.y, sb.y) && close(sa.z, sb.z) &&
           close(oa.x, ob.x) && close(oa.y, ob.y) && close(oa.z, ob.z);
}
inline bool same_geometry(const volume_grid& a, const volume_grid& b) {
    return same_geometry(a.dim, a.spacing, a.origin, b.dim, b.spacing, b.origin);
}
inline bool same_geometry(const volume_grid& a, const label_mask& b) {
    return same_geometry(a.dim, a.spacing, a.origin, b.dim, b.spacing, b.origin);
}
inline bool same_geometry(const label_mask& a, const label_mask& b) {
    return same_geometry(a.dim, a.spacing, a.origin, b.dim, b.spacing, b.origin);
}

// Time-ordered sequence of co-registered volumes (the shuttle acquisition).
struct dynamic_series {
    std::vector<volume_grid> volumes;
    std::vector<double> times_s;

    std::size_t size() const { return volumes.size(); }

    void validate() const {
        if (volumes.empty()) throw data_error("series has no volumes");
        if (times_s.size() != volumes.size())
            throw data_error("series time count does not match volume count");
        for (std::size_t i = 0; i < volumes.size(); ++i) {
            volumes[i].validate();
            if (!same_geometry(volumes[i], volumes[0]))
                throw data_error("series volume " + std::to_string(i) + " geometry mismatch");
        }
        for (std::size_t i = 1; i < times_s.size(); ++i)
            if (!(times_s[i] > times_s[i - 1])) throw data_error("non-increasing times");
    }
};

}  // namespace pcatdyn
