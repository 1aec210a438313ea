#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "pcatdyn/config.hpp"
#include "pcatdyn/types.hpp"

namespace pcatdyn::io {

static_assert(std::endian::native == std::endian::little,
              "volraw payloads are little-endian; big-endian hosts unsupported");
static_assert(sizeof(float) == 4);

namespace fs = std::filesystem;

// Volumes are stored as <base>.volhdr (structured text) plus <base>.volraw
// (raw little-endian float32, x fastest). Masks use the same header with an
// 8-bit payload. Paths may be given with or without the .volhdr extension.
inline std::string strip_volhdr(const std::string& path) {
    const std::string ext = ".volhdr";
    if (path.size() > ext.size() && path.compare(path.size() - ext.size(), ext.size(), ext) == 0)
        return path.substr(0, path.size() - ext.size());
    return path;
}

namespace detail {

inline void write_header(const std::string& base, const dims3& dim, const vec3& spacing,
                         const vec3& origin, const std::optional<double>& time_s,
                         const char* value_type, const char* value_units) {
    std::ofstream out(base + ".volhdr");
    if (!out) throw data_error("cannot write '" + base + ".volhdr'");
    out << "pcatdyn-volume 1\n";
    out << "dims = " << dim.nx << " " << dim.ny << " " << dim.nz << "\n";
    out << "spacing = " << fmt_g(spacing.x) << " " << fmt_g(spacing.y) << " " << fmt_g(spacing.z)
        << "\n";
    out << "origin = " << fmt_g(origin.x) << " " << fmt_g(origin.y) << " " << fmt_g(origin.z)
        << "\n";
    if (time_s) out << "time_s = " << fmt_g(*time_s) << "\n";
    out << "value_type = " << value_type << "\n";
    out << "value_units = " << value_units << "\n";
    if (!out) throw data_error("failed writing '" + base + ".volhdr'");
}

struct header_info {
    dims3 dim;
    vec3 spacing, origin;
    std::optional<double> time_s;
    std::string value_type;
};

inline header_info read_header(const std::string& base) {
    std::ifstream in(base + ".volhdr");
    if (!in) throw data_error("cannot open '" + base + ".volhdr'");
    std::string magic;
    std::getline(in, magic);
    if (trim(magic) != "pcatdyn-volume 1")
        throw data_error("'" + base + ".volhdr' is not a pcatdyn volume header");
    std::ostringstream rest;
    rest << in.rdbuf();
    auto doc = config_doc::parse(rest.str());
    const auto& s = doc.sections.front();
    header_info h;
    auto d = s.get_doubles("dims", 3);
    h.dim = {int(d[0]), int(d[1]), int(d[2])};
    auto sp = s.get_doubles("spacing", 3);
    h.spacing = {sp[0], sp[1], sp[2]};
    auto og = s.get_doubles("origin", 3);
    h.origin = {og[0], og[1], og[2]};
    if (s.has("time_s")) h.time_s = s.get_double("time_s");
    h.value_type = s.get("value_type");
    return h;
}

template <class T>
void write_payload(const std::string& base, const std::vector<T>& data) {
    std::ofstream out(base + ".volraw", std::ios::binary);
    if (!out) throw data_error("cannot write '" + base + ".volraw'");
    out.write(reinterpret_cast<const char*>(data.data()),
              std::streamsize(data.size() * sizeof(T)));
    if (!out) throw data_error("failed writing '" + base + ".volraw'");
}

template <class T>
std::vector<T> read_payload(const std::string& base, std::size_t count) {
    std::ifstream in(base + ".volraw", std::ios::binary);
    if (!in) throw data_error("cannot open '" + base + ".volraw'");
    std::vector<T> data(count);
    in.read(reinterpret_cast<char*>(data.data()), std::streamsize(count * sizeof(T)));
    if (std::size_t(in.gcount()) != count * sizeof(T))
        throw data_error("'" + base + ".volraw' is truncated");
    return data;
}

}  // namespace detail

inline void write_volume(const volume_grid& v, const std::string& path) {
    v.validate();
    const std::string base = strip_volhdr(path);
    detail::write_header(base, v.dim, v.spacing, v.origin, v.time_s, "float32", "HU");
    detail::write_payload(base, v.values);
}

inline volume_grid read_volume(const std::string& path) {
    const std::string base = strip_volhdr(path);
    auto h = detail::read_header(base);
    if (h.value_type != "float32")
        throw data_error("'" + base + "' is not a float32 volume (got " + h.value_type + ")");
    volume_grid v;
    v.dim = h.dim;
    v.spacing = h.spacing;
    v.origin = h.origin;
    v.time_s = h.time_s;
    v.values = detail::read_payload<float>(base, v.dim.count());
    v.validate();
    return v;
}

inline void write_mask(const label_mask& m, const std::string& path, bool enum_codes = true) {
    m.validate(enum_codes);
    const std::string base = strip_volhdr(path);
    detail::write_header(base, m.dim, m.spacing, m.origin, std::nullopt, "uint8",
                         enum_codes ? "labels" : "indices");
    detail::write_payload(base, m.labels);
}

inline label_mask read_mask(const std::string& path) {
    const std::string base = strip_volhdr(path);
    auto h = detail::read_header(base);
    if (h.value_type != "uint8")
        throw data_error("'" + base + "' is not a uint8 mask (got " + h.value_type + ")");
    label_mask m;
    m.dim = h.dim;
    m.spacing = h.spacing;
    m.origin = h.origin;
    m.labels = detail::read_payload<std::uint8_t>(base, m.dim.count());
    m.validate(false);
    return m;
}

// Series manifest: one "scan = <path> <time_s>" line per volume, paths
// relative to the manifest's directory.
inline dynamic_series read_series(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw data_error("cannot open manifest '" + manifest_path + "'");
    std::string magic;
    std::getline(in, magic);
    if (trim(magic) != "pcatdyn-series 1")
        throw data_error("'" + manifest_path + "' is not a pcatdyn series manifest");
    std::ostringstream rest;
    rest << in.rdbuf();
    auto doc = config_doc::parse(rest.str());
    const fs::path dir = fs::path(manifest_path).parent_path();

    dynamic_series s;
    for (auto& [k, v] : doc.sections.front().entries) {
        if (k != "scan") throw data_error("manifest: unexpected key '" + k + "'");
        auto toks = split_ws(v);
        if (toks.size() != 2) throw data_error("manifest: scan lines need <path> <time_s>");
        fs::path p = toks[0];
        if (p.is_relative()) p = dir / p;
        volume_grid vol = read_volume(p.string());
        double t = std::stod(toks[1]);
        vol.time_s = t;
        s.volumes.push_back(std::move(vol));
        s.times_s.push_back(t);
    }
    s.validate();
    return s;
}

// Writes scan volumes plus a manifest into dir; returns the manifest path.
inline std::string write_series(const dynamic_series& s, const std::string& dir,
                                const std::string& stem = "scan") {
    s.validate();
    fs::create_directories(dir);
    std::ofstream mf(fs::path(dir) / (stem + "_series.txt"));
    if (!mf) throw data_error("cannot write series manifest in '" + dir + "'");
    mf << "pcatdyn-series 1\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof name, "%s_%02zu", stem.c_str(), i);
        volume_grid v = s.volumes[i];
        v.time_s = s.times_s[i];
        write_volume(v, (fs::path(dir) / name).string());
        mf << "scan = " << name << ".volhdr " << fmt_g(s.times_s[i]) << "\n";
    }
    return (fs::path(dir) / (stem + "_series.txt")).string();
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

struct csv_writer {
    std::ofstream out;
    explicit csv_writer(const std::string& path) : out(path) {
        if (!out) throw data_error("cannot write '" + path + "'");
    }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out << ",";
            out << csv_escape(cells[i]);
        }
        out << "\n";
    }
};

inline std::string num(double v) { return fmt_g(v, 10); }

// FNV-1a over file bytes, used for the report's output inventory.
inline std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open '" + path + "' for checksum");
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[65536];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= std::uint8_t(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (!in) break;
    }
    return h;
}

inline std::uint64_t fnv1a_text(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace pcatdyn::io
