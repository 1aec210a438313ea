#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "pcatdyn/io.hpp"
#include "pcatdyn/rng.hpp"
#include "pcatdyn/stats.hpp"
#include "pcatdyn/types.hpp"

using namespace pcatdyn;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
    static fs::path dir = [] {
        auto p = fs::temp_directory_path() / "pcatdyn_volgrid_tests";
        fs::create_directories(p);
        return p;
    }();
    return dir;
}

std::vector<std::uint8_t> file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Independent IEEE-754 binary32 little-endian encoder (sign/exponent/mantissa
// assembled by hand; round-to-nearest-even on the 24-bit significand).
std::array<std::uint8_t, 4> encode_f32_le(double v) {
    std::uint32_t bits = 0;
    if (std::signbit(v)) bits |= 0x80000000u;
    double a = std::fabs(v);
    if (a != 0.0) {
        int e = 0;
        double m = std::frexp(a, &e);  // a = m * 2^e, m in [0.5, 1)
        int exp = e - 1 + 127;
        REQUIRE(exp > 0);
        REQUIRE(exp < 255);
        double scaled = m * 2.0 * 8388608.0;  // significand in [2^23, 2^24)
        auto sig = std::uint32_t(scaled);
        const double frac = scaled - double(sig);
        if (frac > 0.5 || (frac == 0.5 && (sig & 1u))) ++sig;
        if (sig == (1u << 24)) {
            sig >>= 1;
            ++exp;
        }
        bits |= std::uint32_t(exp) << 23;
        bits |= sig & 0x7fffffu;
    }
    return {std::uint8_t(bits), std::uint8_t(bits >> 8), std::uint8_t(bits >> 16),
            std::uint8_t(bits >> 24)};
}

volume_grid make_volume(dims3 d, float fill = 0.f) {
    volume_grid v;
    v.dim = d;
    v.spacing = {1.0, 1.25, 2.0};
    v.origin = {-3.0, 0.5, 7.0};
    v.values.assign(d.count(), fill);
    return v;
}

}  // namespace

TEST_CASE("zero volume writes an all-zero 32-byte payload") {
    auto v = make_volume({2, 2, 2});
    const auto base = (scratch_dir() / "zeros").string();
    io::write_volume(v, base);
    const auto bytes = file_bytes(base + ".volraw");
    REQUIRE(bytes.size() == 32);
    for (auto b : bytes) CHECK(b == 0);
}

TEST_CASE("payload bytes match an independent IEEE-754 LE encoding") {
    volume_grid v = make_volume({4, 1, 1});
    const double samples[4] = {-190.0, -30.0, 0.0, 100.0};
    for (int i = 0; i < 4; ++i) v.values[std::size_t(i)] = float(samples[i]);
    const auto base = (scratch_dir() / "encoded").string();
    io::write_volume(v, base);
    const auto bytes = file_bytes(base + ".volraw");
    REQUIRE(bytes.size() == 16);
    for (int i = 0; i < 4; ++i) {
        const auto expect = encode_f32_le(samples[i]);
        for (int b = 0; b < 4; ++b) CHECK(bytes[std::size_t(4 * i + b)] == expect[std::size_t(b)]);
    }
}

TEST_CASE("volume round-trip is bit exact for random finite data") {
    volume_grid v = make_volume({7, 5, 3});
    v.time_s = 4.5;
    for (std::size_t i = 0; i < v.values.size(); ++i) {
        const auto h = rng::splitmix64(0xfeedULL + i);
        v.values[i] = float((rng::uniform01(h) - 0.5) * 2000.0);
    }
    const auto base = (scratch_dir() / "roundtrip").string();
    io::write_volume(v, base);
    const auto r = io::read_volume(base);
    REQUIRE(r.dim == v.dim);
    CHECK(r.spacing.x == v.spacing.x);
    CHECK(r.spacing.y == v.spacing.y);
    CHECK(r.spacing.z == v.spacing.z);
    CHECK(r.origin.x == v.origin.x);
    CHECK(r.time_s == v.time_s);
    REQUIRE(r.values.size() == v.values.size());
    CHECK(std::memcmp(r.values.data(), v.values.data(), v.values.size() * 4) == 0);
}

TEST_CASE("mask round-trip preserves every label byte") {
    label_mask m;
    m.dim = {6, 4, 5};
    m.spacing = {0.5, 0.5, 1.0};
    m.origin = {0, 0, 0};
    m.labels.resize(m.dim.count());
    for (std::size_t i = 0; i < m.labels.size(); ++i)
        m.labels[i] = std::uint8_t(rng::splitmix64(i) % label_count);
    const auto base = (scratch_dir() / "mask").string();
    io::write_mask(m, base);
    const auto r = io::read_mask(base);
    REQUIRE(r.dim == m.dim);
    CHECK(r.labels == m.labels);
}

TEST_CASE("unwritable path is reported") {
    auto v = make_volume({2, 2, 2});
    CHECK_THROWS_AS(io::write_volume(v, "/nonexistent_dir_xyz/vol"), data_error);
}

TEST_CASE("series manifest round-trip and validation") {
    const auto dir = (scratch_dir() / "series").string();
    fs::create_directories(dir);

    SECTION("11 scans at 2 s spacing load as a length-11 series") {
        dynamic_series s;
        for (int k = 0; k < 11; ++k) {
            auto v = make_volume({3, 3, 3}, float(k));
            s.volumes.push_back(v);
            s.times_s.push_back(2.0 * k);
        }
        const auto manifest = io::write_series(s, dir, "full");
        const auto r = io::read_series(manifest);
        REQUIRE(r.size() == 11);
        CHECK(r.times_s.front() == 0.0);
        CHECK(r.times_s.back() == 20.0);
        CHECK(r.volumes[5].values[0] == 5.0f);
    }

    SECTION("single-volume manifest loads as length 1") {
        dynamic_series s;
        s.volumes.push_back(make_volume({3, 3, 3}));
        s.times_s.push_back(0.0);
        const auto manifest = io::write_series(s, dir, "single");
        CHECK(io::read_series(manifest).size() == 1);
    }

    SECTION("non-increasing times are rejected") {
        io::write_volume(make_volume({2, 2, 2}), dir + "/t0");
        io::write_volume(make_volume({2, 2, 2}), dir + "/t1");
        io::write_volume(make_volume({2, 2, 2}), dir + "/t2");
        std::ofstream mf(dir + "/bad_series.txt");
        mf << "pcatdyn-series 1\n";
        mf << "scan = t0.volhdr 0\n";
        mf << "scan = t1.volhdr 2\n";
        mf << "scan = t2.volhdr 2\n";
        mf.close();
        CHECK_THROWS_WITH(io::read_series(dir + "/bad_series.txt"),
                          Catch::Matchers::ContainsSubstring("non-increasing times"));
    }

    SECTION("geometry mismatch is rejected") {
        io::write_volume(make_volume({2, 2, 2}), dir + "/g0");
        io::write_volume(make_volume({2, 2, 3}), dir + "/g1");
        std::ofstream mf(dir + "/geo_series.txt");
        mf << "pcatdyn-series 1\n";
        mf << "scan = g0.volhdr 0\n";
        mf << "scan = g1.volhdr 2\n";
        mf.close();
        CHECK_THROWS_AS(io::read_series(dir + "/geo_series.txt"), data_error);
    }

    SECTION("missing volume file is reported") {
        std::ofstream mf(dir + "/missing_series.txt");
        mf << "pcatdyn-series 1\n";
        mf << "scan = nope.volhdr 0\n";
        mf.close();
        CHECK_THROWS_AS(io::read_series(dir + "/missing_series.txt"), data_error);
    }
}

TEST_CASE("randomized manifests: constructor rejects every invariant breach") {
    // hand-rolled property sweep over randomized series
    for (std::uint64_t trial = 0; trial < 60; ++trial) {
        const std::uint64_t seed = rng::splitmix64(trial * 977 + 13);
        const int n = 2 + int(seed % 5);
        dynamic_series s;
        bool broke_geometry = false, broke_times = false;
        double t = 0;
        for (int k = 0; k < n; ++k) {
            dims3 d{3, 3, 2};
            const auto h = rng::splitmix64(seed ^ std::uint64_t(k));
            if (k > 0 && h % 11 == 0) {
                d.nx = 4;
                broke_geometry = true;
            }
            s.volumes.push_back(make_volume(d, float(k)));
            if (k > 0 && h % 13 == 0) {
                broke_times = true;  // repeat the previous time
            } else {
                t += 1.0 + double(h % 3);
            }
            s.times_s.push_back(t);
        }
        if (broke_geometry || broke_times) {
            CHECK_THROWS_AS(s.validate(), data_error);
        } else {
            CHECK_NOTHROW(s.validate());
        }
    }
}

TEST_CASE("mask_stats matches hand-computed values") {
    volume_grid v = make_volume({4, 1, 1});
    label_mask m;
    m.dim = v.dim;
    m.spacing = v.spacing;
    m.origin = v.origin;
    m.labels = {std::uint8_t(label::pcat), std::uint8_t(label::pcat), 0, 0};

    SECTION("uniform region has zero spread") {
        v.values = {-75.f, -75.f, 1.f, 2.f};
        const auto st = mask_stats(v, m, label::pcat);
        CHECK(st.mean == -75.0);
        CHECK(st.stdev == 0.0);
        CHECK(st.count == 2);
    }

    SECTION("two-voxel region {-80, -70}") {
        v.values = {-80.f, -70.f, 1.f, 2.f};
        const auto st = mask_stats(v, m, label::pcat);
        CHECK(st.mean == Catch::Approx(-75.0));
        CHECK(st.stdev == Catch::Approx(5.0));  // population denominator
        CHECK(st.count == 2);
    }

    SECTION("absent code raises empty-region error") {
        v.values = {-80.f, -70.f, 1.f, 2.f};
        CHECK_THROWS_WITH(mask_stats(v, m, label::myo),
                          Catch::Matchers::ContainsSubstring("empty region"));
    }
}

TEST_CASE("mask_stats is permutation-invariant over voxel order") {
    const int n = 64;
    volume_grid v = make_volume({n, 1, 1});
    label_mask m;
    m.dim = v.dim;
    m.spacing = v.spacing;
    m.origin = v.origin;
    m.labels.assign(std::size_t(n), std::uint8_t(label::eat));
    for (int i = 0; i < n; ++i)
        v.values[std::size_t(i)] = float(-120.0 + 0.7 * i * i - 3.0 * i);
    const auto a = mask_stats(v, m, label::eat);

    volume_grid w = v;  // reversed assignment of the same multiset
    for (int i = 0; i < n; ++i) w.values[std::size_t(i)] = v.values[std::size_t(n - 1 - i)];
    const auto b = mask_stats(w, m, label::eat);
    CHECK(a.count == b.count);
    CHECK(a.mean == Catch::Approx(b.mean).epsilon(1e-12));
    CHECK(a.stdev == Catch::Approx(b.stdev).epsilon(1e-12));
}
