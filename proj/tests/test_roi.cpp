#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <set>

#include "pcatdyn/phantom.hpp"
#include "pcatdyn/roi.hpp"
#include "pcatdyn/stats.hpp"

using namespace pcatdyn;

namespace {

// Digital cylinder of the given radius along z, centered mid-grid.
label_mask digital_cylinder(int n, double spacing, double radius, label code) {
    label_mask m;
    m.dim = {n, n, n};
    m.spacing = {spacing, spacing, spacing};
    m.origin = {0, 0, 0};
    m.labels.assign(m.dim.count(), 0);
    const double c = spacing * (n - 1) / 2.0;
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                const double dx = i * spacing - c, dy = j * spacing - c;
                if (dx * dx + dy * dy <= radius * radius)
                    m.at(i, j, k) = std::uint8_t(code);
            }
    return m;
}

centerline straight_cl(const label_mask& m, double z_lo, double z_hi) {
    const double c = m.spacing.x * (m.dim.nx - 1) / 2.0;
    std::vector<vec3> pts;
    const double step = m.spacing.z;
    for (double z = z_lo; z <= z_hi + 1e-9; z += step) pts.push_back({c, c, z});
    return centerline::from_points(std::move(pts));
}

}  // namespace

TEST_CASE("effective diameter of a 2 mm digital cylinder at 0.25 mm spacing") {
    const int n = 64;
    const auto lumen = digital_cylinder(n, 0.25, 2.0, label::lumen_lad);
    const auto cl = straight_cl(lumen, 0.0, 0.25 * (n - 1));
    const auto geom = effective_diameter(lumen, cl);
    CHECK(geom.median_d_eff_mm == Catch::Approx(4.0).epsilon(0.05));
    // only slices on the first 40 mm of arclength participate
    for (const auto& s : geom.slices) CHECK(s.slice * 0.25 <= 40.0 + 1e-9);
}

TEST_CASE("effective diameter identity on a known area") {
    // 12.56 mm^2 -> d_eff = 2 sqrt(12.56 / pi)
    label_mask m;
    m.dim = {40, 40, 1};
    m.spacing = {0.1, 0.1, 1.0};
    m.origin = {0, 0, 0};
    m.labels.assign(m.dim.count(), 0);
    for (int q = 0; q < 1256; ++q) m.labels[std::size_t(q)] = std::uint8_t(label::lumen_lad);
    auto cl = centerline::from_points({{2.0, 2.0, 0.0}, {2.0, 2.0, 0.1}});
    const auto geom = effective_diameter(m, cl);
    const double expect = 2.0 * std::sqrt(12.56 / std::numbers::pi);
    CHECK(geom.slices.size() == 1);
    CHECK(geom.slices[0].area_mm2 == Catch::Approx(12.56).epsilon(1e-12));
    CHECK(geom.median_d_eff_mm == Catch::Approx(expect).epsilon(1e-12));
}

TEST_CASE("effective diameter on an empty lumen is an error") {
    label_mask m;
    m.dim = {8, 8, 8};
    m.spacing = {1, 1, 1};
    m.origin = {0, 0, 0};
    m.labels.assign(m.dim.count(), 0);
    auto cl = centerline::from_points({{4, 4, 0}, {4, 4, 1}, {4, 4, 2}});
    CHECK_THROWS_AS(effective_diameter(m, cl), numeric_error);
}

TEST_CASE("axial disk mask: radius, lumen exclusion, degenerate extent") {
    const int n = 96;
    const double sp = 0.25;
    const auto lumen = digital_cylinder(n, sp, 2.0, label::lumen_lad);
    const auto cl = straight_cl(lumen, 0.0, sp * (n - 1));
    const auto geom = effective_diameter(lumen, cl);

    pcat_region_spec spec;  // factor 2, 40 mm
    const auto disks = axial_disk_mask(cl, geom, spec, lumen);

    SECTION("per-slice voxel count approximates the analytic disk area") {
        const double radius = spec.diameter_factor * geom.median_d_eff_mm / 2.0;
        const double analytic = std::numbers::pi * radius * radius / (sp * sp);
        // count voxels on one mid slice, adding back the excluded lumen
        std::size_t count = 0, lumen_count = 0;
        const int k = n / 2;
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                if (disks.at(i, j, k)) ++count;
                if (lumen.at(i, j, k)) ++lumen_count;
            }
        CHECK(double(count + lumen_count) == Catch::Approx(analytic).epsilon(0.05));
    }

    SECTION("disk and lumen are disjoint by construction") {
        for (std::size_t v = 0; v < disks.labels.size(); ++v)
            CHECK((disks.labels[v] == 0 || lumen.labels[v] == 0));
    }

    SECTION("length shorter than one slice thickness yields a single-slice mask") {
        pcat_region_spec tiny = spec;
        tiny.length_mm = sp / 4;
        const auto one = axial_disk_mask(cl, geom, tiny, lumen);
        std::set<int> slices;
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < n; ++i)
                    if (one.at(i, j, k)) slices.insert(k);
        CHECK(slices.size() == 1);
    }

    SECTION("disk mask is invariant under joint rigid translation") {
        label_mask moved = lumen;
        moved.origin = {13.5, -2.25, 7.0};
        std::vector<vec3> pts;
        for (const auto& p : cl.points)
            pts.push_back({p.x + 13.5, p.y - 2.25, p.z + 7.0});
        const auto cl2 = centerline::from_points(std::move(pts));
        const auto geom2 = effective_diameter(moved, cl2);
        const auto disks2 = axial_disk_mask(cl2, geom2, spec, moved);
        CHECK(disks2.labels == disks.labels);
    }
}

TEST_CASE("fat_select window conventions") {
    volume_grid v;
    v.dim = {4, 1, 1};
    v.spacing = {1, 1, 1};
    v.origin = {0, 0, 0};
    v.values = {-100.f, -30.f, -29.9f, -190.f};
    label_mask disks;
    disks.dim = v.dim;
    disks.spacing = v.spacing;
    disks.origin = v.origin;
    disks.labels.assign(4, std::uint8_t(label::pcat));

    const auto sel = fat_select(v, disks, fat_window_standard);
    CHECK(sel.labels[0] == std::uint8_t(label::pcat));  // -100 inside
    CHECK(sel.labels[1] == std::uint8_t(label::pcat));  // -30 inclusive
    CHECK(sel.labels[2] == 0);                          // -29.9 outside
    CHECK(sel.labels[3] == std::uint8_t(label::pcat));  // -190 inclusive
}

TEST_CASE("fat_select monotonicity in the window") {
    const auto res = simulate(reference_preset(64));
    const auto& vol = res.series.volumes[0];
    label_mask disks = res.mask;  // treat every non-bg voxel as disk candidate
    for (auto& l : disks.labels)
        if (l) l = std::uint8_t(label::pcat);
    const auto wide = fat_select(vol, disks, fat_window_standard);
    const auto narrow = fat_select(vol, disks, hu_window{-150.0, -60.0});
    for (std::size_t i = 0; i < wide.labels.size(); ++i)
        if (narrow.labels[i]) CHECK(wide.labels[i] != 0);
}

TEST_CASE("phantom PCAT tube: fat-gated disk selection equals the programmed set") {
    const auto res = simulate(reference_preset(64));
    REQUIRE(res.cl.has_value());
    const auto geom = effective_diameter(res.mask, *res.cl);
    pcat_region_spec spec;
    const auto disks = axial_disk_mask(*res.cl, geom, spec, res.mask);
    const auto sel = fat_select(res.series.volumes[0], disks, spec.fat_window);

    std::size_t agree = 0, programmed = 0, selected = 0;
    for (std::size_t i = 0; i < sel.labels.size(); ++i) {
        const bool truth = res.mask.labels[i] == std::uint8_t(label::pcat);
        const bool got = sel.labels[i] != 0;
        programmed += truth;
        selected += got;
        agree += (truth && got);
    }
    CHECK(programmed > 0);
    CHECK(selected == programmed);
    CHECK(agree == programmed);
}

TEST_CASE("annular partition: disjoint rings that tile the disk") {
    const int n = 96;
    const double sp = 0.25;
    const auto lumen = digital_cylinder(n, sp, 2.0, label::lumen_lad);
    const auto cl = straight_cl(lumen, 0.0, sp * (n - 1));
    const auto geom = effective_diameter(lumen, cl);
    pcat_region_spec spec;
    const auto disks = axial_disk_mask(cl, geom, spec, lumen);

    SECTION("rings plus the inner disk partition the full disk exactly") {
        region_partition part;
        part.annuli = {{1.0, 1.5}, {1.5, 2.0}};
        const auto rings = annular_partition(cl, geom, part, spec, lumen);
        for (std::size_t v = 0; v < rings.labels.size(); ++v) {
            CHECK((rings.labels[v] != 0) == (disks.labels[v] != 0));
            if (rings.labels[v]) CHECK(rings.labels[v] <= 3);
        }
    }

    SECTION("ring areas approximate the analytic annulus areas") {
        region_partition part;
        part.annuli = {{1.2, 1.5}, {1.5, 2.0}};  // inner disk ends clear of the lumen
        const auto rings = annular_partition(cl, geom, part, spec, lumen);
        const double d = geom.median_d_eff_mm;
        const int k = n / 2;
        std::array<std::size_t, 4> count{};
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) count[rings.at(i, j, k)]++;
        const double vox = sp * sp;
        const double a1 = std::numbers::pi * (std::pow(0.75 * d, 2) - std::pow(0.6 * d, 2));
        const double a2 = std::numbers::pi * (std::pow(1.0 * d, 2) - std::pow(0.75 * d, 2));
        // the inner disk loses the (digital) lumen voxels; add them back
        std::size_t lumen_slice = 0;
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) lumen_slice += lumen.at(i, j, k) != 0;
        const double disk_inner = std::numbers::pi * std::pow(0.6 * d, 2);
        CHECK(double(count[1] + lumen_slice) * vox == Catch::Approx(disk_inner).epsilon(0.05));
        CHECK(double(count[2]) * vox == Catch::Approx(a1).epsilon(0.05));
        CHECK(double(count[3]) * vox == Catch::Approx(a2).epsilon(0.05));
    }

    SECTION("single annulus covering the full extent equals the disk mask") {
        region_partition part;
        part.annuli = {{0.0, 2.0}};
        const auto rings = annular_partition(cl, geom, part, spec, lumen);
        for (std::size_t v = 0; v < rings.labels.size(); ++v)
            CHECK((rings.labels[v] != 0) == (disks.labels[v] != 0));
    }

    SECTION("overlapping factors are rejected") {
        region_partition part;
        part.annuli = {{1.0, 1.6}, {1.5, 2.0}};
        CHECK_THROWS_AS(annular_partition(cl, geom, part, spec, lumen), data_error);
    }
}

TEST_CASE("remote EAT selection") {
    const auto res = simulate(reference_preset(64));
    REQUIRE(res.cl.has_value());
    const auto geom = effective_diameter(res.mask, *res.cl);

    SECTION("far-away centerline keeps all of EAT") {
        std::vector<vec3> far_pts;
        for (double z = 0; z <= 30; z += 2) far_pts.push_back({1000.0, 1000.0, z});
        const auto far_cl = centerline::from_points(std::move(far_pts));
        const auto r = remote_eat(res.mask, {far_cl}, {geom}, 3.0);
        CHECK_FALSE(r.empty_flag);
        CHECK(r.mask.count(label::eat_remote) == res.mask.count(label::eat));
    }

    SECTION("infinite exclusion empties the result with a flag") {
        const auto r = remote_eat(res.mask, {*res.cl}, {geom}, 1e9);
        CHECK(r.empty_flag);
        CHECK(r.mask.count(label::eat_remote) == 0);
    }

    SECTION("matches a brute-force distance filter") {
        const double factor = 3.0;
        const auto r = remote_eat(res.mask, {*res.cl}, {geom}, factor);
        const double thr = factor * geom.median_d_eff_mm;
        std::size_t expect = 0;
        for (int k = 0; k < res.mask.dim.nz; ++k)
            for (int j = 0; j < res.mask.dim.ny; ++j)
                for (int i = 0; i < res.mask.dim.nx; ++i) {
                    if (res.mask.at(i, j, k) != std::uint8_t(label::eat)) continue;
                    const vec3 p = res.mask.voxel_center(i, j, k);
                    bool remote = true;
                    for (const auto& q : res.cl->points)
                        if ((p - q).norm() <= thr) {
                            remote = false;
                            break;
                        }
                    if (remote) {
                        ++expect;
                        CHECK(r.mask.at(i, j, k) == std::uint8_t(label::eat_remote));
                    }
                }
        CHECK(r.mask.count(label::eat_remote) == expect);
        CHECK(expect > 0);
        CHECK(expect < res.mask.count(label::eat));
    }
}

TEST_CASE("proximal/distal split") {
    const int n = 48;
    const double sp = 0.5;
    auto pcat = digital_cylinder(n, sp, 3.0, label::pcat);
    const double z_hi = sp * (n - 1);  // 23.5 mm tube

    SECTION("midpoint split balances within one slice") {
        const auto cl = straight_cl(pcat, 0.0, z_hi);
        const auto split = split_prox_dist(pcat, cl, z_hi / 2);
        const auto prox = split.count(label::pcat_prox);
        const auto dist = split.count(label::pcat_dist);
        const std::size_t per_slice = pcat.count(label::pcat) / std::size_t(n);
        CHECK(prox + dist == pcat.count(label::pcat));
        CHECK(std::llabs(long(prox) - long(dist)) <= long(per_slice));
    }

    SECTION("near-zero split is all distal") {
        // centerline begins upstream of the labeled tube
        std::vector<vec3> pts;
        const double c = pcat.spacing.x * (pcat.dim.nx - 1) / 2.0;
        for (double z = -5.0; z <= z_hi + 1e-9; z += 0.5) pts.push_back({c, c, z});
        const auto cl = centerline::from_points(std::move(pts));
        const auto split = split_prox_dist(pcat, cl, 1e-6);
        CHECK(split.count(label::pcat_prox) == 0);
        CHECK(split.count(label::pcat_dist) == pcat.count(label::pcat));
    }

    SECTION("split beyond the mask extent is all proximal") {
        // centerline continues past the labeled tube
        const auto cl = straight_cl(pcat, 0.0, 2.0 * z_hi > 40.0 ? 40.0 : 2.0 * z_hi);
        const auto split = split_prox_dist(pcat, cl, 39.0);
        CHECK(split.count(label::pcat_dist) == 0);
        CHECK(split.count(label::pcat_prox) == pcat.count(label::pcat));
    }

    SECTION("s_star outside the arclength is rejected") {
        const auto cl = straight_cl(pcat, 0.0, z_hi);
        CHECK_THROWS_AS(split_prox_dist(pcat, cl, -1.0), data_error);
        CHECK_THROWS_AS(split_prox_dist(pcat, cl, 1000.0), data_error);
    }
}
