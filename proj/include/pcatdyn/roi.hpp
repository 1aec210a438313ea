#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "pcatdyn/types.hpp"

namespace pcatdyn {

struct centerline {
    std::vector<vec3> points;       // mm, ordered along the vessel
    std::vector<double> arclength;  // cumulative, arclength[0] = 0

    static centerline from_points(std::vector<vec3> pts) {
        centerline cl;
        cl.points = std::move(pts);
        cl.arclength.resize(cl.points.size());
        for (std::size_t i = 1; i < cl.points.size(); ++i)
            cl.arclength[i] = cl.arclength[i - 1] + (cl.points[i] - cl.points[i - 1]).norm();
        return cl;
    }

    double total_length() const { return arclength.empty() ? 0.0 : arclength.back(); }

    void validate(double min_spacing_mm) const {
        if (points.size() < 2) throw data_error("centerline needs at least 2 points");
        for (std::size_t i = 1; i < points.size(); ++i) {
            const double step = arclength[i] - arclength[i - 1];
            if (!(step > 0)) throw data_error("centerline arclength not strictly increasing");
            if (step > 2.0 * min_spacing_mm + 1e-9)
                throw data_error("centerline point spacing exceeds 2x voxel spacing");
        }
    }
};

struct slice_geometry {
    int slice = 0;        // z index
    double area_mm2 = 0;  // lumen cross-section
    double d_eff_mm = 0;  // 2 sqrt(area / pi)
};

struct vessel_geometry {
    std::vector<slice_geometry> slices;
    double median_d_eff_mm = 0;  // over slices in the first segment_mm of arclength
    double segment_mm = 40.0;
};

struct pcat_region_spec {
    double diameter_factor = 2.0;
    double length_mm = 40.0;
    hu_window fat_window = fat_window_standard;
    hu_window extended_window = fat_window_extended;
    int membership_reference = 0;  // scan whose HU gates fat membership
};

struct region_partition {
    std::vector<std::pair<double, double>> annuli;  // (inner, outer) factors of median d_eff
    double split_arclength_mm = -1;                 // proximal/distal boundary; < 0 disables

    void validate() const {
        double prev = 0;
        for (auto& [a, b] : annuli) {
            if (!(a < b)) throw data_error("annulus factors must increase");
            if (a + 1e-12 < prev) throw data_error("annuli overlap");
            prev = b;
        }
    }
};

namespace roi_detail {

inline int nearest_slice(const label_mask& m, double z_mm) {
    int k = int(std::lround((z_mm - m.origin.z) / m.spacing.z));
    return std::clamp(k, 0, m.dim.nz - 1);
}

// Centerline point indices within the first length_mm of arclength.
inline std::vector<std::size_t> points_in_range(const centerline& cl, double length_mm) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < cl.points.size(); ++i)
        if (cl.arclength[i] <= length_mm + 1e-9) out.push_back(i);
    return out;
}

}  // namespace roi_detail

// Per-slice lumen area and effective diameter over the first segment_mm of
// centerline arclength; the median uses the even-count mean convention.
inline vessel_geometry effective_diameter(const label_mask& lumen, const centerline& cl,
                                          label lumen_code = label::lumen_lad,
                                          double segment_mm = 40.0) {
    const auto idx = roi_detail::points_in_range(cl, segment_mm);
    std::vector<char> slice_hit(std::size_t(lumen.dim.nz), 0);
    for (auto i : idx) slice_hit[roi_detail::nearest_slice(lumen, cl.points[i].z)] = 1;

    vessel_geometry geom;
    geom.segment_mm = segment_mm;
    const double vox_area = lumen.spacing.x * lumen.spacing.y;
    const std::uint8_t code = std::uint8_t(lumen_code);
    std::vector<double> deffs;
    for (int k = 0; k < lumen.dim.nz; ++k) {
        if (!slice_hit[std::size_t(k)]) continue;
        std::size_t n = 0;
        for (int j = 0; j < lumen.dim.ny; ++j)
            for (int i = 0; i < lumen.dim.nx; ++i)
                if (lumen.at(i, j, k) == code) ++n;
        if (n == 0) continue;
        slice_geometry sg;
        sg.slice = k;
        sg.area_mm2 = double(n) * vox_area;
        sg.d_eff_mm = 2.0 * std::sqrt(sg.area_mm2 / std::numbers::pi);
        geom.slices.push_back(sg);
        deffs.push_back(sg.d_eff_mm);
    }
    if (deffs.empty())
        throw numeric_error("effective_diameter: no lumen voxels along the first segment");
    std::sort(deffs.begin(), deffs.end());
    const std::size_t n = deffs.size();
    geom.median_d_eff_mm =
        (n % 2) ? deffs[n / 2] : 0.5 * (deffs[n / 2 - 1] + deffs[n / 2]);
    return geom;
}

// Axial disks of radius diameter_factor * median_d_eff / 2 around each
// centerline point in the first length_mm; lumen voxels are excluded and
// slices crossed multiple times take the union. Set voxels carry the PCAT
// code (candidate voxels prior to fat gating).
inline label_mask axial_disk_mask(const centerline& cl, const vessel_geometry& geom,
                                  const pcat_region_spec& spec, const label_mask& lumen) {
    label_mask out;
    out.dim = lumen.dim;
    out.spacing = lumen.spacing;
    out.origin = lumen.origin;
    out.labels.assign(lumen.labels.size(), 0);

    const double radius = spec.diameter_factor * geom.median_d_eff_mm / 2.0;
    const double r2 = radius * radius;
    const auto idx = roi_detail::points_in_range(cl, spec.length_mm);
    for (auto pi : idx) {
        const vec3& p = cl.points[pi];
        const int k = roi_detail::nearest_slice(lumen, p.z);
        const int i_lo = std::max(0, int(std::floor((p.x - radius - lumen.origin.x) / lumen.spacing.x)));
        const int i_hi = std::min(lumen.dim.nx - 1,
                                  int(std::ceil((p.x + radius - lumen.origin.x) / lumen.spacing.x)));
        const int j_lo = std::max(0, int(std::floor((p.y - radius - lumen.origin.y) / lumen.spacing.y)));
        const int j_hi = std::min(lumen.dim.ny - 1,
                                  int(std::ceil((p.y + radius - lumen.origin.y) / lumen.spacing.y)));
        for (int j = j_lo; j <= j_hi; ++j) {
            for (int i = i_lo; i <= i_hi; ++i) {
                const double dx = lumen.origin.x + i * lumen.spacing.x - p.x;
                const double dy = lumen.origin.y + j * lumen.spacing.y - p.y;
                if (dx * dx + dy * dy <= r2) out.at(i, j, k) = std::uint8_t(label::pcat);
            }
        }
    }
    for (std::size_t v = 0; v < out.labels.size(); ++v)
        if (lumen.labels[v] == std::uint8_t(label::lumen_lad) ||
            lumen.labels[v] == std::uint8_t(label::lumen_rca))
            out.labels[v] = 0;
    return out;
}

// PCAT selection: disk voxels whose HU falls inside the (closed) fat window.
inline label_mask fat_select(const volume_grid& v, const label_mask& disks, hu_window window) {
    if (!same_geometry(v, disks)) throw data_error("fat_select: geometry mismatch");
    label_mask out;
    out.dim = disks.dim;
    out.spacing = disks.spacing;
    out.origin = disks.origin;
    out.labels.assign(disks.labels.size(), 0);
    for (std::size_t i = 0; i < disks.labels.size(); ++i)
        if (disks.labels[i] != 0 && window.contains(v.values[i]))
            out.labels[i] = std::uint8_t(label::pcat);
    return out;
}

// Inner disk plus annular rings. Factors are diameter factors like
// diameter_factor itself: membership radius = factor * median_d_eff / 2.
// Output labels are ring indices: 1 = inner disk, 2.. = annuli in order.
inline label_mask annular_partition(const centerline& cl, const vessel_geometry& geom,
                                    const region_partition& part, const pcat_region_spec& spec,
                                    const label_mask& lumen) {
    part.validate();
    label_mask out;
    out.dim = lumen.dim;
    out.spacing = lumen.spacing;
    out.origin = lumen.origin;
    out.labels.assign(lumen.labels.size(), 0);
    if (part.annuli.empty()) throw data_error("annular_partition: no annuli given");
    const double d = geom.median_d_eff_mm;
    const double inner_r = part.annuli.front().first * d / 2.0;
    const double outer_r = part.annuli.back().second * d / 2.0;
    if (part.annuli.back().second > spec.diameter_factor + 1e-12)
        throw data_error("annular_partition: outermost factor exceeds diameter_factor");

    const auto idx = roi_detail::points_in_range(cl, spec.length_mm);
    for (auto pi : idx) {
        const vec3& p = cl.points[pi];
        const int k = roi_detail::nearest_slice(lumen, p.z);
        const int i_lo = std::max(0, int(std::floor((p.x - outer_r - lumen.origin.x) / lumen.spacing.x)));
        const int i_hi = std::min(lumen.dim.nx - 1,
                                  int(std::ceil((p.x + outer_r - lumen.origin.x) / lumen.spacing.x)));
        const int j_lo = std::max(0, int(std::floor((p.y - outer_r - lumen.origin.y) / lumen.spacing.y)));
        const int j_hi = std::min(lumen.dim.ny - 1,
                                  int(std::ceil((p.y + outer_r - lumen.origin.y) / lumen.spacing.y)));
        for (int j = j_lo; j <= j_hi; ++j) {
            for (int i = i_lo; i <= i_hi; ++i) {
                const double dx = lumen.origin.x + i * lumen.spacing.x - p.x;
                const double dy = lumen.origin.y + j * lumen.spacing.y - p.y;
                const double r2v = dx * dx + dy * dy;
                std::uint8_t lab = 0;
                if (r2v <= inner_r * inner_r) {
                    lab = 1;
                } else {
                    for (std::size_t a = 0; a < part.annuli.size(); ++a) {
                        const double ra = part.annuli[a].first * d / 2.0;
                        const double rb = part.annuli[a].second * d / 2.0;
                        if (r2v > ra * ra && r2v <= rb * rb) {
                            lab = std::uint8_t(a + 2);
                            break;
                        }
                    }
                }
                if (lab) {
                    auto& cell = out.at(i, j, k);
                    // multiple crossings: keep the innermost assignment
                    if (cell == 0 || lab < cell) cell = lab;
                }
            }
        }
    }
    for (std::size_t v = 0; v < out.labels.size(); ++v)
        if (lumen.labels[v] == std::uint8_t(label::lumen_lad) ||
            lumen.labels[v] == std::uint8_t(label::lumen_rca))
            out.labels[v] = 0;
    return out;
}

struct remote_eat_result {
    label_mask mask;
    bool empty_flag = false;
};

// EAT voxels farther than exclusion_factor * median_d_eff (3D distance) from
// every point of every centerline.
inline remote_eat_result remote_eat(const label_mask& eat,
                                    const std::vector<centerline>& centerlines,
                                    const std::vector<vessel_geometry>& geoms,
                                    double exclusion_factor = 3.0) {
    if (eat.count(label::eat) == 0) throw numeric_error("remote_eat: EAT region is empty");
    if (centerlines.size() != geoms.size())
        throw data_error("remote_eat: centerline/geometry count mismatch");
    remote_eat_result res;
    res.mask.dim = eat.dim;
    res.mask.spacing = eat.spacing;
    res.mask.origin = eat.origin;
    res.mask.labels.assign(eat.labels.size(), 0);

    std::size_t kept = 0;
    for (int k = 0; k < eat.dim.nz; ++k) {
        for (int j = 0; j < eat.dim.ny; ++j) {
            for (int i = 0; i < eat.dim.nx; ++i) {
                if (eat.at(i, j, k) != std::uint8_t(label::eat)) continue;
                const vec3 p = eat.voxel_center(i, j, k);
                bool remote = true;
                for (std::size_t c = 0; c < centerlines.size() && remote; ++c) {
                    const double thr = exclusion_factor * geoms[c].median_d_eff_mm;
                    const double thr2 = thr * thr;
                    for (const vec3& q : centerlines[c].points) {
                        if ((p - q).norm2() <= thr2) {
                            remote = false;
                            break;
                        }
                    }
                }
                if (remote) {
                    res.mask.at(i, j, k) = std::uint8_t(label::eat_remote);
                    ++kept;
                }
            }
        }
    }
    res.empty_flag = (kept == 0);
    return res;
}

// Splits PCAT voxels at arclength s_star of their nearest centerline point.
inline label_mask split_prox_dist(const label_mask& pcat, const centerline& cl, double s_star,
                                  label pcat_code = label::pcat) {
    if (!(s_star > 0) || s_star >= cl.total_length())
        throw data_error("split_prox_dist: s_star outside centerline arclength");
    label_mask out;
    out.dim = pcat.dim;
    out.spacing = pcat.spacing;
    out.origin = pcat.origin;
    out.labels.assign(pcat.labels.size(), 0);
    for (int k = 0; k < pcat.dim.nz; ++k) {
        for (int j = 0; j < pcat.dim.ny; ++j) {
            for (int i = 0; i < pcat.dim.nx; ++i) {
                if (pcat.at(i, j, k) != std::uint8_t(pcat_code)) continue;
                const vec3 p = pcat.voxel_center(i, j, k);
                double best = std::numeric_limits<double>::max();
                double s_at = 0;
                for (std::size_t q = 0; q < cl.points.size(); ++q) {
                    const double d2 = (p - cl.points[q]).norm2();
                    if (d2 < best) {
                        best = d2;
                        s_at = cl.arclength[q];
                    }
                }
                out.at(i, j, k) = std::uint8_t(s_at < s_star ? label::pcat_prox : label::pcat_dist);
            }
        }
    }
    return out;
}

}  // namespace pcatdyn
