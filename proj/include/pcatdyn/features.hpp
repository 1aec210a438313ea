#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pcatdyn/texture.hpp"
#include "pcatdyn/types.hpp"
#include "pcatdyn/wavelet.hpp"

namespace pcatdyn {

struct feature_value {
    std::string name;
    std::optional<double> value;  // nullopt = undefined (degenerate input)
};

struct feature_vector {
    int scan_index = 0;
    double time_s = 0;
    std::vector<feature_value> values;

    const feature_value& by_name(const std::string& n) const {
        for (auto& f : values)
            if (f.name == n) return f;
        throw data_error("feature '" + n + "' not present");
    }
};

namespace feat_detail {

struct roi_view {
    std::vector<std::size_t> grid_idx;  // indices into the full volume
    std::vector<double> values;         // HU at those voxels
    std::vector<std::array<int, 3>> ijk;
    dims3 bbox_dim;
    std::array<int, 3> bbox_lo{0, 0, 0};
};

inline roi_view extract_roi(const volume_grid& v, const label_mask& mask, label code) {
    if (!same_geometry(v, mask)) throw data_error("features: geometry mismatch");
    roi_view r;
    std::array<int, 3> lo{v.dim.nx, v.dim.ny, v.dim.nz}, hi{-1, -1, -1};
    const std::uint8_t c = std::uint8_t(code);
    for (int k = 0; k < v.dim.nz; ++k)
        for (int j = 0; j < v.dim.ny; ++j)
            for (int i = 0; i < v.dim.nx; ++i) {
                if (mask.at(i, j, k) != c) continue;
                r.grid_idx.push_back(v.index(i, j, k));
                r.values.push_back(v.at(i, j, k));
                r.ijk.push_back({i, j, k});
                lo = {std::min(lo[0], i), std::min(lo[1], j), std::min(lo[2], k)};
                hi = {std::max(hi[0], i), std::max(hi[1], j), std::max(hi[2], k)};
            }
    if (r.grid_idx.empty())
        throw numeric_error(std::string("features: empty region ") + label_name(code));
    r.bbox_lo = lo;
    r.bbox_dim = {hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1};
    return r;
}

// Crops the full volume to the ROI bounding box (all voxels, masked or not),
// the substrate for the stationary wavelet transform.
inline std::vector<double> crop_bbox(const volume_grid& v, const roi_view& r) {
    std::vector<double> out(r.bbox_dim.count());
    std::size_t q = 0;
    for (int k = 0; k < r.bbox_dim.nz; ++k)
        for (int j = 0; j < r.bbox_dim.ny; ++j)
            for (int i = 0; i < r.bbox_dim.nx; ++i)
                out[q++] = v.at(i + r.bbox_lo[0], j + r.bbox_lo[1], k + r.bbox_lo[2]);
    return out;
}

inline roi_grid to_roi_grid(const roi_view& r, const discretized_roi& d) {
    roi_grid g;
    g.dim = r.bbox_dim;
    g.nbins = d.nbins;
    g.bin.assign(g.dim.count(), 0);
    for (std::size_t q = 0; q < r.ijk.size(); ++q)
        g.bin[g.index(r.ijk[q][0] - r.bbox_lo[0], r.ijk[q][1] - r.bbox_lo[1],
                      r.ijk[q][2] - r.bbox_lo[2])] = d.bin[q];
    return g;
}

struct moments {
    double mean = 0, m2 = 0, m3 = 0, m4 = 0;
};

inline moments central_moments(const std::vector<double>& x) {
    moments m;
    const double n = double(x.size());
    for (double v : x) m.mean += v;
    m.mean /= n;
    for (double v : x) {
        const double d = v - m.mean;
        m.m2 += d * d;
        m.m3 += d * d * d;
        m.m4 += d * d * d * d;
    }
    m.m2 /= n;
    m.m3 /= n;
    m.m4 /= n;
    return m;
}

inline double shannon_entropy_bits(const discretized_roi& d) {
    std::vector<double> hist(std::size_t(d.nbins), 0.0);
    for (int b : d.bin) hist[std::size_t(b - 1)] += 1.0;
    const double n = double(d.bin.size());
    double h = 0;
    for (double c : hist) {
        if (c <= 0) continue;
        const double p = c / n;
        h -= p * std::log2(p);
    }
    return h;
}

// Jacobi eigenvalues of a symmetric 3x3, descending.
inline std::array<double, 3> eigen_sym3(std::array<std::array<double, 3>, 3> a) {
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = std::abs(a[0][1]) + std::abs(a[0][2]) + std::abs(a[1][2]);
        if (off < 1e-14 * (1.0 + std::abs(a[0][0]) + std::abs(a[1][1]) + std::abs(a[2][2]))) break;
        for (int p = 0; p < 2; ++p) {
            for (int q = p + 1; q < 3; ++q) {
                if (a[p][q] == 0.0) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                std::array<std::array<double, 3>, 3> r{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
                r[p][p] = c;
                r[q][q] = c;
                r[p][q] = s;
                r[q][p] = -s;
                std::array<std::array<double, 3>, 3> ar{};
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j)
                        for (int k = 0; k < 3; ++k) ar[i][j] += a[i][k] * r[k][j];
                std::array<std::array<double, 3>, 3> rar{};
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j)
                        for (int k = 0; k < 3; ++k) rar[i][j] += r[k][i] * ar[k][j];
                a = rar;
            }
        }
    }
    std::array<double, 3> ev{a[0][0], a[1][1], a[2][2]};
    std::sort(ev.begin(), ev.end(), std::greater<>());
    return ev;
}

}  // namespace feat_detail

struct shape_result {
    std::optional<double> elongation;
    std::optional<double> flatness;
};

// sqrt(lambda2/lambda1) and sqrt(lambda3/lambda1) of the covariance of the
// physical voxel coordinates.
inline shape_result shape_features(const label_mask& mask, label code) {
    std::vector<vec3> pts;
    const std::uint8_t c = std::uint8_t(code);
    for (int k = 0; k < mask.dim.nz; ++k)
        for (int j = 0; j < mask.dim.ny; ++j)
            for (int i = 0; i < mask.dim.nx; ++i)
                if (mask.at(i, j, k) == c) pts.push_back(mask.voxel_center(i, j, k));
    if (pts.empty()) throw numeric_error("shape_features: empty region");

    vec3 mean{0, 0, 0};
    for (auto& p : pts) mean = mean + p;
    mean = mean * (1.0 / double(pts.size()));
    std::array<std::array<double, 3>, 3> cov{};
    for (auto& p : pts) {
        const vec3 d = p - mean;
        const double dd[3]{d.x, d.y, d.z};
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) cov[a][b] += dd[a] * dd[b];
    }
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) cov[a][b] /= double(pts.size());

    auto ev = feat_detail::eigen_sym3(cov);
    for (auto& e : ev) e = std::max(0.0, e);
    shape_result res;
    const double scale2 = mask.spacing.x * mask.spacing.x + mask.spacing.y * mask.spacing.y +
                          mask.spacing.z * mask.spacing.z;
    if (ev[0] <= 1e-12 * scale2) return res;  // rank-deficient: undefined
    res.elongation = std::sqrt(ev[1] / ev[0]);
    res.flatness = std::sqrt(ev[2] / ev[0]);
    return res;
}

// The 13 hand-crafted features: histogram moments, 16-bin entropy,
// probability-in-range triplet, size, and axial-area statistics.
inline std::vector<feature_value> handcrafted_features(const volume_grid& v,
                                                       const label_mask& mask, label code) {
    const auto roi = feat_detail::extract_roi(v, mask, code);
    const auto m = feat_detail::central_moments(roi.values);
    const auto d = discretize(roi.values, 16);

    std::vector<feature_value> out;
    auto push = [&](const char* name, std::optional<double> val) {
        out.push_back({name, val});
    };
    push("mean", m.mean);
    push("stdev", std::sqrt(m.m2));
    if (m.m2 > 0) {
        push("skewness", m.m3 / std::pow(m.m2, 1.5));
        push("kurtosis", m.m4 / (m.m2 * m.m2));
    } else {
        push("skewness", std::nullopt);
        push("kurtosis", std::nullopt);
    }
    push("entropy", feat_detail::shannon_entropy_bits(d));

    const double n = double(roi.values.size());
    double f1 = 0, f2 = 0, f3 = 0;
    for (double hu : roi.values) {
        if (hu >= -190 && hu < -110) f1 += 1;
        if (hu >= -110 && hu < -70) f2 += 1;
        if (hu >= -70 && hu <= -30) f3 += 1;
    }
    push("frac[-190,-110)", f1 / n);
    push("frac[-110,-70)", f2 / n);
    push("frac[-70,-30]", f3 / n);

    push("voxel-count", n);
    push("volume-cm3", n * v.voxel_volume_mm3() / 1000.0);

    std::vector<double> areas;
    {
        std::vector<std::size_t> per_slice(std::size_t(v.dim.nz), 0);
        for (auto& p : roi.ijk) ++per_slice[std::size_t(p[2])];
        const double vox_area = v.spacing.x * v.spacing.y;
        for (auto cnt : per_slice)
            if (cnt) areas.push_back(double(cnt) * vox_area);
    }
    double amean = 0;
    for (double a : areas) amean += a;
    amean /= double(areas.size());
    double avar = 0;
    for (double a : areas) avar += (a - amean) * (a - amean);
    avar /= double(areas.size());
    push("axial-area-mean", amean);
    push("axial-area-std", std::sqrt(avar));
    push("axial-area-max", *std::max_element(areas.begin(), areas.end()));
    return out;
}

// The 8 radiomics features. Wavelet features come from the stationary Haar
// subbands over the ROI bounding box; texture features use the 16-bin
// discretization of the relevant scalar restricted to the mask.
inline std::vector<feature_value> radiomics_features(const volume_grid& v, const label_mask& mask,
                                                     label code) {
    const auto roi = feat_detail::extract_roi(v, mask, code);
    const auto crop = feat_detail::crop_bbox(v, roi);
    const auto wb = wavelet3d(crop, roi.bbox_dim);

    auto band_roi = [&](const char* name) {
        const auto& band = wb.band(name);
        std::vector<double> vals(roi.grid_idx.size());
        for (std::size_t q = 0; q < roi.ijk.size(); ++q) {
            const std::size_t bi =
                std::size_t(roi.ijk[q][0] - roi.bbox_lo[0]) +
                std::size_t(roi.bbox_dim.nx) *
                    (std::size_t(roi.ijk[q][1] - roi.bbox_lo[1]) +
                     std::size_t(roi.bbox_dim.ny) * std::size_t(roi.ijk[q][2] - roi.bbox_lo[2]));
            vals[q] = band[bi];
        }
        return vals;
    };

    std::vector<feature_value> out;
    const auto shape = shape_features(mask, code);
    out.push_back({"original-shape-Elongation", shape.elongation});
    out.push_back({"original-shape-Flatness", shape.flatness});

    {
        const auto llh = band_roi("LLH");
        const auto m = feat_detail::central_moments(llh);
        out.push_back({"wavelet-LLH-firstorder-Mean", m.mean});
    }
    {
        const auto lhl = band_roi("LHL");
        const auto m = feat_detail::central_moments(lhl);
        out.push_back({"wavelet-LHL-firstorder-Kurtosis",
                       m.m2 > 0 ? std::optional<double>(m.m4 / (m.m2 * m.m2)) : std::nullopt});
    }
    {
        const auto lll = band_roi("LLL");
        const auto d = discretize(lll, 16);
        const auto g = feat_detail::to_roi_grid(roi, d);
        out.push_back({"wavelet-LLL-gldm-Idmn", gldm_idmn(gldm(g))});
    }
    {
        const auto hhh = band_roi("HHH");
        const auto d = discretize(hhh, 16);
        const auto g = feat_detail::to_roi_grid(roi, d);
        out.push_back(
            {"wavelet-HHH-glszm-SizeZoneNonUniformityNormalized", glszm_sznn(glszm(g))});
    }
    {
        const auto d = discretize(roi.values, 16);
        const auto g = feat_detail::to_roi_grid(roi, d);
        std::optional<double> idmn;
        try {
            idmn = glcm_idmn(g);
        } catch (const numeric_error&) {
        }
        out.push_back({"original-glcm-Idmn", idmn});
        out.push_back({"original-gldm-DependenceNonUniformityNormalized",
                       gldm_dnn_normalized(gldm(g))});
    }
    return out;
}

// All 21 features (13 hand-crafted + 8 radiomics) at one time point.
inline feature_vector all_features(const volume_grid& v, const label_mask& mask, label code,
                                   int scan_index = 0) {
    feature_vector fv;
    fv.scan_index = scan_index;
    fv.time_s = v.time_s.value_or(0.0);
    fv.values = handcrafted_features(v, mask, code);
    auto rad = radiomics_features(v, mask, code);
    fv.values.insert(fv.values.end(), rad.begin(), rad.end());
    return fv;
}

struct drift_entry {
    std::string name;
    std::vector<std::optional<double>> pct_change;  // per reported scan
    std::optional<double> max_abs_change;           // nullopt = undefined baseline
};

struct feature_drift_table {
    std::vector<int> scans;  // reported scan indices (Pa-4 .. Pa+4, clipped)
    std::vector<double> times_s;
    std::vector<drift_entry> features;
    std::size_t stable_count = 0;     // defined features with max |change| < 10%
    std::size_t defined_count = 0;    // features with a usable P1 baseline
    double stable_fraction = 0;
};

// Percent change vs P1 for each feature across the Pa-4 .. Pa+4 scans
// (clipped to the series). Features whose P1 value is undefined or below
// 1e-9 in magnitude are tagged undefined and excluded from the fraction.
inline feature_drift_table drift_table(const std::vector<feature_vector>& per_scan,
                                       std::size_t pa_index) {
    if (per_scan.size() < 2) throw data_error("drift_table: need features at >= 2 scans");
    feature_drift_table tab;
    const long lo = std::max<long>(0, long(pa_index) - 4);
    const long hi = std::min<long>(long(per_scan.size()) - 1, long(pa_index) + 4);
    for (long k = lo; k <= hi; ++k) {
        tab.scans.push_back(int(k));
        tab.times_s.push_back(per_scan[std::size_t(k)].time_s);
    }

    const auto& base = per_scan[0].values;
    for (std::size_t f = 0; f < base.size(); ++f) {
        drift_entry e;
        e.name = base[f].name;
        const auto& p1 = base[f].value;
        const bool defined = p1.has_value() && std::abs(*p1) >= 1e-9;
        double worst = 0;
        for (long k = lo; k <= hi; ++k) {
            const auto& cur = per_scan[std::size_t(k)].values[f].value;
            if (!defined || !cur.has_value()) {
                e.pct_change.push_back(std::nullopt);
                continue;
            }
            const double pct = 100.0 * (*cur - *p1) / std::abs(*p1);
            e.pct_change.push_back(pct);
            worst = std::max(worst, std::abs(pct));
        }
        if (defined) {
            e.max_abs_change = worst;
            ++tab.defined_count;
            if (worst < 10.0) ++tab.stable_count;
        }
        tab.features.push_back(std::move(e));
    }
    tab.stable_fraction =
        tab.defined_count ? double(tab.stable_count) / double(tab.defined_count) : 0.0;
    return tab;
}

}  // namespace pcatdyn
