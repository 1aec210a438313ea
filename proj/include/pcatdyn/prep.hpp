#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "pcatdyn/parallel.hpp"
#include "pcatdyn/types.hpp"

namespace pcatdyn {

struct filter_params {
    double sigma_spatial_mm = 2.0;
    double sigma_time_s = 2.0;
    double sigma_range_hu = 30.0;
    int spatial_radius = 2;  // voxels
    int time_radius = 1;     // scans

    void validate() const {
        if (!(sigma_spatial_mm > 0 && sigma_time_s > 0 && sigma_range_hu > 0))
            throw config_error("filter: sigmas must be positive");
        if (spatial_radius < 0 || time_radius < 0)
            throw config_error("filter: radii must be >= 0");
    }
};

struct shift_record {
    int reference = 0;
    std::vector<std::array<int, 3>> shifts;  // applied correction per scan
    std::vector<bool> degenerate;            // constant scan, shift forced to zero
};

namespace prep_detail {

inline float sample_clamped(const volume_grid& v, int i, int j, int k) {
    i = std::clamp(i, 0, v.dim.nx - 1);
    j = std::clamp(j, 0, v.dim.ny - 1);
    k = std::clamp(k, 0, v.dim.nz - 1);
    return v.values[v.index(i, j, k)];
}

// NCC between the reference and the moving scan displaced by (dx,dy,dz),
// evaluated on a strided voxel lattice. Out-of-bounds samples clamp to edge.
inline double ncc_at_shift(const volume_grid& ref, const volume_grid& mov, int dx, int dy, int dz,
                           int stride) {
    double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
    std::size_t n = 0;
    for (int k = 0; k < ref.dim.nz; k += stride) {
        for (int j = 0; j < ref.dim.ny; j += stride) {
            for (int i = 0; i < ref.dim.nx; i += stride) {
                const double a = ref.values[ref.index(i, j, k)];
                const double b = sample_clamped(mov, i + dx, j + dy, k + dz);
                sa += a;
                sb += b;
                saa += a * a;
                sbb += b * b;
                sab += a * b;
                ++n;
            }
        }
    }
    const double inv = 1.0 / double(n);
    const double va = saa - sa * sa * inv;
    const double vb = sbb - sb * sb * inv;
    if (va <= 0 || vb <= 0) return -2.0;  // degenerate, below any true NCC
    return (sab - sa * sb * inv) / std::sqrt(va * vb);
}

inline volume_grid apply_shift(const volume_grid& v, int dx, int dy, int dz) {
    if (dx == 0 && dy == 0 && dz == 0) return v;
    volume_grid out = v;
    par::parallel_for(std::size_t(v.dim.nz), [&](std::size_t kz) {
        const int k = int(kz);
        for (int j = 0; j < v.dim.ny; ++j)
            for (int i = 0; i < v.dim.nx; ++i)
                out.values[out.index(i, j, k)] = sample_clamped(v, i + dx, j + dy, k + dz);
    });
    return out;
}

}  // namespace prep_detail

// Integer-voxel translation of every scan onto the reference scan, scored by
// NCC over a +-search window. Ties break toward the smallest L2 shift, then
// lexicographically. A constant scan gets zero shift and a degeneracy flag.
inline std::pair<dynamic_series, shift_record> register_translation(const dynamic_series& s,
                                                                    int ref, int search) {
    s.validate();
    if (ref < 0 || std::size_t(ref) >= s.size())
        throw data_error("register_translation: reference scan out of range");
    if (search < 0) throw config_error("register_translation: search must be >= 0");

    const volume_grid& refv = s.volumes[std::size_t(ref)];
    const int min_dim = std::min({refv.dim.nx, refv.dim.ny, refv.dim.nz});
    const int stride = std::max(1, min_dim / 32);

    // candidate shifts in the deterministic tie-break order
    std::vector<std::array<int, 3>> cand;
    for (int dz = -search; dz <= search; ++dz)
        for (int dy = -search; dy <= search; ++dy)
            for (int dx = -search; dx <= search; ++dx) cand.push_back({dx, dy, dz});
    std::sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) {
        const int la = a[0] * a[0] + a[1] * a[1] + a[2] * a[2];
        const int lb = b[0] * b[0] + b[1] * b[1] + b[2] * b[2];
        if (la != lb) return la < lb;
        return a < b;
    });

    dynamic_series out;
    out.times_s = s.times_s;
    out.volumes.resize(s.size());
    shift_record rec;
    rec.reference = ref;
    rec.shifts.resize(s.size());
    rec.degenerate.assign(s.size(), false);

    for (std::size_t m = 0; m < s.size(); ++m) {
        if (int(m) == ref) {
            rec.shifts[m] = {0, 0, 0};
            out.volumes[m] = s.volumes[m];
            continue;
        }
        std::vector<double> score(cand.size());
        par::parallel_for(cand.size(), [&](std::size_t c) {
            score[c] = prep_detail::ncc_at_shift(refv, s.volumes[m], cand[c][0], cand[c][1],
                                                 cand[c][2], stride);
        });
        std::size_t best = 0;
        for (std::size_t c = 1; c < cand.size(); ++c)
            if (score[c] > score[best]) best = c;  // candidates pre-sorted for tie-breaks
        if (score[best] <= -2.0) {
            rec.shifts[m] = {0, 0, 0};
            rec.degenerate[m] = true;
            out.volumes[m] = s.volumes[m];
            continue;
        }
        rec.shifts[m] = cand[best];
        out.volumes[m] =
            prep_detail::apply_shift(s.volumes[m], cand[best][0], cand[best][1], cand[best][2]);
    }
    return {std::move(out), std::move(rec)};
}

// Spatio-temporal bilateral filter. Each output voxel is the normalized sum
// over the (2r+1)^3 x (2rt+1) neighborhood with weight
//   exp(-d_spatial^2 / 2 sigma_s^2) exp(-d_time^2 / 2 sigma_t^2)
//   exp(-dHU^2 / 2 sigma_r^2).
// Spatial out-of-bounds neighbors clamp to the edge; temporal neighbors
// beyond the series are skipped. The range kernel is tabulated at 1/64 sigma
// resolution and truncated at 6 sigma.
inline dynamic_series stbf(const dynamic_series& s, const filter_params& p) {
    s.validate();
    p.validate();
    const int r = p.spatial_radius;
    const int rt = p.time_radius;
    const auto& dim = s.volumes[0].dim;
    const vec3 sp = s.volumes[0].spacing;

    struct neighbor {
        int di, dj, dk;
        std::ptrdiff_t off;  // linear offset for interior voxels
        float w;             // spatial weight
    };
    std::vector<neighbor> hood;
    for (int dk = -r; dk <= r; ++dk)
        for (int dj = -r; dj <= r; ++dj)
            for (int di = -r; di <= r; ++di) {
                const double d2 = di * sp.x * di * sp.x + dj * sp.y * dj * sp.y +
                                  dk * sp.z * dk * sp.z;
                const std::ptrdiff_t off =
                    di + std::ptrdiff_t(dim.nx) * (dj + std::ptrdiff_t(dim.ny) * dk);
                hood.push_back({di, dj, dk, off,
                                float(std::exp(-d2 / (2 * p.sigma_spatial_mm * p.sigma_spatial_mm)))});
            }

    constexpr int range_lut_per_sigma = 64;
    constexpr int range_lut_sigmas = 6;
    const int lut_n = range_lut_per_sigma * range_lut_sigmas + 1;
    std::vector<float> range_lut(std::size_t(lut_n), 0.f);
    for (int i = 0; i < lut_n; ++i) {
        const double d = double(i) / range_lut_per_sigma;  // in units of sigma_r
        range_lut[std::size_t(i)] = float(std::exp(-0.5 * d * d));
    }
    const float lut_scale = float(range_lut_per_sigma / p.sigma_range_hu);

    dynamic_series out;
    out.times_s = s.times_s;
    out.volumes.resize(s.size());
    const int n_scans = int(s.size());

    for (int t = 0; t < n_scans; ++t) {
        auto& dst = out.volumes[std::size_t(t)];
        dst = s.volumes[std::size_t(t)];
        par::parallel_for(std::size_t(dim.nz), [&](std::size_t kz) {
            const int k = int(kz);
            const bool k_interior = (k >= r && k < dim.nz - r);
            for (int j = 0; j < dim.ny; ++j) {
                const bool j_interior = (j >= r && j < dim.ny - r);
                for (int i = 0; i < dim.nx; ++i) {
                    const bool interior = k_interior && j_interior && (i >= r && i < dim.nx - r);
                    const std::size_t ci = s.volumes[std::size_t(t)].index(i, j, k);
                    const float center = s.volumes[std::size_t(t)].values[ci];
                    double acc = 0, wacc = 0;
                    for (int dt = -rt; dt <= rt; ++dt) {
                        const int tt = t + dt;
                        if (tt < 0 || tt >= n_scans) continue;
                        const double dts = s.times_s[std::size_t(tt)] - s.times_s[std::size_t(t)];
                        const float wt = float(
                            std::exp(-dts * dts / (2 * p.sigma_time_s * p.sigma_time_s)));
                        const float* src = s.volumes[std::size_t(tt)].values.data();
                        if (interior) {
                            for (const auto& nb : hood) {
                                const float nv = src[std::size_t(std::ptrdiff_t(ci) + nb.off)];
                                const float ad = std::fabs(nv - center) * lut_scale;
                                const int li = int(ad);
                                if (li >= lut_n) continue;
                                const float w = nb.w * wt * range_lut[std::size_t(li)];
                                acc += double(w) * nv;
                                wacc += w;
                            }
                        } else {
                            for (const auto& nb : hood) {
                                const float nv = prep_detail::sample_clamped(
                                    s.volumes[std::size_t(tt)], i + nb.di, j + nb.dj, k + nb.dk);
                                const float ad = std::fabs(nv - center) * lut_scale;
                                const int li = int(ad);
                                if (li >= lut_n) continue;
                                const float w = nb.w * wt * range_lut[std::size_t(li)];
                                acc += double(w) * nv;
                                wacc += w;
                            }
                        }
                    }
                    dst.values[ci] = float(acc / wacc);
                }
            }
        });
    }
    return out;
}

}  // namespace pcatdyn
