#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <vector>

#include "pcatdyn/parallel.hpp"
#include "pcatdyn/tac.hpp"
#include "pcatdyn/types.hpp"

namespace pcatdyn {

struct supervoxel {
    std::vector<std::size_t> voxels;  // storage-order indices into the grid
    vec3 centroid_mm;
    double mean_hu = 0;
};

struct supervoxel_set {
    dims3 dim;
    vec3 spacing, origin;
    std::vector<supervoxel> cells;
    std::vector<std::int32_t> assignment;  // per grid voxel; -1 outside the region
    int target_size = 125;
    double compactness = 10;
    int iterations = 10;
};

struct flow_params {
    double density = 1.0;  // g/mL
    label aif_code = label::aorta;
    bool clamp_negative = true;
};

struct flow_map {
    std::vector<double> mbf;          // per supervoxel, mL/100g-min
    std::vector<bool> clamped;        // negative slope estimates forced to 0
    double region_mean = 0;
    double region_median = 0;
    double density = 1.0;
    double aif_peak_hu = 0;
};

namespace flow_detail {

struct vox {
    std::size_t idx;
    int i, j, k;
};

inline std::vector<vox> collect(const label_mask& mask, label code) {
    std::vector<vox> out;
    const std::uint8_t c = std::uint8_t(code);
    for (int k = 0; k < mask.dim.nz; ++k)
        for (int j = 0; j < mask.dim.ny; ++j)
            for (int i = 0; i < mask.dim.nx; ++i)
                if (mask.at(i, j, k) == c) out.push_back({mask.index(i, j, k), i, j, k});
    return out;
}

}  // namespace flow_detail

// SLIC-style clustering of the masked region of v. Distance is
// sqrt(dHU^2 + (d_mm / S)^2 m^2) with S = size^(1/3) * mean spacing; seeds
// start on a regular lattice inside the mask and orphan fragments merge into
// the nearest adjacent supervoxel after the iterations.
inline supervoxel_set slic_cluster(const volume_grid& v, const label_mask& mask, label code,
                                   int target_size = 125, double compactness = 10,
                                   int iterations = 10) {
    if (!same_geometry(v, mask)) throw data_error("slic_cluster: geometry mismatch");
    if (target_size < 1) throw config_error("slic_cluster: target size must be >= 1");
    if (iterations < 1) throw config_error("slic_cluster: iterations must be >= 1");

    supervoxel_set set;
    set.dim = v.dim;
    set.spacing = v.spacing;
    set.origin = v.origin;
    set.target_size = target_size;
    set.compactness = compactness;
    set.iterations = iterations;
    set.assignment.assign(v.values.size(), -1);

    const auto voxels = flow_detail::collect(mask, code);
    if (voxels.empty()) throw numeric_error("slic_cluster: region is empty");

    const double mean_sp = (v.spacing.x + v.spacing.y + v.spacing.z) / 3.0;
    const double S = std::cbrt(double(target_size)) * mean_sp;

    auto pos_of = [&](const flow_detail::vox& w) { return v.voxel_center(w.i, w.j, w.k); };

    // Degenerate region: one supervoxel holding everything.
    auto single_cell = [&]() {
        supervoxel sv;
        double sum = 0;
        vec3 c{0, 0, 0};
        for (const auto& w : voxels) {
            sv.voxels.push_back(w.idx);
            set.assignment[w.idx] = 0;
            sum += v.values[w.idx];
            c = c + pos_of(w);
        }
        sv.mean_hu = sum / double(voxels.size());
        sv.centroid_mm = c * (1.0 / double(voxels.size()));
        set.cells.push_back(std::move(sv));
        return set;
    };
    if (voxels.size() <= std::size_t(target_size)) return single_cell();

    // Seeds: per lattice cell of side S, the masked voxel nearest the cell
    // center (ties to the lowest storage index).
    vec3 bb_lo = pos_of(voxels.front()), bb_hi = bb_lo;
    for (const auto& w : voxels) {
        const vec3 p = pos_of(w);
        bb_lo = {std::min(bb_lo.x, p.x), std::min(bb_lo.y, p.y), std::min(bb_lo.z, p.z)};
        bb_hi = {std::max(bb_hi.x, p.x), std::max(bb_hi.y, p.y), std::max(bb_hi.z, p.z)};
    }
    const int cx = std::max(1, int(std::floor((bb_hi.x - bb_lo.x) / S)) + 1);
    const int cy = std::max(1, int(std::floor((bb_hi.y - bb_lo.y) / S)) + 1);
    const int cz = std::max(1, int(std::floor((bb_hi.z - bb_lo.z) / S)) + 1);
    auto cell_of = [&](const vec3& p) {
        const int a = std::clamp(int((p.x - bb_lo.x) / S), 0, cx - 1);
        const int b = std::clamp(int((p.y - bb_lo.y) / S), 0, cy - 1);
        const int c = std::clamp(int((p.z - bb_lo.z) / S), 0, cz - 1);
        return (std::size_t(c) * cy + b) * cx + a;
    };
    struct seed_pick {
        double d2 = std::numeric_limits<double>::max();
        std::size_t vox_pos = 0;
        bool used = false;
    };
    std::vector<seed_pick> picks(std::size_t(cx) * cy * cz);
    for (std::size_t q = 0; q < voxels.size(); ++q) {
        const vec3 p = pos_of(voxels[q]);
        const std::size_t cell = cell_of(p);
        const vec3 cc{bb_lo.x + (std::floor((p.x - bb_lo.x) / S) + 0.5) * S,
                      bb_lo.y + (std::floor((p.y - bb_lo.y) / S) + 0.5) * S,
                      bb_lo.z + (std::floor((p.z - bb_lo.z) / S) + 0.5) * S};
        const double d2 = (p - cc).norm2();
        auto& pk = picks[cell];
        if (!pk.used || d2 < pk.d2) {
            pk.used = true;
            pk.d2 = d2;
            pk.vox_pos = q;
        }
    }
    struct seed {
        vec3 pos;
        double hu;
    };
    std::vector<seed> seeds;
    for (const auto& pk : picks)
        if (pk.used)
            seeds.push_back({pos_of(voxels[pk.vox_pos]), double(v.values[voxels[pk.vox_pos].idx])});
    if (seeds.size() < 2) return single_cell();

    // Seed buckets on the same lattice for the 2S-window search.
    std::vector<std::vector<std::int32_t>> buckets(picks.size());
    auto rebucket = [&]() {
        for (auto& b : buckets) b.clear();
        for (std::size_t s = 0; s < seeds.size(); ++s)
            buckets[cell_of(seeds[s].pos)].push_back(std::int32_t(s));
    };

    const double m2 = compactness * compactness;
    const double invS2 = 1.0 / (S * S);
    std::vector<std::int32_t> assign(voxels.size(), -1);

    std::vector<std::int32_t> next(voxels.size(), -1);
    for (int it = 0; it < iterations; ++it) {
        rebucket();
        par::parallel_chunks(voxels.size(), [&](std::size_t qb, std::size_t qe) {
            for (std::size_t q = qb; q < qe; ++q) {
                const vec3 p = pos_of(voxels[q]);
                const double hu = v.values[voxels[q].idx];
                const int a0 = std::clamp(int((p.x - bb_lo.x) / S), 0, cx - 1);
                const int b0 = std::clamp(int((p.y - bb_lo.y) / S), 0, cy - 1);
                const int c0 = std::clamp(int((p.z - bb_lo.z) / S), 0, cz - 1);
                double best = std::numeric_limits<double>::max();
                std::int32_t best_s = -1;
                for (int dc = -2; dc <= 2; ++dc) {
                    const int c = c0 + dc;
                    if (c < 0 || c >= cz) continue;
                    for (int db = -2; db <= 2; ++db) {
                        const int b = b0 + db;
                        if (b < 0 || b >= cy) continue;
                        for (int da = -2; da <= 2; ++da) {
                            const int a = a0 + da;
                            if (a < 0 || a >= cx) continue;
                            for (std::int32_t sid :
                                 buckets[(std::size_t(c) * cy + b) * cx + a]) {
                                const double dhu = hu - seeds[std::size_t(sid)].hu;
                                const double d2 = (p - seeds[std::size_t(sid)].pos).norm2();
                                const double D = dhu * dhu + d2 * invS2 * m2;
                                if (D < best || (D == best && sid < best_s)) {
                                    best = D;
                                    best_s = sid;
                                }
                            }
                        }
                    }
                }
                if (best_s < 0) {  // outside every 2S window; take nearest seed
                    double bd = std::numeric_limits<double>::max();
                    for (std::size_t s = 0; s < seeds.size(); ++s) {
                        const double d2 = (p - seeds[s].pos).norm2();
                        if (d2 < bd) {
                            bd = d2;
                            best_s = std::int32_t(s);
                        }
                    }
                }
                next[q] = best_s;
            }
        });
        std::size_t changed = 0;
        for (std::size_t q = 0; q < voxels.size(); ++q)
            if (assign[q] != next[q]) ++changed;
        assign.swap(next);

        // update seeds from the assignment, in fixed voxel order
        std::vector<vec3> psum(seeds.size(), {0, 0, 0});
        std::vector<double> hsum(seeds.size(), 0.0);
        std::vector<std::size_t> cnt(seeds.size(), 0);
        for (std::size_t q = 0; q < voxels.size(); ++q) {
            const auto s = std::size_t(assign[q]);
            psum[s] = psum[s] + pos_of(voxels[q]);
            hsum[s] += v.values[voxels[q].idx];
            ++cnt[s];
        }
        for (std::size_t s = 0; s < seeds.size(); ++s) {
            if (cnt[s] == 0) continue;
            seeds[s].pos = psum[s] * (1.0 / double(cnt[s]));
            seeds[s].hu = hsum[s] / double(cnt[s]);
        }
        if (changed == 0) break;
    }

    // Connectivity: keep each supervoxel's largest 26-connected component and
    // fold the rest into the nearest adjacent supervoxel.
    std::vector<std::int32_t> grid_assign(v.values.size(), -1);
    for (std::size_t q = 0; q < voxels.size(); ++q) grid_assign[voxels[q].idx] = assign[q];

    const int nx = v.dim.nx, ny = v.dim.ny, nz = v.dim.nz;
    auto neighbors26 = [&](std::size_t idx, auto&& fn) {
        const int i = int(idx % std::size_t(nx));
        const int j = int((idx / std::size_t(nx)) % std::size_t(ny));
        const int k = int(idx / (std::size_t(nx) * ny));
        for (int dk = -1; dk <= 1; ++dk)
            for (int dj = -1; dj <= 1; ++dj)
                for (int di = -1; di <= 1; ++di) {
                    if (!di && !dj && !dk) continue;
                    const int ii = i + di, jj = j + dj, kk = k + dk;
                    if (ii < 0 || jj < 0 || kk < 0 || ii >= nx || jj >= ny || kk >= nz) continue;
                    fn(v.index(ii, jj, kk));
                }
    };

    for (int pass = 0; pass < 32; ++pass) {
        bool merged = false;
        std::vector<std::vector<std::size_t>> members(seeds.size());
        for (std::size_t q = 0; q < voxels.size(); ++q)
            members[std::size_t(grid_assign[voxels[q].idx])].push_back(voxels[q].idx);

        std::vector<char> visited(v.values.size(), 0);
        for (std::size_t s = 0; s < seeds.size(); ++s) {
            if (members[s].empty()) continue;
            // label components by BFS from unvisited member voxels
            std::vector<std::vector<std::size_t>> comps;
            for (std::size_t start : members[s]) {
                if (visited[start]) continue;
                comps.emplace_back();
                std::deque<std::size_t> queue{start};
                visited[start] = 1;
                while (!queue.empty()) {
                    const std::size_t cur = queue.front();
                    queue.pop_front();
                    comps.back().push_back(cur);
                    neighbors26(cur, [&](std::size_t nb) {
                        if (!visited[nb] && grid_assign[nb] == std::int32_t(s)) {
                            visited[nb] = 1;
                            queue.push_back(nb);
                        }
                    });
                }
            }
            if (comps.size() <= 1) continue;
            std::size_t main_c = 0;
            for (std::size_t c = 1; c < comps.size(); ++c)
                if (comps[c].size() > comps[main_c].size() ||
                    (comps[c].size() == comps[main_c].size() &&
                     comps[c].front() < comps[main_c].front()))
                    main_c = c;
            for (std::size_t c = 0; c < comps.size(); ++c) {
                if (c == main_c) continue;
                // nearest adjacent supervoxel by seed distance to the orphan mean
                vec3 om{0, 0, 0};
                for (std::size_t idx : comps[c]) {
                    const int i = int(idx % std::size_t(nx));
                    const int j = int((idx / std::size_t(nx)) % std::size_t(ny));
                    const int k = int(idx / (std::size_t(nx) * ny));
                    om = om + v.voxel_center(i, j, k);
                }
                om = om * (1.0 / double(comps[c].size()));
                std::int32_t target = -1;
                double best = std::numeric_limits<double>::max();
                for (std::size_t idx : comps[c]) {
                    neighbors26(idx, [&](std::size_t nb) {
                        const std::int32_t other = grid_assign[nb];
                        if (other < 0 || other == std::int32_t(s)) return;
                        const double d2 = (seeds[std::size_t(other)].pos - om).norm2();
                        if (d2 < best || (d2 == best && other < target)) {
                            best = d2;
                            target = other;
                        }
                    });
                }
                if (target >= 0) {
                    for (std::size_t idx : comps[c]) grid_assign[idx] = target;
                    merged = true;
                }
            }
        }
        if (!merged) break;
    }

    // canonical cell order: by smallest member voxel index
    std::vector<std::vector<std::size_t>> members(seeds.size());
    for (std::size_t q = 0; q < voxels.size(); ++q)
        members[std::size_t(grid_assign[voxels[q].idx])].push_back(voxels[q].idx);
    std::vector<std::size_t> order;
    for (std::size_t s = 0; s < members.size(); ++s)
        if (!members[s].empty()) order.push_back(s);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return members[a].front() < members[b].front(); });

    for (std::size_t oi = 0; oi < order.size(); ++oi) {
        const auto& mem = members[order[oi]];
        supervoxel sv;
        sv.voxels = mem;
        double sum = 0;
        vec3 c{0, 0, 0};
        for (std::size_t idx : mem) {
            set.assignment[idx] = std::int32_t(oi);
            sum += v.values[idx];
            const int i = int(idx % std::size_t(nx));
            const int j = int((idx / std::size_t(nx)) % std::size_t(ny));
            const int k = int(idx / (std::size_t(nx) * ny));
            c = c + v.voxel_center(i, j, k);
        }
        sv.mean_hu = sum / double(mem.size());
        sv.centroid_mm = c * (1.0 / double(mem.size()));
        set.cells.push_back(std::move(sv));
    }
    return set;
}

// Max finite-difference slope: central differences at interior samples,
// one-sided at the ends. Exact for linear ramps.
inline double max_slope(const std::vector<double>& values, const std::vector<double>& times_s) {
    if (values.size() != times_s.size() || values.size() < 3)
        throw numeric_error("max_slope: need at least 3 samples");
    const std::size_t n = values.size();
    double best = -std::numeric_limits<double>::max();
    for (std::size_t k = 0; k < n; ++k) {
        double s;
        if (k == 0)
            s = (values[1] - values[0]) / (times_s[1] - times_s[0]);
        else if (k == n - 1)
            s = (values[n - 1] - values[n - 2]) / (times_s[n - 1] - times_s[n - 2]);
        else
            s = (values[k + 1] - values[k - 1]) / (times_s[k + 1] - times_s[k - 1]);
        best = std::max(best, s);
    }
    return best;
}

// Per-supervoxel mean TACs from the series, in the set's canonical order.
inline std::vector<std::vector<double>> supervoxel_tacs(const dynamic_series& s,
                                                        const supervoxel_set& set) {
    s.validate();
    std::vector<std::vector<double>> tacs(set.cells.size(),
                                          std::vector<double>(s.size(), 0.0));
    for (std::size_t k = 0; k < s.size(); ++k) {
        const auto& values = s.volumes[k].values;
        for (std::size_t c = 0; c < set.cells.size(); ++c) {
            double sum = 0;
            for (std::size_t idx : set.cells[c].voxels) sum += values[idx];
            tacs[c][k] = sum / double(set.cells[c].voxels.size());
        }
    }
    return tacs;
}

// Maximum-slope blood flow:
//   MBF = 6000 * max_slope(tissue TAC - P1) / (density * max(AIF - AIF(P1))).
inline flow_map estimate_flow(const dynamic_series& s, const supervoxel_set& set,
                              const time_attenuation_curve& aif, const flow_params& p) {
    if (!(p.density > 0)) throw config_error("estimate_flow: density must be > 0");
    double aif_peak = 0;
    for (double m : aif.mean_hu) aif_peak = std::max(aif_peak, m - aif.mean_hu.front());
    if (!(aif_peak > 0)) throw numeric_error("estimate_flow: non-positive AIF peak");

    flow_map fm;
    fm.density = p.density;
    fm.aif_peak_hu = aif_peak;
    const auto tacs = supervoxel_tacs(s, set);
    for (const auto& tac : tacs) {
        double mbf = 6000.0 * max_slope(tac, s.times_s) / (p.density * aif_peak);
        bool clamped = false;
        if (mbf < 0 && p.clamp_negative) {
            mbf = 0;
            clamped = true;
        }
        fm.mbf.push_back(mbf);
        fm.clamped.push_back(clamped);
    }
    double sum = 0;
    for (double m : fm.mbf) sum += m;
    fm.region_mean = sum / double(fm.mbf.size());
    std::vector<double> sorted = fm.mbf;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    fm.region_median = (n % 2) ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    return fm;
}

}  // namespace pcatdyn
