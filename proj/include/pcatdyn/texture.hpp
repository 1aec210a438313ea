#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <vector>

#include "pcatdyn/types.hpp"

namespace pcatdyn {

// Equal-width discretization over [min, max] of the ROI values; the maximum
// maps to bin nbins. A constant ROI collapses to bin 1 with a degeneracy flag.
struct discretized_roi {
    int nbins = 16;
    double min_v = 0, max_v = 0, bin_width = 0;
    std::vector<int> bin;  // 1..nbins per input value
    bool degenerate = false;
};

inline discretized_roi discretize(const std::vector<double>& values, int nbins = 16) {
    if (values.empty()) throw numeric_error("discretize: empty ROI");
    if (nbins < 2) throw config_error("discretize: need at least 2 bins");
    discretized_roi d;
    d.nbins = nbins;
    d.min_v = *std::min_element(values.begin(), values.end());
    d.max_v = *std::max_element(values.begin(), values.end());
    d.bin.resize(values.size());
    if (d.max_v <= d.min_v) {
        d.degenerate = true;
        d.bin_width = 0;
        std::fill(d.bin.begin(), d.bin.end(), 1);
        return d;
    }
    d.bin_width = (d.max_v - d.min_v) / nbins;
    for (std::size_t i = 0; i < values.size(); ++i) {
        int b = 1 + int(std::floor((values[i] - d.min_v) / d.bin_width));
        d.bin[i] = std::clamp(b, 1, nbins);
    }
    return d;
}

// ROI laid out on its bounding-box grid: bin 0 marks outside-mask voxels,
// in-mask voxels carry bins 1..nbins. Neighbors outside the mask are ignored
// by every matrix builder.
struct roi_grid {
    dims3 dim;
    std::vector<int> bin;
    int nbins = 16;

    std::size_t index(int i, int j, int k) const {
        return std::size_t(i) +
               std::size_t(dim.nx) * (std::size_t(j) + std::size_t(dim.ny) * std::size_t(k));
    }
};

// The 13 unique 3D directions (half of the 26-neighborhood, first nonzero
// component positive in (z, y, x) precedence).
inline const std::vector<std::array<int, 3>>& glcm_directions() {
    static const std::vector<std::array<int, 3>> dirs = [] {
        std::vector<std::array<int, 3>> d;
        for (int dz = -1; dz <= 1; ++dz)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    if (!dx && !dy && !dz) continue;
                    if (dz > 0 || (dz == 0 && dy > 0) || (dz == 0 && dy == 0 && dx > 0))
                        d.push_back({dx, dy, dz});
                }
        return d;
    }();
    return dirs;
}

// Symmetric distance-1 co-occurrence counts, one matrix per direction.
inline std::vector<std::vector<double>> glcm_matrices(const roi_grid& g) {
    const auto& dirs = glcm_directions();
    std::vector<std::vector<double>> mats(dirs.size(),
                                          std::vector<double>(std::size_t(g.nbins) * g.nbins, 0.0));
    for (int k = 0; k < g.dim.nz; ++k) {
        for (int j = 0; j < g.dim.ny; ++j) {
            for (int i = 0; i < g.dim.nx; ++i) {
                const int bc = g.bin[g.index(i, j, k)];
                if (bc == 0) continue;
                for (std::size_t d = 0; d < dirs.size(); ++d) {
                    const int ii = i + dirs[d][0], jj = j + dirs[d][1], kk = k + dirs[d][2];
                    if (ii < 0 || jj < 0 || kk < 0 || ii >= g.dim.nx || jj >= g.dim.ny ||
                        kk >= g.dim.nz)
                        continue;
                    const int bn = g.bin[g.index(ii, jj, kk)];
                    if (bn == 0) continue;
                    mats[d][std::size_t(bc - 1) * g.nbins + (bn - 1)] += 1.0;
                    mats[d][std::size_t(bn - 1) * g.nbins + (bc - 1)] += 1.0;
                }
            }
        }
    }
    return mats;
}

// IDMN = sum p(i,j) / (1 + (i-j)^2 / Ng^2), averaged over directions with at
// least one co-occurrence. Throws when every direction is empty.
inline double glcm_idmn(const roi_grid& g) {
    const auto mats = glcm_matrices(g);
    const double ng2 = double(g.nbins) * g.nbins;
    double acc = 0;
    int used = 0;
    for (const auto& m : mats) {
        double total = 0;
        for (double c : m) total += c;
        if (total <= 0) continue;
        double v = 0;
        for (int i = 0; i < g.nbins; ++i)
            for (int j = 0; j < g.nbins; ++j) {
                const double p = m[std::size_t(i) * g.nbins + j] / total;
                const double d = i - j;
                v += p / (1.0 + d * d / ng2);
            }
        acc += v;
        ++used;
    }
    if (!used) throw numeric_error("glcm: no co-occurrences in any direction");
    return acc / used;
}

// Gray-level dependence matrix, Chebyshev distance 1, dependence tolerance 0.
// Rows are gray levels 1..nbins, columns dependence sizes 1..27 (the count of
// equal-bin in-mask neighbors plus one).
struct gldm_matrix {
    int nbins = 16;
    int max_dep = 27;
    std::vector<double> p;  // nbins x max_dep
    double total = 0;

    double at(int level, int dep) const {
        return p[std::size_t(level - 1) * max_dep + (dep - 1)];
    }
};

inline gldm_matrix gldm(const roi_grid& g) {
    gldm_matrix m;
    m.nbins = g.nbins;
    m.p.assign(std::size_t(g.nbins) * m.max_dep, 0.0);
    for (int k = 0; k < g.dim.nz; ++k) {
        for (int j = 0; j < g.dim.ny; ++j) {
            for (int i = 0; i < g.dim.nx; ++i) {
                const int bc = g.bin[g.index(i, j, k)];
                if (bc == 0) continue;
                int dep = 0;
                for (int dk = -1; dk <= 1; ++dk)
                    for (int dj = -1; dj <= 1; ++dj)
                        for (int di = -1; di <= 1; ++di) {
                            if (!di && !dj && !dk) continue;
                            const int ii = i + di, jj = j + dj, kk = k + dk;
                            if (ii < 0 || jj < 0 || kk < 0 || ii >= g.dim.nx || jj >= g.dim.ny ||
                                kk >= g.dim.nz)
                                continue;
                            if (g.bin[g.index(ii, jj, kk)] == bc) ++dep;
                        }
                m.p[std::size_t(bc - 1) * m.max_dep + dep] += 1.0;  // column dep+1
                m.total += 1.0;
            }
        }
    }
    if (m.total <= 0) throw numeric_error("gldm: empty matrix");
    return m;
}

inline double gldm_dnn_normalized(const gldm_matrix& m) {
    double acc = 0;
    for (int j = 1; j <= m.max_dep; ++j) {
        double col = 0;
        for (int i = 1; i <= m.nbins; ++i) col += m.at(i, j);
        acc += col * col;
    }
    return acc / (m.total * m.total);
}

// IDMN evaluated on the dependence matrix, i = gray level, j = dependence
// size, normalized by the bin count.
inline double gldm_idmn(const gldm_matrix& m) {
    const double ng2 = double(m.nbins) * m.nbins;
    double v = 0;
    for (int i = 1; i <= m.nbins; ++i)
        for (int j = 1; j <= m.max_dep; ++j) {
            const double p = m.at(i, j) / m.total;
            const double d = i - j;
            v += p / (1.0 + d * d / ng2);
        }
    return v;
}

// Gray-level size-zone matrix over 26-connected equal-bin zones.
struct glszm_matrix {
    int nbins = 16;
    std::map<std::size_t, std::vector<double>> by_size;  // zone size -> per-level counts
    double zones = 0;
};

inline glszm_matrix glszm(const roi_grid& g) {
    glszm_matrix m;
    m.nbins = g.nbins;
    std::vector<char> visited(g.bin.size(), 0);
    for (std::size_t start = 0; start < g.bin.size(); ++start) {
        if (visited[start] || g.bin[start] == 0) continue;
        const int level = g.bin[start];
        std::size_t size = 0;
        std::deque<std::size_t> queue{start};
        visited[start] = 1;
        while (!queue.empty()) {
            const std::size_t cur = queue.front();
            queue.pop_front();
            ++size;
            const int i = int(cur % std::size_t(g.dim.nx));
            const int j = int((cur / std::size_t(g.dim.nx)) % std::size_t(g.dim.ny));
            const int k = int(cur / (std::size_t(g.dim.nx) * g.dim.ny));
            for (int dk = -1; dk <= 1; ++dk)
                for (int dj = -1; dj <= 1; ++dj)
                    for (int di = -1; di <= 1; ++di) {
                        if (!di && !dj && !dk) continue;
                        const int ii = i + di, jj = j + dj, kk = k + dk;
                        if (ii < 0 || jj < 0 || kk < 0 || ii >= g.dim.nx || jj >= g.dim.ny ||
                            kk >= g.dim.nz)
                            continue;
                        const std::size_t nb = g.index(ii, jj, kk);
                        if (!visited[nb] && g.bin[nb] == level) {
                            visited[nb] = 1;
                            queue.push_back(nb);
                        }
                    }
        }
        auto& col = m.by_size[size];
        if (col.empty()) col.assign(std::size_t(g.nbins), 0.0);
        col[std::size_t(level - 1)] += 1.0;
        m.zones += 1.0;
    }
    if (m.zones <= 0) throw numeric_error("glszm: empty matrix");
    return m;
}

// SZNN = sum over sizes of (zones of that size)^2 / (total zones)^2.
inline double glszm_sznn(const glszm_matrix& m) {
    double acc = 0;
    for (const auto& [size, col] : m.by_size) {
        double n = 0;
        for (double c : col) n += c;
        acc += n * n;
    }
    return acc / (m.zones * m.zones);
}

}  // namespace pcatdyn
