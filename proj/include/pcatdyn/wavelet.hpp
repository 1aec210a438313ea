#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "pcatdyn/types.hpp"

namespace pcatdyn {

// Single-level stationary (undecimated) 3D Haar decomposition. Analysis
// filters L = (1, 1)/sqrt2 and H = (1, -1)/sqrt2 are applied as
// y[i] = (x[i] op x[i+1])/sqrt2 with edge replication, along x, then y,
// then z. No downsampling, so subbands stay voxel-aligned with the mask.
// Subband names list the axis filters in (x, y, z) order; a constant input
// scales to (sqrt2)^3 times the constant in LLL and exactly 0 elsewhere.
struct wavelet_bands {
    dims3 dim;
    std::array<std::vector<double>, 8> bands;  // bit0: H along x, bit1: y, bit2: z

    static std::string band_name(int index) {
        std::string s = "   ";
        s[0] = (index & 1) ? 'H' : 'L';
        s[1] = (index & 2) ? 'H' : 'L';
        s[2] = (index & 4) ? 'H' : 'L';
        return s;
    }
    static int band_index(const std::string& name) {
        if (name.size() != 3) throw config_error("subband name must have 3 letters");
        int idx = 0;
        for (int a = 0; a < 3; ++a) {
            if (name[std::size_t(a)] == 'H')
                idx |= 1 << a;
            else if (name[std::size_t(a)] != 'L')
                throw config_error("subband letters must be L or H");
        }
        return idx;
    }
    const std::vector<double>& band(const std::string& name) const {
        return bands[std::size_t(band_index(name))];
    }
};

namespace wavelet_detail {

inline const double inv_sqrt2 = 1.0 / std::sqrt(2.0);

// One filtering pass along the given axis, producing the low- and high-pass
// outputs of src simultaneously.
inline void haar_pass(const std::vector<double>& src, std::vector<double>& lo,
                      std::vector<double>& hi, const dims3& dim, int axis) {
    lo.resize(src.size());
    hi.resize(src.size());
    const int n[3]{dim.nx, dim.ny, dim.nz};
    const std::size_t stride[3]{1, std::size_t(dim.nx), std::size_t(dim.nx) * std::size_t(dim.ny)};
    const std::size_t s = stride[axis];
    const int len = n[axis];
    for (int k = 0; k < dim.nz; ++k) {
        for (int j = 0; j < dim.ny; ++j) {
            for (int i = 0; i < dim.nx; ++i) {
                const int pos[3]{i, j, k};
                const std::size_t idx = i + stride[1] * std::size_t(j) + stride[2] * std::size_t(k);
                const std::size_t nb = (pos[axis] + 1 < len) ? idx + s : idx;  // edge replication
                lo[idx] = (src[idx] + src[nb]) * inv_sqrt2;
                hi[idx] = (src[idx] - src[nb]) * inv_sqrt2;
            }
        }
    }
}

}  // namespace wavelet_detail

inline wavelet_bands wavelet3d(const std::vector<double>& values, const dims3& dim) {
    if (values.size() != dim.count()) throw data_error("wavelet3d: value count mismatch");
    wavelet_bands out;
    out.dim = dim;

    std::vector<double> xl, xh;
    wavelet_detail::haar_pass(values, xl, xh, dim, 0);
    std::array<std::vector<double>, 4> xy;
    wavelet_detail::haar_pass(xl, xy[0], xy[2], dim, 1);  // LL, LH (y)
    wavelet_detail::haar_pass(xh, xy[1], xy[3], dim, 1);  // HL, HH
    for (int b = 0; b < 4; ++b)
        wavelet_detail::haar_pass(xy[std::size_t(b)], out.bands[std::size_t(b)],
                                  out.bands[std::size_t(b + 4)], dim, 2);
    return out;
}

}  // namespace pcatdyn
