#pragma once

#include <cmath>
#include <cstddef>

#include "pcatdyn/types.hpp"

namespace pcatdyn {

struct region_stats {
    double mean = 0;
    double stdev = 0;  // population (n denominator)
    std::size_t count = 0;
};

// Mean / population stdev over voxels carrying the code. Accumulation is
// sequential in storage order so results are identical at any thread count.
inline region_stats mask_stats(const volume_grid& v, const label_mask& m, label code) {
    if (!same_geometry(v, m)) throw data_error("mask_stats: volume/mask geometry mismatch");
    const std::uint8_t c = std::uint8_t(code);
    double sum = 0;
    std::size_t n = 0;
    const std::size_t total = v.values.size();
    for (std::size_t i = 0; i < total; ++i) {
        if (m.labels[i] == c) {
            sum += v.values[i];
            ++n;
        }
    }
    if (n == 0)
        throw numeric_error(std::string("mask_stats: empty region ") + label_name(code));
    const double mean = sum / double(n);
    double ss = 0;
    for (std::size_t i = 0; i < total; ++i) {
        if (m.labels[i] == c) {
            const double d = v.values[i] - mean;
            ss += d * d;
        }
    }
    return {mean, std::sqrt(ss / double(n)), n};
}

}  // namespace pcatdyn
