#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pcatdyn/stats.hpp"
#include "pcatdyn/types.hpp"

namespace pcatdyn {

// Fixed membership freezes the voxel set (fat-gated at the reference scan by
// the caller's mask); per-scan membership re-applies the HU window per scan.
enum class membership : int { fixed, per_scan };

struct tac_policy {
    membership mode = membership::fixed;
    hu_window window = fat_window_standard;  // used by per_scan only
};

struct time_attenuation_curve {
    std::string region;
    std::vector<double> times_s;
    std::vector<double> mean_hu;
    std::vector<double> std_hu;
    std::vector<std::size_t> count;
    membership policy = membership::fixed;
};

struct peak_info {
    std::size_t p1_index = 0;
    std::size_t pa_index = 0;
    std::size_t ppcat_index = 0;
    double p1_time_s = 0;
    double pa_time_s = 0;
    double ppcat_time_s = 0;
};

struct enhancement_summary {
    std::string region;
    std::vector<double> delta_hu_vs_p1;           // per scan
    std::vector<int> offsets;                     // scan steps around Pa
    std::vector<double> delta_at_offsets;         // mean(Pa+k) - mean(Pa)
    double delta_at_ppcat = 0;
    double time_to_peak_s = 0;                    // t(argmax) - t(first scan)
};

struct volume_curve {
    std::vector<double> times_s;
    std::vector<hu_window> windows;
    std::vector<std::vector<double>> volume_cm3;      // [window][scan]
    std::vector<std::vector<double>> pct_change_vs_p1;
};

inline time_attenuation_curve compute_tac(const dynamic_series& s, const label_mask& region,
                                          label code, const tac_policy& policy = {}) {
    s.validate();
    if (!same_geometry(s.volumes[0], region)) throw data_error("compute_tac: geometry mismatch");
    time_attenuation_curve tac;
    tac.region = label_name(code);
    tac.policy = policy.mode;
    tac.times_s = s.times_s;
    const std::uint8_t c = std::uint8_t(code);
    const std::size_t nvox = region.labels.size();

    for (std::size_t k = 0; k < s.size(); ++k) {
        const auto& vol = s.volumes[k];
        double sum = 0;
        std::size_t n = 0;
        for (std::size_t v = 0; v < nvox; ++v) {
            if (region.labels[v] != c) continue;
            const double hu = vol.values[v];
            if (policy.mode == membership::per_scan && !policy.window.contains(hu)) continue;
            sum += hu;
            ++n;
        }
        if (n == 0)
            throw numeric_error(std::string("compute_tac: empty region ") + label_name(code) +
                                " at scan " + std::to_string(k));
        const double mean = sum / double(n);
        double ss = 0;
        for (std::size_t v = 0; v < nvox; ++v) {
            if (region.labels[v] != c) continue;
            const double hu = vol.values[v];
            if (policy.mode == membership::per_scan && !policy.window.contains(hu)) continue;
            const double d = hu - mean;
            ss += d * d;
        }
        tac.mean_hu.push_back(mean);
        tac.std_hu.push_back(std::sqrt(ss / double(n)));
        tac.count.push_back(n);
    }
    return tac;
}

// argmax of the mean curve; ties resolve to the earliest index.
inline std::size_t peak_index(const time_attenuation_curve& tac) {
    if (tac.mean_hu.empty()) throw numeric_error("peak_index: empty curve");
    std::size_t best = 0;
    for (std::size_t k = 1; k < tac.mean_hu.size(); ++k)
        if (tac.mean_hu[k] > tac.mean_hu[best]) best = k;
    return best;
}

inline peak_info find_peaks(const time_attenuation_curve& aorta,
                            const time_attenuation_curve& pcat) {
    peak_info p;
    p.p1_index = 0;
    p.pa_index = peak_index(aorta);
    p.ppcat_index = peak_index(pcat);
    p.p1_time_s = pcat.times_s.front();
    p.pa_time_s = aorta.times_s[p.pa_index];
    p.ppcat_time_s = pcat.times_s[p.ppcat_index];
    return p;
}

inline enhancement_summary summarize_enhancement(const time_attenuation_curve& tac,
                                                 const peak_info& peaks,
                                                 const std::vector<int>& offsets) {
    enhancement_summary es;
    es.region = tac.region;
    const double p1 = tac.mean_hu.at(peaks.p1_index);
    for (double m : tac.mean_hu) es.delta_hu_vs_p1.push_back(m - p1);

    const double at_pa = tac.mean_hu.at(peaks.pa_index);
    for (int k : offsets) {
        const long idx = long(peaks.pa_index) + k;
        if (idx < 0 || std::size_t(idx) >= tac.mean_hu.size())
            throw data_error("enhancement summary: offset " + std::to_string(k) +
                             " falls outside the series");
        es.offsets.push_back(k);
        es.delta_at_offsets.push_back(tac.mean_hu[std::size_t(idx)] - at_pa);
    }
    if (peaks.ppcat_index >= tac.mean_hu.size())
        throw data_error("enhancement summary: Ppcat index outside the series");
    es.delta_at_ppcat = tac.mean_hu[peaks.ppcat_index] - p1;
    es.time_to_peak_s = tac.times_s[peak_index(tac)] - tac.times_s.front();
    return es;
}

// Apparent volume: disk voxels currently inside each window, per scan.
inline volume_curve apparent_volume_curve(const dynamic_series& s, const label_mask& disks,
                                          const std::vector<hu_window>& windows) {
    s.validate();
    if (!same_geometry(s.volumes[0], disks))
        throw data_error("apparent_volume_curve: geometry mismatch");
    if (windows.empty()) throw config_error("apparent_volume_curve: no windows given");

    volume_curve vc;
    vc.times_s = s.times_s;
    vc.windows = windows;
    const double vox_cm3 = s.volumes[0].voxel_volume_mm3() / 1000.0;
    const std::size_t nvox = disks.labels.size();

    for (const auto& w : windows) {
        std::vector<double> vol(s.size(), 0.0);
        for (std::size_t k = 0; k < s.size(); ++k) {
            std::size_t n = 0;
            const auto& values = s.volumes[k].values;
            for (std::size_t v = 0; v < nvox; ++v)
                if (disks.labels[v] != 0 && w.contains(values[v])) ++n;
            vol[k] = double(n) * vox_cm3;
        }
        if (vol[0] <= 0)
            throw numeric_error("apparent_volume_curve: zero in-window voxels at P1");
        std::vector<double> pct(s.size());
        for (std::size_t k = 0; k < s.size(); ++k)
            pct[k] = 100.0 * (vol[k] - vol[0]) / vol[0];
        vc.volume_cm3.push_back(std::move(vol));
        vc.pct_change_vs_p1.push_back(std::move(pct));
    }
    return vc;
}

struct prox_dist_comparison {
    enhancement_summary proximal;
    enhancement_summary distal;
    double peak_delta_difference_hu = 0;  // proximal peak delta - distal peak delta
    double time_to_peak_gap_s = 0;        // distal ttp - proximal ttp
};

inline prox_dist_comparison compare_prox_dist(const dynamic_series& s, const label_mask& prox,
                                              label prox_code, const label_mask& dist,
                                              label dist_code, const peak_info& peaks,
                                              const std::vector<int>& offsets = {}) {
    const auto tac_p = compute_tac(s, prox, prox_code);
    const auto tac_d = compute_tac(s, dist, dist_code);
    prox_dist_comparison cmp;
    cmp.proximal = summarize_enhancement(tac_p, peaks, offsets);
    cmp.distal = summarize_enhancement(tac_d, peaks, offsets);
    const double peak_p = tac_p.mean_hu[peak_index(tac_p)] - tac_p.mean_hu.front();
    const double peak_d = tac_d.mean_hu[peak_index(tac_d)] - tac_d.mean_hu.front();
    cmp.peak_delta_difference_hu = peak_p - peak_d;
    cmp.time_to_peak_gap_s = cmp.distal.time_to_peak_s - cmp.proximal.time_to_peak_s;
    return cmp;
}

}  // namespace pcatdyn
