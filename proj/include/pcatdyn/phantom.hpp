#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "pcatdyn/config.hpp"
#include "pcatdyn/parallel.hpp"
#include "pcatdyn/rng.hpp"
#include "pcatdyn/roi.hpp"
#include "pcatdyn/types.hpp"

namespace pcatdyn {

// Gamma-variate bolus. support_cut truncates the tail at x = (t-t0)/tp >= cut
// to exactly zero so uptake curves saturate at a definite time instead of
// creeping upward forever; the default cut of 16 is far below double noise
// for any realistic shape.
struct aif_params {
    double amplitude = 200.0;  // HU above baseline at the peak
    double t0 = 4.0;           // bolus arrival, s
    double tp = 8.0;           // time to peak after arrival, s
    double alpha = 3.0;
    double support_cut = 16.0;

    void validate() const {
        if (!(amplitude > 0)) throw config_error("aif: amplitude must be > 0");
        if (!(tp > 0)) throw config_error("aif: tp must be > 0");
        if (!(alpha > 0)) throw config_error("aif: alpha must be > 0");
        if (!(t0 >= 0)) throw config_error("aif: t0 must be >= 0");
        if (!(support_cut > 1)) throw config_error("aif: support_cut must be > 1");
    }
};

inline double gamma_variate(double t, const aif_params& p) {
    const double x = (t - p.t0) / p.tp;
    if (x <= 0.0 || x >= p.support_cut) return 0.0;
    return p.amplitude * std::pow(x, p.alpha) * std::exp(p.alpha * (1.0 - x));
}

inline constexpr double tissue_grid_step_s = 0.1;

// Cumulative trapezoid of the (scaled, delayed) bolus on a 0.1 s grid at the
// requested times: c(t) = (mbf * density / 6000) * integral of
// amp * gamma(tau - delay) from 0 to t. Monotone non-decreasing.
inline std::vector<double> tissue_curve(double mbf, double density, const aif_params& aif,
                                        double delay_s, double amp_scale,
                                        const std::vector<double>& times_s) {
    aif.validate();
    if (!(mbf >= 0)) throw config_error("tissue_curve: mbf must be >= 0");
    if (!(density > 0)) throw config_error("tissue_curve: density must be > 0");
    const double factor = mbf * density / 6000.0;
    double tmax = 0;
    for (double t : times_s) tmax = std::max(tmax, t);

    const double h = tissue_grid_step_s;
    const std::size_t n = std::size_t(std::llround(tmax / h)) + 1;
    std::vector<double> cum(n + 1, 0.0);
    double g_prev = amp_scale * gamma_variate(0.0 - delay_s, aif);
    for (std::size_t i = 1; i <= n; ++i) {
        const double g = amp_scale * gamma_variate(double(i) * h - delay_s, aif);
        cum[i] = cum[i - 1] + (g_prev + g) * 0.5 * h;
        g_prev = g;
    }

    std::vector<double> out(times_s.size());
    for (std::size_t q = 0; q < times_s.size(); ++q) {
        const double t = times_s[q];
        if (t <= 0) {
            out[q] = 0.0;
            continue;
        }
        const double pos = t / h;
        const std::size_t near = std::size_t(std::llround(pos));
        if (std::abs(pos - double(near)) < 1e-9 && near <= n) {
            out[q] = factor * cum[near];
        } else {
            const std::size_t lo = std::min<std::size_t>(n, std::size_t(pos));
            const double t_lo = double(lo) * h;
            const double ga = amp_scale * gamma_variate(t_lo - delay_s, aif);
            const double gb = amp_scale * gamma_variate(t - delay_s, aif);
            out[q] = factor * (cum[lo] + (ga + gb) * 0.5 * (t - t_lo));
        }
    }
    return out;
}

enum class shape_kind { box, cylinder, tube };

struct geometry {
    shape_kind kind = shape_kind::box;
    // box
    vec3 lo, hi;
    // cylinder / tube
    int axis = 2;  // 0 = x, 1 = y, 2 = z
    double ca = 0, cb = 0;  // in-plane center (the two non-axis coords, in axis order)
    double ax_lo = 0, ax_hi = 0;
    double r_inner = 0, r_outer = 0;  // cylinder uses r_outer only

    static geometry make_box(vec3 lo, vec3 hi) { return {shape_kind::box, lo, hi}; }
    static geometry make_cylinder(int axis, double ca, double cb, double ax_lo, double ax_hi,
                                  double radius) {
        geometry g;
        g.kind = shape_kind::cylinder;
        g.axis = axis;
        g.ca = ca;
        g.cb = cb;
        g.ax_lo = ax_lo;
        g.ax_hi = ax_hi;
        g.r_outer = radius;
        return g;
    }
    static geometry make_tube(int axis, double ca, double cb, double ax_lo, double ax_hi,
                              double r_inner, double r_outer) {
        geometry g = make_cylinder(axis, ca, cb, ax_lo, ax_hi, r_outer);
        g.kind = shape_kind::tube;
        g.r_inner = r_inner;
        return g;
    }

    bool contains(const vec3& p) const {
        if (kind == shape_kind::box)
            return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z &&
                   p.z <= hi.z;
        const double axc = p[axis];
        if (axc < ax_lo || axc > ax_hi) return false;
        double u, v;
        if (axis == 0) {
            u = p.y;
            v = p.z;
        } else if (axis == 1) {
            u = p.x;
            v = p.z;
        } else {
            u = p.x;
            v = p.y;
        }
        const double d2 = (u - ca) * (u - ca) + (v - cb) * (v - cb);
        if (d2 > r_outer * r_outer) return false;
        if (kind == shape_kind::tube && d2 <= r_inner * r_inner) return false;
        return true;
    }

    void validate(const dims3& dim, const vec3& spacing, const vec3& origin) const {
        const vec3 extent{origin.x + (dim.nx - 1) * spacing.x, origin.y + (dim.ny - 1) * spacing.y,
                          origin.z + (dim.nz - 1) * spacing.z};
        auto inside = [&](double c, int ax) {
            return c >= origin[ax] - 1e-9 && c <= extent[ax] + 1e-9;
        };
        if (kind == shape_kind::box) {
            if (!(lo.x <= hi.x && lo.y <= hi.y && lo.z <= hi.z))
                throw config_error("geometry: box lo must not exceed hi");
            for (int a = 0; a < 3; ++a)
                if (!inside(lo[a], a) || !inside(hi[a], a))
                    throw config_error("geometry: box outside grid bounds");
            return;
        }
        if (!(r_outer > 0)) throw config_error("geometry: radius must be > 0");
        if (kind == shape_kind::tube && !(r_inner >= 0 && r_inner < r_outer))
            throw config_error("geometry: tube needs 0 <= r_inner < r_outer");
        if (axis < 0 || axis > 2) throw config_error("geometry: axis must be x, y, or z");
        if (!(ax_lo <= ax_hi)) throw config_error("geometry: axis range inverted");
        if (!inside(ax_lo, axis) || !inside(ax_hi, axis))
            throw config_error("geometry: axis range outside grid bounds");
    }
};

struct compartment_spec {
    label lab = label::bg;
    geometry geom;
    double baseline_hu = 0;
    double baseline_spread = 0;  // stratified uniform half-width around baseline_hu
    double mbf = 0;              // mL/100g-min
    double density = 1.0;        // g/mL
    double delay_s = 0;
    double amp_scale = 1.0;

    bool aif_direct() const {
        return lab == label::aorta || lab == label::lumen_lad || lab == label::lumen_rca;
    }

    void validate(const dims3& dim, const vec3& spacing, const vec3& origin) const {
        if (lab == label::bg) throw config_error("compartment: label BG is reserved");
        if (!(mbf >= 0)) throw config_error("compartment: mbf must be >= 0");
        if (!(density > 0)) throw config_error("compartment: density must be > 0");
        if (!(amp_scale > 0 && amp_scale <= 1))
            throw config_error("compartment: amp_scale must be in (0, 1]");
        if (!(delay_s >= 0)) throw config_error("compartment: delay_s must be >= 0");
        if (!(baseline_spread >= 0))
            throw config_error("compartment: baseline_spread must be >= 0");
        geom.validate(dim, spacing, origin);
    }
};

struct phantom_spec {
    dims3 dim{64, 64, 64};
    vec3 spacing{1, 1, 1};
    vec3 origin{0, 0, 0};
    double background_hu = -1000.0;
    aif_params aif;
    std::vector<compartment_spec> compartments;
    int scan_count = 11;
    double scan_interval_s = 2.0;
    double noise_sigma = 0.0;
    std::uint64_t rng_seed = 1;

    std::vector<double> scan_times() const {
        std::vector<double> t(static_cast<std::size_t>(scan_count), 0.0);
        for (int k = 0; k < scan_count; ++k) t[std::size_t(k)] = k * scan_interval_s;
        return t;
    }

    void validate() const {
        if (dim.nx < 1 || dim.ny < 1 || dim.nz < 1)
            throw config_error("phantom: dims must all be >= 1");
        if (!(spacing.x > 0 && spacing.y > 0 && spacing.z > 0))
            throw config_error("phantom: spacing must be positive");
        if (scan_count < 2) throw config_error("phantom: scans must be >= 2");
        if (!(scan_interval_s > 0)) throw config_error("phantom: interval must be > 0");
        if (!(noise_sigma >= 0)) throw config_error("phantom: noise_sigma must be >= 0");
        aif.validate();
        if (compartments.empty()) throw config_error("phantom: no compartments");
        for (auto& c : compartments) c.validate(dim, spacing, origin);
        for (std::size_t a = 0; a < compartments.size(); ++a)
            for (std::size_t b = a + 1; b < compartments.size(); ++b)
                if (compartments[a].lab == compartments[b].lab)
                    throw config_error(std::string("phantom: duplicate compartment label ") +
                                       label_name(compartments[a].lab));
    }
};

struct truth_entry {
    label lab = label::bg;
    double mbf = 0;
    double density = 1;
    double baseline_hu = 0;
    double baseline_spread = 0;
    double delay_s = 0;
    double amp_scale = 1;
    std::vector<double> enhancement;  // HU above baseline at scan times
    double time_to_peak_s = 0;        // earliest sample attaining the maximum
};

struct ground_truth {
    std::vector<double> scan_times;
    std::vector<truth_entry> entries;

    const truth_entry& by_label(label l) const {
        for (auto& e : entries)
            if (e.lab == l) return e;
        throw data_error(std::string("ground truth: no entry for ") + label_name(l));
    }
};

struct phantom_result {
    dynamic_series series;
    label_mask mask;
    std::optional<centerline> cl;
    ground_truth truth;
};

namespace phantom_detail {

inline std::vector<double> stratified_baselines(const compartment_spec& c, std::size_t n,
                                                std::uint64_t seed, std::size_t comp_index) {
    std::vector<double> out(n, c.baseline_hu);
    if (c.baseline_spread <= 0 || n == 0) return out;
    // Evenly spaced levels over [baseline - spread, baseline + spread],
    // scattered by a hashed deterministic permutation.
    std::vector<std::uint64_t> key(n);
    const std::uint64_t s = rng::splitmix64(seed ^ (0xabcd0000ULL + comp_index));
    for (std::size_t j = 0; j < n; ++j) key[j] = rng::splitmix64(s ^ j);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return key[a] != key[b] ? key[a] < key[b] : a < b;
    });
    const double lo = c.baseline_hu - c.baseline_spread;
    const double width = 2.0 * c.baseline_spread;
    for (std::size_t r = 0; r < n; ++r)
        out[order[r]] = lo + width * ((double(r) + 0.5) / double(n));
    return out;
}

inline std::optional<centerline> build_centerline(const phantom_spec& spec) {
    const compartment_spec* ref = nullptr;
    std::vector<std::pair<double, double>> spans;
    for (auto& c : spec.compartments) {
        if (c.geom.kind != shape_kind::tube) continue;
        if (!ref) {
            ref = &c;
        } else if (c.geom.axis != ref->geom.axis ||
                   std::abs(c.geom.ca - ref->geom.ca) > 1e-9 ||
                   std::abs(c.geom.cb - ref->geom.cb) > 1e-9) {
            continue;  // only tubes collinear with the first one contribute
        }
        spans.emplace_back(c.geom.ax_lo, c.geom.ax_hi);
    }
    if (!ref) return std::nullopt;
    std::sort(spans.begin(), spans.end());
    const double lo = spans.front().first;
    double hi = lo;
    for (auto& s : spans) hi = std::max(hi, s.second);

    const double step = std::min({spec.spacing.x, spec.spacing.y, spec.spacing.z});
    std::vector<vec3> pts;
    for (double a = lo; a <= hi + 1e-9; a += step) {
        vec3 p;
        if (ref->geom.axis == 0)
            p = {a, ref->geom.ca, ref->geom.cb};
        else if (ref->geom.axis == 1)
            p = {ref->geom.ca, a, ref->geom.cb};
        else
            p = {ref->geom.ca, ref->geom.cb, a};
        pts.push_back(p);
    }
    if (pts.size() < 2) return std::nullopt;
    return centerline::from_points(std::move(pts));
}

}  // namespace phantom_detail

// Builds the full synthetic acquisition: label mask, per-scan volumes with
// programmed enhancement plus optional Gaussian noise, the lumen centerline,
// and the ground-truth tables used by the verification suites.
inline phantom_result simulate(const phantom_spec& spec) {
    spec.validate();
    const auto times = spec.scan_times();
    const std::size_t nvox = spec.dim.count();

    phantom_result res;
    res.mask.dim = spec.dim;
    res.mask.spacing = spec.spacing;
    res.mask.origin = spec.origin;
    res.mask.labels.assign(nvox, 0);

    std::vector<double> baseline(nvox, spec.background_hu);
    std::vector<std::vector<std::size_t>> comp_voxels(spec.compartments.size());

    for (std::size_t ci = 0; ci < spec.compartments.size(); ++ci) {
        const auto& c = spec.compartments[ci];
        auto& vox = comp_voxels[ci];
        for (int k = 0; k < spec.dim.nz; ++k) {
            for (int j = 0; j < spec.dim.ny; ++j) {
                for (int i = 0; i < spec.dim.nx; ++i) {
                    const vec3 p{spec.origin.x + i * spec.spacing.x,
                                 spec.origin.y + j * spec.spacing.y,
                                 spec.origin.z + k * spec.spacing.z};
                    if (!c.geom.contains(p)) continue;
                    const std::size_t idx = res.mask.index(i, j, k);
                    if (res.mask.labels[idx] != 0)
                        throw data_error(std::string("phantom: compartment ") +
                                         label_name(c.lab) + " overlaps " +
                                         label_name(label(res.mask.labels[idx])));
                    res.mask.labels[idx] = std::uint8_t(c.lab);
                    vox.push_back(idx);
                }
            }
        }
        if (vox.empty())
            throw data_error(std::string("phantom: compartment ") + label_name(c.lab) +
                             " contains no voxels");
        const auto b = phantom_detail::stratified_baselines(c, vox.size(), spec.rng_seed, ci);
        for (std::size_t j = 0; j < vox.size(); ++j) baseline[vox[j]] = b[j];
    }

    // per-label enhancement curves at scan times
    std::array<std::vector<double>, label_count> curve;
    curve[0].assign(times.size(), 0.0);
    res.truth.scan_times = times;
    for (auto& c : spec.compartments) {
        std::vector<double> enh;
        if (c.aif_direct()) {
            enh.resize(times.size());
            for (std::size_t k = 0; k < times.size(); ++k)
                enh[k] = c.amp_scale * gamma_variate(times[k] - c.delay_s, spec.aif);
        } else {
            enh = tissue_curve(c.mbf, c.density, spec.aif, c.delay_s, c.amp_scale, times);
        }
        curve[std::size_t(c.lab)] = enh;

        truth_entry e;
        e.lab = c.lab;
        e.mbf = c.mbf;
        e.density = c.density;
        e.baseline_hu = c.baseline_hu;
        e.baseline_spread = c.baseline_spread;
        e.delay_s = c.delay_s;
        e.amp_scale = c.amp_scale;
        e.enhancement = enh;
        std::size_t best = 0;
        for (std::size_t k = 1; k < enh.size(); ++k)
            if (enh[k] > enh[best]) best = k;
        e.time_to_peak_s = times[best];
        res.truth.entries.push_back(std::move(e));
    }

    res.series.times_s = times;
    res.series.volumes.resize(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) {
        auto& vol = res.series.volumes[k];
        vol.dim = spec.dim;
        vol.spacing = spec.spacing;
        vol.origin = spec.origin;
        vol.time_s = times[k];
        vol.values.resize(nvox);
        std::array<double, label_count> enh_k{};
        for (std::uint8_t l = 0; l < label_count; ++l)
            enh_k[l] = curve[l].empty() ? 0.0 : curve[l][k];
        const double sigma = spec.noise_sigma;
        const std::uint64_t seed = spec.rng_seed;
        const std::uint64_t scan_base = std::uint64_t(k) * nvox;
        par::parallel_for(nvox, [&](std::size_t v) {
            double val = baseline[v] + enh_k[res.mask.labels[v]];
            if (sigma > 0) val += sigma * rng::gaussian(seed, scan_base + v);
            vol.values[v] = float(val);
        });
    }
    res.series.validate();
    res.cl = phantom_detail::build_centerline(spec);
    return res;
}

// ---- presets -------------------------------------------------------------
//
// The reference preset programs: MYO 324 / PCAT 75 / EAT 40 mL/100g-min,
// PCAT baseline -75 HU rising to -53 HU (delta 22) at the last scan, aorta
// peak on scan index 8 so the PCAT peak lands at Pa+2, and Pa-1/Pa+1 offsets
// of exactly -4/+3 HU. The AIF constants below were solved numerically for
// those targets under the 0.1 s trapezoid integrator.

inline constexpr double reference_aif_amplitude = 208.63202588882376;
inline constexpr double reference_aif_t0 = 5.204050528291672;
inline constexpr double reference_aif_tp = 7.065652356510358;
inline constexpr double reference_aorta_delay = 16.0 - reference_aif_t0 - reference_aif_tp;

inline constexpr double density_myocardium = 1.05;  // g/mL
inline constexpr double density_adipose = 0.92;     // g/mL

// Geometry is fixed in mm on a 128 mm cube; grid sets the resolution.
inline phantom_spec reference_preset(int grid = 128, double noise_sigma = 0.0,
                                 std::uint64_t seed = 20240215ULL) {
    phantom_spec s;
    s.dim = {grid, grid, grid};
    const double sp = 128.0 / grid;
    s.spacing = {sp, sp, sp};
    s.background_hu = -1000;
    s.aif = {reference_aif_amplitude, reference_aif_t0, reference_aif_tp, 3.0, 16.0};
    s.scan_count = 11;
    s.scan_interval_s = 2.0;
    s.noise_sigma = noise_sigma;
    s.rng_seed = seed;

    auto add = [&](compartment_spec c) { s.compartments.push_back(c); };

    compartment_spec aorta;
    aorta.lab = label::aorta;
    aorta.geom = geometry::make_cylinder(2, 100, 100, 4, 124, 10);
    aorta.baseline_hu = 45;
    aorta.delay_s = reference_aorta_delay;
    add(aorta);

    compartment_spec lumen;
    lumen.lab = label::lumen_lad;
    lumen.geom = geometry::make_cylinder(2, 52, 52, 32, 96, 2.0);
    lumen.baseline_hu = 45;
    add(lumen);

    // 40 mm tube: the pipeline's PCAT rule covers the first 40 mm of
    // centerline, so the programmed depot and the derived mask coincide
    compartment_spec pcat;
    pcat.lab = label::pcat;
    pcat.geom = geometry::make_tube(2, 52, 52, 32, 72, 2.0, 4.0);
    pcat.baseline_hu = -75;
    pcat.baseline_spread = 10;
    pcat.mbf = 75;
    pcat.density = density_adipose;
    add(pcat);

    compartment_spec myo;
    myo.lab = label::myo;
    myo.geom = geometry::make_box({20, 36, 32}, {36, 72, 96});
    myo.baseline_hu = 45;
    myo.baseline_spread = 5;
    myo.mbf = 324;
    myo.density = density_myocardium;
    add(myo);

    compartment_spec eat;
    eat.lab = label::eat;
    eat.geom = geometry::make_box({58, 40, 32}, {74, 64, 96});
    eat.baseline_hu = -85;
    eat.baseline_spread = 10;
    eat.mbf = 40;
    eat.density = density_adipose;
    add(eat);

    compartment_spec pat;
    pat.lab = label::pat;
    pat.geom = geometry::make_box({8, 8, 32}, {24, 28, 96});
    pat.baseline_hu = -89;
    pat.baseline_spread = 10;
    pat.density = density_adipose;
    add(pat);

    compartment_spec sub;
    sub.lab = label::sub;
    sub.geom = geometry::make_box({8, 76, 32}, {24, 96, 96});
    sub.baseline_hu = -105;
    sub.baseline_spread = 10;
    sub.density = density_adipose;
    add(sub);

    compartment_spec paat;
    paat.lab = label::paat;
    paat.geom = geometry::make_box({80, 8, 32}, {96, 28, 96});
    paat.baseline_hu = -65;
    paat.baseline_spread = 10;
    paat.density = density_adipose;
    add(paat);

    return s;
}

// Stenosis preset: short bolus with support_cut 6 so the proximal PCAT curve
// saturates exactly at t = 14 s and the distal one (2 s delay, damped to
// 12.3/16.1 of the proximal peak) at t = 16 s.
inline constexpr double stenosis_aif_amplitude = 470.4877960763143;

inline phantom_spec stenosis_preset(int grid = 128, double noise_sigma = 0.0,
                                    std::uint64_t seed = 20240216ULL) {
    phantom_spec s;
    s.dim = {grid, grid, std::max(24, (3 * grid) / 4)};
    const double sp = 128.0 / grid;
    s.spacing = {sp, sp, sp};
    s.background_hu = -1000;
    s.aif = {stenosis_aif_amplitude, 2.0, 2.0, 3.0, 6.0};
    s.scan_count = 11;
    s.scan_interval_s = 2.0;
    s.noise_sigma = noise_sigma;
    s.rng_seed = seed;

    compartment_spec aorta;
    aorta.lab = label::aorta;
    aorta.geom = geometry::make_cylinder(2, 100, 100, 4, 88, 10);
    aorta.baseline_hu = 45;
    s.compartments.push_back(aorta);

    compartment_spec lumen;
    lumen.lab = label::lumen_lad;
    lumen.geom = geometry::make_cylinder(2, 52, 52, 8, 84, 2.0);
    lumen.baseline_hu = 45;
    s.compartments.push_back(lumen);

    compartment_spec prox;
    prox.lab = label::pcat_prox;
    prox.geom = geometry::make_tube(2, 52, 52, 8, 45.5, 2.0, 4.0);
    prox.baseline_hu = -75;
    prox.baseline_spread = 10;
    prox.mbf = 75;
    prox.density = density_adipose;
    s.compartments.push_back(prox);

    compartment_spec dist = prox;
    dist.lab = label::pcat_dist;
    dist.geom = geometry::make_tube(2, 52, 52, 45.5, 84, 2.0, 4.0);
    dist.delay_s = 2.0;
    dist.amp_scale = 12.3 / 16.1;
    s.compartments.push_back(dist);

    return s;
}

// Apparent-volume preset: a large PCAT block whose baselines tile the
// standard fat window exactly, so a +22 HU shift pushes 13.75% of voxels
// past -30 HU.
inline phantom_spec volume_preset(std::uint64_t seed = 20240217ULL) {
    phantom_spec s;
    s.dim = {64, 64, 64};
    s.spacing = {1, 1, 1};
    s.background_hu = -1000;
    s.aif = {reference_aif_amplitude, reference_aif_t0, reference_aif_tp, 3.0, 16.0};
    s.scan_count = 11;
    s.scan_interval_s = 2.0;
    s.noise_sigma = 0.0;
    s.rng_seed = seed;

    compartment_spec pcat;
    pcat.lab = label::pcat;
    pcat.geom = geometry::make_box({4, 4, 4}, {39, 39, 39});
    pcat.baseline_hu = -110;
    pcat.baseline_spread = 80;  // tiles [-190, -30]
    pcat.mbf = 75;
    pcat.density = density_adipose;
    s.compartments.push_back(pcat);

    compartment_spec aorta;
    aorta.lab = label::aorta;
    aorta.geom = geometry::make_cylinder(2, 52, 52, 4, 60, 6);
    aorta.baseline_hu = 45;
    aorta.delay_s = reference_aorta_delay;
    s.compartments.push_back(aorta);

    return s;
}

// ---- phantom spec file (key = value sections) -----------------------------

inline std::string axis_name(int a) { return a == 0 ? "x" : a == 1 ? "y" : "z"; }
inline int axis_from_name(const std::string& s) {
    if (s == "x") return 0;
    if (s == "y") return 1;
    if (s == "z") return 2;
    throw config_error("axis must be x, y, or z");
}

inline config_doc to_config(const phantom_spec& s) {
    config_doc doc;
    config_section grid{"grid", {}};
    grid.set("dims", std::to_string(s.dim.nx) + " " + std::to_string(s.dim.ny) + " " +
                         std::to_string(s.dim.nz));
    grid.set("spacing", fmt_g(s.spacing.x) + " " + fmt_g(s.spacing.y) + " " + fmt_g(s.spacing.z));
    grid.set("origin", fmt_g(s.origin.x) + " " + fmt_g(s.origin.y) + " " + fmt_g(s.origin.z));
    grid.set("background_hu", s.background_hu);
    doc.sections.push_back(grid);

    config_section aif{"aif", {}};
    aif.set("amplitude", s.aif.amplitude);
    aif.set("t0", s.aif.t0);
    aif.set("tp", s.aif.tp);
    aif.set("alpha", s.aif.alpha);
    aif.set("support_cut", s.aif.support_cut);
    doc.sections.push_back(aif);

    config_section scans{"scans", {}};
    scans.set("count", std::to_string(s.scan_count));
    scans.set("interval_s", s.scan_interval_s);
    doc.sections.push_back(scans);

    config_section noise{"noise", {}};
    noise.set("sigma", s.noise_sigma);
    noise.set("seed", std::to_string(s.rng_seed));
    doc.sections.push_back(noise);

    for (auto& c : s.compartments) {
        config_section cs{"compartment", {}};
        cs.set("label", label_name(c.lab));
        if (c.geom.kind == shape_kind::box) {
            cs.set("shape", "box");
            cs.set("lo", fmt_g(c.geom.lo.x) + " " + fmt_g(c.geom.lo.y) + " " + fmt_g(c.geom.lo.z));
            cs.set("hi", fmt_g(c.geom.hi.x) + " " + fmt_g(c.geom.hi.y) + " " + fmt_g(c.geom.hi.z));
        } else {
            cs.set("shape", c.geom.kind == shape_kind::tube ? "tube" : "cylinder");
            cs.set("axis", axis_name(c.geom.axis));
            cs.set("center", fmt_g(c.geom.ca) + " " + fmt_g(c.geom.cb));
            cs.set("axis_range", fmt_g(c.geom.ax_lo) + " " + fmt_g(c.geom.ax_hi));
            if (c.geom.kind == shape_kind::tube) {
                cs.set("radius_inner", c.geom.r_inner);
                cs.set("radius_outer", c.geom.r_outer);
            } else {
                cs.set("radius", c.geom.r_outer);
            }
        }
        cs.set("baseline_hu", c.baseline_hu);
        if (c.baseline_spread > 0) cs.set("baseline_spread", c.baseline_spread);
        cs.set("mbf", c.mbf);
        cs.set("density", c.density);
        if (c.delay_s != 0) cs.set("delay_s", c.delay_s);
        if (c.amp_scale != 1) cs.set("amp_scale", c.amp_scale);
        doc.sections.push_back(cs);
    }
    return doc;
}

inline phantom_spec phantom_from_config(const config_doc& doc) {
    phantom_spec s;
    const auto& grid = doc.section("grid");
    auto d = grid.get_doubles("dims", 3);
    s.dim = {int(d[0]), int(d[1]), int(d[2])};
    auto sp = grid.get_doubles("spacing", 3);
    s.spacing = {sp[0], sp[1], sp[2]};
    if (grid.has("origin")) {
        auto o = grid.get_doubles("origin", 3);
        s.origin = {o[0], o[1], o[2]};
    }
    s.background_hu = grid.get_double_or("background_hu", -1000.0);

    const auto& aif = doc.section("aif");
    s.aif.amplitude = aif.get_double("amplitude");
    s.aif.t0 = aif.get_double("t0");
    s.aif.tp = aif.get_double("tp");
    s.aif.alpha = aif.get_double_or("alpha", 3.0);
    s.aif.support_cut = aif.get_double_or("support_cut", 16.0);

    const auto& scans = doc.section("scans");
    s.scan_count = int(scans.get_int("count"));
    s.scan_interval_s = scans.get_double("interval_s");

    if (auto* noise = doc.find("noise")) {
        s.noise_sigma = noise->get_double_or("sigma", 0.0);
        s.rng_seed = std::uint64_t(noise->get_int_or("seed", 1));
    }

    for (auto* cs : doc.all("compartment")) {
        compartment_spec c;
        c.lab = label_from_name(cs->get("label"));
        const std::string shape = cs->get("shape");
        if (shape == "box") {
            auto lo = cs->get_doubles("lo", 3);
            auto hi = cs->get_doubles("hi", 3);
            c.geom = geometry::make_box({lo[0], lo[1], lo[2]}, {hi[0], hi[1], hi[2]});
        } else if (shape == "cylinder" || shape == "tube") {
            const int axis = axis_from_name(cs->get("axis"));
            auto ctr = cs->get_doubles("center", 2);
            auto rng_ = cs->get_doubles("axis_range", 2);
            if (shape == "tube")
                c.geom = geometry::make_tube(axis, ctr[0], ctr[1], rng_[0], rng_[1],
                                             cs->get_double("radius_inner"),
                                             cs->get_double("radius_outer"));
            else
                c.geom = geometry::make_cylinder(axis, ctr[0], ctr[1], rng_[0], rng_[1],
                                                 cs->get_double("radius"));
        } else {
            throw config_error("compartment shape must be box, cylinder, or tube");
        }
        c.baseline_hu = cs->get_double("baseline_hu");
        c.baseline_spread = cs->get_double_or("baseline_spread", 0.0);
        c.mbf = cs->get_double_or("mbf", 0.0);
        c.density = cs->get_double_or("density", 1.0);
        c.delay_s = cs->get_double_or("delay_s", 0.0);
        c.amp_scale = cs->get_double_or("amp_scale", 1.0);
        s.compartments.push_back(c);
    }
    s.validate();
    return s;
}

}  // namespace pcatdyn
