#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pcatdyn/config.hpp"
#include "pcatdyn/features.hpp"
#include "pcatdyn/flow.hpp"
#include "pcatdyn/io.hpp"
#include "pcatdyn/phantom.hpp"
#include "pcatdyn/prep.hpp"
#include "pcatdyn/roi.hpp"
#include "pcatdyn/svg.hpp"
#include "pcatdyn/tac.hpp"
#include "pcatdyn/version.hpp"

namespace pcatdyn {

namespace fs = std::filesystem;

struct run_config {
    // input: exactly one of phantom_preset / phantom_spec_path / series_manifest
    std::string phantom_preset;
    int preset_grid = 128;
    double preset_noise = 0.0;
    std::optional<std::uint64_t> preset_seed;
    std::string phantom_spec_path;
    std::string series_manifest;
    std::string mask_path;
    std::string centerline_path;

    // prep
    bool do_register = true;
    int ref_scan = -1;  // -1 = auto (aorta peak)
    int search_voxels = 3;
    bool do_filter = false;
    filter_params filter;

    // roi
    pcat_region_spec region;
    double remote_factor = 3.0;
    double split_mm = -1;

    // tac
    std::vector<int> offsets{-1, 1};

    // flow
    int sv_size = 125;
    double sv_compactness = 10;
    int sv_iters = 10;
    double density_pcat = density_adipose;
    double density_myo = density_myocardium;

    // features
    membership feat_policy = membership::per_scan;

    std::string out_dir;
    std::string config_text;  // raw text for provenance hashing

    void validate() const {
        int sources = 0;
        sources += !phantom_preset.empty();
        sources += !phantom_spec_path.empty();
        sources += !series_manifest.empty();
        if (sources != 1)
            throw config_error("config: exactly one input source required "
                               "(phantom_preset, phantom_spec, or series)");
        if (!series_manifest.empty() && mask_path.empty())
            throw config_error("config: series input needs a mask");
        if (out_dir.empty()) throw config_error("config: output dir not set");
        if (search_voxels < 0) throw config_error("config: search must be >= 0");
        filter.validate();
    }
};

inline membership membership_from_name(const std::string& s) {
    if (s == "fixed") return membership::fixed;
    if (s == "per-scan" || s == "per_scan") return membership::per_scan;
    throw config_error("membership must be 'fixed' or 'per-scan'");
}

inline run_config run_config_from_file(const std::string& path, const std::string& workdir) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    run_config rc;
    rc.config_text = ss.str();
    const auto doc = config_doc::parse(rc.config_text);

    auto resolve = [&](const std::string& p) {
        if (p.empty() || fs::path(p).is_absolute()) return p;
        return (fs::path(workdir) / p).string();
    };

    if (auto* input = doc.find("input")) {
        rc.phantom_preset = input->get_or("phantom_preset", "");
        rc.preset_grid = int(input->get_int_or("preset_grid", 128));
        rc.preset_noise = input->get_double_or("preset_noise", 0.0);
        if (input->has("preset_seed"))
            rc.preset_seed = std::uint64_t(input->get_int("preset_seed"));
        rc.phantom_spec_path = resolve(input->get_or("phantom_spec", ""));
        rc.series_manifest = resolve(input->get_or("series", ""));
        rc.mask_path = resolve(input->get_or("mask", ""));
        rc.centerline_path = resolve(input->get_or("centerline", ""));
    }
    if (auto* prep = doc.find("prep")) {
        rc.do_register = prep->get_int_or("register", 1) != 0;
        const std::string ref = prep->get_or("ref_scan", "auto");
        rc.ref_scan = (ref == "auto") ? -1 : int(std::stol(ref));
        rc.search_voxels = int(prep->get_int_or("search", 3));
        rc.do_filter = prep->get_int_or("filter", 0) != 0;
        rc.filter.sigma_spatial_mm = prep->get_double_or("sigma_spatial_mm", 2.0);
        rc.filter.sigma_time_s = prep->get_double_or("sigma_time_s", 2.0);
        rc.filter.sigma_range_hu = prep->get_double_or("sigma_range_hu", 30.0);
        rc.filter.spatial_radius = int(prep->get_int_or("spatial_radius", 2));
        rc.filter.time_radius = int(prep->get_int_or("time_radius", 1));
    }
    if (auto* roi = doc.find("roi")) {
        rc.region.diameter_factor = roi->get_double_or("diameter_factor", 2.0);
        rc.region.length_mm = roi->get_double_or("length_mm", 40.0);
        if (roi->has("fat_window")) {
            auto w = roi->get_doubles("fat_window", 2);
            rc.region.fat_window = {w[0], w[1]};
        }
        if (roi->has("extended_window")) {
            auto w = roi->get_doubles("extended_window", 2);
            rc.region.extended_window = {w[0], w[1]};
        }
        rc.region.membership_reference = int(roi->get_int_or("membership_reference", 0));
        rc.remote_factor = roi->get_double_or("remote_factor", 3.0);
        rc.split_mm = roi->get_double_or("split_mm", -1.0);
    }
    if (auto* tac = doc.find("tac")) {
        if (tac->has("offsets")) {
            rc.offsets.clear();
            for (double v : tac->get_doubles("offsets")) rc.offsets.push_back(int(v));
        }
    }
    if (auto* flow = doc.find("flow")) {
        rc.sv_size = int(flow->get_int_or("supervoxel_size", 125));
        rc.sv_compactness = flow->get_double_or("compactness", 10.0);
        rc.sv_iters = int(flow->get_int_or("iterations", 10));
        rc.density_pcat = flow->get_double_or("density_pcat", density_adipose);
        rc.density_myo = flow->get_double_or("density_myo", density_myocardium);
    }
    if (auto* feat = doc.find("features")) {
        rc.feat_policy = membership_from_name(feat->get_or("membership", "per-scan"));
    }
    if (auto* output = doc.find("output")) {
        rc.out_dir = resolve(output->get_or("dir", ""));
    }
    return rc;
}

struct run_report {
    std::string version = pcatdyn_version;
    std::uint64_t config_hash = 0;
    std::uint64_t rng_seed = 0;

    peak_info peaks;
    std::vector<std::pair<std::string, time_attenuation_curve>> tacs;
    std::map<std::string, enhancement_summary> summaries;
    std::optional<volume_curve> volumes;
    std::map<std::string, flow_map> flows;
    std::optional<prox_dist_comparison> prox_dist;
    std::optional<feature_drift_table> drift;
    std::vector<feature_vector> features_per_scan;
    std::vector<std::string> notes;
    std::vector<std::string> files;  // relative to out_dir, in emission order
};

namespace pipe_detail {

struct emitter {
    fs::path out;
    std::vector<std::string>* files;

    void created(const fs::path& p) {
        files->push_back(fs::relative(p, out).generic_string());
    }
    std::string path(const std::string& rel) {
        const fs::path p = out / rel;
        fs::create_directories(p.parent_path());
        return p.string();
    }
    void text_file(const std::string& rel, const std::string& content) {
        const auto p = path(rel);
        std::ofstream f(p, std::ios::binary);
        if (!f) throw data_error("cannot write '" + p + "'");
        f << content;
        created(p);
    }
};

inline void cleanup(const fs::path& out, const std::vector<std::string>& files) {
    std::error_code ec;
    for (const auto& rel : files) fs::remove(out / rel, ec);
}

template <class Fn>
void stage(const char* name, const fs::path& out, std::vector<std::string>& files, Fn&& fn) {
    try {
        fn();
    } catch (const config_error& e) {
        cleanup(out, files);
        throw config_error(std::string(name) + ": " + e.what());
    } catch (const numeric_error& e) {
        cleanup(out, files);
        throw numeric_error(std::string(name) + ": " + e.what());
    } catch (const error& e) {
        cleanup(out, files);
        throw data_error(std::string(name) + ": " + e.what());
    } catch (const std::exception& e) {
        cleanup(out, files);
        throw data_error(std::string(name) + ": " + e.what());
    }
}

inline std::string opt_cell(const std::optional<double>& v) {
    return v ? io::num(*v) : "NA";
}

inline void write_centerline(const centerline& cl, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw data_error("cannot write '" + path + "'");
    f << "pcatdyn-centerline 1\n";
    for (const auto& p : cl.points)
        f << "point = " << fmt_g(p.x) << " " << fmt_g(p.y) << " " << fmt_g(p.z) << "\n";
}

inline centerline read_centerline(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw data_error("cannot open centerline '" + path + "'");
    std::string magic;
    std::getline(f, magic);
    if (trim(magic) != "pcatdyn-centerline 1")
        throw data_error("'" + path + "' is not a centerline file");
    std::ostringstream rest;
    rest << f.rdbuf();
    const auto doc = config_doc::parse(rest.str());
    std::vector<vec3> pts;
    for (auto& [k, v] : doc.sections.front().entries) {
        if (k != "point") throw data_error("centerline: unexpected key '" + k + "'");
        auto t = split_ws(v);
        if (t.size() != 3) throw data_error("centerline: point needs 3 coordinates");
        pts.push_back({std::stod(t[0]), std::stod(t[1]), std::stod(t[2])});
    }
    return centerline::from_points(std::move(pts));
}

}  // namespace pipe_detail

// Writes the full phantom dataset (series, mask, centerline, ground truth,
// spec echo) into dir. Used by the `phantom` subcommand.
inline phantom_result write_phantom_dataset(const phantom_spec& spec, const std::string& dir) {
    auto res = simulate(spec);
    fs::create_directories(dir);
    io::write_series(res.series, dir, "scan");
    io::write_mask(res.mask, (fs::path(dir) / "mask").string());
    if (res.cl) pipe_detail::write_centerline(*res.cl, (fs::path(dir) / "centerline.txt").string());
    {
        io::csv_writer csv((fs::path(dir) / "ground_truth.csv").string());
        std::vector<std::string> head{"label", "mbf", "density", "baseline_hu", "delay_s",
                                      "amp_scale", "time_to_peak_s"};
        for (double t : res.truth.scan_times) head.push_back("enh_t" + io::num(t));
        csv.row(head);
        for (const auto& e : res.truth.entries) {
            std::vector<std::string> row{label_name(e.lab),     io::num(e.mbf),
                                         io::num(e.density),    io::num(e.baseline_hu),
                                         io::num(e.delay_s),    io::num(e.amp_scale),
                                         io::num(e.time_to_peak_s)};
            for (double v : e.enhancement) row.push_back(io::num(v));
            csv.row(row);
        }
    }
    {
        std::ofstream f(fs::path(dir) / "phantom_spec.cfg");
        f << to_config(spec).to_text();
    }
    return res;
}

inline phantom_spec preset_by_name(const std::string& name, int grid, double noise,
                                   std::optional<std::uint64_t> seed) {
    phantom_spec spec;
    if (name == "reference")
        spec = seed ? reference_preset(grid, noise, *seed) : reference_preset(grid, noise);
    else if (name == "stenosis")
        spec = seed ? stenosis_preset(grid, noise, *seed) : stenosis_preset(grid, noise);
    else if (name == "volume")
        spec = seed ? volume_preset(*seed) : volume_preset();
    else
        throw config_error("unknown preset '" + name + "' (reference, stenosis, volume)");
    return spec;
}

// Full pipeline: input -> prep -> roi -> tac -> flow -> features -> report.
inline run_report run_pipeline(const run_config& cfg) {
    cfg.validate();
    const fs::path out = cfg.out_dir;
    fs::create_directories(out);

    run_report rep;
    rep.config_hash = io::fnv1a_text(cfg.config_text);
    pipe_detail::emitter em{out, &rep.files};

    using pipe_detail::stage;

    // ---- input -------------------------------------------------------------
    dynamic_series series;
    label_mask mask;
    std::optional<centerline> cl;
    std::optional<ground_truth> truth;
    stage("input", out, rep.files, [&] {
        if (!cfg.phantom_preset.empty() || !cfg.phantom_spec_path.empty()) {
            phantom_spec spec;
            if (!cfg.phantom_preset.empty())
                spec = preset_by_name(cfg.phantom_preset, cfg.preset_grid, cfg.preset_noise,
                                      cfg.preset_seed);
            else
                spec = phantom_from_config(config_doc::load(cfg.phantom_spec_path));
            rep.rng_seed = spec.rng_seed;
            auto res = simulate(spec);
            series = std::move(res.series);
            mask = std::move(res.mask);
            cl = std::move(res.cl);
            truth = std::move(res.truth);
            em.text_file("input/phantom_spec.cfg", to_config(spec).to_text());
        } else {
            series = io::read_series(cfg.series_manifest);
            mask = io::read_mask(cfg.mask_path);
            if (!same_geometry(series.volumes[0], mask))
                throw data_error("series and mask geometry differ");
            if (!cfg.centerline_path.empty())
                cl = pipe_detail::read_centerline(cfg.centerline_path);
        }
    });

    auto has = [&](label l) { return mask.count(l) > 0; };

    // ---- prep --------------------------------------------------------------
    shift_record shifts;
    stage("prep", out, rep.files, [&] {
        if (cfg.do_register) {
            int ref = cfg.ref_scan;
            if (ref < 0) {
                if (has(label::aorta)) {
                    const auto aorta = compute_tac(series, mask, label::aorta);
                    ref = int(peak_index(aorta));
                } else {
                    ref = 0;
                }
            }
            auto [reg, rec] = register_translation(series, ref, cfg.search_voxels);
            series = std::move(reg);
            shifts = std::move(rec);
        } else {
            shifts.reference = 0;
            shifts.shifts.assign(series.size(), {0, 0, 0});
            shifts.degenerate.assign(series.size(), false);
        }
        if (cfg.do_filter) series = stbf(series, cfg.filter);

        io::csv_writer csv(em.path("prep/shifts.csv"));
        csv.row({"scan", "time_s", "dx", "dy", "dz", "degenerate", "reference"});
        for (std::size_t k = 0; k < series.size(); ++k)
            csv.row({std::to_string(k), io::num(series.times_s[k]),
                     std::to_string(shifts.shifts[k][0]), std::to_string(shifts.shifts[k][1]),
                     std::to_string(shifts.shifts[k][2]), shifts.degenerate[k] ? "1" : "0",
                     int(k) == shifts.reference ? "1" : "0"});
        em.created(out / "prep/shifts.csv");
    });

    // ---- roi ---------------------------------------------------------------
    label_mask pcat_mask;          // fat-gated PCAT voxels
    label_mask disks;              // pre-gate candidate disks
    std::optional<vessel_geometry> geom;
    std::optional<label_mask> remote;
    stage("roi", out, rep.files, [&] {
        const bool lumen_present = has(label::lumen_lad) || has(label::lumen_rca);
        if (cl && lumen_present) {
            const label lumen_code = has(label::lumen_lad) ? label::lumen_lad : label::lumen_rca;
            geom = effective_diameter(mask, *cl, lumen_code, cfg.region.length_mm);
            disks = axial_disk_mask(*cl, *geom, cfg.region, mask);
            const auto& ref_vol =
                series.volumes[std::size_t(std::min<int>(cfg.region.membership_reference,
                                                         int(series.size()) - 1))];
            pcat_mask = fat_select(ref_vol, disks, cfg.region.fat_window);

            io::csv_writer csv(em.path("roi/geometry.csv"));
            csv.row({"slice", "area_mm2", "d_eff_mm", "median_d_eff_mm"});
            for (const auto& s : geom->slices)
                csv.row({std::to_string(s.slice), io::num(s.area_mm2), io::num(s.d_eff_mm),
                         io::num(geom->median_d_eff_mm)});
            em.created(out / "roi/geometry.csv");

            io::write_mask(disks, em.path("roi/disks"));
            em.created(out / "roi/disks.volhdr");
            em.created(out / "roi/disks.volraw");
            io::write_mask(pcat_mask, em.path("roi/pcat"));
            em.created(out / "roi/pcat.volhdr");
            em.created(out / "roi/pcat.volraw");

            if (has(label::eat)) {
                auto rr = remote_eat(mask, {*cl}, {*geom}, cfg.remote_factor);
                if (rr.empty_flag)
                    rep.notes.push_back("remote EAT empty at exclusion factor " +
                                        io::num(cfg.remote_factor));
                else
                    remote = std::move(rr.mask);
            }
        } else {
            // no vessel geometry: the mask's own PCAT labels gate everything
            if (!has(label::pcat) && !has(label::pcat_prox))
                throw data_error("no centerline/lumen and no PCAT labels in the mask");
            disks = mask;
            for (auto& l : disks.labels) {
                const bool keep = l == std::uint8_t(label::pcat) ||
                                  l == std::uint8_t(label::pcat_prox) ||
                                  l == std::uint8_t(label::pcat_dist);
                l = keep ? std::uint8_t(label::pcat) : 0;
            }
            pcat_mask = disks;
            rep.notes.push_back("roi: no centerline; using mask PCAT labels directly");
        }
        if (pcat_mask.count(label::pcat) == 0)
            throw numeric_error("fat-gated PCAT selection is empty");
    });

    // ---- tac ---------------------------------------------------------------
    stage("tac", out, rep.files, [&] {
        std::vector<std::pair<std::string, const label_mask*>> regions;
        std::vector<label> codes;
        auto add_region = [&](label l, const label_mask& m, const char* name) {
            if (m.count(l) == 0) return;
            regions.emplace_back(name, &m);
            codes.push_back(l);
        };
        add_region(label::pcat, pcat_mask, "PCAT");
        add_region(label::aorta, mask, "AORTA");
        add_region(label::myo, mask, "MYO");
        add_region(label::eat, mask, "EAT");
        add_region(label::pat, mask, "PAT");
        add_region(label::sub, mask, "SUB");
        add_region(label::paat, mask, "PAAT");
        add_region(label::pcat_prox, mask, "PCAT_PROX");
        add_region(label::pcat_dist, mask, "PCAT_DIST");
        if (remote) add_region(label::eat_remote, *remote, "EAT_REMOTE");

        for (std::size_t r = 0; r < regions.size(); ++r)
            rep.tacs.emplace_back(regions[r].first,
                                  compute_tac(series, *regions[r].second, codes[r]));

        auto tac_of = [&](const std::string& name) -> const time_attenuation_curve* {
            for (auto& [n, t] : rep.tacs)
                if (n == name) return &t;
            return nullptr;
        };
        const auto* aorta = tac_of("AORTA");
        const auto* pcat = tac_of("PCAT");
        if (!pcat) throw numeric_error("no PCAT curve");
        if (aorta) {
            rep.peaks = find_peaks(*aorta, *pcat);
        } else {
            rep.peaks.pa_index = peak_index(*pcat);
            rep.peaks.ppcat_index = rep.peaks.pa_index;
            rep.peaks.pa_time_s = pcat->times_s[rep.peaks.pa_index];
            rep.peaks.ppcat_time_s = rep.peaks.pa_time_s;
            rep.notes.push_back("tac: no aorta region; Pa falls back to the PCAT peak");
        }

        // offsets that fit inside the series
        std::vector<int> offsets;
        for (int k : cfg.offsets) {
            const long idx = long(rep.peaks.pa_index) + k;
            if (idx >= 0 && idx < long(series.size())) offsets.push_back(k);
        }
        if (offsets.size() != cfg.offsets.size())
            rep.notes.push_back("tac: some Pa offsets fell outside the series and were dropped");

        for (auto& [name, curve] : rep.tacs) {
            rep.summaries.emplace(name, summarize_enhancement(curve, rep.peaks, offsets));
            io::csv_writer csv(em.path("tac/tac_" + name + ".csv"));
            csv.row({"scan", "time_s", "mean_hu", "std_hu", "count", "delta_vs_p1"});
            const auto& es = rep.summaries.at(name);
            for (std::size_t k = 0; k < curve.times_s.size(); ++k)
                csv.row({std::to_string(k), io::num(curve.times_s[k]), io::num(curve.mean_hu[k]),
                         io::num(curve.std_hu[k]), std::to_string(curve.count[k]),
                         io::num(es.delta_hu_vs_p1[k])});
            em.created(out / ("tac/tac_" + name + ".csv"));
        }

        {
            io::csv_writer csv(em.path("tac/summary.csv"));
            std::vector<std::string> head{"region", "p1_mean_hu", "delta_at_ppcat_hu",
                                          "time_to_peak_s"};
            for (int k : offsets) head.push_back("delta_at_pa" + std::string(k >= 0 ? "+" : "") +
                                                 std::to_string(k) + "_hu");
            csv.row(head);
            for (auto& [name, es] : rep.summaries) {
                const auto* curve = tac_of(name);
                std::vector<std::string> row{name, io::num(curve->mean_hu.front()),
                                             io::num(es.delta_at_ppcat),
                                             io::num(es.time_to_peak_s)};
                for (double d : es.delta_at_offsets) row.push_back(io::num(d));
                csv.row(row);
            }
            em.created(out / "tac/summary.csv");
        }
        {
            io::csv_writer csv(em.path("tac/peaks.csv"));
            csv.row({"landmark", "scan_index", "time_s"});
            csv.row({"P1", std::to_string(rep.peaks.p1_index), io::num(rep.peaks.p1_time_s)});
            csv.row({"Pa", std::to_string(rep.peaks.pa_index), io::num(rep.peaks.pa_time_s)});
            csv.row({"Ppcat", std::to_string(rep.peaks.ppcat_index),
                     io::num(rep.peaks.ppcat_time_s)});
            em.created(out / "tac/peaks.csv");
        }

        // apparent volume over the candidate disks
        const auto vc = apparent_volume_curve(
            series, disks, {cfg.region.fat_window, cfg.region.extended_window});
        rep.volumes = vc;
        {
            io::csv_writer csv(em.path("tac/volume_curve.csv"));
            csv.row({"scan", "time_s", "volume_standard_cm3", "pct_standard",
                     "volume_extended_cm3", "pct_extended"});
            for (std::size_t k = 0; k < vc.times_s.size(); ++k)
                csv.row({std::to_string(k), io::num(vc.times_s[k]), io::num(vc.volume_cm3[0][k]),
                         io::num(vc.pct_change_vs_p1[0][k]), io::num(vc.volume_cm3[1][k]),
                         io::num(vc.pct_change_vs_p1[1][k])});
            em.created(out / "tac/volume_curve.csv");
        }

        if (has(label::pcat_prox) && has(label::pcat_dist)) {
            rep.prox_dist = compare_prox_dist(series, mask, label::pcat_prox, mask,
                                              label::pcat_dist, rep.peaks, offsets);
            io::csv_writer csv(em.path("tac/prox_dist.csv"));
            csv.row({"metric", "proximal", "distal"});
            csv.row({"delta_at_peak_hu",
                     io::num(rep.prox_dist->proximal.delta_at_ppcat),
                     io::num(rep.prox_dist->distal.delta_at_ppcat)});
            csv.row({"time_to_peak_s", io::num(rep.prox_dist->proximal.time_to_peak_s),
                     io::num(rep.prox_dist->distal.time_to_peak_s)});
            csv.row({"peak_delta_difference_hu",
                     io::num(rep.prox_dist->peak_delta_difference_hu), ""});
            csv.row({"time_to_peak_gap_s", io::num(rep.prox_dist->time_to_peak_gap_s), ""});
            em.created(out / "tac/prox_dist.csv");
        }
    });

    // ---- flow ----------------------------------------------------------------
    stage("flow", out, rep.files, [&] {
        if (!has(label::aorta)) {
            rep.notes.push_back("flow: no aorta region; stage skipped");
            return;
        }
        const time_attenuation_curve aif = compute_tac(series, mask, label::aorta);
        auto run_region = [&](const label_mask& m, label code, const char* name, double density) {
            if (m.count(code) == 0) return;
            const auto set = slic_cluster(series.volumes[0], m, code, cfg.sv_size,
                                          cfg.sv_compactness, cfg.sv_iters);
            flow_params fp;
            fp.density = density;
            auto fmap = estimate_flow(series, set, aif, fp);

            io::csv_writer csv(em.path(std::string("flow/supervoxels_") + name + ".csv"));
            csv.row({"id", "cx_mm", "cy_mm", "cz_mm", "voxels", "mbf_ml_100g_min", "clamped"});
            for (std::size_t c = 0; c < set.cells.size(); ++c)
                csv.row({std::to_string(c), io::num(set.cells[c].centroid_mm.x),
                         io::num(set.cells[c].centroid_mm.y), io::num(set.cells[c].centroid_mm.z),
                         std::to_string(set.cells[c].voxels.size()), io::num(fmap.mbf[c]),
                         fmap.clamped[c] ? "1" : "0"});
            em.created(out / (std::string("flow/supervoxels_") + name + ".csv"));
            rep.flows.emplace(name, std::move(fmap));
        };
        run_region(pcat_mask, label::pcat, "PCAT", cfg.density_pcat);
        run_region(mask, label::myo, "MYO", cfg.density_myo);

        if (!rep.flows.empty()) {
            io::csv_writer csv(em.path("flow/regions.csv"));
            csv.row({"region", "mbf_mean", "mbf_median", "density_g_ml", "aif_peak_hu"});
            for (auto& [name, fmap] : rep.flows)
                csv.row({name, io::num(fmap.region_mean), io::num(fmap.region_median),
                         io::num(fmap.density), io::num(fmap.aif_peak_hu)});
            em.created(out / "flow/regions.csv");
        }
    });

    // ---- features --------------------------------------------------------------
    stage("features", out, rep.files, [&] {
        for (std::size_t k = 0; k < series.size(); ++k) {
            label_mask roi_mask = pcat_mask;
            if (cfg.feat_policy == membership::per_scan)
                roi_mask = fat_select(series.volumes[k], disks, cfg.region.fat_window);
            if (roi_mask.count(label::pcat) == 0)
                throw numeric_error("per-scan PCAT membership empty at scan " +
                                    std::to_string(k));
            rep.features_per_scan.push_back(
                all_features(series.volumes[k], roi_mask, label::pcat, int(k)));
        }
        rep.drift = drift_table(rep.features_per_scan, rep.peaks.pa_index);

        {
            io::csv_writer csv(em.path("features/features.csv"));
            std::vector<std::string> head{"scan", "time_s"};
            for (const auto& f : rep.features_per_scan[0].values) head.push_back(f.name);
            csv.row(head);
            for (const auto& fv : rep.features_per_scan) {
                std::vector<std::string> row{std::to_string(fv.scan_index), io::num(fv.time_s)};
                for (const auto& f : fv.values) row.push_back(pipe_detail::opt_cell(f.value));
                csv.row(row);
            }
            em.created(out / "features/features.csv");
        }
        {
            io::csv_writer csv(em.path("features/drift.csv"));
            std::vector<std::string> head{"feature"};
            for (int s : rep.drift->scans) head.push_back("scan" + std::to_string(s));
            head.push_back("max_abs_pct");
            csv.row(head);
            for (const auto& e : rep.drift->features) {
                std::vector<std::string> row{e.name};
                for (const auto& v : e.pct_change) row.push_back(pipe_detail::opt_cell(v));
                row.push_back(pipe_detail::opt_cell(e.max_abs_change));
                csv.row(row);
            }
            em.created(out / "features/drift.csv");
        }
        {
            // plot copy, clipped to [-30, 30] percent; the data CSV stays raw
            io::csv_writer csv(em.path("features/drift_plot.csv"));
            std::vector<std::string> head{"feature"};
            for (int s : rep.drift->scans) head.push_back("scan" + std::to_string(s));
            csv.row(head);
            for (const auto& e : rep.drift->features) {
                std::vector<std::string> row{e.name};
                for (const auto& v : e.pct_change)
                    row.push_back(v ? io::num(std::clamp(*v, -30.0, 30.0)) : "NA");
                csv.row(row);
            }
            em.created(out / "features/drift_plot.csv");
        }
    });

    return rep;
}

// Renders the SVG charts for a completed run.
inline void emit_plots(run_report& rep, const std::string& out_dir) {
    const fs::path out = out_dir;
    pipe_detail::emitter em{out, &rep.files};

    {
        svg::line_chart chart;
        chart.title = "Region HU time courses";
        chart.x_label = "time (s)";
        chart.y_label = "mean HU";
        chart.vline = rep.peaks.pa_time_s;
        for (auto& [name, curve] : rep.tacs) {
            if (name == "AORTA") continue;  // keeps the adipose axis readable
            chart.series.push_back({name, curve.times_s, curve.mean_hu});
        }
        em.text_file("plots/tac.svg", svg::render(chart));
    }
    if (!rep.tacs.empty()) {
        for (auto& [name, curve] : rep.tacs) {
            if (name != "AORTA") continue;
            svg::line_chart chart;
            chart.title = "Arterial input (aorta)";
            chart.x_label = "time (s)";
            chart.y_label = "mean HU";
            chart.vline = rep.peaks.pa_time_s;
            chart.series.push_back({name, curve.times_s, curve.mean_hu});
            em.text_file("plots/aif.svg", svg::render(chart));
        }
    }
    if (rep.volumes) {
        svg::line_chart chart;
        chart.title = "Apparent PCAT volume change vs P1";
        chart.x_label = "time (s)";
        chart.y_label = "% change";
        chart.vline = rep.peaks.pa_time_s;
        const char* names[2] = {"standard window", "extended window"};
        for (std::size_t w = 0; w < rep.volumes->windows.size() && w < 2; ++w)
            chart.series.push_back({names[w], rep.volumes->times_s,
                                    rep.volumes->pct_change_vs_p1[w]});
        em.text_file("plots/volume.svg", svg::render(chart));
    }
    if (rep.prox_dist) {
        svg::line_chart chart;
        chart.title = "Proximal vs distal PCAT enhancement";
        chart.x_label = "time (s)";
        chart.y_label = "delta HU vs P1";
        chart.vline = rep.peaks.pa_time_s;
        for (auto& [name, curve] : rep.tacs) {
            if (name != "PCAT_PROX" && name != "PCAT_DIST") continue;
            chart.series.push_back({name, curve.times_s,
                                    rep.summaries.at(name).delta_hu_vs_p1});
        }
        em.text_file("plots/prox_dist.svg", svg::render(chart));
    } else {
        rep.notes.push_back("plots: no stenosis labels; proximal/distal chart omitted");
    }
    if (rep.drift) {
        svg::heat_chart chart;
        chart.title = "Feature drift vs P1 (percent)";
        for (int s : rep.drift->scans) chart.col_names.push_back("scan " + std::to_string(s));
        for (const auto& e : rep.drift->features) {
            chart.row_names.push_back(e.name);
            chart.cells.push_back(e.pct_change);
        }
        em.text_file("plots/drift.svg", svg::render(chart));
    }
}

// report.txt: headline numbers plus the emitted-file inventory with checksums.
inline void write_report(run_report& rep, const std::string& out_dir) {
    const fs::path out = out_dir;
    std::ostringstream os;
    os << "pcatdyn run report\n";
    os << "version = " << rep.version << "\n";
    os << "config_hash = " << io::hex64(rep.config_hash) << "\n";
    os << "rng_seed = " << rep.rng_seed << "\n\n";

    os << "[landmarks]\n";
    os << "p1 = scan " << rep.peaks.p1_index << " at " << io::num(rep.peaks.p1_time_s) << " s\n";
    os << "pa = scan " << rep.peaks.pa_index << " at " << io::num(rep.peaks.pa_time_s) << " s\n";
    os << "ppcat = scan " << rep.peaks.ppcat_index << " at " << io::num(rep.peaks.ppcat_time_s)
       << " s\n\n";

    os << "[tac]\n";
    for (auto& [name, es] : rep.summaries) {
        os << name << ": delta_at_ppcat = " << io::num(es.delta_at_ppcat)
           << " HU, time_to_peak = " << io::num(es.time_to_peak_s) << " s";
        for (std::size_t i = 0; i < es.offsets.size(); ++i)
            os << ", delta@Pa" << (es.offsets[i] >= 0 ? "+" : "") << es.offsets[i] << " = "
               << io::num(es.delta_at_offsets[i]) << " HU";
        os << "\n";
    }
    os << "\n";

    if (!rep.flows.empty()) {
        os << "[flow]\n";
        for (auto& [name, fm] : rep.flows)
            os << name << ": mean = " << io::num(fm.region_mean)
               << " mL/100g-min, median = " << io::num(fm.region_median)
               << ", density = " << io::num(fm.density) << " g/mL\n";
        if (rep.flows.count("PCAT") && rep.flows.count("MYO") &&
            rep.flows.at("MYO").region_mean > 0)
            os << "PCAT/MYO ratio = "
               << io::num(rep.flows.at("PCAT").region_mean / rep.flows.at("MYO").region_mean)
               << "\n";
        os << "\n";
    }

    if (rep.volumes) {
        os << "[apparent_volume]\n";
        for (std::size_t w = 0; w < rep.volumes->windows.size(); ++w) {
            double worst = 0;
            for (double p : rep.volumes->pct_change_vs_p1[w])
                if (std::abs(p) > std::abs(worst)) worst = p;
            os << "window [" << io::num(rep.volumes->windows[w].lo) << ", "
               << io::num(rep.volumes->windows[w].hi)
               << "]: p1 = " << io::num(rep.volumes->volume_cm3[w][0])
               << " cm3, largest change = " << io::num(worst) << " %\n";
        }
        os << "\n";
    }

    if (rep.prox_dist) {
        os << "[stenosis]\n";
        os << "proximal peak delta = " << io::num(rep.prox_dist->proximal.delta_at_ppcat)
           << " HU\n";
        os << "distal peak delta = " << io::num(rep.prox_dist->distal.delta_at_ppcat) << " HU\n";
        os << "peak difference = " << io::num(rep.prox_dist->peak_delta_difference_hu) << " HU\n";
        os << "time_to_peak gap = " << io::num(rep.prox_dist->time_to_peak_gap_s) << " s\n\n";
    }

    if (rep.drift) {
        os << "[features]\n";
        os << "defined = " << rep.drift->defined_count
           << ", stable(<10%) = " << rep.drift->stable_count
           << ", stable_fraction = " << io::num(rep.drift->stable_fraction) << "\n";
        os << "stable features:";
        for (const auto& e : rep.drift->features)
            if (e.max_abs_change && *e.max_abs_change < 10.0) os << " " << e.name;
        os << "\n\n";
    }

    if (!rep.notes.empty()) {
        os << "[notes]\n";
        for (const auto& n : rep.notes) os << n << "\n";
        os << "\n";
    }

    os << "[files]\n";
    for (const auto& rel : rep.files)
        os << rel << " = " << io::hex64(io::fnv1a_file((out / rel).string())) << "\n";

    std::ofstream f(out / "report.txt", std::ios::binary);
    if (!f) throw data_error("cannot write report.txt");
    f << os.str();
}

// Convenience wrapper used by the CLI `run` subcommand.
inline run_report run_all(const run_config& cfg) {
    auto rep = run_pipeline(cfg);
    emit_plots(rep, cfg.out_dir);
    write_report(rep, cfg.out_dir);
    return rep;
}

}  // namespace pcatdyn
