// pcatdyn: dynamic cardiac CT perfusion analysis of pericoronary adipose
// tissue on synthetic phantom or file-based inputs.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "pcatdyn/parallel.hpp"
#include "pcatdyn/pipeline.hpp"

namespace fs = std::filesystem;
using namespace pcatdyn;

namespace {

std::string resolve(const std::string& workdir, const std::string& p) {
    if (p.empty() || fs::path(p).is_absolute()) return p;
    return (fs::path(workdir) / p).string();
}

hu_window parse_window(const std::vector<double>& v) {
    if (v.size() != 2 || !(v[0] < v[1])) throw config_error("window needs lo < hi");
    return {v[0], v[1]};
}

label parse_code(const std::string& s) { return label_from_name(s); }

int pick_threads(int flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("PCATDYN_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 0;  // library default
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pcatdyn: dynamic CCTP analysis of pericoronary adipose tissue"};
    app.require_subcommand(1);

    std::string workdir = ".";
    int threads = 0;
    app.add_option("--workdir", workdir, "base directory for relative paths");
    app.add_option("--threads", threads, "worker thread cap (PCATDYN_THREADS as fallback)");

    // ---- phantom -----------------------------------------------------------
    auto* cmd_phantom = app.add_subcommand("phantom", "generate a synthetic CCTP dataset");
    std::string ph_spec, ph_preset, ph_out;
    int ph_grid = 128;
    double ph_noise = 0.0;
    std::int64_t ph_seed = -1;
    cmd_phantom->add_option("--spec", ph_spec, "phantom spec file");
    cmd_phantom->add_option("--preset", ph_preset, "reference | stenosis | volume");
    cmd_phantom->add_option("--grid", ph_grid, "preset grid size");
    cmd_phantom->add_option("--noise", ph_noise, "preset noise sigma (HU)");
    cmd_phantom->add_option("--seed", ph_seed, "preset rng seed");
    cmd_phantom->add_option("--out", ph_out, "output directory")->required();

    // ---- prep ----------------------------------------------------------------
    auto* cmd_prep = app.add_subcommand("prep", "register and filter a series");
    std::string pr_series, pr_out, pr_ref = "auto", pr_params;
    int pr_search = 3;
    bool pr_no_filter = false;
    cmd_prep->add_option("--series", pr_series, "series manifest")->required();
    cmd_prep->add_option("--ref-scan", pr_ref, "auto or scan index");
    cmd_prep->add_option("--search", pr_search, "translation search radius (voxels)");
    cmd_prep->add_option("--filter", pr_params, "filter params file (key = value)");
    cmd_prep->add_flag("--no-filter", pr_no_filter, "registration only");
    cmd_prep->add_option("--out", pr_out, "output directory")->required();

    // ---- roi -----------------------------------------------------------------
    auto* cmd_roi = app.add_subcommand("roi", "vessel geometry and PCAT masks");
    std::string roi_mask, roi_cl, roi_series, roi_out;
    int roi_ref = 0;
    double roi_factor = 2.0, roi_length = 40.0, roi_remote = 3.0, roi_split = -1;
    std::vector<double> roi_window{-190, -30};
    std::string roi_annuli;
    cmd_roi->add_option("--mask", roi_mask, "label mask with lumen (and depots)")->required();
    cmd_roi->add_option("--centerline", roi_cl, "centerline file")->required();
    cmd_roi->add_option("--series", roi_series, "series manifest (fat gating source)")
        ->required();
    cmd_roi->add_option("--ref-scan", roi_ref, "membership reference scan");
    cmd_roi->add_option("--factor", roi_factor, "disk diameter factor");
    cmd_roi->add_option("--length", roi_length, "centerline extent (mm)");
    cmd_roi->add_option("--window", roi_window, "fat window lo hi")->expected(2);
    cmd_roi->add_option("--annuli", roi_annuli, "annuli list, e.g. 1.0:1.5,1.5:2.0");
    cmd_roi->add_option("--remote-factor", roi_remote, "remote-EAT exclusion factor");
    cmd_roi->add_option("--split", roi_split, "proximal/distal split arclength (mm)");
    cmd_roi->add_option("--out", roi_out, "output directory")->required();

    // ---- tac -----------------------------------------------------------------
    auto* cmd_tac = app.add_subcommand("tac", "time-attenuation curve for a region");
    std::string tac_series, tac_mask, tac_code = "PCAT", tac_policy = "fixed", tac_out;
    std::vector<double> tac_window{-190, -30};
    cmd_tac->add_option("--series", tac_series, "series manifest")->required();
    cmd_tac->add_option("--mask", tac_mask, "label mask")->required();
    cmd_tac->add_option("--code", tac_code, "region label name");
    cmd_tac->add_option("--policy", tac_policy, "fixed | per-scan");
    cmd_tac->add_option("--window", tac_window, "per-scan membership window")->expected(2);
    cmd_tac->add_option("--out", tac_out, "output directory")->required();

    // ---- volume-curve ----------------------------------------------------------
    auto* cmd_vol = app.add_subcommand("volume-curve", "apparent volume vs time");
    std::string vol_series, vol_disks, vol_out;
    std::vector<double> vol_std{-190, -30}, vol_ext{-190, -10};
    cmd_vol->add_option("--series", vol_series, "series manifest")->required();
    cmd_vol->add_option("--disks", vol_disks, "disk gate mask")->required();
    cmd_vol->add_option("--window", vol_std, "standard window lo hi")->expected(2);
    cmd_vol->add_option("--extended-window", vol_ext, "extended window lo hi")->expected(2);
    cmd_vol->add_option("--out", vol_out, "output directory")->required();

    // ---- flow ----------------------------------------------------------------
    auto* cmd_flow = app.add_subcommand("flow", "supervoxel blood-flow estimation");
    std::string fl_series, fl_mask, fl_code = "PCAT", fl_aif = "AORTA", fl_out, fl_export;
    double fl_density = density_adipose, fl_compact = 10;
    int fl_size = 125, fl_iters = 10;
    cmd_flow->add_option("--series", fl_series, "series manifest")->required();
    cmd_flow->add_option("--mask", fl_mask, "label mask")->required();
    cmd_flow->add_option("--code", fl_code, "region label name");
    cmd_flow->add_option("--aif-code", fl_aif, "arterial input label name");
    cmd_flow->add_option("--density", fl_density, "tissue density g/mL");
    cmd_flow->add_option("--size", fl_size, "target supervoxel size (voxels)");
    cmd_flow->add_option("--compactness", fl_compact, "SLIC compactness (HU)");
    cmd_flow->add_option("--iters", fl_iters, "SLIC iterations");
    cmd_flow->add_option("--export-map", fl_export, "write per-voxel MBF volume here");
    cmd_flow->add_option("--out", fl_out, "output directory")->required();

    // ---- features ----------------------------------------------------------------
    auto* cmd_feat = app.add_subcommand("features", "hand-crafted + radiomics features");
    std::string ft_series, ft_mask, ft_code = "PCAT", ft_policy = "per-scan", ft_aif = "AORTA",
                ft_out;
    std::vector<double> ft_window{-190, -30};
    int ft_pa = -1;
    cmd_feat->add_option("--series", ft_series, "series manifest")->required();
    cmd_feat->add_option("--mask", ft_mask, "gate mask (disk candidates)")->required();
    cmd_feat->add_option("--code", ft_code, "region label name");
    cmd_feat->add_option("--policy", ft_policy, "fixed | per-scan");
    cmd_feat->add_option("--window", ft_window, "fat window lo hi")->expected(2);
    cmd_feat->add_option("--aif-code", ft_aif, "aorta label for Pa detection");
    cmd_feat->add_option("--pa", ft_pa, "override Pa scan index");
    cmd_feat->add_option("--out", ft_out, "output directory")->required();

    // ---- report / run ----------------------------------------------------------
    auto* cmd_report = app.add_subcommand("report", "verify a run's report inventory");
    std::string rp_run;
    cmd_report->add_option("--run", rp_run, "completed run directory")->required();

    auto* cmd_run = app.add_subcommand("run", "full pipeline from a config file");
    std::string run_cfg_path, run_out;
    cmd_run->add_option("--config", run_cfg_path, "run config file")->required();
    cmd_run->add_option("--out", run_out, "output directory (overrides config)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (const int n = pick_threads(threads); n > 0) par::set_threads(n);

        if (*cmd_phantom) {
            phantom_spec spec;
            if (!ph_spec.empty())
                spec = phantom_from_config(config_doc::load(resolve(workdir, ph_spec)));
            else if (!ph_preset.empty())
                spec = preset_by_name(ph_preset, ph_grid, ph_noise,
                                      ph_seed >= 0
                                          ? std::optional<std::uint64_t>(std::uint64_t(ph_seed))
                                          : std::nullopt);
            else
                throw config_error("phantom: need --spec or --preset");
            write_phantom_dataset(spec, resolve(workdir, ph_out));
            std::cout << "phantom dataset written to " << resolve(workdir, ph_out) << "\n";
        } else if (*cmd_prep) {
            auto series = io::read_series(resolve(workdir, pr_series));
            int ref = 0;
            if (pr_ref == "auto") {
                // brightest-scan reference: peak global mean tracks aorta enhancement
                double best = -1e300;
                for (std::size_t k = 0; k < series.size(); ++k) {
                    double sum = 0;
                    for (float v : series.volumes[k].values) sum += v;
                    if (sum > best) {
                        best = sum;
                        ref = int(k);
                    }
                }
            } else {
                ref = int(std::stol(pr_ref));
            }
            auto [reg, rec] = register_translation(series, ref, pr_search);
            filter_params fp;
            if (!pr_params.empty()) {
                const auto doc = config_doc::load(resolve(workdir, pr_params));
                const auto& s = doc.sections.front();
                fp.sigma_spatial_mm = s.get_double_or("sigma_spatial_mm", 2.0);
                fp.sigma_time_s = s.get_double_or("sigma_time_s", 2.0);
                fp.sigma_range_hu = s.get_double_or("sigma_range_hu", 30.0);
                fp.spatial_radius = int(s.get_int_or("spatial_radius", 2));
                fp.time_radius = int(s.get_int_or("time_radius", 1));
            }
            dynamic_series conditioned = pr_no_filter ? std::move(reg) : stbf(reg, fp);
            const auto dir = resolve(workdir, pr_out);
            io::write_series(conditioned, dir, "prep");
            io::csv_writer csv((fs::path(dir) / "shifts.csv").string());
            csv.row({"scan", "dx", "dy", "dz", "degenerate", "reference"});
            for (std::size_t k = 0; k < rec.shifts.size(); ++k)
                csv.row({std::to_string(k), std::to_string(rec.shifts[k][0]),
                         std::to_string(rec.shifts[k][1]), std::to_string(rec.shifts[k][2]),
                         rec.degenerate[k] ? "1" : "0", int(k) == rec.reference ? "1" : "0"});
            std::cout << "conditioned series written to " << dir << "\n";
        } else if (*cmd_roi) {
            const auto mask = io::read_mask(resolve(workdir, roi_mask));
            const auto cl = pipe_detail::read_centerline(resolve(workdir, roi_cl));
            const auto series = io::read_series(resolve(workdir, roi_series));
            const label lumen_code =
                mask.count(label::lumen_lad) ? label::lumen_lad : label::lumen_rca;
            pcat_region_spec spec;
            spec.diameter_factor = roi_factor;
            spec.length_mm = roi_length;
            spec.fat_window = parse_window(roi_window);
            spec.membership_reference = roi_ref;
            const auto geom = effective_diameter(mask, cl, lumen_code, roi_length);
            const auto disks = axial_disk_mask(cl, geom, spec, mask);
            const auto ref_vol = series.volumes.at(std::size_t(roi_ref));
            const auto pcat = fat_select(ref_vol, disks, spec.fat_window);

            const auto dir = resolve(workdir, roi_out);
            fs::create_directories(dir);
            io::write_mask(disks, (fs::path(dir) / "disks").string());
            io::write_mask(pcat, (fs::path(dir) / "pcat").string());
            io::csv_writer csv((fs::path(dir) / "geometry.csv").string());
            csv.row({"slice", "area_mm2", "d_eff_mm", "median_d_eff_mm"});
            for (const auto& s : geom.slices)
                csv.row({std::to_string(s.slice), io::num(s.area_mm2), io::num(s.d_eff_mm),
                         io::num(geom.median_d_eff_mm)});

            if (!roi_annuli.empty()) {
                region_partition part;
                for (const auto& tok : [&] {
                         std::vector<std::string> toks;
                         std::istringstream is(roi_annuli);
                         std::string t;
                         while (std::getline(is, t, ',')) toks.push_back(t);
                         return toks;
                     }()) {
                    const auto colon = tok.find(':');
                    if (colon == std::string::npos)
                        throw config_error("annuli entries look like inner:outer");
                    part.annuli.emplace_back(std::stod(tok.substr(0, colon)),
                                             std::stod(tok.substr(colon + 1)));
                }
                const auto rings = annular_partition(cl, geom, part, spec, mask);
                io::write_mask(rings, (fs::path(dir) / "annuli").string(), false);
            }
            if (mask.count(label::eat)) {
                const auto rr = remote_eat(mask, {cl}, {geom}, roi_remote);
                io::write_mask(rr.mask, (fs::path(dir) / "remote_eat").string());
                if (rr.empty_flag) std::cout << "note: remote EAT selection is empty\n";
            }
            if (roi_split > 0) {
                const auto split = split_prox_dist(pcat, cl, roi_split);
                io::write_mask(split, (fs::path(dir) / "prox_dist").string());
            }
            std::cout << "roi masks written to " << dir << "\n";
        } else if (*cmd_tac) {
            const auto series = io::read_series(resolve(workdir, tac_series));
            const auto mask = io::read_mask(resolve(workdir, tac_mask));
            pcatdyn::tac_policy pol;
            pol.mode = membership_from_name(tac_policy);
            pol.window = parse_window(tac_window);
            const auto curve = compute_tac(series, mask, parse_code(tac_code), pol);
            const auto dir = resolve(workdir, tac_out);
            fs::create_directories(dir);
            io::csv_writer csv((fs::path(dir) / ("tac_" + tac_code + ".csv")).string());
            csv.row({"scan", "time_s", "mean_hu", "std_hu", "count"});
            for (std::size_t k = 0; k < curve.times_s.size(); ++k)
                csv.row({std::to_string(k), io::num(curve.times_s[k]), io::num(curve.mean_hu[k]),
                         io::num(curve.std_hu[k]), std::to_string(curve.count[k])});
            svg::line_chart chart;
            chart.title = "TAC " + tac_code;
            chart.x_label = "time (s)";
            chart.y_label = "mean HU";
            chart.series.push_back({tac_code, curve.times_s, curve.mean_hu});
            std::ofstream plot(fs::path(dir) / ("tac_" + tac_code + ".svg"), std::ios::binary);
            plot << svg::render(chart);
            std::cout << "tac written to " << dir << "\n";
        } else if (*cmd_vol) {
            const auto series = io::read_series(resolve(workdir, vol_series));
            const auto disks = io::read_mask(resolve(workdir, vol_disks));
            const auto vc = apparent_volume_curve(
                series, disks, {parse_window(vol_std), parse_window(vol_ext)});
            const auto dir = resolve(workdir, vol_out);
            fs::create_directories(dir);
            io::csv_writer csv((fs::path(dir) / "volume_curve.csv").string());
            csv.row({"scan", "time_s", "volume_standard_cm3", "pct_standard",
                     "volume_extended_cm3", "pct_extended"});
            for (std::size_t k = 0; k < vc.times_s.size(); ++k)
                csv.row({std::to_string(k), io::num(vc.times_s[k]), io::num(vc.volume_cm3[0][k]),
                         io::num(vc.pct_change_vs_p1[0][k]), io::num(vc.volume_cm3[1][k]),
                         io::num(vc.pct_change_vs_p1[1][k])});
            std::cout << "volume curve written to " << dir << "\n";
        } else if (*cmd_flow) {
            const auto series = io::read_series(resolve(workdir, fl_series));
            const auto mask = io::read_mask(resolve(workdir, fl_mask));
            const auto aif = compute_tac(series, mask, parse_code(fl_aif));
            const auto set = slic_cluster(series.volumes[0], mask, parse_code(fl_code), fl_size,
                                          fl_compact, fl_iters);
            flow_params fp;
            fp.density = fl_density;
            const auto fm = estimate_flow(series, set, aif, fp);
            const auto dir = resolve(workdir, fl_out);
            fs::create_directories(dir);
            {
                io::csv_writer csv((fs::path(dir) / ("supervoxels_" + fl_code + ".csv")).string());
                csv.row({"id", "cx_mm", "cy_mm", "cz_mm", "voxels", "mbf_ml_100g_min", "clamped"});
                for (std::size_t c = 0; c < set.cells.size(); ++c)
                    csv.row({std::to_string(c), io::num(set.cells[c].centroid_mm.x),
                             io::num(set.cells[c].centroid_mm.y),
                             io::num(set.cells[c].centroid_mm.z),
                             std::to_string(set.cells[c].voxels.size()), io::num(fm.mbf[c]),
                             fm.clamped[c] ? "1" : "0"});
            }
            {
                io::csv_writer csv((fs::path(dir) / "regions.csv").string());
                csv.row({"region", "mbf_mean", "mbf_median", "density_g_ml", "aif_peak_hu"});
                csv.row({fl_code, io::num(fm.region_mean), io::num(fm.region_median),
                         io::num(fm.density), io::num(fm.aif_peak_hu)});
            }
            if (!fl_export.empty()) {
                volume_grid map;
                map.dim = set.dim;
                map.spacing = set.spacing;
                map.origin = set.origin;
                map.values.assign(map.dim.count(), 0.f);
                for (std::size_t c = 0; c < set.cells.size(); ++c)
                    for (std::size_t idx : set.cells[c].voxels)
                        map.values[idx] = float(fm.mbf[c]);
                io::write_volume(map, resolve(workdir, fl_export));
            }
            std::cout << "flow results written to " << dir << "\n";
        } else if (*cmd_feat) {
            const auto series = io::read_series(resolve(workdir, ft_series));
            const auto gate = io::read_mask(resolve(workdir, ft_mask));
            const auto code = parse_code(ft_code);
            const auto window = parse_window(ft_window);
            const auto policy = membership_from_name(ft_policy);

            label_mask candidates = gate;  // any voxel of the requested code
            for (auto& l : candidates.labels)
                l = (l == std::uint8_t(code)) ? std::uint8_t(label::pcat) : 0;

            std::size_t pa = 0;
            if (ft_pa >= 0) {
                pa = std::size_t(ft_pa);
            } else if (gate.count(parse_code(ft_aif))) {
                pa = peak_index(compute_tac(series, gate, parse_code(ft_aif)));
            }

            std::vector<feature_vector> per_scan;
            for (std::size_t k = 0; k < series.size(); ++k) {
                label_mask roi_mask = candidates;
                if (policy == membership::per_scan)
                    roi_mask = fat_select(series.volumes[k], candidates, window);
                per_scan.push_back(
                    all_features(series.volumes[k], roi_mask, label::pcat, int(k)));
            }
            const auto tab = drift_table(per_scan, pa);

            const auto dir = resolve(workdir, ft_out);
            fs::create_directories(dir);
            {
                io::csv_writer csv((fs::path(dir) / "features.csv").string());
                std::vector<std::string> head{"scan", "time_s"};
                for (const auto& f : per_scan[0].values) head.push_back(f.name);
                csv.row(head);
                for (const auto& fv : per_scan) {
                    std::vector<std::string> row{std::to_string(fv.scan_index),
                                                 io::num(fv.time_s)};
                    for (const auto& f : fv.values) row.push_back(pipe_detail::opt_cell(f.value));
                    csv.row(row);
                }
            }
            {
                io::csv_writer csv((fs::path(dir) / "drift.csv").string());
                std::vector<std::string> head{"feature"};
                for (int s : tab.scans) head.push_back("scan" + std::to_string(s));
                head.push_back("max_abs_pct");
                csv.row(head);
                for (const auto& e : tab.features) {
                    std::vector<std::string> row{e.name};
                    for (const auto& v : e.pct_change) row.push_back(pipe_detail::opt_cell(v));
                    row.push_back(pipe_detail::opt_cell(e.max_abs_change));
                    csv.row(row);
                }
            }
            {
                io::csv_writer csv((fs::path(dir) / "drift_plot.csv").string());
                std::vector<std::string> head{"feature"};
                for (int s : tab.scans) head.push_back("scan" + std::to_string(s));
                csv.row(head);
                for (const auto& e : tab.features) {
                    std::vector<std::string> row{e.name};
                    for (const auto& v : e.pct_change)
                        row.push_back(v ? io::num(std::clamp(*v, -30.0, 30.0)) : "NA");
                    csv.row(row);
                }
            }
            std::cout << "features written to " << dir << " (stable fraction "
                      << io::num(tab.stable_fraction) << ")\n";
        } else if (*cmd_report) {
            // re-hash every file listed in report.txt and compare
            const fs::path dir = resolve(workdir, rp_run);
            std::ifstream in(dir / "report.txt");
            if (!in) throw data_error("no report.txt under '" + dir.string() + "'");
            std::string line;
            bool in_files = false;
            std::size_t ok = 0, bad = 0;
            while (std::getline(in, line)) {
                const std::string t = trim(line);
                if (t == "[files]") {
                    in_files = true;
                    continue;
                }
                if (!in_files || t.empty()) continue;
                const auto eq = t.rfind(" = ");
                if (eq == std::string::npos) continue;
                const std::string rel = t.substr(0, eq);
                const std::string want = t.substr(eq + 3);
                const std::string got = io::hex64(io::fnv1a_file((dir / rel).string()));
                if (got == want) {
                    ++ok;
                } else {
                    ++bad;
                    std::cout << "MISMATCH " << rel << "\n";
                }
            }
            std::cout << ok << " files verified, " << bad << " mismatched\n";
            if (bad) throw data_error("report inventory verification failed");
        } else if (*cmd_run) {
            auto rc = run_config_from_file(resolve(workdir, run_cfg_path), workdir);
            if (!run_out.empty()) rc.out_dir = resolve(workdir, run_out);
            const auto rep = run_all(rc);
            std::cout << "run complete: " << rc.out_dir << "/report.txt\n";
        }
        return 0;
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    }
}
