// satlas: point-cloud <-> shape-atlas toolkit.
//
// Subcommands: build-dataset, atlas, invert, eval, bench, diffusion-selftest,
// preview. Exit codes: 0 ok, 2 format error, 3 infeasible assignment,
// 4 nothing visible, 5 config error, 1 any other failure. Errors are also
// reported as one-line JSON on stderr: {"error": <class>, "message": <text>}.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "satlas/assignment.hpp"
#include "satlas/atlas.hpp"
#include "satlas/atlas_io.hpp"
#include "satlas/bvh.hpp"
#include "satlas/dataset.hpp"
#include "satlas/diffusion.hpp"
#include "satlas/mesh_io.hpp"
#include "satlas/metrics.hpp"
#include "satlas/png_io.hpp"
#include "satlas/sphere_lattice.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace satlas;

namespace {

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

int exit_code_for(const Error& e) {
    if (dynamic_cast<const FormatError*>(&e)) return 2;
    if (dynamic_cast<const AssignmentInfeasible*>(&e)) return 3;
    if (dynamic_cast<const NothingVisible*>(&e)) return 4;
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const NotPerfectSquare*>(&e)) return 5;
    return 1;
}

const char* error_class(const Error& e) {
    if (dynamic_cast<const FormatError*>(&e)) return "format";
    if (dynamic_cast<const AssignmentInfeasible*>(&e)) return "infeasible_assignment";
    if (dynamic_cast<const NothingVisible*>(&e)) return "nothing_visible";
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const NotPerfectSquare*>(&e))
        return "config";
    return "error";
}

void print_error_json(const std::string& cls, const std::string& message) {
    json j;
    j["error"] = cls;
    j["message"] = message;
    std::cerr << j.dump() << "\n";
}

// ---------------------------------------------------------------------- //
// build-dataset

struct BuildArgs {
    std::string config_path;
    DatasetConfig cfg;                         // filled by CLI flags
    std::vector<CLI::Option*> flag_options;    // parallel to `appliers`
    std::vector<std::function<void(DatasetConfig&)>> appliers;
    bool workers_from_flag = false;

    /// Registers a flag so that, when given on the command line, its parsed
    /// value overrides the config-file value.
    template <class T>
    CLI::Option* track(CLI::Option* opt, T DatasetConfig::*field) {
        flag_options.push_back(opt);
        appliers.push_back([this, field](DatasetConfig& target) { target.*field = cfg.*field; });
        return opt;
    }
};

void load_config_file(DatasetConfig& cfg, const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config file is not valid JSON: " + std::string(e.what()));
    }
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("mesh_dirs", cfg.mesh_dirs);
    get("meshes", cfg.meshes);
    get("out_dir", cfg.out_dir);
    get("cache_dir", cfg.cache_dir);
    get("n_complete", cfg.n_complete);
    get("views", cfg.views);
    get("min_faces", cfg.min_faces);
    get("n_partial", cfg.n_partial);
    get("camera_radius", cfg.camera_radius);
    get("camera_fov_deg", cfg.camera_fov_deg);
    get("camera_res", cfg.camera_res);
    get("seed", cfg.seed);
    get("workers", cfg.workers);
    get("strict", cfg.strict);
    get("train_frac", cfg.train_frac);
    get("val_frac", cfg.val_frac);
    get("test_frac", cfg.test_frac);
}

int run_build_dataset(BuildArgs& a) {
    if (!a.config_path.empty()) {
        DatasetConfig merged;
        load_config_file(merged, a.config_path);
        for (size_t i = 0; i < a.flag_options.size(); ++i)
            if (a.flag_options[i]->count() > 0) a.appliers[i](merged);
        a.cfg = std::move(merged);
    }
    if (const char* env = std::getenv("SATLAS_WORKERS"); env && !a.workers_from_flag) {
        try {
            a.cfg.workers = std::stoi(env);
        } catch (...) {
            throw ConfigError("SATLAS_WORKERS is not an integer");
        }
    }
    DatasetManifest manifest = build_dataset(a.cfg);
    std::cout << "objects: " << manifest.objects_ok << " ok, " << manifest.objects_discarded
              << " discarded (of " << manifest.objects_total << ")\n";
    std::cout << "samples: " << manifest.samples_ok << " ok, " << manifest.samples_discarded
              << " discarded\n";
    std::cout << "splits (objects):";
    for (const char* s : {"train", "val", "test"}) {
        auto it = manifest.split_objects.find(s);
        std::cout << " " << s << "=" << (it == manifest.split_objects.end() ? 0 : it->second);
    }
    std::cout << "\nmanifest: " << (fs::path(a.cfg.out_dir) / "manifest.ndjson").string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------- //
// atlas / invert / preview

SphereLattice lattice_for(int n, const std::string& cache_dir) {
    return make_lattice(n, cache_dir.empty() ? fs::path{} : fs::path(cache_dir));
}

int run_atlas(const std::string& input, const std::string& output, const std::string& mode, int n,
              uint64_t seed, const std::string& preview, const std::string& cache_dir) {
    PointCloud cloud = read_point_cloud(input);
    cloud.validate();
    if (!cloud.has_normals())
        throw FormatError("input cloud has no normals; atlas channels 3-5 require them");

    ShapeAtlas atlas;
    if (mode == "complete") {
        int size = int(cloud.size());
        if (n != 0 && n != size)
            throw ConfigError("--n " + std::to_string(n) + " does not match cloud size " +
                              std::to_string(size));
        SphereLattice lattice = lattice_for(size, cache_dir);
        atlas = build_complete_atlas(cloud, lattice, fs::path(input).stem().string());
    } else if (mode == "partial") {
        if (n == 0) throw ConfigError("--n (lattice size) is required in partial mode");
        SphereLattice lattice = lattice_for(n, cache_dir);
        atlas = build_partial_atlas(cloud, lattice, seed, fs::path(input).stem().string());
    } else {
        throw ConfigError("mode must be 'complete' or 'partial'");
    }
    write_atlas(output, atlas);
    if (!preview.empty()) write_atlas_preview_png(preview, atlas);
    std::cout << "atlas " << atlas.width << "x" << atlas.height << "x" << kAtlasChannels
              << " mask_sum=" << std::llround(atlas.mask_sum()) << " -> " << output << "\n";
    return 0;
}

int run_invert(const std::string& input, const std::string& output, bool masked_only,
               const std::string& cache_dir) {
    ShapeAtlas atlas = read_atlas(input);
    const int n = atlas.height * atlas.width;
    SphereLattice lattice = lattice_for(n, cache_dir);
    if (lattice.id != atlas.lattice_id)
        throw FormatError("atlas lattice id does not match the lattice for n=" + std::to_string(n));
    PointCloud cloud = invert_atlas(atlas, lattice, masked_only);
    write_point_cloud_ply(output, cloud);
    std::cout << "cloud n=" << cloud.size() << (masked_only ? " (masked pixels only)" : "") << " -> "
              << output << "\n";
    return 0;
}

int run_preview(const std::string& input, const std::string& output) {
    ShapeAtlas atlas = read_atlas(input);
    write_atlas_preview_png(output, atlas);
    std::cout << "preview " << atlas.width << "x" << atlas.height << " -> " << output << "\n";
    return 0;
}

// ---------------------------------------------------------------------- //
// eval

struct EvalRow {
    std::string name;      // relative sample path (no extension)
    std::string category;  // first directory component, or "all"
    MetricReport report;
    bool has_mesh = false;
};

std::vector<fs::path> list_clouds(const fs::path& root) {
    std::vector<fs::path> out;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        for (char& c : ext) c = char(std::tolower(uint8_t(c)));
        if (ext == ".ply" || ext == ".obj") out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string csv_cell(double v) {
    if (std::isnan(v)) return "";
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

int run_eval(const std::string& pred_dir, const std::string& gt_dir, const std::string& mesh_dir,
             double tau, const std::string& csv_path) {
    if (!fs::is_directory(pred_dir)) throw ConfigError("pred dir does not exist: " + pred_dir);
    if (!fs::is_directory(gt_dir)) throw ConfigError("gt dir does not exist: " + gt_dir);

    std::vector<EvalRow> rows;
    int unpaired = 0;
    std::vector<fs::path> preds = list_clouds(pred_dir);
    std::map<std::string, fs::path> gt_by_rel;
    for (const fs::path& g : list_clouds(gt_dir)) {
        fs::path rel = fs::relative(g, gt_dir);
        gt_by_rel[rel.replace_extension().generic_string()] = g;
    }
    std::map<std::string, bool> gt_used;

    for (const fs::path& p : preds) {
        fs::path rel = fs::relative(p, pred_dir);
        std::string key = fs::path(rel).replace_extension().generic_string();
        auto it = gt_by_rel.find(key);
        if (it == gt_by_rel.end()) {
            std::cerr << "warning: unpaired prediction (no ground truth): " << key << "\n";
            ++unpaired;
            continue;
        }
        gt_used[key] = true;
        PointCloud pred = read_point_cloud(p);
        PointCloud gt = read_point_cloud(it->second);

        EvalRow row;
        row.name = key;
        std::string first = fs::path(rel).begin()->string();
        row.category = (fs::path(rel).has_parent_path() && !first.empty()) ? first : "all";

        TriangleMesh mesh;
        const TriangleMesh* mesh_ptr = nullptr;
        if (!mesh_dir.empty()) {
            for (const char* ext : {".ply", ".obj"}) {
                fs::path mp = fs::path(mesh_dir) / (key + ext);
                if (fs::exists(mp)) {
                    mesh = read_mesh(mp);
                    mesh_ptr = &mesh;
                    row.has_mesh = true;
                    break;
                }
            }
        }
        row.report = compute_metric_report(pred, gt, mesh_ptr, tau);
        rows.push_back(std::move(row));
    }
    for (const auto& [key, path] : gt_by_rel) {
        if (!gt_used.count(key)) {
            std::cerr << "warning: unpaired ground truth (no prediction): " << key << "\n";
            ++unpaired;
        }
    }
    if (rows.empty()) throw ConfigError("no matched sample pairs under the given directories");

    // CSV: raw (unscaled) values, one row per sample.
    if (!csv_path.empty()) {
        std::ostringstream csv;
        csv << "sample,category,cd_l1,cd_l2,fscore,nc,infocd,ecd,ecd_status,p2m\n";
        for (const EvalRow& r : rows) {
            const MetricReport& m = r.report;
            csv << r.name << "," << r.category << "," << csv_cell(m.cd_l1) << "," << csv_cell(m.cd_l2)
                << "," << csv_cell(m.fscore_at_tau) << "," << csv_cell(m.nc) << ","
                << csv_cell(m.infocd) << "," << (m.ecd.defined() ? csv_cell(m.ecd.value) : "") << ","
                << edge_chamfer_status_name(m.ecd.status) << ","
                << (r.has_mesh ? csv_cell(m.mesh_loss) : "") << "\n";
        }
        atomic_write_file(csv_path, csv.str());
    }

    // Text table: distance-like columns scaled x1e3 (marked in the header).
    struct Acc {
        double cd1 = 0, cd2 = 0, f = 0, nc = 0, info = 0;
        int n = 0, nc_n = 0;
    };
    std::map<std::string, Acc> by_cat;
    Acc total;
    for (const EvalRow& r : rows) {
        for (Acc* a : {&by_cat[r.category], &total}) {
            a->cd1 += r.report.cd_l1;
            a->cd2 += r.report.cd_l2;
            a->f += r.report.fscore_at_tau;
            a->info += r.report.infocd;
            if (!std::isnan(r.report.nc)) {
                a->nc += r.report.nc;
                a->nc_n++;
            }
            a->n++;
        }
    }
    std::cout << std::left << std::setw(20) << "category" << std::right << std::setw(8) << "n"
              << std::setw(12) << "CD-L1 x1e3" << std::setw(12) << "CD-L2 x1e3" << std::setw(10)
              << "F@" + std::to_string(tau).substr(0, 5) << std::setw(10) << "NC" << std::setw(12)
              << "InfoCD" << "\n";
    auto print_acc = [&](const std::string& name, const Acc& a) {
        std::cout << std::left << std::setw(20) << name << std::right << std::setw(8) << a.n
                  << std::fixed << std::setprecision(4) << std::setw(12) << 1e3 * a.cd1 / a.n
                  << std::setw(12) << 1e3 * a.cd2 / a.n << std::setw(10) << a.f / a.n
                  << std::setw(10);
        if (a.nc_n > 0)
            std::cout << a.nc / a.nc_n;
        else
            std::cout << "-";
        std::cout << std::setw(12) << a.info / a.n << "\n";
        std::cout.unsetf(std::ios::fixed);
    };
    for (const auto& [cat, acc] : by_cat) print_acc(cat, acc);
    if (by_cat.size() > 1) print_acc("mean", total);
    if (unpaired > 0) std::cerr << "warning: " << unpaired << " unpaired sample(s) excluded\n";
    return 0;
}

// ---------------------------------------------------------------------- //
// bench

struct TimedSolve {
    double seconds = 0.0;
    double cost = 0.0;
};

std::vector<Vec3> bench_cloud(int n, uint64_t seed) {
    Rng rng(mix_seed({seed, fnv1a64("bench-cloud")}));
    std::vector<Vec3> pts;
    pts.reserve(size_t(n));
    for (int i = 0; i < n; ++i) pts.push_back(rng.unit_vector() * (0.5 + 0.5 * rng.uniform()));
    return pts;
}

double fit_loglog_slope(const std::vector<std::pair<int, double>>& samples) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = double(samples.size());
    for (auto [n, t] : samples) {
        double x = std::log(double(n)), y = std::log(std::max(t, 1e-9));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

/// Collinear instance with sources and targets on opposite sides of the
/// origin: squared distances carry a product structure that defeats the
/// dense solver's early exits, exposing its full cubic growth.
std::pair<std::vector<Vec2>, std::vector<Vec2>> adversarial_line_instance(int n) {
    std::vector<Vec2> src, dst;
    src.reserve(size_t(n));
    dst.reserve(size_t(n));
    for (int i = 0; i < n; ++i) src.push_back({double(i) / n, 0.0});
    for (int j = 0; j < n; ++j) dst.push_back({-double(j) / n, 0.0});
    return {std::move(src), std::move(dst)};
}

int run_bench(std::vector<int> sparse_sizes, std::vector<int> dense_sizes, int k, int reps,
              int atlas_n, const std::string& dense_family, const std::string& cache_dir) {
    auto positive = [](std::vector<int>& v) { std::erase_if(v, [](int n) { return n <= 0; }); };
    positive(sparse_sizes);
    positive(dense_sizes);
    std::cout << "assignment benchmark (squared-Euclidean geometric instances, k=" << k
              << ", best of " << reps << ", dense family: " << dense_family << ")\n";
    std::vector<std::pair<int, double>> sparse_times, dense_times;

    for (int n : sparse_sizes) {
        std::vector<Vec3> src = bench_cloud(n, 11), dst = bench_cloud(n, 22);
        double best = 1e30, cost = 0;
        for (int r = 0; r < reps; ++r) {
            double t0 = now_seconds();
            AssignmentResult res = escalate_and_solve(std::span<const Vec3>(src),
                                                      std::span<const Vec3>(dst), k, 4 * k);
            best = std::min(best, now_seconds() - t0);
            cost = res.total_cost;
        }
        sparse_times.push_back({n, best});
        std::cout << "  sparse n=" << std::setw(6) << n << "  " << std::fixed << std::setprecision(4)
                  << best << " s  (cost " << std::setprecision(6) << cost << ")\n";
        std::cout.unsetf(std::ios::fixed);
    }
    for (int n : dense_sizes) {
        double best = 1e30, cost = 0;
        for (int r = 0; r < reps; ++r) {
            double t0 = now_seconds();
            AssignmentResult res;
            if (dense_family == "adversarial") {
                auto [src, dst] = adversarial_line_instance(n);
                GeometricCost<Vec2> cost_fn{std::span<const Vec2>(src), std::span<const Vec2>(dst)};
                t0 = now_seconds();
                res = solve_dense(cost_fn);
            } else {
                std::vector<Vec3> src = bench_cloud(n, 11), dst = bench_cloud(n, 22);
                GeometricCost<Vec3> cost_fn{std::span<const Vec3>(src), std::span<const Vec3>(dst)};
                t0 = now_seconds();
                res = solve_dense(cost_fn);
            }
            best = std::min(best, now_seconds() - t0);
            cost = res.total_cost;
        }
        dense_times.push_back({n, best});
        std::cout << "  dense  n=" << std::setw(6) << n << "  " << std::fixed << std::setprecision(4)
                  << best << " s  (cost " << std::setprecision(6) << cost << ")\n";
        std::cout.unsetf(std::ios::fixed);
    }
    if (sparse_times.size() >= 2)
        std::cout << "sparse log-log slope: " << std::setprecision(3) << fit_loglog_slope(sparse_times)
                  << "\n";
    if (dense_times.size() >= 2)
        std::cout << "dense  log-log slope: " << std::setprecision(3) << fit_loglog_slope(dense_times)
                  << "\n";

    if (atlas_n > 0) {
        SphereLattice lattice = lattice_for(atlas_n, cache_dir);
        Rng rng(123);
        PointCloud cloud;
        for (int i = 0; i < atlas_n; ++i) {
            cloud.points.push_back(rng.unit_vector() * (0.3 + 0.7 * rng.uniform()));
            cloud.normals.push_back(rng.unit_vector());
        }
        double t0 = now_seconds();
        ShapeAtlas atlas = build_complete_atlas(cloud, lattice);
        double dt = now_seconds() - t0;
        std::cout << "complete atlas build n=" << atlas_n << ": " << std::setprecision(3) << dt
                  << " s (mask_sum " << std::llround(atlas.mask_sum()) << ")\n";
    }
    return 0;
}

// ---------------------------------------------------------------------- //
// diffusion-selftest

int run_diffusion_selftest(int trials, uint64_t seed) {
    std::vector<std::pair<std::string, NoiseSchedule>> schedules;
    schedules.emplace_back("linear-default", NoiseSchedule::linear());
    schedules.emplace_back("linear-short", NoiseSchedule::linear(100, 1e-3, 5e-2));
    {
        Rng rng(mix_seed({seed, fnv1a64("selftest-schedule")}));
        std::vector<double> betas(64);
        for (double& b : betas) b = rng.uniform(0.0, 0.5);
        schedules.emplace_back("random-64", NoiseSchedule::from_betas(std::move(betas)));
    }

    bool ok = true;
    for (const auto& [name, sched] : schedules) {
        double max_unit = 0, max_recon = 0;
        Rng rng(mix_seed({seed, fnv1a64(name)}));
        for (int t = 0; t < sched.steps(); ++t) {
            double a = sched.alpha[size_t(t)], s = sched.sigma[size_t(t)];
            max_unit = std::max(max_unit, std::abs(a * a + s * s - 1.0));
        }
        for (int i = 0; i < trials; ++i) {
            int t = int(rng.below(uint64_t(sched.steps())));
            AtlasTensor x0(16), eps(16);
            for (double& v : x0) v = rng.normal();
            for (double& v : eps) v = rng.normal();
            AtlasTensor xt = forward_sample(x0, eps, sched, t);
            AtlasTensor v = velocity_target(x0, eps, sched, t);
            AtlasTensor rec = reconstruct_x0(xt, v, sched, t);
            for (size_t j = 0; j < x0.size(); ++j)
                max_recon = std::max(max_recon, std::abs(rec[j] - x0[j]));
        }
        bool pass = max_unit < 1e-12 && max_recon < 1e-9;
        ok = ok && pass;
        std::cout << (pass ? "PASS" : "FAIL") << " " << name << ": max |alpha^2+sigma^2-1| = "
                  << std::scientific << std::setprecision(3) << max_unit
                  << ", max x0 recovery error = " << max_recon << "\n";
        std::cout.unsetf(std::ios::scientific);
    }
    if (!ok) throw Error("diffusion self-test failed");
    std::cout << "all diffusion identities verified (" << trials << " trials x " << schedules.size()
              << " schedules)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"satlas: point-cloud <-> shape-atlas toolkit"};
    app.require_subcommand(1);

    // build-dataset
    BuildArgs build;
    auto* cmd_build = app.add_subcommand("build-dataset", "build a paired cloud/atlas dataset from meshes");
    cmd_build->add_option("--config", build.config_path, "JSON config file (flags override it)");
    build.track(cmd_build->add_option("--mesh-dir", build.cfg.mesh_dirs,
                                      "directory scanned recursively for meshes"),
                &DatasetConfig::mesh_dirs);
    build.track(cmd_build->add_option("--mesh", build.cfg.meshes, "explicit mesh file (repeatable)"),
                &DatasetConfig::meshes);
    build.track(cmd_build->add_option("--out", build.cfg.out_dir, "output directory"),
                &DatasetConfig::out_dir);
    build.track(cmd_build->add_option("--cache-dir", build.cfg.cache_dir,
                                      "plane-permutation cache directory"),
                &DatasetConfig::cache_dir);
    build.track(cmd_build->add_option("--n", build.cfg.n_complete, "complete cloud size (perfect square)"),
                &DatasetConfig::n_complete);
    build.track(cmd_build->add_option("--views", build.cfg.views, "partial views per object"),
                &DatasetConfig::views);
    build.track(cmd_build->add_option("--min-faces", build.cfg.min_faces,
                                      "discard meshes with fewer faces"),
                &DatasetConfig::min_faces);
    build.track(cmd_build->add_option("--n-partial", build.cfg.n_partial, "points per partial view"),
                &DatasetConfig::n_partial);
    build.track(cmd_build->add_option("--radius", build.cfg.camera_radius, "camera distance from origin"),
                &DatasetConfig::camera_radius);
    build.track(cmd_build->add_option("--fov", build.cfg.camera_fov_deg, "camera field of view (degrees)"),
                &DatasetConfig::camera_fov_deg);
    build.track(cmd_build->add_option("--res", build.cfg.camera_res, "camera resolution (square)"),
                &DatasetConfig::camera_res);
    build.track(cmd_build->add_option("--seed", build.cfg.seed, "master seed"), &DatasetConfig::seed);
    auto* workers_opt =
        build.track(cmd_build->add_option("--workers", build.cfg.workers,
                                          "worker threads (env SATLAS_WORKERS overrides default)"),
                    &DatasetConfig::workers);
    build.track(cmd_build->add_flag("--strict", build.cfg.strict, "abort on the first per-sample error"),
                &DatasetConfig::strict);

    // atlas
    std::string a_in, a_out, a_mode = "complete", a_preview, a_cache;
    int a_n = 0;
    uint64_t a_seed = 0;
    auto* cmd_atlas = app.add_subcommand("atlas", "convert a point cloud to an atlas file");
    cmd_atlas->add_option("input", a_in, "input cloud (.ply/.obj)")->required();
    cmd_atlas->add_option("output", a_out, "output atlas (.satl)")->required();
    cmd_atlas->add_option("--mode", a_mode, "complete | partial")
        ->check(CLI::IsMember({"complete", "partial"}));
    cmd_atlas->add_option("--n", a_n, "lattice size (required for partial; must equal cloud size for complete)");
    cmd_atlas->add_option("--seed", a_seed, "assignment seed (partial mode)");
    cmd_atlas->add_option("--preview", a_preview, "also write a PNG preview here");
    cmd_atlas->add_option("--cache-dir", a_cache, "plane-permutation cache directory");

    // invert
    std::string i_in, i_out, i_cache;
    bool i_masked = false;
    auto* cmd_invert = app.add_subcommand("invert", "convert an atlas file back to a point cloud");
    cmd_invert->add_option("input", i_in, "input atlas (.satl)")->required();
    cmd_invert->add_option("output", i_out, "output cloud (.ply)")->required();
    cmd_invert->add_flag("--masked-only", i_masked, "keep only directly-assigned (mask=1) pixels");
    cmd_invert->add_option("--cache-dir", i_cache, "plane-permutation cache directory");

    // eval
    std::string e_pred, e_gt, e_mesh, e_csv;
    double e_tau = kDefaultFscoreTau;
    auto* cmd_eval = app.add_subcommand("eval", "evaluate predicted clouds against ground truth");
    cmd_eval->add_option("--pred", e_pred, "directory of predicted clouds")->required();
    cmd_eval->add_option("--gt", e_gt, "directory of ground-truth clouds")->required();
    cmd_eval->add_option("--mesh-dir", e_mesh, "optional directory of ground-truth meshes");
    cmd_eval->add_option("--tau", e_tau, "F-score distance threshold");
    cmd_eval->add_option("--csv", e_csv, "write per-sample CSV here");

    // bench
    std::vector<int> b_sparse = {1024, 2048, 4096, 8192};
    std::vector<int> b_dense = {256, 512, 1024, 2048};
    int b_k = 50, b_reps = 1, b_atlas = 0;
    std::string b_cache, b_family = "uniform";
    auto* cmd_bench = app.add_subcommand("bench", "time the assignment solvers and atlas builds");
    cmd_bench->add_option("--sparse-sizes", b_sparse, "sizes for the sparse solver");
    cmd_bench->add_option("--dense-sizes", b_dense, "sizes for the dense solver");
    cmd_bench->add_option("--k", b_k, "candidate count per source point");
    cmd_bench->add_option("--reps", b_reps, "repetitions (best time kept)");
    cmd_bench->add_option("--atlas", b_atlas, "also time a complete atlas build at this size");
    cmd_bench->add_option("--dense-family", b_family, "dense instance family: uniform | adversarial")
        ->check(CLI::IsMember({"uniform", "adversarial"}));
    cmd_bench->add_option("--cache-dir", b_cache, "plane-permutation cache directory");

    // diffusion-selftest
    int d_trials = 1000;
    uint64_t d_seed = 7;
    auto* cmd_diff = app.add_subcommand("diffusion-selftest", "verify the closed-form noise algebra");
    cmd_diff->add_option("--trials", d_trials, "random triples per schedule");
    cmd_diff->add_option("--seed", d_seed, "rng seed");

    // preview
    std::string p_in, p_out;
    auto* cmd_preview = app.add_subcommand("preview", "render an atlas file to a PNG image");
    cmd_preview->add_option("input", p_in, "input atlas (.satl)")->required();
    cmd_preview->add_option("output", p_out, "output image (.png)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error_json("config", e.what());
        return 5;
    }

    try {
        if (*cmd_build) {
            build.workers_from_flag = workers_opt->count() > 0;
            return run_build_dataset(build);
        }
        if (*cmd_atlas) return run_atlas(a_in, a_out, a_mode, a_n, a_seed, a_preview, a_cache);
        if (*cmd_invert) return run_invert(i_in, i_out, i_masked, i_cache);
        if (*cmd_eval) return run_eval(e_pred, e_gt, e_mesh, e_tau, e_csv);
        if (*cmd_bench) return run_bench(b_sparse, b_dense, b_k, b_reps, b_atlas, b_family, b_cache);
        if (*cmd_diff) return run_diffusion_selftest(d_trials, d_seed);
        if (*cmd_preview) return run_preview(p_in, p_out);
    } catch (const Error& e) {
        print_error_json(error_class(e), e.what());
        return exit_code_for(e);
    } catch (const std::exception& e) {
        print_error_json("error", e.what());
        return 1;
    }
    return 0;
}
