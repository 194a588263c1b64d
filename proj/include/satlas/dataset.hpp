#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "satlas/atlas.hpp"
#include "satlas/atlas_io.hpp"
#include "satlas/binary_io.hpp"
#include "satlas/camera.hpp"
#include "satlas/core.hpp"
#include "satlas/mesh.hpp"
#include "satlas/mesh_io.hpp"
#include "satlas/partial_view.hpp"
#include "satlas/point_cloud.hpp"
#include "satlas/sphere_lattice.hpp"

namespace satlas {

// ---------------------------------------------------------------------------
// Dataset builder: meshes in, paired (complete, partial) clouds + atlases out.
//
// Per mesh: sample a complete surface cloud, normalize to the unit ball,
// build its atlas, then render `views` partial views from cameras on a
// Fibonacci sphere and build a partial atlas per view. Splits are assigned at
// the object level so no object leaks across train/val/test. All randomness
// derives from (seed, object id, view), so output bytes are identical across
// reruns and across any worker count.
// ---------------------------------------------------------------------------

struct DatasetConfig {
    std::vector<std::string> mesh_dirs;  // scanned recursively for .ply/.obj
    std::vector<std::string> meshes;     // explicit mesh files
    std::string out_dir;
    std::string cache_dir;   // plane-permutation cache; empty = recompute
    int n_complete = 16384;  // complete cloud size; must be a perfect square
    int views = 16;
    int min_faces = 1600;  // meshes below this are discarded
    int n_partial = 2048;  // points per partial view
    double camera_radius = 2.0;
    double camera_fov_deg = 120.0;
    int camera_res = 512;
    uint64_t seed = 0;
    int workers = 1;
    bool strict = false;  // abort on the first per-sample error
    double train_frac = 0.75, val_frac = 0.15, test_frac = 0.10;

    void validate() const {
        int side = 0;
        if (n_complete < 4 || !is_perfect_square(n_complete, &side))
            throw ConfigError("n_complete must be a perfect square >= 4");
        if (views < 1) throw ConfigError("views must be >= 1");
        if (n_partial < 1 || n_partial > n_complete)
            throw ConfigError("n_partial must be in [1, n_complete]");
        if (min_faces < 0) throw ConfigError("min_faces must be >= 0");
        if (!(camera_radius > 0.0)) throw ConfigError("camera_radius must be positive");
        if (!(camera_fov_deg > 0.0 && camera_fov_deg < 180.0))
            throw ConfigError("camera_fov_deg out of (0, 180)");
        if (camera_res < 1) throw ConfigError("camera_res must be >= 1");
        if (workers < 1 || workers > 256) throw ConfigError("workers must be in [1, 256]");
        if (out_dir.empty()) throw ConfigError("out_dir is required");
        if (mesh_dirs.empty() && meshes.empty()) throw ConfigError("no input meshes configured");
        double frac = train_frac + val_frac + test_frac;
        if (!(train_frac >= 0 && val_frac >= 0 && test_frac >= 0) || std::abs(frac - 1.0) > 1e-9)
            throw ConfigError("split fractions must be non-negative and sum to 1");
    }
};

struct SampleRecord {
    std::string object_id;
    std::string source;  // input mesh path as given
    int view = -1;       // -1 marks an object-level (viewless) record
    Camera camera;       // meaningful only when view >= 0 and ok
    // artifact paths relative to out_dir; empty when not produced
    std::string mesh_path, complete_cloud, complete_atlas, partial_cloud, partial_atlas;
    std::string split;   // train | val | test; empty for discarded records
    std::string status = "ok";
    std::string detail;  // human-readable error detail for discarded records

    bool ok() const { return status == "ok"; }
};

struct DatasetManifest {
    std::vector<SampleRecord> records;  // sorted by (object_id, view)
    int objects_total = 0, objects_ok = 0, objects_discarded = 0;
    int samples_ok = 0, samples_discarded = 0;
    std::map<std::string, int> split_objects;  // split -> object count
    std::map<std::string, int> split_samples;  // split -> ok sample count
};

namespace detail {

inline std::string sanitize_id(const std::string& stem) {
    std::string out;
    out.reserve(stem.size());
    for (char c : stem) {
        bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '.' || c == '_';
        out.push_back(keep ? c : '_');
    }
    if (out.empty()) out = "mesh";
    return out;
}

/// Classifies an exception into a short machine-readable reason tag.
inline std::string discard_reason(const Error& e) {
    if (dynamic_cast<const NothingVisible*>(&e)) return "nothing_visible";
    if (dynamic_cast<const AssignmentInfeasible*>(&e)) return "infeasible_assignment";
    if (dynamic_cast<const FormatError*>(&e)) return "format";
    if (dynamic_cast<const EmptyMesh*>(&e) || dynamic_cast<const EmptyCloud*>(&e)) return "empty";
    if (dynamic_cast<const DegenerateFace*>(&e)) return "degenerate_face";
    if (dynamic_cast<const ConfigError*>(&e)) return "config";
    return "error";
}

inline int round_half_away(double x) {
    return int(x >= 0.0 ? std::floor(x + 0.5) : std::ceil(x - 0.5));
}

inline nlohmann::json vec3_json(const Vec3& v) { return nlohmann::json::array({v.x, v.y, v.z}); }

inline nlohmann::json record_json(const SampleRecord& r) {
    nlohmann::json j;
    j["object_id"] = r.object_id;
    j["source"] = r.source;
    j["view"] = r.view;
    if (r.view >= 0 && r.ok()) {
        j["camera"] = {{"position", vec3_json(r.camera.position)},
                       {"look_at", vec3_json(r.camera.look_at)},
                       {"up", vec3_json(r.camera.up)},
                       {"fov_deg", r.camera.fov_deg},
                       {"res", nlohmann::json::array({r.camera.res_x, r.camera.res_y})}};
    }
    j["mesh"] = r.mesh_path;
    j["complete_cloud"] = r.complete_cloud;
    j["complete_atlas"] = r.complete_atlas;
    j["partial_cloud"] = r.partial_cloud;
    j["partial_atlas"] = r.partial_atlas;
    j["split"] = r.split;
    j["status"] = r.status;
    if (!r.detail.empty()) j["detail"] = r.detail;
    return j;
}

}  // namespace detail

/// Enumerates input meshes (explicit files first, then directory scans),
/// sorted by path, with deterministic unique object ids derived from the
/// file stem.
inline std::vector<std::pair<std::string, std::string>> enumerate_objects(const DatasetConfig& cfg) {
    namespace fs = std::filesystem;
    std::vector<std::string> paths(cfg.meshes.begin(), cfg.meshes.end());
    for (const std::string& dir : cfg.mesh_dirs) {
        if (!fs::is_directory(dir)) throw ConfigError("mesh_dir does not exist: " + dir);
        for (const auto& entry : fs::recursive_directory_iterator(dir)) {
            if (!entry.is_regular_file()) continue;
            std::string ext = entry.path().extension().string();
            for (char& c : ext) c = char(std::tolower(uint8_t(c)));
            if (ext == ".ply" || ext == ".obj") paths.push_back(entry.path().string());
        }
    }
    std::sort(paths.begin(), paths.end());
    paths.erase(std::unique(paths.begin(), paths.end()), paths.end());

    std::vector<std::pair<std::string, std::string>> objects;  // (id, path)
    std::map<std::string, int> used;
    for (const std::string& p : paths) {
        std::string id = detail::sanitize_id(fs::path(p).stem().string());
        int& count = used[id];
        ++count;
        if (count > 1) id += "_" + std::to_string(count);
        objects.emplace_back(id, p);
    }
    return objects;
}

namespace detail {

struct ObjectOutcome {
    std::vector<SampleRecord> rows;
    bool object_ok = false;
};

/// Runs the full per-object pipeline (pure given the config and seeds).
inline ObjectOutcome process_object(const DatasetConfig& cfg, const SphereLattice& lattice,
                                    const std::string& object_id, const std::string& source) {
    namespace fs = std::filesystem;
    ObjectOutcome out;
    const fs::path out_root(cfg.out_dir);
    const std::string obj_rel = "objects/" + object_id;
    const uint64_t obj_seed = mix_seed({cfg.seed, fnv1a64(object_id)});

    SampleRecord base;
    base.object_id = object_id;
    base.source = source;

    TriangleMesh mesh;
    ShapeAtlas complete_atlas;
    try {
        mesh = read_mesh(source);
        drop_degenerate_faces(mesh);
        if (int(mesh.faces.size()) < cfg.min_faces) {
            SampleRecord r = base;
            r.status = "discarded: face_filter";
            r.detail = std::to_string(mesh.faces.size()) + " faces < " + std::to_string(cfg.min_faces);
            out.rows.push_back(std::move(r));
            return out;
        }

        PointCloud complete = sample_surface(mesh, cfg.n_complete, mix_seed({obj_seed, fnv1a64("complete-sample")}));
        auto [normalized, transform] = normalize_center(complete, NormalizeMode::unit_ball);
        mesh = transformed(mesh, transform);
        complete_atlas = build_complete_atlas(normalized, lattice, object_id);

        fs::create_directories(out_root / obj_rel);
        base.mesh_path = obj_rel + "/mesh.ply";
        base.complete_cloud = obj_rel + "/complete.ply";
        base.complete_atlas = obj_rel + "/complete.satl";
        write_mesh_ply(out_root / base.mesh_path, mesh);
        write_point_cloud_ply(out_root / base.complete_cloud, normalized);
        write_atlas(out_root / base.complete_atlas, complete_atlas);
    } catch (const Error& e) {
        SampleRecord r = base;
        r.status = "discarded: " + discard_reason(e);
        r.detail = e.what();
        out.rows.push_back(std::move(r));
        return out;
    }
    out.object_ok = true;

    Camera proto;
    proto.fov_deg = cfg.camera_fov_deg;
    proto.res_x = proto.res_y = cfg.camera_res;
    std::vector<Camera> cams = sample_cameras({0, 0, 0}, cfg.camera_radius, cfg.views,
                                              mix_seed({obj_seed, fnv1a64("cameras")}));
    for (Camera& c : cams) {
        c.fov_deg = proto.fov_deg;
        c.res_x = proto.res_x;
        c.res_y = proto.res_y;
    }

    for (int v = 0; v < cfg.views; ++v) {
        SampleRecord r = base;
        r.view = v;
        r.camera = cams[size_t(v)];
        const uint64_t view_seed = mix_seed({obj_seed, uint64_t(v), fnv1a64("partial-view")});
        try {
            PartialViewResult pv = make_partial_cloud(mesh, cams[size_t(v)], cfg.n_partial, view_seed);
            ShapeAtlas partial_atlas = build_partial_atlas(
                pv.cloud, lattice, mix_seed({view_seed, fnv1a64("partial-atlas")}),
                object_id + "/view_" + std::to_string(v));
            char view_name[32];
            std::snprintf(view_name, sizeof view_name, "view_%02d", v);
            const std::string view_rel = obj_rel + "/" + view_name;
            fs::create_directories(out_root / view_rel);
            r.partial_cloud = view_rel + "/partial.ply";
            r.partial_atlas = view_rel + "/partial.satl";
            write_point_cloud_ply(out_root / r.partial_cloud, pv.cloud);
            write_atlas(out_root / r.partial_atlas, partial_atlas);
        } catch (const Error& e) {
            r.status = "discarded: " + discard_reason(e);
            r.detail = e.what();
            r.partial_cloud.clear();
            r.partial_atlas.clear();
        }
        out.rows.push_back(std::move(r));
    }
    return out;
}

}  // namespace detail

/// Builds the dataset described by `cfg` and writes manifest.ndjson plus
/// summary.json under cfg.out_dir. Per-sample failures are recorded as
/// discarded rows unless cfg.strict. Returns the in-memory manifest.
inline DatasetManifest build_dataset(const DatasetConfig& cfg) {
    namespace fs = std::filesystem;
    cfg.validate();
    const std::vector<std::pair<std::string, std::string>> objects = enumerate_objects(cfg);
    if (objects.empty()) throw ConfigError("no .ply/.obj meshes found in configured inputs");
    fs::create_directories(cfg.out_dir);

    const SphereLattice lattice =
        make_lattice(cfg.n_complete, cfg.cache_dir.empty() ? fs::path{} : fs::path(cfg.cache_dir));

    // Work-stealing over objects: each worker grabs the next unprocessed
    // object; outputs land in per-object slots so ordering is deterministic.
    std::vector<detail::ObjectOutcome> outcomes(objects.size());
    std::atomic<size_t> next{0};
    std::atomic<bool> abort{false};
    std::mutex error_mutex;
    std::exception_ptr first_error;

    auto worker = [&]() {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= objects.size() || abort.load()) return;
            try {
                outcomes[i] = detail::process_object(cfg, lattice, objects[i].first, objects[i].second);
                if (cfg.strict) {
                    for (const SampleRecord& r : outcomes[i].rows)
                        if (!r.ok()) throw Error("strict mode: " + r.object_id + ": " + r.status +
                                                 (r.detail.empty() ? "" : " (" + r.detail + ")"));
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                abort.store(true);
                return;
            }
        }
    };

    const int n_workers = std::max(1, std::min<int>(cfg.workers, int(objects.size())));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(size_t(n_workers));
        for (int w = 0; w < n_workers; ++w) threads.emplace_back(worker);
        for (std::thread& t : threads) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    // Object-level splits over successfully processed objects: a seeded
    // shuffle of the sorted id list, sliced test | val | train.
    std::vector<std::string> ok_ids;
    for (size_t i = 0; i < objects.size(); ++i)
        if (outcomes[i].object_ok) ok_ids.push_back(objects[i].first);
    std::sort(ok_ids.begin(), ok_ids.end());
    {
        Rng rng(mix_seed({cfg.seed, fnv1a64("splits")}));
        for (size_t i = ok_ids.size(); i > 1; --i) std::swap(ok_ids[i - 1], ok_ids[rng.below(i)]);
    }
    const int n_ok = int(ok_ids.size());
    const int n_test = std::min(n_ok, detail::round_half_away(cfg.test_frac * n_ok));
    const int n_val = std::min(n_ok - n_test, detail::round_half_away(cfg.val_frac * n_ok));
    std::map<std::string, std::string> split_of;
    for (int i = 0; i < n_ok; ++i)
        split_of[ok_ids[size_t(i)]] = i < n_test ? "test" : (i < n_test + n_val ? "val" : "train");

    DatasetManifest manifest;
    manifest.objects_total = int(objects.size());
    for (size_t i = 0; i < objects.size(); ++i) {
        const detail::ObjectOutcome& oc = outcomes[i];
        (oc.object_ok ? manifest.objects_ok : manifest.objects_discarded)++;
        for (SampleRecord r : oc.rows) {
            if (r.ok()) {
                r.split = split_of.at(r.object_id);
                manifest.samples_ok++;
                manifest.split_samples[r.split]++;
            } else {
                manifest.samples_discarded++;
            }
            manifest.records.push_back(std::move(r));
        }
    }
    for (const auto& [id, split] : split_of) manifest.split_objects[split]++;
    std::sort(manifest.records.begin(), manifest.records.end(),
              [](const SampleRecord& a, const SampleRecord& b) {
                  return a.object_id != b.object_id ? a.object_id < b.object_id : a.view < b.view;
              });

    std::string ndjson;
    for (const SampleRecord& r : manifest.records) ndjson += detail::record_json(r).dump() + "\n";
    atomic_write_file(fs::path(cfg.out_dir) / "manifest.ndjson", ndjson);

    nlohmann::json summary;
    summary["config"] = {{"n_complete", cfg.n_complete},
                         {"views", cfg.views},
                         {"min_faces", cfg.min_faces},
                         {"n_partial", cfg.n_partial},
                         {"camera_radius", cfg.camera_radius},
                         {"camera_fov_deg", cfg.camera_fov_deg},
                         {"camera_res", cfg.camera_res},
                         {"seed", cfg.seed},
                         {"splits", {{"train", cfg.train_frac}, {"val", cfg.val_frac}, {"test", cfg.test_frac}}}};
    summary["objects"] = {{"total", manifest.objects_total},
                          {"ok", manifest.objects_ok},
                          {"discarded", manifest.objects_discarded}};
    summary["samples"] = {{"ok", manifest.samples_ok}, {"discarded", manifest.samples_discarded}};
    summary["split_objects"] = manifest.split_objects;
    summary["split_samples"] = manifest.split_samples;
    atomic_write_file(fs::path(cfg.out_dir) / "summary.json", summary.dump(2) + "\n");
    return manifest;
}

}  // namespace satlas
