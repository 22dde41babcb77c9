#pragma once

// Procedural dataset pipeline: seeded scene sampling, renders, oracle masks
// and every supervision signal, written under a versioned directory layout.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rendet/errors.hpp"
#include "rendet/image_io.hpp"
#include "rendet/parallel.hpp"
#include "rendet/primitives.hpp"
#include "rendet/renderer.hpp"
#include "rendet/rng.hpp"
#include "rendet/scene.hpp"
#include "rendet/scene_io.hpp"
#include "rendet/signals.hpp"

namespace rendet {

enum class ObjectKind { cube, icosphere, cylinder };

inline const char* to_string(ObjectKind k)
{
    switch (k) {
    case ObjectKind::cube:
        return "cube";
    case ObjectKind::icosphere:
        return "icosphere";
    case ObjectKind::cylinder:
        return "cylinder";
    }
    return "?";
}

inline ObjectKind object_kind_from(const std::string& s)
{
    if (s == "cube") {
        return ObjectKind::cube;
    }
    if (s == "icosphere") {
        return ObjectKind::icosphere;
    }
    if (s == "cylinder") {
        return ObjectKind::cylinder;
    }
    throw ValidationError("unknown object kind '" + s + "'");
}

struct Range {
    double lo = 0.0;
    double hi = 0.0;
    bool operator==(const Range&) const = default;
};

struct GenConfig {
    int count = 128;
    std::uint64_t seed = 1;
    int width = 96;
    int height = 64;
    int min_objects = 1;
    int max_objects = 3;
    std::vector<ObjectKind> kinds{ObjectKind::cube, ObjectKind::icosphere, ObjectKind::cylinder};
    Range object_size{0.35, 0.7};
    bool random_yaw = true;
    Range place_x{-0.9, 0.9};
    Range place_z{0.3, 1.8};
    std::vector<Rgb> object_palette{{0.80, 0.15, 0.10}, {0.10, 0.25, 0.80}, {0.15, 0.70, 0.20},
                                    {0.85, 0.75, 0.10}, {0.70, 0.15, 0.70}, {0.10, 0.65, 0.70}};
    std::vector<Rgb> floor_palette{{0.75, 0.72, 0.65}, {0.45, 0.42, 0.38}, {0.62, 0.60, 0.58}, {0.35, 0.33, 0.32}};
    std::vector<Rgb> wall_palette{{0.60, 0.65, 0.70}, {0.35, 0.40, 0.45}, {0.55, 0.50, 0.45}, {0.30, 0.28, 0.26}};
    Range floor_checker{0.25, 0.6};
    Range wall_checker{0.3, 0.8};
    Range ambient{0.15, 0.35};
    Range light_elevation_deg{40.0, 60.0};
    Range light_azimuth_deg{25.0, 75.0}; // away from the view axis, mirrored to either side
    Range light_distance{60.0, 90.0};
    Range light_strength{0.45, 0.75}; // direct irradiance on the floor below the light path

    bool operator==(const GenConfig&) const = default;
};

inline void validate(const GenConfig& c)
{
    if (c.count <= 0) {
        throw ValidationError("gen config: count must be positive");
    }
    if (c.width <= 0 || c.height <= 0) {
        throw ValidationError("gen config: image size must be positive");
    }
    if (c.min_objects < 1 || c.max_objects > 3 || c.min_objects > c.max_objects) {
        throw ValidationError("gen config: object count range must lie within [1,3]");
    }
    if (c.kinds.empty() || c.object_palette.empty() || c.floor_palette.size() < 2 || c.wall_palette.size() < 2) {
        throw ValidationError("gen config: kinds and palettes must be non-empty");
    }
    for (const Range* r : {&c.object_size, &c.place_x, &c.place_z, &c.floor_checker, &c.wall_checker, &c.ambient,
                           &c.light_elevation_deg, &c.light_azimuth_deg, &c.light_distance, &c.light_strength}) {
        if (!(r->lo <= r->hi) || !std::isfinite(r->lo) || !std::isfinite(r->hi)) {
            throw ValidationError("gen config: empty or non-finite range");
        }
    }
}

/// Configuration of the fixed acceptance fixture: ten single-cube scenes,
/// lights at 45 degrees elevation on the +/-x side so the shadows under the
/// original and mirrored light never overlap.
inline GenConfig canonical_config()
{
    GenConfig c;
    c.count = 10;
    c.seed = 4242;
    c.min_objects = 1;
    c.max_objects = 1;
    c.kinds = {ObjectKind::cube};
    c.object_size = {0.45, 0.7};
    c.random_yaw = false;
    c.place_x = {-0.1, 0.1};
    c.place_z = {0.6, 1.6};
    c.light_elevation_deg = {45.0, 45.0};
    c.light_azimuth_deg = {65.0, 65.0};
    c.light_distance = {80.0, 80.0};
    c.ambient = {0.25, 0.25};
    c.light_strength = {0.6, 0.6};
    c.object_palette = {{0.45, 0.06, 0.05}, {0.05, 0.10, 0.45}, {0.06, 0.30, 0.08}, {0.35, 0.08, 0.35}};
    c.floor_palette = {{0.80, 0.78, 0.72}, {0.68, 0.66, 0.62}};
    c.wall_palette = {{0.78, 0.80, 0.82}, {0.66, 0.68, 0.70}};
    return c;
}

namespace detail {

inline constexpr std::int32_t kFloorId = 0;
inline constexpr std::int32_t kWallId = 1;
inline constexpr std::int32_t kFirstObjectId = 10;

inline Rgb pick(Rng& rng, const std::vector<Rgb>& palette)
{
    return palette[static_cast<size_t>(rng.integer(0, static_cast<std::int64_t>(palette.size()) - 1))];
}

/// Two distinct palette entries.
inline std::pair<Rgb, Rgb> pick_pair(Rng& rng, const std::vector<Rgb>& palette)
{
    const auto n = static_cast<std::int64_t>(palette.size());
    const auto a = rng.integer(0, n - 1);
    auto b = rng.integer(0, n - 2);
    if (b >= a) {
        ++b;
    }
    return {palette[static_cast<size_t>(a)], palette[static_cast<size_t>(b)]};
}

inline Camera default_camera(int width, int height)
{
    return Camera::look_at({0.0, 1.5, -2.2}, {0.0, 0.3, 1.0}, 0.866 * width, width, height);
}

inline Mesh make_background(Rng& rng, const GenConfig& c)
{
    const auto [f0, f1] = pick_pair(rng, c.floor_palette);
    const auto [w0, w1] = pick_pair(rng, c.wall_palette);
    const double fs = rng.uniform(c.floor_checker.lo, c.floor_checker.hi);
    const double ws = rng.uniform(c.wall_checker.lo, c.wall_checker.hi);
    Mesh bg = make_quad({-12, 0, -5}, {-12, 0, 5}, {12, 0, 5}, {12, 0, -5}, Albedo::checker(f0, f1, fs), kFloorId);
    bg.append(make_quad({-12, 0, 5}, {-12, 8, 5}, {12, 8, 5}, {12, 0, 5}, Albedo::checker(w0, w1, ws), kWallId));
    return bg;
}

struct Footprint {
    double x, z, radius;
};

inline Mesh make_object(Rng& rng, const GenConfig& c, ObjectKind kind, const Footprint& fp, double size,
                        std::int32_t id)
{
    Albedo albedo = Albedo::solid(pick(rng, c.object_palette));
    if (c.object_palette.size() >= 2 && rng.coin()) {
        const auto [a, b] = pick_pair(rng, c.object_palette);
        albedo = Albedo::checker(a, b, size / 3.0);
    }
    const double yaw = c.random_yaw ? rng.uniform(0.0, std::numbers::pi / 2) : 0.0;
    const Vec3 base{fp.x, 0.0, fp.z};
    switch (kind) {
    case ObjectKind::cube:
        return make_box(base, {size, size, size}, yaw, albedo, id);
    case ObjectKind::icosphere:
        return make_icosphere({fp.x, size / 2, fp.z}, size / 2, 2, albedo, id);
    case ObjectKind::cylinder:
        return make_cylinder(base, size / 2, size * rng.uniform(0.8, 1.5), 16, albedo, id);
    }
    return {};
}

inline bool fully_in_frame(const Mesh& m, const Camera& cam)
{
    for (const Vec3& v : m.vertices) {
        const Vec3 p = cam.to_camera(v);
        if (!(p.z > kMinDepth)) {
            return false;
        }
        const PixelCoord px = project_vertex(v, cam);
        if (px.u < 1.0 || px.u > cam.width - 1.0 || px.v < 1.0 || px.v > cam.height - 1.0) {
            return false;
        }
    }
    return true;
}

inline Lighting make_lighting(Rng& rng, const GenConfig& c, const Vec3& focus)
{
    constexpr double deg = std::numbers::pi / 180.0;
    Lighting l;
    const double amb = rng.uniform(c.ambient.lo, c.ambient.hi);
    l.ambient = {amb, amb, amb};
    const double elev = rng.uniform(c.light_elevation_deg.lo, c.light_elevation_deg.hi) * deg;
    double azim = rng.uniform(c.light_azimuth_deg.lo, c.light_azimuth_deg.hi) * deg;
    if (rng.coin()) {
        azim = -azim;
    }
    const double dist = rng.uniform(c.light_distance.lo, c.light_distance.hi);
    const Vec3 dir{std::cos(elev) * std::sin(azim), std::sin(elev), -std::cos(elev) * std::cos(azim)};
    l.point_position = focus + dir * dist;
    // Direct irradiance at the focus: I * sin(elev) / dist^2.
    const double strength = rng.uniform(c.light_strength.lo, c.light_strength.hi);
    const double i = strength * dist * dist / std::sin(elev);
    l.point_intensity = {i, i, i};
    return l;
}

inline bool try_sample(Rng& rng, const GenConfig& c, Scene& scene)
{
    scene.camera = default_camera(c.width, c.height);
    scene.background = make_background(rng, c);
    scene.foreground = Mesh{};
    const auto n_objects = static_cast<int>(rng.integer(c.min_objects, c.max_objects));
    std::vector<Footprint> placed;
    for (int o = 0; o < n_objects; ++o) {
        bool ok = false;
        for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
            const ObjectKind kind =
                c.kinds[static_cast<size_t>(rng.integer(0, static_cast<std::int64_t>(c.kinds.size()) - 1))];
            const double size = rng.uniform(c.object_size.lo, c.object_size.hi);
            // Circumscribed radius of the footprint, for every kind.
            const Footprint fp{rng.uniform(c.place_x.lo, c.place_x.hi), rng.uniform(c.place_z.lo, c.place_z.hi),
                               size * std::numbers::sqrt2 / 2};
            bool overlaps = false;
            for (const Footprint& q : placed) {
                overlaps = overlaps || std::hypot(fp.x - q.x, fp.z - q.z) < fp.radius + q.radius + 0.1;
            }
            if (overlaps) {
                continue;
            }
            Mesh obj = make_object(rng, c, kind, fp, size, kFirstObjectId + o);
            if (!fully_in_frame(obj, scene.camera)) {
                continue;
            }
            scene.foreground.append(obj);
            placed.push_back(fp);
            ok = true;
        }
        if (!ok) {
            return false;
        }
    }
    Vec3 focus{};
    for (const Footprint& fp : placed) {
        focus = focus + Vec3{fp.x, 0.0, fp.z} / static_cast<double>(placed.size());
    }
    for (int attempt = 0; attempt < 100; ++attempt) {
        scene.lighting = make_lighting(rng, c, focus);
        if (count(ground_truth_masks(scene, 1).shadow) > 0) {
            return true;
        }
    }
    return false;
}

} // namespace detail

/// Per-sample seed of sample `index` in a dataset generated from `c`.
inline std::uint64_t sample_seed(const GenConfig& c, int index) { return c.seed + static_cast<std::uint64_t>(index); }

/// Random scene fully determined by `seed`. Rejection sampling gets 100
/// attempts per object; on failure the generator is reseeded once.
inline Scene sample_scene(std::uint64_t seed, const GenConfig& c)
{
    validate(c);
    Scene scene;
    scene.seed = seed;
    for (int round = 0; round < 2; ++round) {
        Rng rng(round == 0 ? seed : splitmix64(seed ^ 0xa5a5a5a5a5a5a5a5ULL));
        if (detail::try_sample(rng, c, scene)) {
            return scene;
        }
    }
    throw PlacementFailure("could not place objects for sample seed " + std::to_string(seed));
}

inline std::vector<Scene> canonical_suite()
{
    const GenConfig c = canonical_config();
    std::vector<Scene> out;
    for (int i = 0; i < c.count; ++i) {
        out.push_back(sample_scene(sample_seed(c, i), c));
    }
    return out;
}

/// Train/test configs whose per-sample seeds are disjoint by construction.
inline std::pair<GenConfig, GenConfig> split_configs(const GenConfig& base, int train_count, int test_count)
{
    GenConfig train = base;
    GenConfig test = base;
    train.count = train_count;
    test.count = test_count;
    test.seed = base.seed + static_cast<std::uint64_t>(train_count);
    return {train, test};
}

// ---------------------------------------------------------------------------
// Config / manifest serialization

inline nlohmann::json to_json(const GenConfig& c)
{
    using nlohmann::json;
    auto range = [](const Range& r) { return json::array({r.lo, r.hi}); };
    auto palette = [](const std::vector<Rgb>& p) {
        json a = json::array();
        for (const Rgb& c : p) {
            a.push_back(json::array({c.r, c.g, c.b}));
        }
        return a;
    };
    json kinds = json::array();
    for (ObjectKind k : c.kinds) {
        kinds.push_back(to_string(k));
    }
    json j = json::object();
    j["count"] = c.count;
    j["seed"] = c.seed;
    j["width"] = c.width;
    j["height"] = c.height;
    j["min_objects"] = c.min_objects;
    j["max_objects"] = c.max_objects;
    j["kinds"] = kinds;
    j["object_size"] = range(c.object_size);
    j["random_yaw"] = c.random_yaw;
    j["place_x"] = range(c.place_x);
    j["place_z"] = range(c.place_z);
    j["object_palette"] = palette(c.object_palette);
    j["floor_palette"] = palette(c.floor_palette);
    j["wall_palette"] = palette(c.wall_palette);
    j["floor_checker"] = range(c.floor_checker);
    j["wall_checker"] = range(c.wall_checker);
    j["ambient"] = range(c.ambient);
    j["light_elevation_deg"] = range(c.light_elevation_deg);
    j["light_azimuth_deg"] = range(c.light_azimuth_deg);
    j["light_distance"] = range(c.light_distance);
    j["light_strength"] = range(c.light_strength);
    return j;
}

inline GenConfig gen_config_from_json(const nlohmann::json& j)
{
    try {
        GenConfig c;
        auto range = [](const nlohmann::json& a) { return Range{a.at(0).get<double>(), a.at(1).get<double>()}; };
        auto palette = [](const nlohmann::json& a) {
            std::vector<Rgb> p;
            for (const auto& e : a) {
                p.push_back({e.at(0).get<double>(), e.at(1).get<double>(), e.at(2).get<double>()});
            }
            return p;
        };
        c.count = j.at("count").get<int>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.width = j.at("width").get<int>();
        c.height = j.at("height").get<int>();
        c.min_objects = j.at("min_objects").get<int>();
        c.max_objects = j.at("max_objects").get<int>();
        c.kinds.clear();
        for (const auto& k : j.at("kinds")) {
            c.kinds.push_back(object_kind_from(k.get<std::string>()));
        }
        c.object_size = range(j.at("object_size"));
        c.random_yaw = j.at("random_yaw").get<bool>();
        c.place_x = range(j.at("place_x"));
        c.place_z = range(j.at("place_z"));
        c.object_palette = palette(j.at("object_palette"));
        c.floor_palette = palette(j.at("floor_palette"));
        c.wall_palette = palette(j.at("wall_palette"));
        c.floor_checker = range(j.at("floor_checker"));
        c.wall_checker = range(j.at("wall_checker"));
        c.ambient = range(j.at("ambient"));
        c.light_elevation_deg = range(j.at("light_elevation_deg"));
        c.light_azimuth_deg = range(j.at("light_azimuth_deg"));
        c.light_distance = range(j.at("light_distance"));
        c.light_strength = range(j.at("light_strength"));
        validate(c);
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ManifestInvalid(std::string("generator config: ") + e.what());
    }
}

inline constexpr int kDatasetFormatVersion = 1;
inline constexpr const char* kManifestName = "manifest.json";

/// Relative paths of every file belonging to one sample.
struct SampleRecord {
    int index = 0;
    std::uint64_t seed = 0;
    std::string scene;
    std::string image_png, image_pfm;
    std::string flip_png, flip_pfm;
    std::string bg_png, bg_pfm;
    std::string refl_png, refl_pfm;
    std::string gt_shadow, gt_caster;
    std::string sup_cm, sup_sm1, sup_sm2, sup_sm;

    std::vector<std::string> files() const
    {
        return {scene,  image_png, image_pfm, flip_png,  flip_pfm,  bg_png,  bg_pfm, refl_png,
                refl_pfm, gt_shadow, gt_caster, sup_cm, sup_sm1, sup_sm2, sup_sm};
    }

    std::vector<std::string> masks() const { return {gt_shadow, gt_caster, sup_cm, sup_sm1, sup_sm2, sup_sm}; }

    static SampleRecord for_index(int index, std::uint64_t seed)
    {
        char id[16];
        std::snprintf(id, sizeof(id), "%05d", index);
        const std::string s(id);
        SampleRecord r;
        r.index = index;
        r.seed = seed;
        r.scene = "scenes/" + s + ".json";
        r.image_png = "images/" + s + ".png";
        r.image_pfm = "images/" + s + ".pfm";
        r.flip_png = "images_flip/" + s + ".png";
        r.flip_pfm = "images_flip/" + s + ".pfm";
        r.bg_png = "images_bg/" + s + ".png";
        r.bg_pfm = "images_bg/" + s + ".pfm";
        r.refl_png = "images_refl/" + s + ".png";
        r.refl_pfm = "images_refl/" + s + ".pfm";
        r.gt_shadow = "gt_shadow/" + s + ".png";
        r.gt_caster = "gt_caster/" + s + ".png";
        r.sup_cm = "sup_cm/" + s + ".png";
        r.sup_sm1 = "sup_sm1/" + s + ".png";
        r.sup_sm2 = "sup_sm2/" + s + ".png";
        r.sup_sm = "sup_sm/" + s + ".png";
        return r;
    }
};

struct DatasetManifest {
    int format_version = kDatasetFormatVersion;
    GenConfig config;
    std::vector<SampleRecord> samples;
};

inline nlohmann::json to_json(const DatasetManifest& m)
{
    using nlohmann::json;
    json samples = json::array();
    for (const SampleRecord& r : m.samples) {
        json s = json::object();
        s["index"] = r.index;
        s["seed"] = r.seed;
        s["scene"] = r.scene;
        s["image"] = json::array({r.image_png, r.image_pfm});
        s["image_flip"] = json::array({r.flip_png, r.flip_pfm});
        s["image_bg"] = json::array({r.bg_png, r.bg_pfm});
        s["image_refl"] = json::array({r.refl_png, r.refl_pfm});
        s["gt_shadow"] = r.gt_shadow;
        s["gt_caster"] = r.gt_caster;
        s["sup_cm"] = r.sup_cm;
        s["sup_sm1"] = r.sup_sm1;
        s["sup_sm2"] = r.sup_sm2;
        s["sup_sm"] = r.sup_sm;
        samples.push_back(std::move(s));
    }
    json j = json::object();
    j["format_version"] = m.format_version;
    j["generator"] = to_json(m.config);
    j["samples"] = std::move(samples);
    return j;
}

inline DatasetManifest load_manifest(const std::filesystem::path& dir)
{
    const auto path = dir / kManifestName;
    if (!std::filesystem::is_directory(dir)) {
        throw DatasetMissing("dataset directory " + dir.string() + " does not exist");
    }
    std::ifstream in(path);
    if (!in) {
        throw DatasetMissing("no manifest at " + path.string() + " (missing or unfinished dataset)");
    }
    DatasetManifest m;
    try {
        const nlohmann::json j = nlohmann::json::parse(in);
        m.format_version = j.at("format_version").get<int>();
        if (m.format_version != kDatasetFormatVersion) {
            throw ManifestInvalid("unsupported dataset format version " + std::to_string(m.format_version));
        }
        m.config = gen_config_from_json(j.at("generator"));
        for (const auto& s : j.at("samples")) {
            SampleRecord r;
            r.index = s.at("index").get<int>();
            r.seed = s.at("seed").get<std::uint64_t>();
            r.scene = s.at("scene").get<std::string>();
            r.image_png = s.at("image").at(0).get<std::string>();
            r.image_pfm = s.at("image").at(1).get<std::string>();
            r.flip_png = s.at("image_flip").at(0).get<std::string>();
            r.flip_pfm = s.at("image_flip").at(1).get<std::string>();
            r.bg_png = s.at("image_bg").at(0).get<std::string>();
            r.bg_pfm = s.at("image_bg").at(1).get<std::string>();
            r.refl_png = s.at("image_refl").at(0).get<std::string>();
            r.refl_pfm = s.at("image_refl").at(1).get<std::string>();
            r.gt_shadow = s.at("gt_shadow").get<std::string>();
            r.gt_caster = s.at("gt_caster").get<std::string>();
            r.sup_cm = s.at("sup_cm").get<std::string>();
            r.sup_sm1 = s.at("sup_sm1").get<std::string>();
            r.sup_sm2 = s.at("sup_sm2").get<std::string>();
            r.sup_sm = s.at("sup_sm").get<std::string>();
            m.samples.push_back(std::move(r));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ManifestInvalid(path.string() + ": " + e.what());
    }
    if (static_cast<int>(m.samples.size()) != m.config.count) {
        throw ManifestInvalid(path.string() + ": sample count does not match generator config");
    }
    return m;
}

// ---------------------------------------------------------------------------
// Generation

inline void write_sample(const std::filesystem::path& dir, const SampleRecord& r, const Scene& scene)
{
    const Supervision s = compute_supervision(scene, FlipMode::thresholded, 1);
    const GroundTruth gt = ground_truth_masks(scene, 1);
    save_scene(scene, dir / r.scene);
    write_png(dir / r.image_png, s.image);
    write_pfm(dir / r.image_pfm, s.image);
    write_png(dir / r.flip_png, s.flipped);
    write_pfm(dir / r.flip_pfm, s.flipped);
    write_png(dir / r.bg_png, s.background);
    write_pfm(dir / r.bg_pfm, s.background);
    write_png(dir / r.refl_png, s.reflectance);
    write_pfm(dir / r.refl_pfm, s.reflectance);
    write_png(dir / r.gt_shadow, gt.shadow);
    write_png(dir / r.gt_caster, gt.caster);
    write_png(dir / r.sup_cm, s.cm_diff);
    write_png(dir / r.sup_sm1, s.sm_diff1);
    write_png(dir / r.sup_sm2, s.sm_diff2);
    write_png(dir / r.sup_sm, s.sm_diff);
}

/// Writes every sample, then the manifest (via rename) as the completion marker.
inline DatasetManifest generate_dataset(const GenConfig& config, const std::filesystem::path& dir,
                                        int threads = default_thread_count())
{
    validate(config);
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    for (const char* sub : {"scenes", "images", "images_flip", "images_bg", "images_refl", "gt_shadow", "gt_caster",
                            "sup_cm", "sup_sm1", "sup_sm2", "sup_sm"}) {
        fs::create_directories(dir / sub, ec);
        if (ec) {
            throw IoError("cannot create " + (dir / sub).string() + ": " + ec.message());
        }
    }
    fs::remove(dir / kManifestName, ec);

    DatasetManifest manifest;
    manifest.config = config;
    for (int i = 0; i < config.count; ++i) {
        manifest.samples.push_back(SampleRecord::for_index(i, sample_seed(config, i)));
    }
    std::vector<std::string> errors(static_cast<size_t>(config.count));
    parallel_for(config.count, threads, [&](int i) {
        try {
            const SampleRecord& r = manifest.samples[static_cast<size_t>(i)];
            write_sample(dir, r, sample_scene(r.seed, config));
        } catch (const std::exception& e) {
            errors[static_cast<size_t>(i)] = e.what();
        }
    });
    for (const std::string& e : errors) {
        if (!e.empty()) {
            throw IoError("dataset generation failed: " + e);
        }
    }
    const fs::path tmp = dir / (std::string(kManifestName) + ".tmp");
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << to_json(manifest).dump(1) << "\n";
        if (!out) {
            throw IoError("cannot write " + tmp.string());
        }
    }
    fs::rename(tmp, dir / kManifestName);
    return manifest;
}

// ---------------------------------------------------------------------------
// Validation

struct ValidationReport {
    int samples_checked = 0;
    std::vector<std::string> problems;

    bool ok() const { return problems.empty(); }
};

inline ValidationReport validate_dataset(const std::filesystem::path& dir, bool deep = false)
{
    ValidationReport report;
    const DatasetManifest m = load_manifest(dir);
    for (const SampleRecord& r : m.samples) {
        ++report.samples_checked;
        const std::string tag = "sample " + std::to_string(r.index) + ": ";
        bool complete = true;
        for (const std::string& f : r.files()) {
            if (!std::filesystem::exists(dir / f)) {
                report.problems.push_back(tag + "missing " + f);
                complete = false;
            }
        }
        if (!complete) {
            continue;
        }
        try {
            const Scene scene = load_scene(dir / r.scene);
            const int w = scene.camera.width;
            const int h = scene.camera.height;
            for (const std::string& f : r.masks()) {
                const Png8 png = read_png8(dir / f);
                if (png.width != w || png.height != h) {
                    report.problems.push_back(tag + f + " has wrong dimensions");
                    continue;
                }
                for (size_t i = 0; i < static_cast<size_t>(w) * h; ++i) {
                    const std::uint8_t v = png.bytes[i * png.channels];
                    if (v != 0 && v != 255) {
                        report.problems.push_back(tag + f + " is not binary");
                        break;
                    }
                }
            }
            for (const std::string& f : {r.image_pfm, r.flip_pfm, r.bg_pfm, r.refl_pfm}) {
                const Image img = read_pfm_image(dir / f);
                if (img.width != w || img.height != h) {
                    report.problems.push_back(tag + f + " has wrong dimensions");
                }
            }
            if (deep) {
                const Supervision s = compute_supervision(scene, FlipMode::thresholded, 1);
                const GroundTruth gt = ground_truth_masks(scene, 1);
                const std::pair<const std::string*, const Image*> images[] = {
                    {&r.image_pfm, &s.image}, {&r.flip_pfm, &s.flipped}, {&r.bg_pfm, &s.background},
                    {&r.refl_pfm, &s.reflectance}};
                for (const auto& [f, img] : images) {
                    if (!(read_pfm_image(dir / *f) == *img)) {
                        report.problems.push_back(tag + *f + " differs from its recomputation");
                    }
                }
                const std::pair<const std::string*, const BinaryMask*> masks[] = {
                    {&r.gt_shadow, &gt.shadow}, {&r.gt_caster, &gt.caster}, {&r.sup_cm, &s.cm_diff},
                    {&r.sup_sm1, &s.sm_diff1},  {&r.sup_sm2, &s.sm_diff2},  {&r.sup_sm, &s.sm_diff}};
                for (const auto& [f, mask] : masks) {
                    if (!(read_mask_png(dir / *f) == *mask)) {
                        report.problems.push_back(tag + *f + " differs from its recomputation");
                    }
                }
            }
        } catch (const std::exception& e) {
            report.problems.push_back(tag + e.what());
        }
    }
    return report;
}

} // namespace rendet
