#pragma once

// Scene files are JSON documents. Reals are written in shortest round-trip
// form, so save(load(p)) reproduces every value bit-exactly.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "rendet/errors.hpp"
#include "rendet/scene.hpp"

namespace rendet {

namespace detail {

using nlohmann::json;

inline const json& field(const json& obj, const char* key, const std::string& ctx)
{
    if (!obj.is_object()) {
        throw ParseError(ctx + ": expected an object");
    }
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw ParseError(ctx + ": missing field '" + key + "'");
    }
    return *it;
}

inline double real(const json& j, const std::string& ctx)
{
    if (!j.is_number()) {
        throw ParseError(ctx + ": expected a number");
    }
    return j.get<double>();
}

template <size_t N>
std::array<double, N> reals(const json& j, const std::string& ctx)
{
    if (!j.is_array() || j.size() != N) {
        throw ParseError(ctx + ": expected an array of " + std::to_string(N) + " numbers");
    }
    std::array<double, N> out{};
    for (size_t i = 0; i < N; ++i) {
        out[i] = real(j[i], ctx + "[" + std::to_string(i) + "]");
    }
    return out;
}

inline Vec3 vec3(const json& j, const std::string& ctx)
{
    const auto a = reals<3>(j, ctx);
    return {a[0], a[1], a[2]};
}

inline Rgb rgb(const json& j, const std::string& ctx)
{
    const auto a = reals<3>(j, ctx);
    return {a[0], a[1], a[2]};
}

inline json to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }
inline json to_json(const Rgb& c) { return json::array({c.r, c.g, c.b}); }

inline json mesh_to_json(const Mesh& mesh)
{
    json verts = json::array();
    for (const Vec3& v : mesh.vertices) {
        verts.push_back(to_json(v));
    }
    json faces = json::array();
    for (const Face& f : mesh.faces) {
        faces.push_back(json::array({f[0], f[1], f[2]}));
    }
    json albedo = json::array();
    for (const Albedo& a : mesh.albedo) {
        albedo.push_back(json::array({a.primary.r, a.primary.g, a.primary.b, a.secondary.r, a.secondary.g,
                                      a.secondary.b, a.checker_scale}));
    }
    json ids = json::array();
    for (std::int32_t id : mesh.object_ids) {
        ids.push_back(id);
    }
    json out = json::object();
    out["vertices"] = std::move(verts);
    out["faces"] = std::move(faces);
    out["albedo"] = std::move(albedo);
    out["object_ids"] = std::move(ids);
    return out;
}

inline Mesh mesh_from_json(const json& j, const std::string& ctx)
{
    Mesh mesh;
    const json& verts = field(j, "vertices", ctx);
    const json& faces = field(j, "faces", ctx);
    const json& albedo = field(j, "albedo", ctx);
    const json& ids = field(j, "object_ids", ctx);
    for (const json* arr : {&verts, &faces, &albedo, &ids}) {
        if (!arr->is_array()) {
            throw ParseError(ctx + ": mesh fields must be arrays");
        }
    }
    for (size_t i = 0; i < verts.size(); ++i) {
        mesh.vertices.push_back(vec3(verts[i], ctx + ".vertices[" + std::to_string(i) + "]"));
    }
    for (size_t i = 0; i < faces.size(); ++i) {
        const std::string c = ctx + ".faces[" + std::to_string(i) + "]";
        if (!faces[i].is_array() || faces[i].size() != 3) {
            throw ParseError(c + ": expected three vertex indices");
        }
        Face f{};
        for (size_t k = 0; k < 3; ++k) {
            if (!faces[i][k].is_number_unsigned()) {
                throw ParseError(c + ": vertex indices must be non-negative integers");
            }
            f[k] = faces[i][k].get<std::uint32_t>();
        }
        mesh.faces.push_back(f);
    }
    for (size_t i = 0; i < albedo.size(); ++i) {
        const std::string c = ctx + ".albedo[" + std::to_string(i) + "]";
        // Three numbers are a solid colour; seven add a checker colour and cell size.
        if (albedo[i].is_array() && albedo[i].size() == 3) {
            mesh.albedo.push_back(Albedo::solid(rgb(albedo[i], c)));
            continue;
        }
        if (!albedo[i].is_array() || albedo[i].size() != 7) {
            throw ParseError(c + ": expected an array of 3 or 7 numbers");
        }
        const auto a = reals<7>(albedo[i], c);
        mesh.albedo.push_back({{a[0], a[1], a[2]}, {a[3], a[4], a[5]}, a[6]});
    }
    for (size_t i = 0; i < ids.size(); ++i) {
        if (!ids[i].is_number_integer()) {
            throw ParseError(ctx + ".object_ids[" + std::to_string(i) + "]: expected an integer");
        }
        mesh.object_ids.push_back(ids[i].get<std::int32_t>());
    }
    return mesh;
}

} // namespace detail

inline std::string scene_to_string(const Scene& scene)
{
    using detail::json;
    using detail::to_json;
    json cam = json::object();
    const Camera& c = scene.camera;
    cam["fx"] = c.fx;
    cam["fy"] = c.fy;
    cam["cx"] = c.cx;
    cam["cy"] = c.cy;
    cam["rotation"] = json(c.rotation.m);
    cam["translation"] = to_json(c.translation);
    cam["width"] = c.width;
    cam["height"] = c.height;

    json light = json::object();
    light["ambient"] = to_json(scene.lighting.ambient);
    light["point_position"] = to_json(scene.lighting.point_position);
    light["point_intensity"] = to_json(scene.lighting.point_intensity);

    json doc = json::object();
    doc["camera"] = std::move(cam);
    doc["lighting"] = std::move(light);
    doc["background"] = detail::mesh_to_json(scene.background);
    doc["foreground"] = detail::mesh_to_json(scene.foreground);
    doc["seed"] = scene.seed;
    return doc.dump(1) + "\n";
}

/// Parses and validates. ParseError carries the offending field path;
/// ValidationError is raised for well-formed files that break a scene invariant.
inline Scene scene_from_string(const std::string& text, const std::string& source = "<scene>")
{
    using detail::field;
    using detail::json;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(source + ": " + e.what());
    }
    Scene scene;
    const json& cam = field(doc, "camera", source);
    Camera& c = scene.camera;
    const std::string cctx = source + ": camera";
    c.fx = detail::real(field(cam, "fx", cctx), cctx + ".fx");
    c.fy = detail::real(field(cam, "fy", cctx), cctx + ".fy");
    c.cx = detail::real(field(cam, "cx", cctx), cctx + ".cx");
    c.cy = detail::real(field(cam, "cy", cctx), cctx + ".cy");
    c.rotation.m = detail::reals<9>(field(cam, "rotation", cctx), cctx + ".rotation");
    c.translation = detail::vec3(field(cam, "translation", cctx), cctx + ".translation");
    for (auto [key, dst] : {std::pair{"width", &c.width}, std::pair{"height", &c.height}}) {
        const json& v = field(cam, key, cctx);
        if (!v.is_number_integer()) {
            throw ParseError(cctx + "." + key + ": expected an integer");
        }
        *dst = v.get<int>();
    }

    const json& light = field(doc, "lighting", source);
    const std::string lctx = source + ": lighting";
    scene.lighting.ambient = detail::rgb(field(light, "ambient", lctx), lctx + ".ambient");
    scene.lighting.point_position = detail::vec3(field(light, "point_position", lctx), lctx + ".point_position");
    scene.lighting.point_intensity =
        detail::rgb(field(light, "point_intensity", lctx), lctx + ".point_intensity");

    scene.background = detail::mesh_from_json(field(doc, "background", source), source + ": background");
    scene.foreground = detail::mesh_from_json(field(doc, "foreground", source), source + ": foreground");
    const json& seed = field(doc, "seed", source);
    if (!seed.is_number_unsigned()) {
        throw ParseError(source + ": seed must be a non-negative integer");
    }
    scene.seed = seed.get<std::uint64_t>();
    validate(scene);
    return scene;
}

inline Scene load_scene(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open scene file " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return scene_from_string(ss.str(), path.string());
}

inline void save_scene(const Scene& scene, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write scene file " + path.string());
    }
    out << scene_to_string(scene);
    if (!out) {
        throw IoError("failed writing scene file " + path.string());
    }
}

} // namespace rendet
