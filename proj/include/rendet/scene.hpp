#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rendet/errors.hpp"
#include "rendet/geometry.hpp"

namespace rendet {

/// Surface reflectance of one face. With checker_scale == 0 the face is solid
/// `primary`; otherwise the colour alternates between `primary` and `secondary`
/// on a world-space checkerboard of cell size checker_scale.
struct Albedo {
    Rgb primary{0.5, 0.5, 0.5};
    Rgb secondary{0.5, 0.5, 0.5};
    double checker_scale = 0.0;

    static constexpr Albedo solid(Rgb c) { return {c, c, 0.0}; }
    static constexpr Albedo checker(Rgb a, Rgb b, double scale) { return {a, b, scale}; }

    /// `p` is the hit point, `n` the face normal. The lookup is taken slightly
    /// below the surface so points exactly on a cell plane resolve consistently.
    Rgb at(const Vec3& p, const Vec3& n) const
    {
        if (checker_scale <= 0.0) {
            return primary;
        }
        const Vec3 q = p - n * 1e-6;
        const auto cell = [&](double c) { return static_cast<std::int64_t>(std::floor(c / checker_scale)); };
        const std::int64_t parity = cell(q.x) + cell(q.y) + cell(q.z);
        return (parity & 1) == 0 ? primary : secondary;
    }

    bool operator==(const Albedo&) const = default;
};

using Face = std::array<std::uint32_t, 3>;

/// Indexed triangle set partitioned into objects by a per-face label.
struct Mesh {
    std::vector<Vec3> vertices;
    std::vector<Face> faces;
    std::vector<Albedo> albedo;        // one per face
    std::vector<std::int32_t> object_ids; // one per face

    size_t face_count() const { return faces.size(); }
    bool empty() const { return faces.empty(); }

    /// Appends `other`, re-indexing its faces onto the combined vertex list.
    void append(const Mesh& other)
    {
        const auto base = static_cast<std::uint32_t>(vertices.size());
        vertices.insert(vertices.end(), other.vertices.begin(), other.vertices.end());
        for (const Face& f : other.faces) {
            faces.push_back({f[0] + base, f[1] + base, f[2] + base});
        }
        albedo.insert(albedo.end(), other.albedo.begin(), other.albedo.end());
        object_ids.insert(object_ids.end(), other.object_ids.begin(), other.object_ids.end());
    }

    bool operator==(const Mesh&) const = default;
};

/// Throws ValidationError naming the first broken invariant.
inline void validate(const Mesh& mesh, const std::string& what = "mesh")
{
    if (mesh.albedo.size() != mesh.faces.size()) {
        throw ValidationError(what + ": albedo count " + std::to_string(mesh.albedo.size()) +
                              " does not match face count " + std::to_string(mesh.faces.size()));
    }
    if (mesh.object_ids.size() != mesh.faces.size()) {
        throw ValidationError(what + ": object_id count " + std::to_string(mesh.object_ids.size()) +
                              " does not match face count " + std::to_string(mesh.faces.size()));
    }
    for (size_t i = 0; i < mesh.vertices.size(); ++i) {
        if (!is_finite(mesh.vertices[i])) {
            throw ValidationError(what + ": vertex " + std::to_string(i) + " is not finite");
        }
    }
    for (size_t i = 0; i < mesh.faces.size(); ++i) {
        const Face& f = mesh.faces[i];
        for (std::uint32_t idx : f) {
            if (idx >= mesh.vertices.size()) {
                throw ValidationError(what + ": face " + std::to_string(i) + " references vertex " +
                                      std::to_string(idx) + " but only " +
                                      std::to_string(mesh.vertices.size()) + " vertices exist");
            }
        }
        if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) {
            throw ValidationError(what + ": face " + std::to_string(i) + " repeats a vertex");
        }
        const Vec3 e1 = mesh.vertices[f[1]] - mesh.vertices[f[0]];
        const Vec3 e2 = mesh.vertices[f[2]] - mesh.vertices[f[0]];
        if (norm(cross(e1, e2)) <= 1e-12) {
            throw ValidationError(what + ": face " + std::to_string(i) + " has zero area");
        }
        const Albedo& a = mesh.albedo[i];
        for (double c : {a.primary.r, a.primary.g, a.primary.b, a.secondary.r, a.secondary.g, a.secondary.b}) {
            if (!(c >= 0.0 && c <= 1.0)) {
                throw ValidationError(what + ": face " + std::to_string(i) + " albedo outside [0,1]");
            }
        }
        if (!(a.checker_scale >= 0.0) || !std::isfinite(a.checker_scale)) {
            throw ValidationError(what + ": face " + std::to_string(i) + " has invalid checker scale");
        }
    }
}

/// Pinhole camera. Extrinsics map world to camera space: x_cam = rotation * x_world + translation.
/// Camera space looks down +z with image rows growing along +y.
struct Camera {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    Mat3 rotation{};
    Vec3 translation{};
    int width = 1;
    int height = 1;

    Vec3 to_camera(const Vec3& world) const { return rotation * world + translation; }

    /// Camera centre in world coordinates.
    Vec3 origin() const { return -(rotation.transposed() * translation); }

    /// World-space unit direction through the centre of pixel (row, col).
    Vec3 pixel_ray(int row, int col) const
    {
        const Vec3 d_cam{(col + 0.5 - cx) / fx, (row + 0.5 - cy) / fy, 1.0};
        return normalized(rotation.transposed() * d_cam);
    }

    /// Camera at `eye` looking at `target`, world +y up. The principal point is the image centre.
    static Camera look_at(const Vec3& eye, const Vec3& target, double focal, int width, int height)
    {
        const Vec3 forward = normalized(target - eye);
        const Vec3 right = normalized(cross(forward, Vec3{0, 1, 0}));
        const Vec3 down = cross(forward, right);
        Camera cam;
        cam.fx = focal;
        cam.fy = focal;
        cam.cx = width / 2.0;
        cam.cy = height / 2.0;
        cam.rotation = Mat3::from_rows(right, down, forward);
        cam.translation = -(cam.rotation * eye);
        cam.width = width;
        cam.height = height;
        return cam;
    }

    bool operator==(const Camera&) const = default;
};

inline void validate(const Camera& cam)
{
    if (cam.width <= 0 || cam.height <= 0) {
        throw ValidationError("camera: image size must be positive");
    }
    if (!(cam.fx > 0.0) || !(cam.fy > 0.0)) {
        throw ValidationError("camera: focal lengths must be positive");
    }
    if (!(cam.cx >= 0.0 && cam.cx < cam.width) || !(cam.cy >= 0.0 && cam.cy < cam.height)) {
        throw ValidationError("camera: principal point outside the image");
    }
    const Mat3& r = cam.rotation;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            const double expect = i == j ? 1.0 : 0.0;
            if (std::abs(dot(r.row(i), r.row(j)) - expect) > 1e-9) {
                throw ValidationError("camera: rotation is not orthonormal");
            }
        }
    }
    if (std::abs(r.determinant() - 1.0) > 1e-9) {
        throw ValidationError("camera: rotation determinant is not +1");
    }
    if (!is_finite(cam.translation)) {
        throw ValidationError("camera: translation is not finite");
    }
}

/// Constant emitter plus one point light.
struct Lighting {
    Rgb ambient{0.2, 0.2, 0.2};
    Vec3 point_position{0, 5, 0};
    Rgb point_intensity{10, 10, 10};

    /// The same lighting with the point light mirrored through the x = 0 plane.
    Lighting flipped() const
    {
        Lighting l = *this;
        l.point_position.x = -l.point_position.x;
        return l;
    }

    bool operator==(const Lighting&) const = default;
};

inline void validate(const Lighting& l)
{
    for (double c : {l.ambient.r, l.ambient.g, l.ambient.b, l.point_intensity.r, l.point_intensity.g,
                     l.point_intensity.b}) {
        if (!std::isfinite(c) || c < 0.0) {
            throw ValidationError("lighting: channel values must be finite and non-negative");
        }
    }
    if (!is_finite(l.point_position)) {
        throw ValidationError("lighting: point light position is not finite");
    }
}

struct Scene {
    Camera camera;
    Lighting lighting;
    Mesh background;
    Mesh foreground;
    std::uint64_t seed = 0;

    bool operator==(const Scene&) const = default;
};

inline void validate(const Scene& scene)
{
    validate(scene.camera);
    validate(scene.lighting);
    validate(scene.background, "background");
    validate(scene.foreground, "foreground");
    for (std::int32_t bg : scene.background.object_ids) {
        for (std::int32_t fg : scene.foreground.object_ids) {
            if (bg == fg) {
                throw ValidationError("scene: object id " + std::to_string(bg) +
                                      " is used by both background and foreground");
            }
        }
    }
}

/// Sub-pixel image coordinate; u runs along columns, v along rows.
struct PixelCoord {
    double u = 0.0;
    double v = 0.0;
    bool operator==(const PixelCoord&) const = default;
};

inline constexpr double kMinDepth = 1e-6;

inline PixelCoord project_vertex(const Vec3& v, const Camera& cam)
{
    const Vec3 p = cam.to_camera(v);
    if (!(p.z > kMinDepth)) {
        throw BehindCamera("vertex projects to camera depth " + std::to_string(p.z));
    }
    return {cam.fx * p.x / p.z + cam.cx, cam.fy * p.y / p.z + cam.cy};
}

struct ProjectedFace {
    std::array<PixelCoord, 3> corners{};
    std::array<bool, 3> valid{};
};

inline std::vector<ProjectedFace> project_mesh(const Mesh& mesh, const Camera& cam)
{
    std::vector<ProjectedFace> out;
    out.reserve(mesh.faces.size());
    for (const Face& f : mesh.faces) {
        ProjectedFace pf;
        for (int k = 0; k < 3; ++k) {
            const Vec3 p = cam.to_camera(mesh.vertices[f[static_cast<size_t>(k)]]);
            if (p.z > kMinDepth) {
                pf.corners[static_cast<size_t>(k)] = {cam.fx * p.x / p.z + cam.cx, cam.fy * p.y / p.z + cam.cy};
                pf.valid[static_cast<size_t>(k)] = true;
            }
        }
        out.push_back(pf);
    }
    return out;
}

} // namespace rendet
