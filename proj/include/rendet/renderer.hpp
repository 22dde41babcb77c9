#pragma once

// Deterministic ray caster: one primary ray per pixel centre, Lambertian
// shading from a constant emitter plus one point light with hard shadows.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "rendet/geometry.hpp"
#include "rendet/image.hpp"
#include "rendet/parallel.hpp"
#include "rendet/scene.hpp"

namespace rendet {

inline constexpr double kRayEpsilon = 1e-6;
inline constexpr double kShadowOffset = 1e-4;

struct HitRecord {
    bool hit = false;
    double t = std::numeric_limits<double>::infinity();
    Vec3 point{};
    Vec3 normal{}; // unit, facing the incoming ray
    int face_index = -1;
    std::int32_t object_id = -1;
    bool is_foreground = false;
};

/// Flattened triangles of a foreground/background pair, grouped per object
/// with a bounding box so rays can skip whole objects.
class SceneGeometry {
public:
    SceneGeometry(const Mesh& foreground, const Mesh& background)
        : foreground_(&foreground), background_(&background)
    {
        add_mesh(foreground, true);
        add_mesh(background, false);
    }

    const Mesh& foreground() const { return *foreground_; }
    const Mesh& background() const { return *background_; }

    HitRecord intersect(const Vec3& origin, const Vec3& dir) const
    {
        HitRecord best;
        const Vec3 inv{1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z};
        for (const Group& g : groups_) {
            if (!g.hits_box(origin, inv, best.t)) {
                continue;
            }
            for (size_t i = g.begin; i < g.end; ++i) {
                const double t = intersect_triangle(tris_[i], origin, dir);
                if (t > kRayEpsilon && t < best.t) {
                    best.t = t;
                    best.face_index = static_cast<int>(tris_[i].face_index);
                    best.object_id = tris_[i].object_id;
                    best.is_foreground = tris_[i].foreground;
                    best.normal = tris_[i].normal;
                    best.hit = true;
                }
            }
        }
        if (best.hit) {
            best.point = origin + dir * best.t;
            if (dot(best.normal, dir) > 0.0) {
                best.normal = -best.normal;
            }
        }
        return best;
    }

    /// True if anything lies along the ray strictly between kRayEpsilon and t_max.
    bool occluded(const Vec3& origin, const Vec3& dir, double t_max) const
    {
        const Vec3 inv{1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z};
        for (const Group& g : groups_) {
            if (!g.hits_box(origin, inv, t_max)) {
                continue;
            }
            for (size_t i = g.begin; i < g.end; ++i) {
                const double t = intersect_triangle(tris_[i], origin, dir);
                if (t > kRayEpsilon && t < t_max) {
                    return true;
                }
            }
        }
        return false;
    }

    const Albedo& albedo_of(const HitRecord& h) const
    {
        const Mesh& m = h.is_foreground ? *foreground_ : *background_;
        return m.albedo[static_cast<size_t>(h.face_index)];
    }

private:
    struct Tri {
        Vec3 v0, v1, v2;
        Vec3 normal;
        std::uint32_t face_index;
        std::int32_t object_id;
        bool foreground;
    };

    struct Group {
        Vec3 lo, hi;
        size_t begin, end;

        bool hits_box(const Vec3& o, const Vec3& inv, double t_max) const
        {
            double t0 = 0.0;
            double t1 = t_max;
            for (int k = 0; k < 3; ++k) {
                double a = (lo[k] - o[k]) * inv[k];
                double b = (hi[k] - o[k]) * inv[k];
                if (a > b) {
                    std::swap(a, b);
                }
                // NaN from 0 * inf (ray in the slab plane) must not reject.
                if (a > t0) {
                    t0 = a;
                }
                if (b < t1) {
                    t1 = b;
                }
            }
            return t0 <= t1;
        }
    };

    void add_mesh(const Mesh& mesh, bool fg)
    {
        std::vector<std::int32_t> ids;
        for (std::int32_t id : mesh.object_ids) {
            if (std::find(ids.begin(), ids.end(), id) == ids.end()) {
                ids.push_back(id);
            }
        }
        for (std::int32_t id : ids) {
            Group g{};
            g.begin = tris_.size();
            constexpr double inf = std::numeric_limits<double>::infinity();
            Vec3 lo{inf, inf, inf};
            Vec3 hi{-inf, -inf, -inf};
            for (size_t i = 0; i < mesh.faces.size(); ++i) {
                if (mesh.object_ids[i] != id) {
                    continue;
                }
                const Face& f = mesh.faces[i];
                Tri t{mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]], {}, static_cast<std::uint32_t>(i),
                      id, fg};
                t.normal = normalized(cross(t.v1 - t.v0, t.v2 - t.v0));
                for (const Vec3& v : {t.v0, t.v1, t.v2}) {
                    lo = {std::min(lo.x, v.x), std::min(lo.y, v.y), std::min(lo.z, v.z)};
                    hi = {std::max(hi.x, v.x), std::max(hi.y, v.y), std::max(hi.z, v.z)};
                }
                tris_.push_back(t);
            }
            const Vec3 pad{1e-9, 1e-9, 1e-9};
            g.lo = lo - pad;
            g.hi = hi + pad;
            g.end = tris_.size();
            groups_.push_back(g);
        }
    }

    /// Watertight ray/triangle test (Woop, Benthin & Wald), two-sided.
    /// Returns the hit distance or -1.
    static double intersect_triangle(const Tri& tri, const Vec3& o, const Vec3& d)
    {
        const std::array<double, 3> ad{std::abs(d.x), std::abs(d.y), std::abs(d.z)};
        int kz = ad[0] > ad[1] ? (ad[0] > ad[2] ? 0 : 2) : (ad[1] > ad[2] ? 1 : 2);
        int kx = (kz + 1) % 3;
        int ky = (kx + 1) % 3;
        if (d[kz] < 0.0) {
            std::swap(kx, ky);
        }
        const double sx = d[kx] / d[kz];
        const double sy = d[ky] / d[kz];
        const double sz = 1.0 / d[kz];

        const Vec3 a = tri.v0 - o;
        const Vec3 b = tri.v1 - o;
        const Vec3 c = tri.v2 - o;
        const double ax = a[kx] - sx * a[kz];
        const double ay = a[ky] - sy * a[kz];
        const double bx = b[kx] - sx * b[kz];
        const double by = b[ky] - sy * b[kz];
        const double cx = c[kx] - sx * c[kz];
        const double cy = c[ky] - sy * c[kz];

        const double u = cx * by - cy * bx;
        const double v = ax * cy - ay * cx;
        const double w = bx * ay - by * ax;
        if ((u < 0.0 || v < 0.0 || w < 0.0) && (u > 0.0 || v > 0.0 || w > 0.0)) {
            return -1.0;
        }
        const double det = u + v + w;
        if (det == 0.0) {
            return -1.0;
        }
        const double t = (u * sz * a[kz] + v * sz * b[kz] + w * sz * c[kz]) / det;
        return t;
    }

    const Mesh* foreground_;
    const Mesh* background_;
    std::vector<Tri> tris_;
    std::vector<Group> groups_;
};

/// Primary-hit and light-visibility facts for one pixel. Both the shaded
/// image and the ground-truth masks are derived from this single record.
struct PixelSample {
    HitRecord hit;
    Rgb albedo{};
    double cos_light = 0.0;  // max(0, n . w)
    double inv_dist2 = 0.0;  // 1 / d^2 to the point light
    bool facing_light = false; // n . w > 0
    bool occluded = false;     // shadow ray blocked (only evaluated when facing_light)
};

inline PixelSample sample_pixel(const SceneGeometry& geo, const Camera& cam, const Lighting& light, int row, int col,
                                bool trace_shadows = true)
{
    PixelSample s;
    s.hit = geo.intersect(cam.origin(), cam.pixel_ray(row, col));
    if (!s.hit.hit) {
        return s;
    }
    s.albedo = geo.albedo_of(s.hit).at(s.hit.point, s.hit.normal);
    const Vec3 to_light = light.point_position - s.hit.point;
    const double d2 = dot(to_light, to_light);
    const Vec3 w = to_light / std::sqrt(d2);
    const double c = dot(s.hit.normal, w);
    s.inv_dist2 = 1.0 / d2;
    s.facing_light = c > 0.0;
    s.cos_light = std::max(0.0, c);
    if (s.facing_light && trace_shadows) {
        const Vec3 origin = s.hit.point + s.hit.normal * kShadowOffset;
        const Vec3 to = light.point_position - origin;
        const double dist = norm(to);
        s.occluded = geo.occluded(origin, to / dist, dist);
    }
    return s;
}

inline Rgb shade(const PixelSample& s, const Lighting& light)
{
    if (!s.hit.hit) {
        return {};
    }
    const double direct = s.occluded ? 0.0 : s.cos_light * s.inv_dist2;
    const Rgb irradiance = light.ambient + light.point_intensity * direct;
    const Rgb v = s.albedo * irradiance;
    return {std::clamp(v.r, 0.0, 1.0), std::clamp(v.g, 0.0, 1.0), std::clamp(v.b, 0.0, 1.0)};
}

inline HitRecord intersect(const Vec3& origin, const Vec3& dir, const SceneGeometry& geo)
{
    return geo.intersect(origin, dir);
}

inline Image render(const Lighting& lighting, const Camera& camera, const Mesh& foreground, const Mesh& background,
                    int threads = default_thread_count())
{
    const SceneGeometry geo(foreground, background);
    const bool has_point = lighting.point_intensity.r > 0.0 || lighting.point_intensity.g > 0.0 ||
                           lighting.point_intensity.b > 0.0;
    Image img(camera.width, camera.height);
    parallel_for(camera.height, threads, [&](int row) {
        for (int col = 0; col < camera.width; ++col) {
            const Rgb c = shade(sample_pixel(geo, camera, lighting, row, col, has_point), lighting);
            img.at(row, col, 0) = static_cast<float>(c.r);
            img.at(row, col, 1) = static_cast<float>(c.g);
            img.at(row, col, 2) = static_cast<float>(c.b);
        }
    });
    return img;
}

inline Image render(const Scene& scene, int threads = default_thread_count())
{
    return render(scene.lighting, scene.camera, scene.foreground, scene.background, threads);
}

/// Constant-emitter render of the foreground alone: albedo where the
/// foreground is hit, zero elsewhere. Independent of the scene lighting.
inline Image render_reflectance(const Camera& camera, const Mesh& foreground, int threads = default_thread_count())
{
    const Lighting emitter{{1.0, 1.0, 1.0}, {0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}};
    return render(emitter, camera, foreground, Mesh{}, threads);
}

inline Image render_background_only(const Lighting& lighting, const Camera& camera, const Mesh& background,
                                    int threads = default_thread_count())
{
    return render(lighting, camera, Mesh{}, background, threads);
}

inline Image render_flipped(const Lighting& lighting, const Camera& camera, const Mesh& foreground,
                            const Mesh& background, int threads = default_thread_count())
{
    return render(lighting.flipped(), camera, foreground, background, threads);
}

struct GroundTruth {
    BinaryMask shadow;
    BinaryMask caster;
};

/// Oracle masks from the scene description. Shadow pixels face the light but
/// have their shadow ray blocked, including shadows cast onto foreground surfaces.
inline GroundTruth ground_truth_masks(const Scene& scene, int threads = default_thread_count())
{
    const SceneGeometry geo(scene.foreground, scene.background);
    const Camera& cam = scene.camera;
    GroundTruth gt{BinaryMask(cam.width, cam.height), BinaryMask(cam.width, cam.height)};
    parallel_for(cam.height, threads, [&](int row) {
        for (int col = 0; col < cam.width; ++col) {
            const PixelSample s = sample_pixel(geo, cam, scene.lighting, row, col);
            gt.caster(row, col) = s.hit.hit && s.hit.is_foreground ? 1 : 0;
            gt.shadow(row, col) = s.hit.hit && s.facing_light && s.occluded ? 1 : 0;
        }
    });
    return gt;
}

/// Primary hits for every pixel, row-major.
inline std::vector<HitRecord> primary_hits(const Camera& cam, const Mesh& foreground, const Mesh& background)
{
    const SceneGeometry geo(foreground, background);
    std::vector<HitRecord> hits(static_cast<size_t>(cam.width) * cam.height);
    for (int row = 0; row < cam.height; ++row) {
        for (int col = 0; col < cam.width; ++col) {
            hits[static_cast<size_t>(row) * cam.width + col] = geo.intersect(cam.origin(), cam.pixel_ray(row, col));
        }
    }
    return hits;
}

/// CIE L*a*b* (D65) per pixel.
using LabImage = Raster<std::array<double, 3>>;

namespace detail {

// Linear sRGB primaries to XYZ, D65.
inline constexpr std::array<double, 9> kRgbToXyz{0.4124564, 0.3575761, 0.1804375, 0.2126729, 0.7151522,
                                                 0.0721750, 0.0193339, 0.1191920, 0.9503041};

inline double lab_f(double t)
{
    constexpr double delta = 6.0 / 29.0;
    return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

} // namespace detail

inline std::array<double, 3> rgb_to_lab(double r, double g, double b)
{
    const auto& m = detail::kRgbToXyz;
    const double x = m[0] * r + m[1] * g + m[2] * b;
    const double y = m[3] * r + m[4] * g + m[5] * b;
    const double z = m[6] * r + m[7] * g + m[8] * b;
    // White is the image of RGB (1,1,1), so white maps to a = b = 0 exactly.
    const double xn = m[0] + m[1] + m[2];
    const double yn = m[3] + m[4] + m[5];
    const double zn = m[6] + m[7] + m[8];
    const double fx = detail::lab_f(x / xn);
    const double fy = detail::lab_f(y / yn);
    const double fz = detail::lab_f(z / zn);
    return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

inline LabImage rgb_to_lab(const Image& img)
{
    LabImage out(img.width, img.height);
    for (size_t i = 0; i < img.pixel_count(); ++i) {
        out.data[i] = rgb_to_lab(img.pixels[3 * i], img.pixels[3 * i + 1], img.pixels[3 * i + 2]);
    }
    return out;
}

} // namespace rendet
