#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <utility>
#include <vector>

#include "rendet/scene.hpp"

namespace rendet {

namespace detail {

inline Mesh single_object(std::vector<Vec3> verts, std::vector<Face> faces, const Albedo& albedo, std::int32_t id)
{
    Mesh m;
    m.vertices = std::move(verts);
    m.faces = std::move(faces);
    m.albedo.assign(m.faces.size(), albedo);
    m.object_ids.assign(m.faces.size(), id);
    return m;
}

/// Rotation about +y by `yaw` radians, then translation.
inline Vec3 place(const Vec3& p, const Vec3& origin, double yaw)
{
    const double c = std::cos(yaw);
    const double s = std::sin(yaw);
    return {origin.x + c * p.x + s * p.z, origin.y + p.y, origin.z - s * p.x + c * p.z};
}

} // namespace detail

/// Planar quad p0-p1-p2-p3 as two triangles.
inline Mesh make_quad(const Vec3& p0, const Vec3& p1, const Vec3& p2, const Vec3& p3, const Albedo& albedo,
                      std::int32_t id)
{
    return detail::single_object({p0, p1, p2, p3}, {{0, 1, 2}, {0, 2, 3}}, albedo, id);
}

/// Axis-aligned (before yaw) box resting on its base centre `base`. Each side
/// is an n x n grid of cells, each cell fanned into four triangles around its
/// centre, so every triangle owns one vertex strictly inside its side.
inline Mesh make_box(const Vec3& base, const Vec3& size, double yaw, const Albedo& albedo, std::int32_t id,
                     int cells = 3)
{
    const int res = 2 * cells;
    std::map<std::array<int, 3>, std::uint32_t> index;
    std::vector<Vec3> v;
    auto vertex = [&](std::array<int, 3> lattice) {
        auto it = index.find(lattice);
        if (it != index.end()) {
            return it->second;
        }
        const Vec3 local{(static_cast<double>(lattice[0]) / res - 0.5) * size.x,
                         static_cast<double>(lattice[1]) / res * size.y,
                         (static_cast<double>(lattice[2]) / res - 0.5) * size.z};
        v.push_back(detail::place(local, base, yaw));
        const auto idx = static_cast<std::uint32_t>(v.size() - 1);
        index.emplace(lattice, idx);
        return idx;
    };
    std::vector<Face> f;
    for (int axis = 0; axis < 3; ++axis) {
        const int ua = (axis + 1) % 3;
        const int va = (axis + 2) % 3;
        for (int side : {0, res}) {
            for (int i = 0; i < cells; ++i) {
                for (int j = 0; j < cells; ++j) {
                    auto at = [&](int du, int dv) {
                        std::array<int, 3> l{};
                        l[static_cast<size_t>(axis)] = side;
                        l[static_cast<size_t>(ua)] = 2 * i + du;
                        l[static_cast<size_t>(va)] = 2 * j + dv;
                        return vertex(l);
                    };
                    const std::uint32_t c00 = at(0, 0);
                    const std::uint32_t c10 = at(2, 0);
                    const std::uint32_t c11 = at(2, 2);
                    const std::uint32_t c01 = at(0, 2);
                    const std::uint32_t ctr = at(1, 1);
                    f.push_back({c00, c10, ctr});
                    f.push_back({c10, c11, ctr});
                    f.push_back({c11, c01, ctr});
                    f.push_back({c01, c00, ctr});
                }
            }
        }
    }
    return detail::single_object(std::move(v), std::move(f), albedo, id);
}

/// Unit cube centred on the origin; handy for analytic intersection tests.
inline Mesh make_unit_cube(const Albedo& albedo, std::int32_t id)
{
    return make_box({0, -0.5, 0}, {1, 1, 1}, 0.0, albedo, id);
}

/// Icosahedron subdivided `subdivisions` times, projected onto the sphere.
inline Mesh make_icosphere(const Vec3& centre, double radius, int subdivisions, const Albedo& albedo, std::int32_t id)
{
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> v{{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                        {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    for (Vec3& p : v) {
        p = normalized(p);
    }
    std::vector<Face> f{{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                        {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                        {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> mid;
        auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
            const auto key = std::minmax(a, b);
            auto it = mid.find(key);
            if (it != mid.end()) {
                return it->second;
            }
            v.push_back(normalized((v[a] + v[b]) * 0.5));
            const auto idx = static_cast<std::uint32_t>(v.size() - 1);
            mid.emplace(key, idx);
            return idx;
        };
        std::vector<Face> next;
        for (const Face& tri : f) {
            const std::uint32_t ab = midpoint(tri[0], tri[1]);
            const std::uint32_t bc = midpoint(tri[1], tri[2]);
            const std::uint32_t ca = midpoint(tri[2], tri[0]);
            next.push_back({tri[0], ab, ca});
            next.push_back({tri[1], bc, ab});
            next.push_back({tri[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        f = std::move(next);
    }
    for (Vec3& p : v) {
        p = centre + p * radius;
    }
    return detail::single_object(std::move(v), std::move(f), albedo, id);
}

/// Closed cylinder standing on `base`: `segments` around, `rings` bands up
/// the side, caps fanned around their centre.
inline Mesh make_cylinder(const Vec3& base, double radius, double height, int segments, const Albedo& albedo,
                          std::int32_t id, int rings = 2)
{
    std::vector<Vec3> v;
    const auto n = static_cast<std::uint32_t>(segments);
    const auto levels = static_cast<std::uint32_t>(rings + 1);
    for (std::uint32_t l = 0; l < levels; ++l) {
        const double y = height * l / rings;
        for (std::uint32_t i = 0; i < n; ++i) {
            const double a = 2.0 * std::numbers::pi * i / segments;
            v.push_back(base + Vec3{radius * std::cos(a), y, radius * std::sin(a)});
        }
    }
    const auto bottom = static_cast<std::uint32_t>(v.size());
    v.push_back(base);
    v.push_back(base + Vec3{0.0, height, 0.0});
    const std::uint32_t top = bottom + 1;
    auto at = [n](std::uint32_t level, std::uint32_t i) { return level * n + i % n; };
    std::vector<Face> f;
    for (std::uint32_t i = 0; i < n; ++i) {
        for (std::uint32_t l = 0; l + 1 < levels; ++l) {
            f.push_back({at(l, i), at(l + 1, i), at(l + 1, i + 1)});
            f.push_back({at(l, i), at(l + 1, i + 1), at(l, i + 1)});
        }
        f.push_back({bottom, at(0, i), at(0, i + 1)});
        f.push_back({top, at(levels - 1, i + 1), at(levels - 1, i)});
    }
    return detail::single_object(std::move(v), std::move(f), albedo, id);
}

} // namespace rendet
