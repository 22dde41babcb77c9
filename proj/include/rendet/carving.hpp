#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "rendet/image.hpp"
#include "rendet/renderer.hpp"
#include "rendet/scene.hpp"

namespace rendet {

/// Ordered, unique face indices into one foreground mesh.
struct FaceSelection {
    std::vector<std::uint32_t> faces;

    size_t size() const { return faces.size(); }
    bool empty() const { return faces.empty(); }
    bool operator==(const FaceSelection&) const = default;
};

/// True when any pixel whose centre lies within one pixel of the projected
/// vertex (on both axes) is set. Those are the up to four pixels bracketing
/// the point. The half-pixel slack catches vertices on a silhouette edge,
/// whose own pixel centre can fall just outside the object.
inline bool vertex_in_mask(const PixelCoord& p, bool valid, const BinaryMask& mask)
{
    if (!valid || !std::isfinite(p.u) || !std::isfinite(p.v)) {
        return false;
    }
    // Pixel (r, c) covers [c, c+1) x [r, r+1); its centre is at +0.5.
    const double c0 = std::floor(p.u - 0.5);
    const double r0 = std::floor(p.v - 0.5);
    for (double r = r0; r <= r0 + 1.0; r += 1.0) {
        for (double c = c0; c <= c0 + 1.0; c += 1.0) {
            if (r >= 0.0 && r < mask.height && c >= 0.0 && c < mask.width &&
                mask(static_cast<int>(r), static_cast<int>(c)) != 0) {
                return true;
            }
        }
    }
    return false;
}

/// Every face with at least one vertex landing on a set mask pixel.
inline FaceSelection faces_in_mask(const Mesh& foreground, const BinaryMask& mask, const Camera& cam)
{
    require_same_size(mask, cam, "faces_in_mask");
    const std::vector<ProjectedFace> projected = project_mesh(foreground, cam);
    FaceSelection sel;
    for (size_t i = 0; i < projected.size(); ++i) {
        for (size_t k = 0; k < 3; ++k) {
            if (vertex_in_mask(projected[i].corners[k], projected[i].valid[k], mask)) {
                sel.faces.push_back(static_cast<std::uint32_t>(i));
                break;
            }
        }
    }
    return sel;
}

/// Removes the selected faces. The vertex list is kept as is.
inline Mesh carve(const Mesh& foreground, const FaceSelection& selection)
{
    std::vector<bool> removed(foreground.faces.size(), false);
    for (std::uint32_t f : selection.faces) {
        if (f >= removed.size()) {
            throw ValidationError("carve: face index " + std::to_string(f) + " out of range");
        }
        removed[f] = true;
    }
    Mesh out;
    out.vertices = foreground.vertices;
    for (size_t i = 0; i < foreground.faces.size(); ++i) {
        if (!removed[i]) {
            out.faces.push_back(foreground.faces[i]);
            out.albedo.push_back(foreground.albedo[i]);
            out.object_ids.push_back(foreground.object_ids[i]);
        }
    }
    return out;
}

struct CarveResult {
    Mesh carved;
    Image image;
    FaceSelection selection;
};

/// Binarizes `cm` at 0.5, carves the faces under it and re-renders the scene
/// with the carved foreground.
inline CarveResult carve_and_rerender(const Scene& scene, const ScalarMap& cm, int threads = default_thread_count())
{
    require_same_size(cm, scene.camera, "carve_and_rerender");
    CarveResult r;
    r.selection = faces_in_mask(scene.foreground, binarize(cm, 0.5), scene.camera);
    r.carved = carve(scene.foreground, r.selection);
    r.image = render(scene.lighting, scene.camera, r.carved, scene.background, threads);
    return r;
}

} // namespace rendet
