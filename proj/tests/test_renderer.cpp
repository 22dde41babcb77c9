#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "rendet/renderer.hpp"
#include "test_util.hpp"

using namespace rendet;
using testutil::cube_scene;
using testutil::down_camera;
using testutil::floor_quad;

namespace {

// Slab test against the axis-aligned box [-0.5, 0.5]^3: entry distance or +inf.
double slab_entry(const Vec3& o, const Vec3& d)
{
    double t0 = -std::numeric_limits<double>::infinity();
    double t1 = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        if (d[a] == 0.0) {
            if (std::abs(o[a]) > 0.5) {
                return std::numeric_limits<double>::infinity();
            }
            continue;
        }
        double lo = (-0.5 - o[a]) / d[a];
        double hi = (0.5 - o[a]) / d[a];
        if (lo > hi) {
            std::swap(lo, hi);
        }
        t0 = std::max(t0, lo);
        t1 = std::min(t1, hi);
    }
    return (t0 <= t1 && t0 > 0) ? t0 : std::numeric_limits<double>::infinity();
}

Image mirror_columns(const Image& img)
{
    Image out(img.width, img.height);
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            for (int ch = 0; ch < 3; ++ch) {
                out.at(r, c, ch) = img.at(r, img.width - 1 - c, ch);
            }
        }
    }
    return out;
}

Mesh mirror_x(Mesh m)
{
    for (Vec3& v : m.vertices) {
        v.x = -v.x;
    }
    return m;
}

} // namespace

TEST(Intersect, RayDownOntoFloor)
{
    const Mesh floor = floor_quad(5, Albedo::solid({0.5, 0.5, 0.5}));
    const Mesh fg;
    const SceneGeometry geo(fg, floor);
    const HitRecord h = intersect({0, 1, 0}, {0, -1, 0}, geo);
    ASSERT_TRUE(h.hit);
    EXPECT_NEAR(h.point.x, 0.0, 1e-12);
    EXPECT_NEAR(h.point.y, 0.0, 1e-12);
    EXPECT_NEAR(h.point.z, 0.0, 1e-12);
    EXPECT_EQ(h.normal, (Vec3{0, 1, 0}));
    EXPECT_FALSE(h.is_foreground);
}

TEST(Intersect, ParallelRayMisses)
{
    const Mesh floor = floor_quad(5, Albedo::solid({0.5, 0.5, 0.5}));
    const Mesh fg;
    const SceneGeometry geo(fg, floor);
    EXPECT_FALSE(intersect({0, 1, 0}, {0, 0, 1}, geo).hit);
}

TEST(Intersect, UnitCubeMatchesSlabOracle)
{
    const Mesh cube = make_unit_cube(Albedo::solid({1, 1, 1}), 10);
    const Mesh bg;
    const SceneGeometry geo(cube, bg);
    const HitRecord h = intersect({0, 0, -5}, {0, 0, 1}, geo);
    ASSERT_TRUE(h.hit);
    EXPECT_NEAR(h.point.z, -0.5, 1e-12);
    EXPECT_TRUE(h.is_foreground);
    EXPECT_EQ(h.object_id, 10);

    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> U(-1, 1);
    int hits = 0;
    for (int i = 0; i < 2000; ++i) {
        const Vec3 o = normalized(Vec3{U(gen), U(gen), U(gen)}) * 4.0;
        const Vec3 d = normalized(Vec3{U(gen), U(gen), U(gen)} * 0.6 - o);
        const double t = slab_entry(o, d);
        const HitRecord r = intersect(o, d, geo);
        if (std::isinf(t)) {
            EXPECT_FALSE(r.hit);
            continue;
        }
        ++hits;
        ASSERT_TRUE(r.hit);
        EXPECT_NEAR(r.t, t, 1e-9);
        EXPECT_NEAR(norm(r.normal), 1.0, 1e-9);
        EXPECT_LT(dot(r.normal, d), 0.0) << "normal faces the ray";
    }
    EXPECT_GT(hits, 500);
}

TEST(Render, ClosedFormLambertian)
{
    Lighting light;
    light.ambient = {0.1, 0.1, 0.1};
    light.point_position = {0, 2, 0};
    light.point_intensity = {1, 1, 1};
    const Camera cam = down_camera({0, 1, 0}, 1.0, 1, 1);
    const Image img = render(light, cam, Mesh{}, floor_quad(5, Albedo::solid({0.8, 0.8, 0.8})), 1);
    for (int ch = 0; ch < 3; ++ch) {
        EXPECT_NEAR(img.at(0, 0, ch), 0.8 * (0.1 + 1.0 / 4.0), 1e-7);
        EXPECT_NEAR(img.at(0, 0, ch), 0.28, 1e-7);
    }
}

TEST(Render, EmitterOnlyEqualsAlbedoPattern)
{
    Lighting light;
    light.ambient = {1, 1, 1};
    light.point_intensity = {0, 0, 0};
    const Mesh floor = floor_quad(5, Albedo::checker({0.9, 0.1, 0.2}, {0.1, 0.3, 0.7}, 0.37));
    const Camera cam = down_camera({0.05, 3, 0.02}, 20, 40, 30);
    const Image img = render(light, cam, Mesh{}, floor, 1);
    const Mesh fg;
    const SceneGeometry geo(fg, floor);
    for (int r = 0; r < cam.height; ++r) {
        for (int c = 0; c < cam.width; ++c) {
            const HitRecord h = intersect(cam.origin(), cam.pixel_ray(r, c), geo);
            ASSERT_TRUE(h.hit);
            const Rgb a = floor.albedo[0].at(h.point, h.normal);
            EXPECT_EQ(img.at(r, c, 0), static_cast<float>(a.r));
            EXPECT_EQ(img.at(r, c, 1), static_cast<float>(a.g));
            EXPECT_EQ(img.at(r, c, 2), static_cast<float>(a.b));
        }
    }
}

TEST(Render, ShadowPixelsAreAmbientOnly)
{
    const Scene s = cube_scene();
    const Image full = render(s, 1);
    Lighting ambient_only = s.lighting;
    ambient_only.point_intensity = {0, 0, 0};
    const Image amb = render(ambient_only, s.camera, s.foreground, s.background, 1);
    const GroundTruth gt = ground_truth_masks(s, 1);
    ASSERT_GT(count(gt.shadow), 0u);
    for (int r = 0; r < s.camera.height; ++r) {
        for (int c = 0; c < s.camera.width; ++c) {
            if (gt.shadow(r, c)) {
                for (int ch = 0; ch < 3; ++ch) {
                    EXPECT_EQ(full.at(r, c, ch), amb.at(r, c, ch));
                }
            }
        }
    }
}

TEST(Render, DeterministicAcrossThreadCounts)
{
    const Scene s = cube_scene(96, 64);
    EXPECT_EQ(render(s, 1), render(s, 4));
    EXPECT_EQ(render(s, 1), render(s, 1));
}

TEST(Render, ValuesClampedToUnitRange)
{
    Scene s = cube_scene();
    s.lighting.point_intensity = {1e6, 1e6, 1e6};
    const Image img = render(s, 1);
    for (float v : img.pixels) {
        EXPECT_GE(v, 0.0f);
        EXPECT_LE(v, 1.0f);
    }
}

TEST(RenderReflectance, EmptyForegroundIsBlack)
{
    const Image img = render_reflectance(cube_scene().camera, Mesh{}, 1);
    for (float v : img.pixels) {
        EXPECT_EQ(v, 0.0f);
    }
}

TEST(RenderReflectance, CubeCoverageMatchesIntersectOracle)
{
    Scene s = cube_scene();
    for (Albedo& a : s.foreground.albedo) {
        a = Albedo::solid({0.6, 0.6, 0.6});
    }
    const Image img = render_reflectance(s.camera, s.foreground, 1);
    const Mesh bg;
    const SceneGeometry geo(s.foreground, bg);
    size_t covered = 0;
    for (int r = 0; r < s.camera.height; ++r) {
        for (int c = 0; c < s.camera.width; ++c) {
            const bool in_a = intersect(s.camera.origin(), s.camera.pixel_ray(r, c), geo).hit;
            covered += in_a;
            for (int ch = 0; ch < 3; ++ch) {
                EXPECT_EQ(img.at(r, c, ch), in_a ? 0.6f : 0.0f);
            }
        }
    }
    EXPECT_GT(covered, 0u);
}

TEST(RenderReflectance, IndependentOfLighting)
{
    const Scene s = cube_scene();
    // The lighting is not even an argument; rendering twice from different
    // scenes that share geometry must agree.
    Scene t = s;
    t.lighting.ambient = {0.9, 0.0, 0.4};
    EXPECT_EQ(render_reflectance(s.camera, s.foreground, 1), render_reflectance(t.camera, t.foreground, 1));
}

TEST(RenderBackgroundOnly, EqualsRenderWithoutForeground)
{
    Scene s = cube_scene();
    s.foreground = Mesh{};
    EXPECT_EQ(render(s, 1), render_background_only(s.lighting, s.camera, s.background, 1));
}

TEST(RenderBackgroundOnly, NeverDarkerWhereHitUnchanged)
{
    const Scene s = cube_scene();
    const Image full = render(s, 1);
    const Image bg = render_background_only(s.lighting, s.camera, s.background, 1);
    const auto hits_full = primary_hits(s.camera, s.foreground, s.background);
    const auto hits_bg = primary_hits(s.camera, Mesh{}, s.background);
    size_t compared = 0;
    for (size_t i = 0; i < hits_full.size(); ++i) {
        const HitRecord& a = hits_full[i];
        const HitRecord& b = hits_bg[i];
        if (!a.hit || !b.hit || a.is_foreground || !(a.point == b.point) || !(a.normal == b.normal)) {
            continue;
        }
        ++compared;
        for (int ch = 0; ch < 3; ++ch) {
            EXPECT_GE(bg.pixels[3 * i + ch], full.pixels[3 * i + ch]);
        }
    }
    EXPECT_GT(compared, 100u);
}

TEST(RenderBackgroundOnly, WallBlockingLightGivesBlackWithoutAmbient)
{
    Lighting light;
    light.ambient = {0, 0, 0};
    light.point_position = {0, 5, 0};
    light.point_intensity = {100, 100, 100};
    Mesh bg = floor_quad(5, Albedo::solid({0.8, 0.8, 0.8}));
    // Ceiling between the light and the whole floor.
    bg.append(make_quad({-50, 3, -50}, {50, 3, -50}, {50, 3, 50}, {-50, 3, 50}, Albedo::solid({0.5, 0.5, 0.5}), 1));
    const Camera cam = down_camera({0, 1, 0}, 10, 16, 16);
    const Image img = render_background_only(light, cam, bg, 1);
    for (float v : img.pixels) {
        EXPECT_EQ(v, 0.0f);
    }
}

TEST(RenderFlipped, LightOnMirrorPlaneIsFixedPoint)
{
    Scene s = cube_scene();
    s.lighting.point_position.x = 0.0;
    EXPECT_EQ(render_flipped(s.lighting, s.camera, s.foreground, s.background, 1), render(s, 1));
}

TEST(RenderFlipped, Involution)
{
    const Scene s = cube_scene();
    EXPECT_EQ(render(s.lighting.flipped().flipped(), s.camera, s.foreground, s.background, 1), render(s, 1));
}

TEST(RenderFlipped, MirroredSceneGivesMirroredImage)
{
    Scene s;
    s.camera = Camera::look_at({0, 1.5, -2.2}, {0, 0.3, 1.0}, 40, 48, 32);
    s.lighting.ambient = {0.2, 0.2, 0.2};
    s.lighting.point_position = {30, 40, 5};
    s.lighting.point_intensity = {3000, 3000, 3000};
    s.background = floor_quad(10, Albedo::solid({0.7, 0.7, 0.7}), 0);
    s.foreground = make_box({0.35, 0, 1.0}, {0.5, 0.5, 0.5}, 0.4, Albedo::solid({0.5, 0.2, 0.1}), 10);
    const Image original = render(s, 1);
    const Image mirrored =
        render_flipped(s.lighting, s.camera, mirror_x(s.foreground), mirror_x(s.background), 1);
    EXPECT_EQ(mirrored, mirror_columns(original));
}

TEST(RgbToLab, ReferenceValues)
{
    const auto black = rgb_to_lab(0, 0, 0);
    EXPECT_EQ(black[0], 0.0);
    EXPECT_EQ(black[1], 0.0);
    EXPECT_EQ(black[2], 0.0);
    const auto white = rgb_to_lab(1, 1, 1);
    EXPECT_NEAR(white[0], 100.0, 1e-9);
    EXPECT_LE(std::abs(white[1]), 1e-6);
    EXPECT_LE(std::abs(white[2]), 1e-6);
    // Grey: Y = 0.5, L = 116 * cbrt(0.5) - 16.
    const auto grey = rgb_to_lab(0.5, 0.5, 0.5);
    EXPECT_NEAR(grey[0], 116.0 * std::cbrt(0.5) - 16.0, 1e-9);
    EXPECT_NEAR(grey[0], 76.07, 1e-2);
    EXPECT_LE(std::abs(grey[1]), 1e-6);
    EXPECT_LE(std::abs(grey[2]), 1e-6);
}

TEST(RgbToLab, MatchesStandardFormulaOnColours)
{
    // Reference path with the tabulated D65 white (0.95047, 1, 1.08883).
    auto reference = [](double r, double g, double b) {
        const double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
        const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
        const double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
        auto f = [](double t) { return t > 216.0 / 24389.0 ? std::cbrt(t) : (24389.0 / 27.0 * t + 16.0) / 116.0; };
        const double fx = f(x / 0.95047), fy = f(y / 1.0), fz = f(z / 1.08883);
        return std::array<double, 3>{116 * fy - 16, 500 * (fx - fy), 200 * (fy - fz)};
    };
    std::mt19937_64 gen(8);
    std::uniform_real_distribution<double> U(0, 1);
    for (int i = 0; i < 100; ++i) {
        const double r = U(gen), g = U(gen), b = U(gen);
        const auto a = rgb_to_lab(r, g, b);
        const auto e = reference(r, g, b);
        for (int k = 0; k < 3; ++k) {
            EXPECT_NEAR(a[k], e[k], 1e-2);
        }
    }
}

TEST(GroundTruth, EmptyForegroundHasNoMasks)
{
    Scene s = cube_scene();
    s.foreground = Mesh{};
    const GroundTruth gt = ground_truth_masks(s, 1);
    EXPECT_EQ(count(gt.shadow), 0u);
    EXPECT_EQ(count(gt.caster), 0u);
}

TEST(GroundTruth, CubeShadowNonemptyAndOffTheLitTop)
{
    const Scene s = cube_scene(96, 64);
    const GroundTruth gt = ground_truth_masks(s, 1);
    EXPECT_GT(count(gt.shadow), 0u);
    const auto hits = primary_hits(s.camera, s.foreground, s.background);
    size_t top = 0;
    for (size_t i = 0; i < hits.size(); ++i) {
        if (hits[i].hit && hits[i].is_foreground && hits[i].normal.y > 0.99) {
            ++top;
            EXPECT_EQ(gt.shadow.data[i], 0) << "lit top face marked as shadow";
        }
    }
    EXPECT_GT(top, 0u);
}

TEST(GroundTruth, CasterIsForegroundCoverage)
{
    const Scene s = cube_scene();
    const GroundTruth gt = ground_truth_masks(s, 1);
    const auto hits = primary_hits(s.camera, s.foreground, s.background);
    for (size_t i = 0; i < hits.size(); ++i) {
        EXPECT_EQ(gt.caster.data[i], hits[i].hit && hits[i].is_foreground ? 1 : 0);
    }
}
