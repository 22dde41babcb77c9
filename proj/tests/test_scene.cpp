#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rendet/scene.hpp"
#include "rendet/scene_io.hpp"
#include "test_util.hpp"

using namespace rendet;

namespace {

Camera identity_camera(double f, double c, int w = 200, int h = 200)
{
    Camera cam;
    cam.fx = f;
    cam.fy = f;
    cam.cx = c;
    cam.cy = c;
    cam.width = w;
    cam.height = h;
    return cam;
}

// Homogeneous K [R | t] v, then divide by the third coordinate.
std::array<double, 2> homogeneous_projection(const Camera& cam, const Vec3& v)
{
    double rt[3][4];
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            rt[r][c] = cam.rotation(r, c);
        }
    }
    rt[0][3] = cam.translation.x;
    rt[1][3] = cam.translation.y;
    rt[2][3] = cam.translation.z;
    const double k[3][3] = {{cam.fx, 0, cam.cx}, {0, cam.fy, cam.cy}, {0, 0, 1}};
    double p[3][4] = {};
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 4; ++c) {
            for (int m = 0; m < 3; ++m) {
                p[r][c] += k[r][m] * rt[m][c];
            }
        }
    }
    const double h[4] = {v.x, v.y, v.z, 1.0};
    double q[3] = {};
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 4; ++c) {
            q[r] += p[r][c] * h[c];
        }
    }
    return {q[0] / q[2], q[1] / q[2]};
}

Mesh tri_mesh()
{
    Mesh m;
    m.vertices = {{0, 0, 2}, {1, 0, 2}, {0, 1, 3}};
    m.faces = {{0, 1, 2}};
    m.albedo = {Albedo::solid({0.5, 0.5, 0.5})};
    m.object_ids = {10};
    return m;
}

} // namespace

TEST(ProjectVertex, OpticalAxisMapsToPrincipalPoint)
{
    const PixelCoord p = project_vertex({0, 0, 1}, identity_camera(1, 0));
    EXPECT_EQ(p.u, 0.0);
    EXPECT_EQ(p.v, 0.0);
}

TEST(ProjectVertex, MatchesHomogeneousOracle)
{
    const PixelCoord p = project_vertex({1, 0, 2}, identity_camera(100, 50));
    EXPECT_DOUBLE_EQ(p.u, 100.0);
    EXPECT_DOUBLE_EQ(p.v, 50.0);

    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> U(-1, 1);
    for (int i = 0; i < 200; ++i) {
        const Vec3 eye{U(gen) * 3, 1 + U(gen), -3 + U(gen)};
        const Camera cam = Camera::look_at(eye, {U(gen), 0.3, 1 + U(gen)}, 80 + 20 * U(gen), 96, 64);
        const Vec3 v{U(gen), std::abs(U(gen)), 1.5 + U(gen)};
        const auto oracle = homogeneous_projection(cam, v);
        const PixelCoord p = project_vertex(v, cam);
        EXPECT_NEAR(p.u, oracle[0], 1e-9);
        EXPECT_NEAR(p.v, oracle[1], 1e-9);
    }
}

TEST(ProjectVertex, BehindCameraThrows)
{
    EXPECT_THROW(project_vertex({0, 0, -1}, identity_camera(1, 0)), BehindCamera);
    EXPECT_THROW(project_vertex({0, 0, 0}, identity_camera(1, 0)), BehindCamera);
}

TEST(ProjectVertex, ScaleCovariantInFocalLength)
{
    Camera a = identity_camera(70, 31);
    Camera b = a;
    b.fx = 2 * a.fx;
    const Vec3 v{0.3, -0.2, 1.7};
    EXPECT_EQ(project_vertex(v, b).u - b.cx, 2.0 * (project_vertex(v, a).u - a.cx));
}

TEST(ProjectMesh, EmptyMeshGivesEmptyList) { EXPECT_TRUE(project_mesh(Mesh{}, identity_camera(1, 0)).empty()); }

TEST(ProjectMesh, MatchesPerVertexProjection)
{
    const Camera cam = identity_camera(100, 50);
    const Mesh m = tri_mesh();
    const auto faces = project_mesh(m, cam);
    ASSERT_EQ(faces.size(), 1u);
    for (size_t k = 0; k < 3; ++k) {
        EXPECT_TRUE(faces[0].valid[k]);
        EXPECT_EQ(faces[0].corners[k], project_vertex(m.vertices[k], cam));
    }
}

TEST(ProjectMesh, VertexBehindCameraIsFlagged)
{
    Mesh m = tri_mesh();
    m.vertices[1] = {1, 0, -2};
    const auto faces = project_mesh(m, identity_camera(100, 50));
    EXPECT_TRUE(faces[0].valid[0]);
    EXPECT_FALSE(faces[0].valid[1]);
    EXPECT_TRUE(faces[0].valid[2]);
}

TEST(ProjectMesh, LengthEqualsFaceCount)
{
    const Mesh box = make_box({0, 0, 2}, {1, 1, 1}, 0.3, Albedo::solid({1, 1, 1}), 1);
    EXPECT_EQ(project_mesh(box, identity_camera(50, 100)).size(), box.faces.size());
}

TEST(CameraValidation, RejectsBadRotationAndIntrinsics)
{
    Camera cam = identity_camera(10, 5, 10, 10);
    EXPECT_NO_THROW(validate(cam));
    Camera mirrored = cam;
    mirrored.rotation = Mat3::from_rows({-1, 0, 0}, {0, 1, 0}, {0, 0, 1});
    EXPECT_THROW(validate(mirrored), ValidationError);
    Camera skew = cam;
    skew.rotation = Mat3::from_rows({1, 1e-6, 0}, {0, 1, 0}, {0, 0, 1});
    EXPECT_THROW(validate(skew), ValidationError);
    Camera off = cam;
    off.cx = 10;
    EXPECT_THROW(validate(off), ValidationError);
    Camera flat = cam;
    flat.fy = 0;
    EXPECT_THROW(validate(flat), ValidationError);
}

TEST(CameraLookAt, ProperRotationAndTargetOnAxis)
{
    const Camera cam = Camera::look_at({0.4, 1.5, -2.2}, {0, 0.3, 1.0}, 80, 96, 64);
    EXPECT_NEAR(cam.rotation.determinant(), 1.0, 1e-12);
    EXPECT_NO_THROW(validate(cam));
    const PixelCoord p = project_vertex({0, 0.3, 1.0}, cam);
    EXPECT_NEAR(p.u, cam.cx, 1e-9);
    EXPECT_NEAR(p.v, cam.cy, 1e-9);
    // World up appears towards the top of the image (smaller row).
    EXPECT_LT(project_vertex({0, 1.3, 1.0}, cam).v, p.v);
}

TEST(MeshValidation, RejectsBadFaces)
{
    Mesh m = tri_mesh();
    EXPECT_NO_THROW(validate(m));
    Mesh out_of_range = m;
    out_of_range.faces[0][2] = 3;
    EXPECT_THROW(validate(out_of_range), ValidationError);
    Mesh repeated = m;
    repeated.faces[0] = {0, 0, 1};
    EXPECT_THROW(validate(repeated), ValidationError);
    Mesh collinear = m;
    collinear.vertices[2] = {2, 0, 2};
    EXPECT_THROW(validate(collinear), ValidationError);
    Mesh missing_id = m;
    missing_id.object_ids.clear();
    EXPECT_THROW(validate(missing_id), ValidationError);
}

TEST(SceneValidation, ObjectIdsMustBeDisjoint)
{
    Scene s = testutil::cube_scene();
    s.foreground.object_ids.assign(s.foreground.faces.size(), 0);
    EXPECT_THROW(validate(s), ValidationError);
}

TEST(Albedo, CheckerParity)
{
    const Albedo a = Albedo::checker({1, 0, 0}, {0, 0, 1}, 0.5);
    const Vec3 up{0, 1, 0};
    EXPECT_EQ(a.at({0.1, 0.2, 0.1}, up), (Rgb{1, 0, 0}));
    EXPECT_EQ(a.at({0.6, 0.2, 0.1}, up), (Rgb{0, 0, 1}));
    EXPECT_EQ(a.at({0.6, 0.2, 0.6}, up), (Rgb{1, 0, 0}));
    EXPECT_EQ(a.at({-0.1, 0.2, 0.1}, up), (Rgb{0, 0, 1}));
    // On a cell plane the lookup resolves to the cell behind the surface.
    EXPECT_EQ(a.at({0.1, 0.0, 0.1}, up), (Rgb{0, 0, 1}));
    EXPECT_EQ(a.at({0.1, 0.0, 0.1}, {0, -1, 0}), (Rgb{1, 0, 0}));
}

namespace {

const char* kMinimalScene = R"({
 "camera": {"fx": 50, "fy": 50, "cx": 24, "cy": 16,
            "rotation": [1,0,0, 0,1,0, 0,0,1], "translation": [0,0,0],
            "width": 48, "height": 32},
 "lighting": {"ambient": [0.2,0.2,0.2], "point_position": [0,5,0], "point_intensity": [1,1,1]},
 "background": {"vertices": [[-1,-1,3],[1,-1,3],[0,1,3]], "faces": [[0,1,2]],
                "albedo": [[0.5,0.5,0.5]], "object_ids": [0]},
 "foreground": {"vertices": [], "faces": [], "albedo": [], "object_ids": []},
 "seed": 9
})";

} // namespace

TEST(SceneIo, MinimalSceneWithEmptyForeground)
{
    const Scene s = scene_from_string(kMinimalScene);
    EXPECT_EQ(s.foreground.face_count(), 0u);
    EXPECT_EQ(s.background.face_count(), 1u);
    EXPECT_EQ(s.seed, 9u);
}

TEST(SceneIo, FaceIndexOutOfRangeIsValidationError)
{
    std::string text = kMinimalScene;
    text.replace(text.find("[[0,1,2]]"), 9, "[[0,1,7]]");
    EXPECT_THROW(scene_from_string(text), ValidationError);
}

TEST(SceneIo, ParseErrorsNameTheField)
{
    std::string text = kMinimalScene;
    text.replace(text.find("\"fy\": 50"), 8, "\"fy\": \"a\"");
    try {
        scene_from_string(text, "test.json");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("camera.fy"), std::string::npos) << e.what();
    }
    EXPECT_THROW(scene_from_string("{ not json", "x"), ParseError);
}

TEST(SceneIo, RoundTripIsBitExact)
{
    std::mt19937_64 gen(17);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        GenConfig c;
        Scene s = sample_scene(seed, c);
        // Perturb to awkward doubles.
        std::uniform_real_distribution<double> U(-1e-3, 1e-3);
        for (Vec3& v : s.foreground.vertices) {
            v.x += U(gen) / 3.0;
        }
        s.lighting.ambient.r = 1.0 / 3.0;
        const auto dir = testutil::temp_dir("scene_io");
        save_scene(s, dir / "s.json");
        const Scene back = load_scene(dir / "s.json");
        EXPECT_EQ(back, s);
        // save(load(p)) equals the canonical rewrite of p.
        save_scene(back, dir / "t.json");
        EXPECT_EQ(testutil::slurp(dir / "s.json"), testutil::slurp(dir / "t.json"));
        std::filesystem::remove_all(dir);
    }
}

TEST(SceneIo, CanonicalRewriteOfHandWrittenFile)
{
    const Scene s = scene_from_string(kMinimalScene);
    const std::string canonical = scene_to_string(s);
    EXPECT_EQ(scene_to_string(scene_from_string(canonical)), canonical);
}
