#include <gtest/gtest.h>

#include <sstream>

#include "rendet/cli.hpp"
#include "test_util.hpp"

using namespace rendet;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run_cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "rendet");
    std::vector<const char*> argv;
    for (const std::string& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

} // namespace

class Cli : public ::testing::Test {
protected:
    static void SetUpTestSuite()
    {
        root_ = testutil::temp_dir("cli");
        data_ = root_ / "data";
        const Outcome o = run_cli({"gen", "--out", data_.string(), "--count", "1", "--seed", "7", "--threads", "2"});
        ASSERT_EQ(o.code, 0) << o.err;
        scene_ = data_ / "scenes" / "00000.json";
    }
    static void TearDownTestSuite() { fs::remove_all(root_); }

    static inline fs::path root_, data_, scene_;
};

TEST_F(Cli, GenWritesOneValidSample)
{
    EXPECT_TRUE(fs::exists(data_ / kManifestName));
    EXPECT_TRUE(fs::exists(data_ / "images" / "00000.png"));
    EXPECT_FALSE(fs::exists(data_ / "images" / "00001.png"));
    const Outcome v = run_cli({"validate", "--data", data_.string(), "--deep"});
    EXPECT_EQ(v.code, 0) << v.out;
    EXPECT_NE(v.out.find("0 problems"), std::string::npos);
}

TEST_F(Cli, EchoesResolvedConfig)
{
    const Outcome o = run_cli({"validate", "--data", data_.string()});
    EXPECT_EQ(o.out.rfind("config {", 0), 0u) << o.out;
    EXPECT_NE(o.out.find("\"command\":\"validate\""), std::string::npos);
}

TEST_F(Cli, VerifyWithEmptyMaskChangesNothing)
{
    const fs::path zeros = root_ / "zeros.png";
    const Scene s = load_scene(scene_);
    write_png(zeros, BinaryMask(s.camera.width, s.camera.height));
    const Outcome o = run_cli({"verify", "--scene", scene_.string(), "--cm", zeros.string()});
    EXPECT_EQ(o.code, 0) << o.err;
    EXPECT_NE(o.out.find("carved_faces 0\n"), std::string::npos);
    EXPECT_NE(o.out.find("delta_pixels 0\n"), std::string::npos);
}

TEST_F(Cli, VerifyWithCasterMaskRemovesObject)
{
    const fs::path out = root_ / "verify";
    const Outcome o = run_cli({"verify", "--scene", scene_.string(), "--cm", (data_ / "gt_caster" / "00000.png").string(),
                               "--out", out.string()});
    EXPECT_EQ(o.code, 0) << o.err;
    EXPECT_EQ(o.out.find("delta_pixels 0\n"), std::string::npos);
    EXPECT_TRUE(fs::exists(out / "carved.png"));
    EXPECT_TRUE(fs::exists(out / "delta.png"));
}

TEST_F(Cli, RenderMatchesLibraryAndDatasetFiles)
{
    const fs::path png = root_ / "r.png";
    const fs::path pfm = root_ / "r.pfm";
    ASSERT_EQ(run_cli({"render", "--scene", scene_.string(), "--out", png.string()}).code, 0);
    ASSERT_EQ(run_cli({"render", "--scene", scene_.string(), "--out", pfm.string()}).code, 0);
    EXPECT_EQ(testutil::slurp(png), testutil::slurp(data_ / "images" / "00000.png"));
    EXPECT_EQ(read_pfm_image(pfm), render(load_scene(scene_), 1));
    ASSERT_EQ(run_cli({"render", "--scene", scene_.string(), "--out", pfm.string(), "--background-only"}).code, 0);
    EXPECT_EQ(testutil::slurp(pfm), testutil::slurp(data_ / "images_bg" / "00000.pfm"));
}

TEST_F(Cli, RenderFlagsAreExclusiveAndExtensionChecked)
{
    const fs::path png = root_ / "x.png";
    EXPECT_EQ(run_cli({"render", "--scene", scene_.string(), "--out", png.string(), "--flip-light", "--reflectance"}).code,
              2);
    EXPECT_EQ(run_cli({"render", "--scene", scene_.string(), "--out", (root_ / "x.jpg").string()}).code, 1);
}

TEST_F(Cli, SignalsWritesMasksAndProvenance)
{
    const fs::path out = root_ / "signals";
    ASSERT_EQ(run_cli({"signals", "--scene", scene_.string(), "--out", out.string()}).code, 0);
    for (const char* f : {"image.png", "image_flip.png", "image_bg.png", "image_refl.png", "cm_diff.png",
                          "sm_diff1.png", "sm_diff2.png", "sm_diff.png", "provenance.json"}) {
        EXPECT_TRUE(fs::exists(out / f)) << f;
    }
    EXPECT_EQ(testutil::slurp(out / "sm_diff.png"), testutil::slurp(data_ / "sup_sm" / "00000.png"));
    const auto prov = nlohmann::json::parse(testutil::slurp(out / "provenance.json"));
    EXPECT_EQ(prov.at("flip_mode"), "thresholded");
    EXPECT_TRUE(prov.at("files").contains("sm_diff2.png"));
}

TEST_F(Cli, TrainInferEvalPipeline)
{
    const fs::path run = root_ / "run";
    const Outcome t = run_cli({"train", "--data", data_.string(), "--out", run.string(), "--iterations", "3", "--ramp",
                               "2", "--log-every", "1"});
    ASSERT_EQ(t.code, 0) << t.err;
    EXPECT_NE(t.out.find("checkpoint " + (run / "checkpoint.bin").generic_string()), std::string::npos);
    EXPECT_NE(t.out.find("loss_log "), std::string::npos);

    const Outcome i = run_cli({"infer", "--ckpt", (run / "checkpoint.bin").string(), "--image",
                               (data_ / "images" / "00000.png").string(), "--out", (root_ / "pred").string()});
    ASSERT_EQ(i.code, 0) << i.err;
    EXPECT_TRUE(fs::exists(root_ / "pred" / "00000_sm.png"));

    const Outcome refused = run_cli({"infer", "--ckpt", (run / "checkpoint.bin").string(), "--image",
                                     (data_ / "images" / "00000.png").string(), "--out", (root_ / "pred").string(),
                                     "--color-space", "rgb"});
    EXPECT_EQ(refused.code, 1);

    const Outcome e = run_cli({"eval", "--ckpt", (run / "checkpoint.bin").string(), "--data", data_.string(), "--csv",
                               (root_ / "eval.csv").string()});
    ASSERT_EQ(e.code, 0) << e.err;
    for (const char* col : {"BER", "BER(S)", "BER(NS)", "00000", "mean"}) {
        EXPECT_NE(e.out.find(col), std::string::npos) << col;
    }
    EXPECT_EQ(testutil::slurp(root_ / "eval.csv").rfind("image_id,ber,ber_s,ber_ns\n", 0), 0u);

    const Outcome s = run_cli({"eval", "--ckpt", (run / "checkpoint.bin").string(), "--data", data_.string(), "--csv",
                               (root_ / "eval2.csv").string(), "--summary", "--pooled"});
    EXPECT_EQ(s.out.find("00000"), std::string::npos);
    EXPECT_NE(s.out.find("pooled"), std::string::npos);
}

TEST_F(Cli, EvalOnGroundTruthPredictions)
{
    const Outcome o = run_cli({"eval", "--pred", (data_ / "gt_shadow").string(), "--data", data_.string(), "--csv",
                               (root_ / "gt_eval.csv").string(), "--summary"});
    ASSERT_EQ(o.code, 0) << o.err;
    EXPECT_NE(o.out.find("0.000"), std::string::npos);
    EXPECT_EQ(run_cli({"eval", "--data", data_.string()}).code, 2);
}

TEST_F(Cli, HelpExitsZeroForEverySubcommand)
{
    EXPECT_EQ(run_cli({"--help"}).code, 0);
    for (const char* sub : {"gen", "render", "signals", "verify", "train", "infer", "eval", "validate"}) {
        const Outcome o = run_cli({sub, "--help"});
        EXPECT_EQ(o.code, 0) << sub;
        EXPECT_FALSE(o.out.empty()) << sub;
    }
}

TEST_F(Cli, UsageErrorsExitTwo)
{
    EXPECT_EQ(run_cli({}).code, 2);
    EXPECT_EQ(run_cli({"gen", "--out", (root_ / "g").string(), "--bogus"}).code, 2);
    EXPECT_EQ(run_cli({"gen"}).code, 2);
    EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
    EXPECT_EQ(run_cli({"train", "--data", data_.string(), "--color-space", "hsv"}).code, 2);
}

TEST_F(Cli, DomainErrorsExitOne)
{
    EXPECT_EQ(run_cli({"train", "--data", (root_ / "missing").string(), "--out", (root_ / "r2").string()}).code, 1);
    EXPECT_EQ(run_cli({"gen", "--out", (root_ / "g2").string(), "--min-objects", "3", "--max-objects", "2"}).code, 1);
    EXPECT_EQ(run_cli({"validate", "--data", (root_ / "missing").string()}).code, 1);
}

TEST_F(Cli, RegenerationIsIdempotent)
{
    const fs::path again = root_ / "again";
    ASSERT_EQ(run_cli({"gen", "--out", again.string(), "--count", "1", "--seed", "7", "--threads", "1"}).code, 0);
    for (const char* f : {"manifest.json", "images/00000.png", "sup_sm/00000.png", "scenes/00000.json"}) {
        EXPECT_EQ(testutil::slurp(again / f), testutil::slurp(data_ / f)) << f;
    }
}
