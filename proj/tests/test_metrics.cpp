#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "rendet/metrics.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace rendet;
namespace fs = std::filesystem;

using oracles::reference_ber;

TEST(Ber, FourPixelExample)
{
    BinaryMask gt(4, 1), pred(4, 1);
    gt.data = {1, 1, 0, 0};
    pred.data = {1, 0, 0, 0};
    const ConfusionCounts c = confusion(pred, gt);
    EXPECT_EQ(c, (ConfusionCounts{1, 2, 0, 1}));
    const BerScore s = ber(c);
    EXPECT_DOUBLE_EQ(s.ber, 25.0);
    EXPECT_DOUBLE_EQ(s.ber_s, 50.0);
    EXPECT_DOUBLE_EQ(s.ber_ns, 0.0);
}

TEST(Ber, PerfectAndInverted)
{
    BinaryMask gt(3, 2);
    gt.data = {1, 0, 1, 0, 0, 1};
    EXPECT_EQ(ber(confusion(gt, gt)).ber, 0.0);
    EXPECT_EQ(ber(confusion(mask_not(gt), gt)).ber, 100.0);
}

TEST(Ber, MatchesReferenceOnRandomCounts)
{
    std::mt19937_64 gen(77);
    std::uniform_int_distribution<std::uint64_t> U(1, 1000000);
    for (int i = 0; i < 1000; ++i) {
        const ConfusionCounts c{U(gen), U(gen), U(gen), U(gen)};
        const BerScore s = ber(c);
        const double ref = reference_ber(c.tp, c.tn, c.fp, c.fn);
        EXPECT_NEAR(s.ber, ref, 1e-9);
        EXPECT_NEAR(s.ber, 0.5 * (s.ber_s + s.ber_ns), 1e-9);
        EXPECT_GE(s.ber, 0.0);
        EXPECT_LE(s.ber, 100.0);
    }
}

TEST(Ber, PermutationInvariant)
{
    std::mt19937_64 gen(5);
    BinaryMask gt(50, 20), pred(50, 20);
    for (size_t i = 0; i < gt.size(); ++i) {
        gt.data[i] = gen() % 3 == 0;
        pred.data[i] = gen() % 2;
    }
    const double before = ber(confusion(pred, gt)).ber;
    std::vector<size_t> perm(gt.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    BinaryMask gt2 = gt, pred2 = pred;
    for (size_t i = 0; i < perm.size(); ++i) {
        gt2.data[i] = gt.data[perm[i]];
        pred2.data[i] = pred.data[perm[i]];
    }
    EXPECT_EQ(ber(confusion(pred2, gt2)).ber, before);
}

TEST(Ber, EmptyClassIsFlagged)
{
    const BerScore s = ber(ConfusionCounts{0, 8, 2, 0});
    EXPECT_TRUE(s.empty_shadow);
    EXPECT_TRUE(std::isnan(s.ber_s));
    EXPECT_DOUBLE_EQ(s.ber, 20.0);
    const BerScore t = ber(ConfusionCounts{3, 0, 0, 1});
    EXPECT_TRUE(t.empty_nonshadow);
    EXPECT_DOUBLE_EQ(t.ber, 25.0);
    EXPECT_THROW(ber(ConfusionCounts{}), ValidationError);
}

TEST(Ber, MeanSkipsUndefinedParts)
{
    BinaryMask gt_a(2, 1), gt_b(2, 1), pred(2, 1);
    gt_a.data = {0, 0};
    gt_b.data = {1, 0};
    const EvalReport r = evaluate_masks({pred, pred}, {gt_a, gt_b}, {"a", "b"});
    EXPECT_DOUBLE_EQ(r.mean.ber_s, 100.0); // only image b has shadow
    EXPECT_DOUBLE_EQ(r.mean.ber_ns, 0.0);
    EXPECT_DOUBLE_EQ(r.mean.ber, 25.0);
    const EvalReport p = evaluate_masks({pred, pred}, {gt_a, gt_b}, {"a", "b"}, Aggregation::pooled);
    EXPECT_DOUBLE_EQ(p.mean.ber, 50.0);
}

TEST(Ber, DimensionMismatch) { EXPECT_THROW(confusion(BinaryMask(2, 2), BinaryMask(2, 3)), DimensionMismatch); }

class EvalOnCanonical : public ::testing::Test {
protected:
    static void SetUpTestSuite()
    {
        dataset_ = testutil::temp_dir("metrics_data");
        generate_dataset(canonical_config(), dataset_, 4);
    }
    static void TearDownTestSuite() { fs::remove_all(dataset_); }

    static fs::path write_predictions(const std::string& tag, int mode)
    {
        const auto dir = testutil::temp_dir(tag);
        for (const SampleRecord& r : load_manifest(dataset_).samples) {
            const BinaryMask gt = read_mask_png(dataset_ / r.gt_shadow);
            const BinaryMask pred = mode == 0 ? gt : (mode == 1 ? mask_not(gt) : BinaryMask(gt.width, gt.height));
            write_png(dir / fs::path(r.gt_shadow).filename(), pred);
        }
        return dir;
    }

    static inline fs::path dataset_;
};

TEST_F(EvalOnCanonical, GroundTruthScoresZeroAndInverseScoresHundred)
{
    const auto good = write_predictions("pred_gt", 0);
    const auto bad = write_predictions("pred_inv", 1);
    EXPECT_EQ(evaluate_predictions(good, dataset_).mean.ber, 0.0);
    EXPECT_EQ(evaluate_predictions(bad, dataset_).mean.ber, 100.0);
    fs::remove_all(good);
    fs::remove_all(bad);
}

TEST_F(EvalOnCanonical, AllZeroPredictionsMissEveryShadowPixel)
{
    const auto zero = write_predictions("pred_zero", 2);
    const EvalReport r = evaluate_predictions(zero, dataset_);
    EXPECT_EQ(r.rows.size(), 10u);
    EXPECT_EQ(r.mean.ber_s, 100.0);
    EXPECT_EQ(r.mean.ber_ns, 0.0);
    EXPECT_EQ(r.mean.ber, 50.0);
    fs::remove_all(zero);
}

TEST_F(EvalOnCanonical, MissingPredictionIsAnIoError)
{
    const auto dir = testutil::temp_dir("pred_none");
    EXPECT_THROW(evaluate_predictions(dir, dataset_), IoError);
    fs::remove_all(dir);
}

TEST_F(EvalOnCanonical, ZeroWeightCheckpointPredictsNoShadow)
{
    const auto dir = testutil::temp_dir("eval_ckpt");
    save_checkpoint(dir / "c.bin", DetectorParams{}, CheckpointInfo{});
    const EvalReport r = evaluate(dir / "c.bin", dataset_);
    EXPECT_EQ(r.mean.ber_s, 100.0);
    EXPECT_EQ(r.mean.ber_ns, 0.0);
    fs::remove_all(dir);
}

TEST(Report, CsvEndsWithMeanRowAndTableHasColumns)
{
    BinaryMask gt(2, 1), pred(2, 1);
    gt.data = {1, 0};
    pred.data = {1, 1};
    const EvalReport r = evaluate_masks({pred}, {gt}, {"00000"});
    std::ostringstream csv;
    write_report_csv(csv, r);
    EXPECT_EQ(csv.str(), "image_id,ber,ber_s,ber_ns\n00000,50,0,100\nmean,50,0,100\n");
    std::ostringstream table;
    print_report(table, r);
    const std::string t = table.str();
    for (const char* col : {"BER", "BER(S)", "BER(NS)", "mean", "50.000"}) {
        EXPECT_NE(t.find(col), std::string::npos) << col;
    }
}
