#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "rendet/datagen.hpp"
#include "rendet/detector.hpp"
#include "rendet/image.hpp"
#include "rendet/image_io.hpp"
#include "rendet/losses.hpp"

namespace rendet {

/// Pixel tallies with shadow (1) as the positive class.
struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;

    std::uint64_t n_s() const { return tp + fn; }
    std::uint64_t n_ns() const { return tn + fp; }
    std::uint64_t total() const { return tp + tn + fp + fn; }

    ConfusionCounts& operator+=(const ConfusionCounts& o)
    {
        tp += o.tp;
        tn += o.tn;
        fp += o.fp;
        fn += o.fn;
        return *this;
    }
    bool operator==(const ConfusionCounts&) const = default;
};

inline ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt)
{
    require_same_size(pred, gt, "confusion");
    ConfusionCounts c;
    for (size_t i = 0; i < gt.size(); ++i) {
        const bool p = pred.data[i] != 0;
        if (gt.data[i] != 0) {
            (p ? c.tp : c.fn) += 1;
        } else {
            (p ? c.fp : c.tn) += 1;
        }
    }
    return c;
}

/// BER and its per-class parts on a 0-100 scale. When a class has no pixels
/// its part is NaN, the matching flag is set, and `ber` is the other part alone.
struct BerScore {
    double ber = 0.0;
    double ber_s = 0.0;
    double ber_ns = 0.0;
    bool empty_shadow = false;
    bool empty_nonshadow = false;

    bool empty_class() const { return empty_shadow || empty_nonshadow; }
};

inline BerScore ber(const ConfusionCounts& c)
{
    if (c.total() == 0) {
        throw ValidationError("ber: no pixels");
    }
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    BerScore s;
    s.empty_shadow = c.n_s() == 0;
    s.empty_nonshadow = c.n_ns() == 0;
    const double acc_s = s.empty_shadow ? nan : static_cast<double>(c.tp) / static_cast<double>(c.n_s());
    const double acc_ns = s.empty_nonshadow ? nan : static_cast<double>(c.tn) / static_cast<double>(c.n_ns());
    s.ber_s = (1.0 - acc_s) * 100.0;
    s.ber_ns = (1.0 - acc_ns) * 100.0;
    if (s.empty_shadow) {
        s.ber = s.ber_ns;
    } else if (s.empty_nonshadow) {
        s.ber = s.ber_s;
    } else {
        s.ber = (1.0 - 0.5 * (acc_s + acc_ns)) * 100.0;
    }
    return s;
}

struct EvalRow {
    std::string image_id;
    ConfusionCounts counts;
    BerScore score;
};

enum class Aggregation {
    per_image, // mean over images, each weighted equally
    pooled,    // BER of the summed confusion counts
};

struct EvalReport {
    std::vector<EvalRow> rows;
    BerScore mean;
    Aggregation aggregation = Aggregation::per_image;
};

/// Column means that skip undefined (NaN) entries.
inline BerScore mean_score(const std::vector<EvalRow>& rows)
{
    double sums[3] = {0, 0, 0};
    int counts[3] = {0, 0, 0};
    for (const EvalRow& r : rows) {
        const double v[3] = {r.score.ber, r.score.ber_s, r.score.ber_ns};
        for (int k = 0; k < 3; ++k) {
            if (!std::isnan(v[k])) {
                sums[k] += v[k];
                ++counts[k];
            }
        }
    }
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    BerScore m;
    m.ber = counts[0] ? sums[0] / counts[0] : nan;
    m.ber_s = counts[1] ? sums[1] / counts[1] : nan;
    m.ber_ns = counts[2] ? sums[2] / counts[2] : nan;
    m.empty_shadow = counts[1] == 0;
    m.empty_nonshadow = counts[2] == 0;
    return m;
}

inline EvalReport evaluate_masks(const std::vector<BinaryMask>& preds, const std::vector<BinaryMask>& gts,
                                 const std::vector<std::string>& ids, Aggregation agg = Aggregation::per_image)
{
    if (preds.size() != gts.size() || preds.size() != ids.size()) {
        throw ValidationError("evaluate_masks: prediction, ground-truth and id counts differ");
    }
    EvalReport report;
    report.aggregation = agg;
    ConfusionCounts pooled;
    for (size_t i = 0; i < preds.size(); ++i) {
        EvalRow row;
        row.image_id = ids[i];
        row.counts = confusion(preds[i], gts[i]);
        row.score = ber(row.counts);
        pooled += row.counts;
        report.rows.push_back(std::move(row));
    }
    if (report.rows.empty()) {
        throw ValidationError("evaluate_masks: nothing to evaluate");
    }
    report.mean = agg == Aggregation::pooled ? ber(pooled) : mean_score(report.rows);
    return report;
}

namespace detail {

inline std::string sample_id(int index)
{
    char id[16];
    std::snprintf(id, sizeof(id), "%05d", index);
    return id;
}

inline std::string format_score(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

} // namespace detail

/// Runs the detector over every dataset sample and scores its SM head.
inline EvalReport evaluate(const std::filesystem::path& checkpoint, const std::filesystem::path& dataset,
                           Aggregation agg = Aggregation::per_image)
{
    const DatasetManifest manifest = load_manifest(dataset);
    const DetectorParams params = load_checkpoint_params(checkpoint);
    const CheckpointInfo info = load_checkpoint_info(checkpoint);
    std::vector<BinaryMask> preds;
    std::vector<BinaryMask> gts;
    std::vector<std::string> ids;
    for (const SampleRecord& r : manifest.samples) {
        const Image img = read_pfm_image(dataset / r.image_pfm);
        preds.push_back(binarize(forward(params, encode_input(img, info.color_space)).sm));
        gts.push_back(read_mask_png(dataset / r.gt_shadow));
        ids.push_back(detail::sample_id(r.index));
    }
    return evaluate_masks(preds, gts, ids, agg);
}

/// Scores mask PNGs named like the dataset's gt_shadow files found in `pred_dir`.
inline EvalReport evaluate_predictions(const std::filesystem::path& pred_dir, const std::filesystem::path& dataset,
                                       Aggregation agg = Aggregation::per_image)
{
    const DatasetManifest manifest = load_manifest(dataset);
    std::vector<BinaryMask> preds;
    std::vector<BinaryMask> gts;
    std::vector<std::string> ids;
    for (const SampleRecord& r : manifest.samples) {
        const std::string id = detail::sample_id(r.index);
        const auto path = pred_dir / (id + ".png");
        if (!std::filesystem::exists(path)) {
            throw IoError("missing prediction " + path.string());
        }
        preds.push_back(read_mask_png(path));
        gts.push_back(read_mask_png(dataset / r.gt_shadow));
        ids.push_back(id);
    }
    return evaluate_masks(preds, gts, ids, agg);
}

/// image_id,ber,ber_s,ber_ns with a final "mean" row.
inline void write_report_csv(std::ostream& out, const EvalReport& report)
{
    out << "image_id,ber,ber_s,ber_ns\n";
    for (const EvalRow& r : report.rows) {
        out << r.image_id << ',' << format_real(r.score.ber) << ',' << format_real(r.score.ber_s) << ','
            << format_real(r.score.ber_ns) << '\n';
    }
    out << "mean," << format_real(report.mean.ber) << ',' << format_real(report.mean.ber_s) << ','
        << format_real(report.mean.ber_ns) << '\n';
}

inline void write_report_csv(const std::filesystem::path& path, const EvalReport& report)
{
    std::ofstream out(path, std::ios::trunc);
    write_report_csv(out, report);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
}

/// Fixed-width table with BER, BER(S) and BER(NS) columns.
inline void print_report(std::ostream& out, const EvalReport& report, bool per_image = true)
{
    char line[128];
    std::snprintf(line, sizeof(line), "%-10s %10s %10s %10s\n", "image", "BER", "BER(S)", "BER(NS)");
    out << line;
    auto row = [&](const std::string& id, const BerScore& s) {
        std::snprintf(line, sizeof(line), "%-10s %10s %10s %10s\n", id.c_str(), detail::format_score(s.ber).c_str(),
                      detail::format_score(s.ber_s).c_str(), detail::format_score(s.ber_ns).c_str());
        out << line;
    };
    if (per_image) {
        for (const EvalRow& r : report.rows) {
            row(r.image_id, r.score);
        }
    }
    row(report.aggregation == Aggregation::pooled ? "pooled" : "mean", report.mean);
}

} // namespace rendet
