#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "rendet/carving.hpp"
#include "rendet/datagen.hpp"
#include "rendet/detector.hpp"
#include "rendet/image_io.hpp"
#include "rendet/losses.hpp"
#include "rendet/metrics.hpp"
#include "rendet/rng.hpp"
#include "rendet/scene_io.hpp"
#include "rendet/signals.hpp"

namespace rendet {

struct TrainConfig {
    std::filesystem::path dataset;
    std::filesystem::path out_dir = "run";
    long long iterations = 400;
    long long ramp_iteration = -1; // negative: iterations / 4
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int batch_size = 1;
    ColorSpace color_space = ColorSpace::lab;
    std::uint64_t seed = 1;
    long long checkpoint_every = 0; // 0: final checkpoint only
    long long log_every = 50;       // 0: silent
    double lambda_ren = 1.0;
    double lambda_cm = 1.0;
    double lambda_sm = 1.0;
    int threads = 1;

    long long resolved_ramp() const { return ramp_iteration < 0 ? iterations / 4 : ramp_iteration; }

    LossWeights weights() const { return {lambda_ren, lambda_cm, lambda_sm, resolved_ramp()}; }

    CheckpointInfo checkpoint_info(long long iteration) const
    {
        CheckpointInfo info;
        info.seed = seed;
        info.iteration = iteration;
        info.color_space = color_space;
        info.ramp_iteration = resolved_ramp();
        info.lambda_ren = lambda_ren;
        info.lambda_cm = lambda_cm;
        info.lambda_sm = lambda_sm;
        info.learning_rate = learning_rate;
        info.beta1 = beta1;
        info.beta2 = beta2;
        info.epsilon = epsilon;
        info.batch_size = batch_size;
        info.dataset = dataset.generic_string();
        return info;
    }
};

inline void validate(const TrainConfig& c)
{
    if (c.iterations < 0) {
        throw ValidationError("iterations must be non-negative");
    }
    if (c.batch_size < 1) {
        throw ValidationError("batch size must be at least 1");
    }
    if (!(c.learning_rate > 0.0) || !(c.beta1 >= 0.0 && c.beta1 < 1.0) || !(c.beta2 >= 0.0 && c.beta2 < 1.0) ||
        !(c.epsilon > 0.0)) {
        throw ValidationError("optimizer settings out of range");
    }
    validate(c.weights());
}

inline nlohmann::json to_json(const TrainConfig& c)
{
    return {{"dataset", c.dataset.generic_string()},
            {"out_dir", c.out_dir.generic_string()},
            {"iterations", c.iterations},
            {"ramp_iteration", c.resolved_ramp()},
            {"learning_rate", c.learning_rate},
            {"beta1", c.beta1},
            {"beta2", c.beta2},
            {"epsilon", c.epsilon},
            {"batch_size", c.batch_size},
            {"color_space", to_string(c.color_space)},
            {"seed", c.seed},
            {"checkpoint_every", c.checkpoint_every},
            {"log_every", c.log_every},
            {"lambda_ren", c.lambda_ren},
            {"lambda_cm", c.lambda_cm},
            {"lambda_sm", c.lambda_sm},
            {"threads", c.threads}};
}

/// One dataset sample with its cached supervision.
struct TrainSample {
    int index = 0;
    Scene scene;
    Image image;
    Tensor input;
    BinaryMask cm_diff;
    BinaryMask sm_diff;
    BinaryMask gt_shadow;
};

inline std::vector<TrainSample> load_training_samples(const std::filesystem::path& dataset, ColorSpace space)
{
    const DatasetManifest manifest = load_manifest(dataset);
    std::vector<TrainSample> out;
    out.reserve(manifest.samples.size());
    for (const SampleRecord& r : manifest.samples) {
        TrainSample s;
        s.index = r.index;
        s.scene = load_scene(dataset / r.scene);
        s.image = read_pfm_image(dataset / r.image_pfm);
        s.input = encode_input(s.image, space);
        s.cm_diff = read_mask_png(dataset / r.sup_cm);
        s.sm_diff = read_mask_png(dataset / r.sup_sm);
        s.gt_shadow = read_mask_png(dataset / r.gt_shadow);
        out.push_back(std::move(s));
    }
    if (out.empty()) {
        throw ManifestInvalid(dataset.string() + ": dataset has no samples");
    }
    return out;
}

/// Adam state and the seeded sample order.
struct TrainState {
    DetectorParams params;
    std::vector<double> m;
    std::vector<double> v;
    long long iteration = 0;
    Rng rng{0};
    std::vector<int> order;
    size_t cursor = 0;
};

inline TrainState make_train_state(const TrainConfig& c, int sample_count)
{
    TrainState s;
    s.params = init_params(c.seed);
    s.m.assign(s.params.parameter_count(), 0.0);
    s.v.assign(s.params.parameter_count(), 0.0);
    s.rng = Rng(splitmix64(c.seed ^ 0x5eedull));
    s.order.resize(static_cast<size_t>(sample_count));
    for (int i = 0; i < sample_count; ++i) {
        s.order[static_cast<size_t>(i)] = i;
    }
    s.cursor = s.order.size(); // forces a shuffle on first use
    return s;
}

/// Next `batch` sample indices; reshuffles (Fisher-Yates) at each epoch start.
inline std::vector<int> next_batch(TrainState& s, int batch)
{
    std::vector<int> out;
    for (int k = 0; k < batch; ++k) {
        if (s.cursor >= s.order.size()) {
            for (size_t i = s.order.size(); i > 1; --i) {
                const auto j = static_cast<size_t>(s.rng.integer(0, static_cast<std::int64_t>(i) - 1));
                std::swap(s.order[i - 1], s.order[j]);
            }
            s.cursor = 0;
        }
        out.push_back(s.order[s.cursor++]);
    }
    return out;
}

/// Carves the scene under a predicted CM and returns the re-render.
using CarveRenderer = std::function<Image(const Scene&, const ScalarMap&)>;

inline CarveRenderer default_carve_renderer(int threads = 1)
{
    return [threads](const Scene& scene, const ScalarMap& cm) { return carve_and_rerender(scene, cm, threads).image; };
}

/// Averaged loss values of one step; gradient maps are not kept.
struct StepRecord {
    long long iteration = 0;
    TotalLoss loss;
};

inline void adam_update(TrainState& s, const std::vector<double>& grad, const TrainConfig& c)
{
    std::vector<double> p = s.params.flatten();
    const double t = static_cast<double>(s.iteration + 1);
    const double c1 = 1.0 - std::pow(c.beta1, t);
    const double c2 = 1.0 - std::pow(c.beta2, t);
    for (size_t i = 0; i < p.size(); ++i) {
        s.m[i] = c.beta1 * s.m[i] + (1.0 - c.beta1) * grad[i];
        s.v[i] = c.beta2 * s.v[i] + (1.0 - c.beta2) * grad[i] * grad[i];
        const double mhat = s.m[i] / c1;
        const double vhat = s.v[i] / c2;
        p[i] -= c.learning_rate * mhat / (std::sqrt(vhat) + c.epsilon);
    }
    s.params.unflatten(p);
}

/// Loss and parameter gradient of one sample. The carve renderer is only
/// called when lambda_ren is nonzero at this iteration.
inline std::pair<TotalLoss, std::vector<double>> sample_loss_and_gradient(const DetectorParams& params,
                                                                          const TrainSample& sample,
                                                                          const LossWeights& weights,
                                                                          long long iteration,
                                                                          const CarveRenderer& carve)
{
    const Activations act = forward_activations(params, sample.input);
    const Prediction pred = prediction_of(act);
    LossComponents comp;
    comp.cm = caster_loss(sample.cm_diff, pred.cm);
    comp.sm = shadow_loss(sample.sm_diff, pred.sm);
    if (weights.lambda_ren_at(iteration) != 0.0) {
        const BinaryMask delta = change_mask(sample.image, carve(sample.scene, pred.cm));
        comp.ren = rendering_loss(delta, pred.sm, pred.cm);
    }
    TotalLoss total = total_loss(comp, weights, iteration);
    std::vector<double> grad = backward(params, act, total.d_sm, total.d_cm).flatten();
    return {std::move(total), std::move(grad)};
}

inline StepRecord train_step(TrainState& state, const std::vector<const TrainSample*>& batch, const TrainConfig& c,
                             const CarveRenderer& carve)
{
    if (batch.empty()) {
        throw ValidationError("train_step: empty batch");
    }
    const LossWeights weights = c.weights();
    StepRecord rec;
    rec.iteration = state.iteration;
    rec.loss.lambda_ren = weights.lambda_ren_at(state.iteration);
    std::vector<double> grad(state.params.parameter_count(), 0.0);
    const double scale = 1.0 / static_cast<double>(batch.size());
    double l_ren = 0.0;
    bool has_ren = true;
    for (const TrainSample* sample : batch) {
        auto [loss, g] = sample_loss_and_gradient(state.params, *sample, weights, state.iteration, carve);
        if (!std::isfinite(loss.value)) {
            throw NonFiniteLoss("non-finite loss at iteration " + std::to_string(state.iteration) + " on sample " +
                                std::to_string(sample->index) + ": l_cm=" + format_real(loss.l_cm) +
                                " l_sm=" + format_real(loss.l_sm) +
                                " l_ren=" + (loss.l_ren ? format_real(*loss.l_ren) : std::string("n/a")));
        }
        rec.loss.value += scale * loss.value;
        rec.loss.l_cm += scale * loss.l_cm;
        rec.loss.l_sm += scale * loss.l_sm;
        if (loss.l_ren) {
            l_ren += scale * *loss.l_ren;
        } else {
            has_ren = false;
        }
        for (size_t i = 0; i < grad.size(); ++i) {
            grad[i] += scale * g[i];
        }
    }
    if (has_ren) {
        rec.loss.l_ren = l_ren;
    }
    for (double g : grad) {
        if (!std::isfinite(g)) {
            throw NonFiniteLoss("non-finite gradient at iteration " + std::to_string(state.iteration));
        }
    }
    adam_update(state, grad, c);
    ++state.iteration;
    return rec;
}

/// Mean per-image BER of the SM head, binarized at 0.5, against gt_shadow.
inline BerScore training_ber(const DetectorParams& params, const std::vector<TrainSample>& samples)
{
    std::vector<BinaryMask> preds;
    std::vector<BinaryMask> gts;
    std::vector<std::string> ids;
    for (const TrainSample& s : samples) {
        preds.push_back(binarize(forward(params, s.input).sm));
        gts.push_back(s.gt_shadow);
        ids.push_back(std::to_string(s.index));
    }
    return evaluate_masks(preds, gts, ids).mean;
}

struct TrainResult {
    std::filesystem::path checkpoint;
    std::filesystem::path loss_csv;
    TrainState state;
    std::vector<StepRecord> history;
};

inline std::filesystem::path periodic_checkpoint_path(const std::filesystem::path& out_dir, long long iteration)
{
    char name[40];
    std::snprintf(name, sizeof(name), "checkpoint_%06lld.bin", iteration);
    return out_dir / name;
}

/// Trains on preloaded samples; writes loss.csv and checkpoint.bin to out_dir.
inline TrainResult train(const TrainConfig& c, const std::vector<TrainSample>& samples, const CarveRenderer& carve,
                         std::ostream* progress = nullptr)
{
    validate(c);
    namespace fs = std::filesystem;
    fs::create_directories(c.out_dir);
    TrainResult result;
    result.loss_csv = c.out_dir / "loss.csv";
    result.checkpoint = c.out_dir / "checkpoint.bin";
    result.state = make_train_state(c, static_cast<int>(samples.size()));
    TrainState& state = result.state;

    std::ofstream csv(result.loss_csv, std::ios::trunc);
    csv << kLossCsvHeader << '\n';
    for (long long it = 0; it < c.iterations; ++it) {
        std::vector<const TrainSample*> batch;
        for (int idx : next_batch(state, c.batch_size)) {
            batch.push_back(&samples[static_cast<size_t>(idx)]);
        }
        StepRecord rec = train_step(state, batch, c, carve);
        write_loss_row(csv, rec.iteration, rec.loss);
        if (progress && c.log_every > 0 && (rec.iteration % c.log_every == 0 || it + 1 == c.iterations)) {
            *progress << "iteration " << rec.iteration << " total " << format_real(rec.loss.value) << '\n';
        }
        if (c.checkpoint_every > 0 && state.iteration % c.checkpoint_every == 0 && it + 1 < c.iterations) {
            save_checkpoint(periodic_checkpoint_path(c.out_dir, state.iteration), state.params,
                            c.checkpoint_info(state.iteration));
        }
        result.history.push_back(std::move(rec));
    }
    if (!csv) {
        throw IoError("cannot write " + result.loss_csv.string());
    }
    save_checkpoint(result.checkpoint, state.params, c.checkpoint_info(state.iteration));
    return result;
}

inline TrainResult train(const TrainConfig& c, std::ostream* progress = nullptr)
{
    validate(c);
    const std::vector<TrainSample> samples = load_training_samples(c.dataset, c.color_space);
    return train(c, samples, default_carve_renderer(c.threads), progress);
}

// ---------------------------------------------------------------------------
// Inference

struct InferResult {
    Prediction prediction;
    ColorSpace color_space = ColorSpace::lab;
    std::filesystem::path sm_pfm, cm_pfm, sm_png, cm_png;
};

/// Image in, masks out; no scene data is read. A colour-space override that
/// disagrees with the checkpoint is refused unless `force` is set.
inline InferResult infer(const std::filesystem::path& checkpoint, const std::filesystem::path& image,
                         const std::filesystem::path& out_dir, std::optional<ColorSpace> override_space = std::nullopt,
                         bool force = false)
{
    const CheckpointInfo info = load_checkpoint_info(checkpoint);
    const DetectorParams params = load_checkpoint_params(checkpoint);
    InferResult r;
    r.color_space = info.color_space;
    if (override_space && *override_space != info.color_space) {
        if (!force) {
            throw ValidationError(std::string("checkpoint was trained in ") + to_string(info.color_space) +
                                  "; refusing to run in " + to_string(*override_space) + " without --force");
        }
        r.color_space = *override_space;
    }
    const Image img = read_image(image);
    r.prediction = forward(params, encode_input(img, r.color_space));
    std::filesystem::create_directories(out_dir);
    const std::string stem = image.stem().string();
    r.sm_pfm = out_dir / (stem + "_sm.pfm");
    r.cm_pfm = out_dir / (stem + "_cm.pfm");
    r.sm_png = out_dir / (stem + "_sm.png");
    r.cm_png = out_dir / (stem + "_cm.png");
    write_pfm(r.sm_pfm, r.prediction.sm);
    write_pfm(r.cm_pfm, r.prediction.cm);
    write_png(r.sm_png, binarize(r.prediction.sm));
    write_png(r.cm_png, binarize(r.prediction.cm));
    return r;
}

} // namespace rendet
