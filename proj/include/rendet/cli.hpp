#pragma once

#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rendet/carving.hpp"
#include "rendet/datagen.hpp"
#include "rendet/image_io.hpp"
#include "rendet/metrics.hpp"
#include "rendet/renderer.hpp"
#include "rendet/scene_io.hpp"
#include "rendet/signals.hpp"
#include "rendet/trainer.hpp"

namespace rendet::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

namespace detail {

inline void echo_config(std::ostream& out, const std::string& command, nlohmann::json config)
{
    config["command"] = command;
    out << "config " << config.dump() << '\n';
}

/// Writes PNG or PFM by extension.
inline void write_image_by_extension(const std::filesystem::path& path, const Image& img)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    const std::string ext = path.extension().string();
    if (ext == ".pfm") {
        write_pfm(path, img);
    } else if (ext == ".png") {
        write_png(path, img);
    } else {
        throw ValidationError("output must end in .png or .pfm: " + path.string());
    }
}

} // namespace detail

/// Entry point shared by the binary and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    CLI::App app{"Self-supervised shadow detection toolkit", "rendet"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "rendet 1.0");

    // gen
    GenConfig gen;
    std::string gen_out;
    bool gen_canonical = false;
    int gen_threads = default_thread_count();
    std::vector<std::string> gen_kinds;
    auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic dataset");
    gen_cmd->add_option("--out", gen_out, "Output directory")->required();
    gen_cmd->add_option("--count", gen.count, "Number of samples")->capture_default_str();
    gen_cmd->add_option("--seed", gen.seed, "Base seed; sample i uses seed + i")->capture_default_str();
    gen_cmd->add_option("--width", gen.width, "Image width")->capture_default_str();
    gen_cmd->add_option("--height", gen.height, "Image height")->capture_default_str();
    gen_cmd->add_option("--min-objects", gen.min_objects, "Minimum objects per scene (1-3)")->capture_default_str();
    gen_cmd->add_option("--max-objects", gen.max_objects, "Maximum objects per scene (1-3)")->capture_default_str();
    gen_cmd->add_option("--kinds", gen_kinds, "Object kinds: cube, icosphere, cylinder");
    gen_cmd->add_flag("--canonical", gen_canonical, "Use the canonical single-cube suite settings");
    gen_cmd->add_option("--threads", gen_threads, "Worker threads (default from RENDET_THREADS)")
        ->capture_default_str();

    // render
    std::string render_scene;
    std::string render_out;
    bool flip_light = false;
    bool reflectance = false;
    bool background_only = false;
    auto* render_cmd = app.add_subcommand("render", "Render a scene file");
    render_cmd->add_option("--scene", render_scene, "Scene JSON")->required()->check(CLI::ExistingFile);
    render_cmd->add_option("--out", render_out, "Output image (.png or .pfm)")->required();
    auto* f1 = render_cmd->add_flag("--flip-light", flip_light, "Mirror the point light across x = 0");
    auto* f2 = render_cmd->add_flag("--reflectance", reflectance, "Foreground under a constant emitter");
    auto* f3 = render_cmd->add_flag("--background-only", background_only, "Omit the foreground mesh");
    f1->excludes(f2, f3);
    f2->excludes(f3);

    // signals
    std::string signals_scene;
    std::string signals_out;
    bool strict_flip = false;
    auto* signals_cmd = app.add_subcommand("signals", "Write every supervision mask for one scene");
    signals_cmd->add_option("--scene", signals_scene, "Scene JSON")->required()->check(CLI::ExistingFile);
    signals_cmd->add_option("--out", signals_out, "Output directory")->required();
    signals_cmd->add_flag("--strict-flip", strict_flip, "Flip signal uses any brightening instead of Otsu");

    // verify
    std::string verify_scene;
    std::string verify_cm;
    std::string verify_out;
    auto* verify_cmd = app.add_subcommand("verify", "Carve under a caster mask, re-render and report the change");
    verify_cmd->add_option("--scene", verify_scene, "Scene JSON")->required()->check(CLI::ExistingFile);
    verify_cmd->add_option("--cm", verify_cm, "Caster mask (.png or .pfm), binarized at 0.5")
        ->required()
        ->check(CLI::ExistingFile);
    verify_cmd->add_option("--out", verify_out, "Output directory for the carved render and change mask");

    // train
    TrainConfig tc;
    std::string train_space = "lab";
    std::string train_data;
    std::string train_out = tc.out_dir.string();
    auto* train_cmd = app.add_subcommand("train", "Train the detector");
    train_cmd->add_option("--data", train_data, "Dataset directory")->required();
    train_cmd->add_option("--out", train_out, "Run directory")->capture_default_str();
    train_cmd->add_option("--iterations", tc.iterations, "Optimizer steps")->capture_default_str();
    train_cmd->add_option("--ramp", tc.ramp_iteration, "Iteration where lambda_ren becomes active (default iterations/4)");
    train_cmd->add_option("--lr", tc.learning_rate, "Learning rate")->capture_default_str();
    train_cmd->add_option("--beta1", tc.beta1, "First-moment decay")->capture_default_str();
    train_cmd->add_option("--beta2", tc.beta2, "Second-moment decay")->capture_default_str();
    train_cmd->add_option("--eps", tc.epsilon, "Optimizer epsilon")->capture_default_str();
    train_cmd->add_option("--batch", tc.batch_size, "Samples per step")->capture_default_str();
    train_cmd->add_option("--color-space", train_space, "lab or rgb")
        ->check(CLI::IsMember({"lab", "rgb"}))
        ->capture_default_str();
    train_cmd->add_option("--seed", tc.seed, "Initialization and shuffle seed")->capture_default_str();
    train_cmd->add_option("--checkpoint-every", tc.checkpoint_every, "Extra checkpoint cadence (0 = final only)")
        ->capture_default_str();
    train_cmd->add_option("--log-every", tc.log_every, "Progress line cadence (0 = silent)")->capture_default_str();
    train_cmd->add_option("--lambda-ren", tc.lambda_ren, "Rendering loss weight after the ramp")->capture_default_str();
    train_cmd->add_option("--lambda-cm", tc.lambda_cm, "Caster loss weight")->capture_default_str();
    train_cmd->add_option("--lambda-sm", tc.lambda_sm, "Shadow loss weight")->capture_default_str();
    train_cmd->add_option("--threads", tc.threads, "Render threads for carving")->capture_default_str();

    // infer
    std::string infer_ckpt;
    std::string infer_image;
    std::string infer_out = ".";
    std::string infer_space;
    bool infer_force = false;
    auto* infer_cmd = app.add_subcommand("infer", "Predict shadow and caster masks for one image");
    infer_cmd->add_option("--ckpt", infer_ckpt, "Checkpoint file")->required()->check(CLI::ExistingFile);
    infer_cmd->add_option("--image", infer_image, "Input image (.png or .pfm)")->required()->check(CLI::ExistingFile);
    infer_cmd->add_option("--out", infer_out, "Output directory")->capture_default_str();
    infer_cmd->add_option("--color-space", infer_space, "Override the checkpoint's colour space")
        ->check(CLI::IsMember({"lab", "rgb"}));
    infer_cmd->add_flag("--force", infer_force, "Allow a colour-space override");

    // eval
    std::string eval_ckpt;
    std::string eval_pred;
    std::string eval_data;
    std::string eval_csv;
    bool eval_pooled = false;
    bool eval_summary = false;
    auto* eval_cmd = app.add_subcommand("eval", "Score shadow predictions with BER");
    auto* ck = eval_cmd->add_option("--ckpt", eval_ckpt, "Checkpoint to evaluate")->check(CLI::ExistingFile);
    auto* pd = eval_cmd->add_option("--pred", eval_pred, "Directory of predicted mask PNGs named %05d.png")
                   ->check(CLI::ExistingDirectory);
    ck->excludes(pd);
    eval_cmd->add_option("--data", eval_data, "Dataset directory")->required();
    eval_cmd->add_option("--csv", eval_csv, "Report CSV path (default: <data>/eval.csv)");
    eval_cmd->add_flag("--pooled", eval_pooled, "Pool pixels over all images instead of averaging per image");
    eval_cmd->add_flag("--summary", eval_summary, "Print only the aggregate row");

    // validate
    std::string validate_data;
    bool validate_deep = false;
    auto* validate_cmd = app.add_subcommand("validate", "Check a dataset against its manifest");
    validate_cmd->add_option("--data", validate_data, "Dataset directory")->required();
    validate_cmd->add_flag("--deep", validate_deep, "Recompute every render and mask and compare bit-exactly");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (gen_cmd->parsed()) {
            if (gen_canonical) {
                GenConfig c = canonical_config();
                for (const auto* opt : {"--count", "--seed", "--width", "--height"}) {
                    if (gen_cmd->count(opt) == 0) {
                        continue;
                    }
                    const std::string o(opt);
                    if (o == "--count") c.count = gen.count;
                    if (o == "--seed") c.seed = gen.seed;
                    if (o == "--width") c.width = gen.width;
                    if (o == "--height") c.height = gen.height;
                }
                gen = c;
            }
            if (!gen_kinds.empty()) {
                gen.kinds.clear();
                for (const std::string& k : gen_kinds) {
                    gen.kinds.push_back(object_kind_from(k));
                }
            }
            validate(gen);
            auto j = to_json(gen);
            j["out"] = gen_out;
            j["threads"] = gen_threads;
            detail::echo_config(out, "gen", j);
            const DatasetManifest m = generate_dataset(gen, gen_out, gen_threads);
            out << "wrote " << m.samples.size() << " samples to " << gen_out << '\n';
        } else if (render_cmd->parsed()) {
            detail::echo_config(out, "render",
                                {{"scene", render_scene},
                                 {"out", render_out},
                                 {"flip_light", flip_light},
                                 {"reflectance", reflectance},
                                 {"background_only", background_only}});
            const Scene scene = load_scene(render_scene);
            const int threads = default_thread_count();
            Image img;
            if (flip_light) {
                img = render_flipped(scene.lighting, scene.camera, scene.foreground, scene.background, threads);
            } else if (reflectance) {
                img = render_reflectance(scene.camera, scene.foreground, threads);
            } else if (background_only) {
                img = render_background_only(scene.lighting, scene.camera, scene.background, threads);
            } else {
                img = render(scene, threads);
            }
            detail::write_image_by_extension(render_out, img);
        } else if (signals_cmd->parsed()) {
            detail::echo_config(out, "signals",
                                {{"scene", signals_scene}, {"out", signals_out}, {"strict_flip", strict_flip}});
            const Scene scene = load_scene(signals_scene);
            const Supervision s =
                compute_supervision(scene, strict_flip ? FlipMode::strict : FlipMode::thresholded,
                                    default_thread_count());
            const std::filesystem::path dir(signals_out);
            std::filesystem::create_directories(dir);
            write_png(dir / "image.png", s.image);
            write_png(dir / "image_flip.png", s.flipped);
            write_png(dir / "image_bg.png", s.background);
            write_png(dir / "image_refl.png", s.reflectance);
            write_png(dir / "cm_diff.png", s.cm_diff);
            write_png(dir / "sm_diff1.png", s.sm_diff1);
            write_png(dir / "sm_diff2.png", s.sm_diff2);
            write_png(dir / "sm_diff.png", s.sm_diff);
            const nlohmann::json provenance = {
                {"scene", signals_scene},
                {"flip_mode", strict_flip ? "strict" : "thresholded"},
                {"files",
                 {{"image.png", "I: render of the full scene"},
                  {"image_flip.png", "I_flip: render with the point light mirrored across x = 0"},
                  {"image_bg.png", "I_bg: render of the background mesh only"},
                  {"image_refl.png", "I_refl: foreground under a constant emitter (reflectance)"},
                  {"cm_diff.png", "CM_diff = luminance(I_refl) > 1e-3"},
                  {"sm_diff1.png", strict_flip ? "SM_diff1 = max(0, L(I_flip) - L(I)) > 0"
                                               : "SM_diff1 = Otsu(max(0, L(I_flip) - L(I)))"},
                  {"sm_diff2.png", "SM_diff2 = Otsu(L|I_bg - I|) minus CM_diff"},
                  {"sm_diff.png", "SM_diff = SM_diff2 OR SM_diff1"}}}};
            std::ofstream prov(dir / "provenance.json", std::ios::trunc);
            prov << provenance.dump(1) << '\n';
            if (!prov) {
                throw IoError("cannot write " + (dir / "provenance.json").string());
            }
        } else if (verify_cmd->parsed()) {
            detail::echo_config(out, "verify", {{"scene", verify_scene}, {"cm", verify_cm}, {"out", verify_out}});
            const Scene scene = load_scene(verify_scene);
            const ScalarMap cm = read_scalar(verify_cm);
            const Image original = render(scene, default_thread_count());
            const CarveResult carved = carve_and_rerender(scene, cm, default_thread_count());
            const BinaryMask delta = change_mask(original, carved.image);
            if (!verify_out.empty()) {
                const std::filesystem::path dir(verify_out);
                std::filesystem::create_directories(dir);
                write_png(dir / "carved.png", carved.image);
                write_pfm(dir / "carved.pfm", carved.image);
                write_png(dir / "delta.png", delta);
            }
            out << "carved_faces " << carved.selection.size() << '\n';
            out << "delta_pixels " << count(delta) << '\n';
        } else if (train_cmd->parsed()) {
            tc.dataset = train_data;
            tc.out_dir = train_out;
            tc.color_space = color_space_from(train_space);
            validate(tc);
            detail::echo_config(out, "train", to_json(tc));
            const TrainResult r = train(tc, &out);
            out << "checkpoint " << r.checkpoint.generic_string() << '\n';
            out << "loss_log " << r.loss_csv.generic_string() << '\n';
        } else if (infer_cmd->parsed()) {
            std::optional<ColorSpace> space;
            if (!infer_space.empty()) {
                space = color_space_from(infer_space);
            }
            detail::echo_config(out, "infer",
                                {{"ckpt", infer_ckpt},
                                 {"image", infer_image},
                                 {"out", infer_out},
                                 {"color_space", infer_space.empty() ? "checkpoint" : infer_space},
                                 {"force", infer_force}});
            const InferResult r = infer(infer_ckpt, infer_image, infer_out, space, infer_force);
            out << "color_space " << to_string(r.color_space) << '\n';
            for (const auto& p : {r.sm_pfm, r.cm_pfm, r.sm_png, r.cm_png}) {
                out << "wrote " << p.generic_string() << '\n';
            }
        } else if (eval_cmd->parsed()) {
            if (eval_ckpt.empty() == eval_pred.empty()) {
                err << "eval: exactly one of --ckpt or --pred is required\n" << eval_cmd->help();
                return kExitUsage;
            }
            const std::filesystem::path data(eval_data);
            const std::filesystem::path csv = eval_csv.empty() ? data / "eval.csv" : std::filesystem::path(eval_csv);
            const Aggregation agg = eval_pooled ? Aggregation::pooled : Aggregation::per_image;
            detail::echo_config(out, "eval",
                                {{"ckpt", eval_ckpt},
                                 {"pred", eval_pred},
                                 {"data", eval_data},
                                 {"csv", csv.generic_string()},
                                 {"aggregation", eval_pooled ? "pooled" : "per_image"}});
            const EvalReport report =
                eval_ckpt.empty() ? evaluate_predictions(eval_pred, data, agg) : evaluate(eval_ckpt, data, agg);
            print_report(out, report, !eval_summary);
            write_report_csv(csv, report);
        } else if (validate_cmd->parsed()) {
            detail::echo_config(out, "validate", {{"data", validate_data}, {"deep", validate_deep}});
            const ValidationReport r = validate_dataset(validate_data, validate_deep);
            for (const std::string& p : r.problems) {
                out << "problem " << p << '\n';
            }
            out << "checked " << r.samples_checked << " samples, " << r.problems.size() << " problems\n";
            return r.ok() ? kExitOk : kExitDomain;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitDomain;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitDomain;
    }
    return kExitOk;
}

} // namespace rendet::cli
