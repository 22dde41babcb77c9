#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>

#include "rendet/image.hpp"
#include "rendet/renderer.hpp"
#include "rendet/scene.hpp"

namespace rendet {

inline constexpr int kHistogramBins = 256;

/// 256 bins over [0,1]. Bin k holds values in (k/256, (k+1)/256]; bin 0 also
/// holds 0. With this layout, "bin > k" and "value > (k+1)/256" agree exactly.
struct Histogram {
    std::array<std::uint64_t, kHistogramBins> counts{};
    std::uint64_t total = 0;

    static int bin_of(double v)
    {
        const double b = std::ceil(v * kHistogramBins) - 1.0;
        return static_cast<int>(std::clamp(b, 0.0, static_cast<double>(kHistogramBins - 1)));
    }

    static Histogram of(const ScalarMap& values)
    {
        Histogram h;
        for (double v : values.data) {
            ++h.counts[static_cast<size_t>(bin_of(v))];
        }
        h.total = values.size();
        return h;
    }
};

struct OtsuResult {
    double threshold = 0.0; // upper edge of the last class-0 bin
    int bin = 0;            // last class-0 bin
    bool degenerate = false; // every value fell in one bin
};

/// Otsu's threshold over the 256-bin histogram: the split maximising the
/// between-class variance, lowest split on ties.
inline OtsuResult otsu_threshold(const Histogram& h)
{
    if (h.total == 0) {
        throw ValidationError("otsu_threshold: empty input");
    }
    int occupied = 0;
    int last = 0;
    std::int64_t n = 0;
    std::int64_t sum = 0;
    for (int k = 0; k < kHistogramBins; ++k) {
        const auto c = static_cast<std::int64_t>(h.counts[static_cast<size_t>(k)]);
        if (c > 0) {
            ++occupied;
            last = k;
        }
        n += c;
        sum += c * k;
    }
    if (occupied <= 1) {
        return {(last + 1) / static_cast<double>(kHistogramBins), last, true};
    }
    // Between-class variance up to the constant factor 1/n^2 is
    //   (n1*s0 - n0*s1)^2 / (n0*n1).
    // Candidates are compared by exact cross-multiplication, which stays
    // within 128 bits for up to 2^19 pixels (enough for 512 x 768). Larger
    // inputs fall back to long double.
    using u128 = unsigned __int128;
    const bool exact = n <= (std::int64_t{1} << 19);
    std::int64_t n0 = 0;
    std::int64_t s0 = 0;
    u128 best_num = 0;
    u128 best_den = 1;
    long double best_score = -1.0L;
    int best_bin = -1;
    for (int k = 0; k < kHistogramBins; ++k) {
        const auto c = static_cast<std::int64_t>(h.counts[static_cast<size_t>(k)]);
        n0 += c;
        s0 += c * k;
        const std::int64_t n1 = n - n0;
        if (n0 == 0 || n1 == 0) {
            continue;
        }
        const std::int64_t s1 = sum - s0;
        const std::int64_t diff = n1 * s0 - n0 * s1;
        const u128 mag = static_cast<u128>(diff < 0 ? -diff : diff);
        const u128 num = mag * mag;
        const u128 den = static_cast<u128>(n0) * static_cast<u128>(n1);
        bool better = false;
        if (exact) {
            better = best_bin < 0 || num * best_den > best_num * den;
        } else {
            const long double score = static_cast<long double>(num) / static_cast<long double>(den);
            better = score > best_score;
            if (better) {
                best_score = score;
            }
        }
        if (better) {
            best_num = num;
            best_den = den;
            best_bin = k;
        }
    }
    return {(best_bin + 1) / static_cast<double>(kHistogramBins), best_bin, false};
}

inline OtsuResult otsu_threshold(const ScalarMap& values) { return otsu_threshold(Histogram::of(values)); }

inline BinaryMask threshold_above(const ScalarMap& values, double tau)
{
    BinaryMask out(values.width, values.height);
    for (size_t i = 0; i < values.size(); ++i) {
        out.data[i] = values.data[i] > tau ? 1 : 0;
    }
    return out;
}

/// Luminance map thresholded at its own Otsu level.
inline BinaryMask otsu_mask(const ScalarMap& values) { return threshold_above(values, otsu_threshold(values).threshold); }

/// Delta-I: where carving changed the render.
inline BinaryMask change_mask(const Image& original, const Image& carved)
{
    return otsu_mask(abs_diff_luminance(original, carved));
}

inline constexpr double kCasterThreshold = 1e-3;

inline BinaryMask caster_supervision_from(const Image& reflectance)
{
    return threshold_above(luminance_map(reflectance), kCasterThreshold);
}

/// CM_diff: foreground coverage from the constant-emitter reflectance render.
inline BinaryMask caster_supervision(const Scene& scene, int threads = default_thread_count())
{
    return caster_supervision_from(render_reflectance(scene.camera, scene.foreground, threads));
}

enum class FlipMode {
    thresholded, // positive brightening above its Otsu level
    strict,      // any positive brightening
};

/// SM_diff1: pixels that get brighter when the point light is mirrored.
inline BinaryMask shadow_supervision_flip(const Image& image, const Image& flipped, FlipMode mode = FlipMode::thresholded)
{
    require_same_size(image, flipped, "shadow_supervision_flip");
    ScalarMap d(image.width, image.height);
    for (size_t i = 0; i < image.pixel_count(); ++i) {
        const double dr = static_cast<double>(flipped.pixels[3 * i]) - image.pixels[3 * i];
        const double dg = static_cast<double>(flipped.pixels[3 * i + 1]) - image.pixels[3 * i + 1];
        const double db = static_cast<double>(flipped.pixels[3 * i + 2]) - image.pixels[3 * i + 2];
        d.data[i] = std::max(0.0, luminance(dr, dg, db));
    }
    if (mode == FlipMode::strict) {
        return threshold_above(d, 0.0);
    }
    return otsu_mask(d);
}

/// SM_diff2: change against the background-only render, minus the caster mask.
inline BinaryMask shadow_supervision_carveout(const Image& image, const Image& background, const BinaryMask& cm_diff)
{
    require_same_size(image, background, "shadow_supervision_carveout");
    require_same_size(image, cm_diff, "shadow_supervision_carveout");
    return mask_minus(otsu_mask(abs_diff_luminance(background, image)), cm_diff);
}

/// Every render and mask the self-supervision needs for one scene.
struct Supervision {
    Image image;
    Image flipped;
    Image background;
    Image reflectance;
    BinaryMask cm_diff;
    BinaryMask sm_diff1;
    BinaryMask sm_diff2;
    BinaryMask sm_diff;
};

inline Supervision compute_supervision(const Scene& scene, FlipMode mode = FlipMode::thresholded,
                                       int threads = default_thread_count())
{
    Supervision s;
    const Camera& cam = scene.camera;
    s.image = render(scene.lighting, cam, scene.foreground, scene.background, threads);
    s.flipped = render_flipped(scene.lighting, cam, scene.foreground, scene.background, threads);
    s.background = render_background_only(scene.lighting, cam, scene.background, threads);
    s.reflectance = render_reflectance(cam, scene.foreground, threads);
    s.cm_diff = caster_supervision_from(s.reflectance);
    // Without a foreground nothing casts a shadow; the flip difference would
    // only hold floor shading changes.
    s.sm_diff1 = scene.foreground.faces.empty() ? BinaryMask(cam.width, cam.height)
                                                : shadow_supervision_flip(s.image, s.flipped, mode);
    s.sm_diff2 = shadow_supervision_carveout(s.image, s.background, s.cm_diff);
    s.sm_diff = mask_or(s.sm_diff2, s.sm_diff1);
    return s;
}

/// SM_diff = SM_diff2 OR SM_diff1.
inline BinaryMask shadow_supervision(const Scene& scene, FlipMode mode = FlipMode::thresholded,
                                     int threads = default_thread_count())
{
    return compute_supervision(scene, mode, threads).sm_diff;
}

} // namespace rendet
