#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>

#include "rendet/errors.hpp"
#include "rendet/image.hpp"

namespace rendet {

struct LossWeights {
    double lambda_ren = 1.0;
    double lambda_cm = 1.0;
    double lambda_sm = 1.0;
    long long ramp_iteration = 0; // lambda_ren is 0 before this iteration

    /// Effective rendering-loss weight at `iteration`.
    double lambda_ren_at(long long iteration) const { return iteration < ramp_iteration ? 0.0 : lambda_ren; }
};

inline void validate(const LossWeights& w)
{
    for (double v : {w.lambda_ren, w.lambda_cm, w.lambda_sm}) {
        if (!std::isfinite(v) || v < 0.0) {
            throw ValidationError("loss weights must be finite and non-negative");
        }
    }
    if (w.ramp_iteration < 0) {
        throw ValidationError("ramp_iteration must be non-negative");
    }
}

struct RenderingLoss {
    double value = 0.0;
    ScalarMap d_sm;
    ScalarMap d_cm;
};

/// Mean |delta - max(sm, cm)|. delta is a constant target; the subgradient
/// goes to the larger of sm and cm, split evenly on ties.
inline RenderingLoss rendering_loss(const BinaryMask& delta, const ScalarMap& sm, const ScalarMap& cm)
{
    require_same_size(delta, sm, "rendering_loss");
    require_same_size(delta, cm, "rendering_loss");
    RenderingLoss out{0.0, ScalarMap(sm.width, sm.height), ScalarMap(sm.width, sm.height)};
    const double n = static_cast<double>(delta.size());
    for (size_t i = 0; i < delta.size(); ++i) {
        const double u = std::max(sm.data[i], cm.data[i]);
        const double r = u - delta.data[i];
        out.value += std::abs(r);
        const double g = (r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0)) / n;
        if (sm.data[i] > cm.data[i]) {
            out.d_sm.data[i] = g;
        } else if (cm.data[i] > sm.data[i]) {
            out.d_cm.data[i] = g;
        } else {
            out.d_sm.data[i] = 0.5 * g;
            out.d_cm.data[i] = 0.5 * g;
        }
    }
    out.value /= n;
    return out;
}

inline constexpr double kBceClamp = 1e-7;

struct BceLoss {
    double value = 0.0;
    ScalarMap d_pred;
};

/// Mean binary cross-entropy with predictions clamped to [1e-7, 1-1e-7].
/// The gradient is evaluated at the clamped value.
inline BceLoss bce(const BinaryMask& target, const ScalarMap& pred)
{
    require_same_size(target, pred, "bce");
    BceLoss out{0.0, ScalarMap(pred.width, pred.height)};
    const double n = static_cast<double>(pred.size());
    for (size_t i = 0; i < pred.size(); ++i) {
        const double x = std::clamp(pred.data[i], kBceClamp, 1.0 - kBceClamp);
        const double y = target.data[i] != 0 ? 1.0 : 0.0;
        out.value -= y * std::log(x) + (1.0 - y) * std::log1p(-x);
        out.d_pred.data[i] = (x - y) / (x * (1.0 - x)) / n;
    }
    out.value /= n;
    return out;
}

inline BceLoss caster_loss(const BinaryMask& cm_diff, const ScalarMap& cm) { return bce(cm_diff, cm); }

inline BceLoss shadow_loss(const BinaryMask& sm_diff, const ScalarMap& sm) { return bce(sm_diff, sm); }

/// The three component losses of one sample. `ren` is absent when the
/// rendering term was not computed because its weight was zero.
struct LossComponents {
    std::optional<RenderingLoss> ren;
    BceLoss cm;
    BceLoss sm;
};

struct TotalLoss {
    double value = 0.0;
    double lambda_ren = 0.0;
    std::optional<double> l_ren;
    double l_cm = 0.0;
    double l_sm = 0.0;
    ScalarMap d_sm;
    ScalarMap d_cm;
};

/// lambda_ren(iter) * L_ren + lambda_cm * L_cm + lambda_sm * L_sm.
inline TotalLoss total_loss(const LossComponents& c, const LossWeights& w, long long iteration)
{
    TotalLoss t;
    t.lambda_ren = w.lambda_ren_at(iteration);
    t.l_cm = c.cm.value;
    t.l_sm = c.sm.value;
    if (c.ren) {
        t.l_ren = c.ren->value;
    }
    if (t.lambda_ren != 0.0 && !c.ren) {
        throw ValidationError("total_loss: rendering loss required at iteration " + std::to_string(iteration));
    }
    t.d_sm = ScalarMap(c.sm.d_pred.width, c.sm.d_pred.height);
    t.d_cm = ScalarMap(c.cm.d_pred.width, c.cm.d_pred.height);
    require_same_size(t.d_sm, t.d_cm, "total_loss");
    t.value = w.lambda_cm * c.cm.value + w.lambda_sm * c.sm.value;
    for (size_t i = 0; i < t.d_sm.size(); ++i) {
        t.d_sm.data[i] = w.lambda_sm * c.sm.d_pred.data[i];
        t.d_cm.data[i] = w.lambda_cm * c.cm.d_pred.data[i];
    }
    if (t.lambda_ren != 0.0) {
        require_same_size(t.d_sm, c.ren->d_sm, "total_loss");
        t.value += t.lambda_ren * c.ren->value;
        for (size_t i = 0; i < t.d_sm.size(); ++i) {
            t.d_sm.data[i] += t.lambda_ren * c.ren->d_sm.data[i];
            t.d_cm.data[i] += t.lambda_ren * c.ren->d_cm.data[i];
        }
    }
    return t;
}

/// Scalar form for already-reduced component values.
inline double total_loss_value(double l_ren, double l_cm, double l_sm, const LossWeights& w, long long iteration)
{
    const double lr = w.lambda_ren_at(iteration);
    double total = w.lambda_cm * l_cm + w.lambda_sm * l_sm;
    if (lr != 0.0) {
        total += lr * l_ren;
    }
    return total;
}

// ---------------------------------------------------------------------------
// Loss log

inline constexpr const char* kLossCsvHeader = "iteration,l_ren,l_cm,l_sm,total,lambda_ren";

/// Round-trippable decimal for a double.
inline std::string format_real(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// One CSV row. l_ren is left empty on iterations where it was not computed.
inline void write_loss_row(std::ostream& out, long long iteration, const TotalLoss& t)
{
    out << iteration << ',' << (t.l_ren ? format_real(*t.l_ren) : std::string()) << ',' << format_real(t.l_cm)
        << ',' << format_real(t.l_sm) << ',' << format_real(t.value) << ',' << format_real(t.lambda_ren) << '\n';
}

} // namespace rendet
