#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rendet/errors.hpp"
#include "rendet/image.hpp"
#include "rendet/renderer.hpp"
#include "rendet/rng.hpp"

namespace rendet {

/// Dense channel-major (C, H, W) tensor. Batches are handled by callers as
/// sequences of single-sample tensors.
struct Tensor {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> values;

    Tensor() = default;
    Tensor(int c, int h, int w, double fill = 0.0)
        : channels(c), height(h), width(w), values(static_cast<size_t>(c) * h * w, fill)
    {
    }

    size_t size() const { return values.size(); }
    size_t plane() const { return static_cast<size_t>(height) * width; }
    double& operator()(int c, int y, int x) { return values[(static_cast<size_t>(c) * height + y) * width + x]; }
    double operator()(int c, int y, int x) const { return values[(static_cast<size_t>(c) * height + y) * width + x]; }

    bool same_shape(const Tensor& o) const { return channels == o.channels && height == o.height && width == o.width; }
    bool operator==(const Tensor&) const = default;
};

enum class ColorSpace { lab, rgb };

inline const char* to_string(ColorSpace c) { return c == ColorSpace::lab ? "lab" : "rgb"; }

inline ColorSpace color_space_from(const std::string& s)
{
    if (s == "lab") {
        return ColorSpace::lab;
    }
    if (s == "rgb") {
        return ColorSpace::rgb;
    }
    throw ValidationError("unknown colour space '" + s + "' (expected lab or rgb)");
}

/// Network input: Lab scaled to (L/100, a/110, b/110), or linear RGB as is.
inline Tensor encode_input(const Image& img, ColorSpace space)
{
    Tensor t(3, img.height, img.width);
    const size_t n = img.pixel_count();
    for (size_t i = 0; i < n; ++i) {
        const double r = img.pixels[3 * i];
        const double g = img.pixels[3 * i + 1];
        const double b = img.pixels[3 * i + 2];
        if (space == ColorSpace::lab) {
            const auto lab = rgb_to_lab(r, g, b);
            t.values[i] = lab[0] / 100.0;
            t.values[n + i] = lab[1] / 110.0;
            t.values[2 * n + i] = lab[2] / 110.0;
        } else {
            t.values[i] = r;
            t.values[n + i] = g;
            t.values[2 * n + i] = b;
        }
    }
    return t;
}

// ---------------------------------------------------------------------------
// Layers

/// 3x3 convolution, zero padding 1. Weight layout [out][in][ky][kx].
struct Conv {
    int in = 0;
    int out = 0;
    int stride = 1;
    std::vector<double> weight;
    std::vector<double> bias;

    static constexpr int kKernel = 3;

    Conv() = default;
    Conv(int in_ch, int out_ch, int s)
        : in(in_ch), out(out_ch), stride(s), weight(static_cast<size_t>(out_ch) * in_ch * 9, 0.0),
          bias(static_cast<size_t>(out_ch), 0.0)
    {
    }

    size_t parameter_count() const { return weight.size() + bias.size(); }
    double& w(int o, int i, int ky, int kx) { return weight[((static_cast<size_t>(o) * in + i) * 3 + ky) * 3 + kx]; }
    double w(int o, int i, int ky, int kx) const { return weight[((static_cast<size_t>(o) * in + i) * 3 + ky) * 3 + kx]; }

    static int output_extent(int n, int s) { return (n - 1) / s + 1; }

    bool operator==(const Conv&) const = default;
};

inline Tensor conv_forward(const Conv& conv, const Tensor& x)
{
    if (x.channels != conv.in) {
        throw ShapeError("conv: expected " + std::to_string(conv.in) + " input channels, got " +
                         std::to_string(x.channels));
    }
    const int oh = Conv::output_extent(x.height, conv.stride);
    const int ow = Conv::output_extent(x.width, conv.stride);
    Tensor y(conv.out, oh, ow);
    for (int o = 0; o < conv.out; ++o) {
        double* yo = &y.values[static_cast<size_t>(o) * y.plane()];
        std::fill(yo, yo + y.plane(), conv.bias[static_cast<size_t>(o)]);
        for (int i = 0; i < conv.in; ++i) {
            const double* xi = &x.values[static_cast<size_t>(i) * x.plane()];
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    const double wv = conv.w(o, i, ky, kx);
                    for (int r = 0; r < oh; ++r) {
                        const int sy = r * conv.stride + ky - 1;
                        if (sy < 0 || sy >= x.height) {
                            continue;
                        }
                        const double* xrow = xi + static_cast<size_t>(sy) * x.width;
                        double* yrow = yo + static_cast<size_t>(r) * ow;
                        for (int c = 0; c < ow; ++c) {
                            const int sx = c * conv.stride + kx - 1;
                            if (sx >= 0 && sx < x.width) {
                                yrow[c] += wv * xrow[sx];
                            }
                        }
                    }
                }
            }
        }
    }
    return y;
}

/// Accumulates dL/dW and dL/db into `grad` and returns dL/dx.
inline Tensor conv_backward(const Conv& conv, const Tensor& x, const Tensor& dy, Conv& grad)
{
    const int oh = dy.height;
    const int ow = dy.width;
    if (dy.channels != conv.out || oh != Conv::output_extent(x.height, conv.stride) ||
        ow != Conv::output_extent(x.width, conv.stride)) {
        throw ShapeError("conv backward: upstream gradient shape does not match forward output");
    }
    Tensor dx(x.channels, x.height, x.width);
    for (int o = 0; o < conv.out; ++o) {
        const double* dyo = &dy.values[static_cast<size_t>(o) * dy.plane()];
        double db = 0.0;
        for (size_t k = 0; k < dy.plane(); ++k) {
            db += dyo[k];
        }
        grad.bias[static_cast<size_t>(o)] += db;
        for (int i = 0; i < conv.in; ++i) {
            const double* xi = &x.values[static_cast<size_t>(i) * x.plane()];
            double* dxi = &dx.values[static_cast<size_t>(i) * dx.plane()];
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    const double wv = conv.w(o, i, ky, kx);
                    double dw = 0.0;
                    for (int r = 0; r < oh; ++r) {
                        const int sy = r * conv.stride + ky - 1;
                        if (sy < 0 || sy >= x.height) {
                            continue;
                        }
                        const double* xrow = xi + static_cast<size_t>(sy) * x.width;
                        double* dxrow = dxi + static_cast<size_t>(sy) * x.width;
                        const double* dyrow = dyo + static_cast<size_t>(r) * ow;
                        for (int c = 0; c < ow; ++c) {
                            const int sx = c * conv.stride + kx - 1;
                            if (sx >= 0 && sx < x.width) {
                                dw += dyrow[c] * xrow[sx];
                                dxrow[sx] += wv * dyrow[c];
                            }
                        }
                    }
                    grad.w(o, i, ky, kx) += dw;
                }
            }
        }
    }
    return dx;
}

inline Tensor relu_forward(Tensor x)
{
    for (double& v : x.values) {
        v = std::max(v, 0.0);
    }
    return x;
}

/// Subgradient 0 at the kink.
inline Tensor relu_backward(const Tensor& x, Tensor dy)
{
    for (size_t i = 0; i < dy.size(); ++i) {
        if (!(x.values[i] > 0.0)) {
            dy.values[i] = 0.0;
        }
    }
    return dy;
}

/// Nearest-neighbour x2 upsampling.
inline Tensor upsample_forward(const Tensor& x)
{
    Tensor y(x.channels, 2 * x.height, 2 * x.width);
    for (int c = 0; c < y.channels; ++c) {
        for (int r = 0; r < y.height; ++r) {
            for (int col = 0; col < y.width; ++col) {
                y(c, r, col) = x(c, r / 2, col / 2);
            }
        }
    }
    return y;
}

inline Tensor upsample_backward(const Tensor& dy)
{
    Tensor dx(dy.channels, dy.height / 2, dy.width / 2);
    for (int c = 0; c < dy.channels; ++c) {
        for (int r = 0; r < dy.height; ++r) {
            for (int col = 0; col < dy.width; ++col) {
                dx(c, r / 2, col / 2) += dy(c, r, col);
            }
        }
    }
    return dx;
}

inline double sigmoid(double z) { return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

inline Tensor sigmoid_forward(Tensor x)
{
    for (double& v : x.values) {
        v = sigmoid(v);
    }
    return x;
}

/// Takes the sigmoid output y, since dy/dz = y(1-y).
inline Tensor sigmoid_backward(const Tensor& y, Tensor dy)
{
    for (size_t i = 0; i < dy.size(); ++i) {
        dy.values[i] *= y.values[i] * (1.0 - y.values[i]);
    }
    return dy;
}

// ---------------------------------------------------------------------------
// Network

inline constexpr int kDownsampleFactor = 8;

/// Shared encoder and two decoder heads. Layer order here is the checkpoint order.
struct DetectorParams {
    std::array<Conv, 3> encoder{Conv(3, 8, 2), Conv(8, 16, 2), Conv(16, 32, 2)};
    std::array<Conv, 3> head_sm{Conv(32, 16, 1), Conv(16, 8, 1), Conv(8, 1, 1)};
    std::array<Conv, 3> head_cm{Conv(32, 16, 1), Conv(16, 8, 1), Conv(8, 1, 1)};

    static constexpr size_t kLayerCount = 9;

    std::array<Conv*, kLayerCount> layers()
    {
        return {&encoder[0], &encoder[1], &encoder[2], &head_sm[0], &head_sm[1],
                &head_sm[2], &head_cm[0], &head_cm[1], &head_cm[2]};
    }
    std::array<const Conv*, kLayerCount> layers() const
    {
        return {&encoder[0], &encoder[1], &encoder[2], &head_sm[0], &head_sm[1],
                &head_sm[2], &head_cm[0], &head_cm[1], &head_cm[2]};
    }

    size_t parameter_count() const
    {
        size_t n = 0;
        for (const Conv* c : layers()) {
            n += c->parameter_count();
        }
        return n;
    }

    /// Weights then bias, layer by layer.
    std::vector<double> flatten() const
    {
        std::vector<double> out;
        out.reserve(parameter_count());
        for (const Conv* c : layers()) {
            out.insert(out.end(), c->weight.begin(), c->weight.end());
            out.insert(out.end(), c->bias.begin(), c->bias.end());
        }
        return out;
    }

    void unflatten(const std::vector<double>& flat)
    {
        if (flat.size() != parameter_count()) {
            throw ShapeError("parameter vector has " + std::to_string(flat.size()) + " values, expected " +
                             std::to_string(parameter_count()));
        }
        auto it = flat.begin();
        for (Conv* c : layers()) {
            std::copy_n(it, c->weight.size(), c->weight.begin());
            it += static_cast<std::ptrdiff_t>(c->weight.size());
            std::copy_n(it, c->bias.size(), c->bias.begin());
            it += static_cast<std::ptrdiff_t>(c->bias.size());
        }
    }

    /// Same architecture with every value zero; used for gradients and moments.
    DetectorParams zeros_like() const
    {
        DetectorParams z = *this;
        for (Conv* c : z.layers()) {
            std::fill(c->weight.begin(), c->weight.end(), 0.0);
            std::fill(c->bias.begin(), c->bias.end(), 0.0);
        }
        return z;
    }

    bool operator==(const DetectorParams&) const = default;
};

/// Fan-in scaled uniform init, rounded to float so a checkpoint round-trips
/// exactly. ReLU layers use the He bound sqrt(6/fan_in); the two linear
/// output convs use sqrt(3/fan_in) to keep initial masks away from 0 and 1.
/// Biases start at zero.
inline DetectorParams init_params(std::uint64_t seed)
{
    DetectorParams p;
    Rng rng(seed);
    auto layers = p.layers();
    for (size_t l = 0; l < layers.size(); ++l) {
        Conv& c = *layers[l];
        const bool output_layer = l == 5 || l == 8;
        const double fan_in = static_cast<double>(c.in) * 9.0;
        const double bound = std::sqrt((output_layer ? 3.0 : 6.0) / fan_in);
        for (double& w : c.weight) {
            w = static_cast<float>(rng.uniform(-bound, bound));
        }
    }
    return p;
}

/// Every intermediate needed by the backward pass.
struct Activations {
    Tensor input;
    std::array<Tensor, 3> enc_pre;  // conv outputs
    std::array<Tensor, 3> enc_post; // after ReLU
    struct Head {
        std::array<Tensor, 3> up;  // upsampled inputs of each conv
        std::array<Tensor, 3> pre; // conv outputs
        std::array<Tensor, 2> post;
        Tensor out; // sigmoid
    };
    Head sm;
    Head cm;
};

inline void check_input_shape(const Tensor& input)
{
    if (input.channels != 3) {
        throw ShapeError("detector input must have 3 channels, got " + std::to_string(input.channels));
    }
    if (input.height <= 0 || input.width <= 0 || input.height % kDownsampleFactor != 0 ||
        input.width % kDownsampleFactor != 0) {
        throw ShapeError("detector input " + std::to_string(input.width) + "x" + std::to_string(input.height) +
                         " must have height and width divisible by 8");
    }
}

namespace detail {

inline void head_forward(const std::array<Conv, 3>& head, const Tensor& features, Activations::Head& a)
{
    Tensor x = features;
    for (size_t k = 0; k < 3; ++k) {
        a.up[k] = upsample_forward(x);
        a.pre[k] = conv_forward(head[k], a.up[k]);
        if (k < 2) {
            a.post[k] = relu_forward(a.pre[k]);
            x = a.post[k];
        }
    }
    a.out = sigmoid_forward(a.pre[2]);
}

inline Tensor head_backward(const std::array<Conv, 3>& head, const Activations::Head& a, const Tensor& d_out,
                            std::array<Conv, 3>& grad)
{
    Tensor d = sigmoid_backward(a.out, d_out);
    for (size_t k = 3; k-- > 0;) {
        if (k < 2) {
            d = relu_backward(a.pre[k], d);
        }
        d = upsample_backward(conv_backward(head[k], a.up[k], d, grad[k]));
    }
    return d;
}

} // namespace detail

inline Activations forward_activations(const DetectorParams& p, const Tensor& input)
{
    check_input_shape(input);
    Activations a;
    a.input = input;
    const Tensor* x = &a.input;
    for (size_t k = 0; k < 3; ++k) {
        a.enc_pre[k] = conv_forward(p.encoder[k], *x);
        a.enc_post[k] = relu_forward(a.enc_pre[k]);
        x = &a.enc_post[k];
    }
    detail::head_forward(p.head_sm, a.enc_post[2], a.sm);
    detail::head_forward(p.head_cm, a.enc_post[2], a.cm);
    return a;
}

struct Prediction {
    ScalarMap sm;
    ScalarMap cm;
};

inline ScalarMap to_map(const Tensor& t)
{
    ScalarMap m(t.width, t.height);
    m.data = t.values;
    return m;
}

inline Tensor to_tensor(const ScalarMap& m)
{
    Tensor t(1, m.height, m.width);
    t.values = m.data;
    return t;
}

inline Prediction prediction_of(const Activations& a) { return {to_map(a.sm.out), to_map(a.cm.out)}; }

inline Prediction forward(const DetectorParams& p, const Tensor& input)
{
    return prediction_of(forward_activations(p, input));
}

/// Exact reverse-mode gradients for upstream dL/dsm and dL/dcm.
inline DetectorParams backward(const DetectorParams& p, const Activations& a, const ScalarMap& d_sm,
                               const ScalarMap& d_cm)
{
    if (d_sm.width != a.input.width || d_sm.height != a.input.height || d_cm.width != a.input.width ||
        d_cm.height != a.input.height) {
        throw ShapeError("backward: upstream gradients must match the input's spatial size");
    }
    DetectorParams g = p.zeros_like();
    Tensor d_feat = detail::head_backward(p.head_sm, a.sm, to_tensor(d_sm), g.head_sm);
    const Tensor d_feat_cm = detail::head_backward(p.head_cm, a.cm, to_tensor(d_cm), g.head_cm);
    for (size_t i = 0; i < d_feat.size(); ++i) {
        d_feat.values[i] += d_feat_cm.values[i];
    }
    for (size_t k = 3; k-- > 0;) {
        const Tensor d_pre = relu_backward(a.enc_pre[k], d_feat);
        const Tensor& x = k == 0 ? a.input : a.enc_post[k - 1];
        d_feat = conv_backward(p.encoder[k], x, d_pre, g.encoder[k]);
    }
    return g;
}

inline DetectorParams backward(const DetectorParams& p, const Tensor& input, const ScalarMap& d_sm,
                               const ScalarMap& d_cm)
{
    return backward(p, forward_activations(p, input), d_sm, d_cm);
}

// ---------------------------------------------------------------------------
// Checkpoints

inline constexpr char kCheckpointMagic[8] = {'R', 'D', 'N', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Provenance written next to every checkpoint.
struct CheckpointInfo {
    std::uint64_t seed = 0;
    std::int64_t iteration = 0;
    ColorSpace color_space = ColorSpace::lab;
    std::int64_t ramp_iteration = 0;
    double lambda_ren = 1.0;
    double lambda_cm = 1.0;
    double lambda_sm = 1.0;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int batch_size = 1;
    std::string dataset;

    bool operator==(const CheckpointInfo&) const = default;
};

inline std::filesystem::path checkpoint_manifest_path(const std::filesystem::path& ckpt)
{
    return std::filesystem::path(ckpt.string() + ".json");
}

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v)
{
    for (int k = 0; k < 4; ++k) {
        out.push_back(static_cast<char>((v >> (8 * k)) & 0xffu));
    }
}

inline std::uint32_t get_u32(const std::string& in, size_t& pos, const std::string& path)
{
    if (pos + 4 > in.size()) {
        throw IoError(path + ": truncated checkpoint");
    }
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) {
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + static_cast<size_t>(k)])) << (8 * k);
    }
    pos += 4;
    return v;
}

} // namespace detail

inline nlohmann::json to_json(const CheckpointInfo& info)
{
    nlohmann::json j = nlohmann::json::object();
    j["format_version"] = kCheckpointVersion;
    j["seed"] = info.seed;
    j["iteration"] = info.iteration;
    j["color_space"] = to_string(info.color_space);
    j["lambda_schedule"] = {{"ramp_iteration", info.ramp_iteration},
                            {"lambda_ren", info.lambda_ren},
                            {"lambda_cm", info.lambda_cm},
                            {"lambda_sm", info.lambda_sm}};
    j["optimizer"] = {{"name", "adam"},
                      {"learning_rate", info.learning_rate},
                      {"beta1", info.beta1},
                      {"beta2", info.beta2},
                      {"epsilon", info.epsilon}};
    j["batch_size"] = info.batch_size;
    j["dataset"] = info.dataset;
    return j;
}

inline CheckpointInfo checkpoint_info_from_json(const nlohmann::json& j)
{
    CheckpointInfo info;
    info.seed = j.at("seed").get<std::uint64_t>();
    info.iteration = j.at("iteration").get<std::int64_t>();
    info.color_space = color_space_from(j.at("color_space").get<std::string>());
    const auto& s = j.at("lambda_schedule");
    info.ramp_iteration = s.at("ramp_iteration").get<std::int64_t>();
    info.lambda_ren = s.at("lambda_ren").get<double>();
    info.lambda_cm = s.at("lambda_cm").get<double>();
    info.lambda_sm = s.at("lambda_sm").get<double>();
    const auto& o = j.at("optimizer");
    info.learning_rate = o.at("learning_rate").get<double>();
    info.beta1 = o.at("beta1").get<double>();
    info.beta2 = o.at("beta2").get<double>();
    info.epsilon = o.at("epsilon").get<double>();
    info.batch_size = j.at("batch_size").get<int>();
    info.dataset = j.at("dataset").get<std::string>();
    return info;
}

/// Binary layout: magic, u32 version, u32 layer count, then per layer u32
/// (in, out, kernel, stride), then per layer the weights and bias as
/// little-endian float32. Also writes the JSON sidecar.
inline void save_checkpoint(const std::filesystem::path& path, const DetectorParams& p, const CheckpointInfo& info)
{
    std::string bytes(kCheckpointMagic, sizeof(kCheckpointMagic));
    detail::put_u32(bytes, kCheckpointVersion);
    const auto layers = p.layers();
    detail::put_u32(bytes, static_cast<std::uint32_t>(layers.size()));
    for (const Conv* c : layers) {
        detail::put_u32(bytes, static_cast<std::uint32_t>(c->in));
        detail::put_u32(bytes, static_cast<std::uint32_t>(c->out));
        detail::put_u32(bytes, Conv::kKernel);
        detail::put_u32(bytes, static_cast<std::uint32_t>(c->stride));
    }
    for (double v : p.flatten()) {
        detail::put_u32(bytes, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            throw IoError("cannot write checkpoint " + path.string());
        }
    }
    std::ofstream side(checkpoint_manifest_path(path), std::ios::trunc);
    side << to_json(info).dump(1) << "\n";
    if (!side) {
        throw IoError("cannot write " + checkpoint_manifest_path(path).string());
    }
}

inline DetectorParams load_checkpoint_params(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open checkpoint " + path.string());
    }
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::string where = path.string();
    if (bytes.size() < sizeof(kCheckpointMagic) ||
        !std::equal(kCheckpointMagic, kCheckpointMagic + sizeof(kCheckpointMagic), bytes.begin())) {
        throw IoError(where + ": not a detector checkpoint");
    }
    size_t pos = sizeof(kCheckpointMagic);
    const std::uint32_t version = detail::get_u32(bytes, pos, where);
    if (version != kCheckpointVersion) {
        throw CheckpointVersionMismatch(where + ": checkpoint version " + std::to_string(version) + ", expected " +
                                        std::to_string(kCheckpointVersion));
    }
    DetectorParams p;
    const auto layers = p.layers();
    if (detail::get_u32(bytes, pos, where) != layers.size()) {
        throw CheckpointVersionMismatch(where + ": architecture has a different layer count");
    }
    for (const Conv* c : layers) {
        const std::uint32_t in_ch = detail::get_u32(bytes, pos, where);
        const std::uint32_t out_ch = detail::get_u32(bytes, pos, where);
        const std::uint32_t kernel = detail::get_u32(bytes, pos, where);
        const std::uint32_t stride = detail::get_u32(bytes, pos, where);
        if (in_ch != static_cast<std::uint32_t>(c->in) || out_ch != static_cast<std::uint32_t>(c->out) ||
            kernel != Conv::kKernel || stride != static_cast<std::uint32_t>(c->stride)) {
            throw CheckpointVersionMismatch(where + ": architecture descriptor does not match this build");
        }
    }
    std::vector<double> flat(p.parameter_count());
    for (double& v : flat) {
        v = std::bit_cast<float>(detail::get_u32(bytes, pos, where));
    }
    if (pos != bytes.size()) {
        throw IoError(where + ": trailing bytes after parameters");
    }
    p.unflatten(flat);
    return p;
}

inline CheckpointInfo load_checkpoint_info(const std::filesystem::path& path)
{
    const auto side = checkpoint_manifest_path(path);
    std::ifstream in(side);
    if (!in) {
        throw IoError("missing checkpoint manifest " + side.string());
    }
    try {
        const nlohmann::json j = nlohmann::json::parse(in);
        const auto version = j.at("format_version").get<std::uint32_t>();
        if (version != kCheckpointVersion) {
            throw CheckpointVersionMismatch(side.string() + ": manifest version " + std::to_string(version));
        }
        return checkpoint_info_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(side.string() + ": " + e.what());
    }
}

} // namespace rendet
