#include "rstego/model.h"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "rstego/errors.h"
#include "rstego/ops.h"

namespace rstego {

std::string_view variant_name(ArchVariant v)
{
    switch (v)
    {
    case ArchVariant::ResIndep: return "res-indep";
    case ArchVariant::ResDep: return "res-dep";
    case ArchVariant::PlainDep: return "plain-dep";
    case ArchVariant::ResScale: return "res-scale";
    }
    return "unknown";
}

ArchVariant parse_variant(std::string_view name)
{
    for (ArchVariant v : {ArchVariant::ResIndep, ArchVariant::ResDep, ArchVariant::PlainDep, ArchVariant::ResScale})
        if (variant_name(v) == name)
            return v;
    throw ContractError("unknown architecture variant '" + std::string(name)
                        + "' (expected res-indep, res-dep, plain-dep or res-scale)");
}

bool is_cover_independent(ArchVariant v)
{
    return v == ArchVariant::ResIndep || v == ArchVariant::ResScale;
}

void StampGeometry::validate() const
{
    if (image_side == 0 || image_side % 2 != 0)
        throw DimensionError("image side must be a positive even number, got " + std::to_string(image_side));
    if (tile_rows == 0 || tile_cols == 0)
        throw DimensionError("tile counts must be positive");
}

void StampGeometry::check_matches(std::size_t spect_bins, std::size_t spect_frames) const
{
    if (spect_bins != bins() || spect_frames != frames())
        throw DimensionError("geometry mismatch: spectrogram is " + std::to_string(spect_bins) + "x"
                             + std::to_string(spect_frames) + " but stamp geometry needs " + std::to_string(bins())
                             + "x" + std::to_string(frames()));
}

std::size_t clip_samples_for(const StampGeometry& g, std::size_t hop)
{
    g.validate();
    return g.bins() + (g.frames() - 1) * hop;
}

// ---- pixel shuffle --------------------------------------------------------

namespace {

// Index of element (c, i, j) of a [4,S,S] block within the [2S,2S] map.
inline std::size_t shuffled_index(std::size_t c, std::size_t i, std::size_t j, std::size_t s)
{
    const std::size_t di = c / 2, dj = c % 2;
    return (2 * i + di) * (2 * s) + (2 * j + dj);
}

} // namespace

Tensor pixel_shuffle(Tape& tape, const Tensor& x)
{
    if (x.rank() != 4 || x.dim(1) != 4 || x.dim(2) != x.dim(3))
        throw DimensionError("pixel_shuffle: expected [N,4,S,S], got " + shape_str(x.shape()));
    const std::size_t n = x.dim(0), s = x.dim(2), block = 4 * s * s;
    Tensor out({n, 1, 2 * s, 2 * s});
    auto in = x.data();
    auto o = out.data();
    for (std::size_t b = 0; b < n; b++)
        for (std::size_t c = 0; c < 4; c++)
            for (std::size_t i = 0; i < s; i++)
                for (std::size_t j = 0; j < s; j++)
                    o[b * block + shuffled_index(c, i, j, s)] = in[b * block + (c * s + i) * s + j];
    tape.record("pixel_shuffle", {x}, out, [=]() mutable {
        auto g = out.grad();
        auto gx = x.grad();
        for (std::size_t b = 0; b < n; b++)
            for (std::size_t c = 0; c < 4; c++)
                for (std::size_t i = 0; i < s; i++)
                    for (std::size_t j = 0; j < s; j++)
                        gx[b * block + (c * s + i) * s + j] += g[b * block + shuffled_index(c, i, j, s)];
    });
    return out;
}

Tensor pixel_unshuffle(Tape& tape, const Tensor& x)
{
    if (x.rank() != 4 || x.dim(1) != 1 || x.dim(2) != x.dim(3))
        throw DimensionError("pixel_unshuffle: expected [N,1,2S,2S], got " + shape_str(x.shape()));
    if (x.dim(2) % 2 != 0)
        throw DimensionError("pixel_unshuffle: side length must be even, got " + std::to_string(x.dim(2)));
    const std::size_t n = x.dim(0), s = x.dim(2) / 2, block = 4 * s * s;
    Tensor out({n, 4, s, s});
    auto in = x.data();
    auto o = out.data();
    for (std::size_t b = 0; b < n; b++)
        for (std::size_t c = 0; c < 4; c++)
            for (std::size_t i = 0; i < s; i++)
                for (std::size_t j = 0; j < s; j++)
                    o[b * block + (c * s + i) * s + j] = in[b * block + shuffled_index(c, i, j, s)];
    tape.record("pixel_unshuffle", {x}, out, [=]() mutable {
        auto g = out.grad();
        auto gx = x.grad();
        for (std::size_t b = 0; b < n; b++)
            for (std::size_t c = 0; c < 4; c++)
                for (std::size_t i = 0; i < s; i++)
                    for (std::size_t j = 0; j < s; j++)
                        gx[b * block + shuffled_index(c, i, j, s)] += g[b * block + (c * s + i) * s + j];
    });
    return out;
}

Tensor normalize_image(const Image& img)
{
    if (img.width != img.height)
        throw DimensionError("normalize_image: image must be square");
    const std::size_t s = img.width;
    std::vector<float> planar = image_to_planar(img);
    for (float& v : planar)
        v /= 255.f;
    return Tensor({1, 3, s, s}, std::move(planar));
}

Tensor shuffle_image(const Tensor& normalized)
{
    if (normalized.rank() != 4 || normalized.dim(0) != 1 || normalized.dim(1) != 3)
        throw DimensionError("shuffle_image: expected [1,3,S,S], got " + shape_str(normalized.shape()));
    Tape tape = Tape::inference();
    Tensor zero({1, 1, normalized.dim(2), normalized.dim(3)});
    return pixel_shuffle(tape, concat_channels(tape, normalized, zero));
}

// ---- tiling -----------------------------------------------------------------

Tensor tile(Tape& tape, const Tensor& stamp, std::size_t rows, std::size_t cols)
{
    if (stamp.rank() != 2 || stamp.dim(0) != stamp.dim(1))
        throw DimensionError("tile: stamp must be square [2S,2S], got " + shape_str(stamp.shape()));
    if (rows == 0 || cols == 0)
        throw DimensionError("tile: tile counts must be positive");
    const std::size_t side = stamp.dim(0), width = cols * side;
    Tensor out({rows * side, width});
    auto src = stamp.data();
    auto o = out.data();
    for (std::size_t b = 0; b < rows * side; b++)
        for (std::size_t f = 0; f < width; f++)
            o[b * width + f] = src[(b % side) * side + f % side];
    tape.record("tile", {stamp}, out, [=]() mutable {
        auto g = out.grad();
        auto gs = stamp.grad();
        for (std::size_t b = 0; b < rows * side; b++)
            for (std::size_t f = 0; f < width; f++)
                gs[(b % side) * side + f % side] += g[b * width + f];
    });
    return out;
}

namespace {

std::vector<float> average_tiles(std::span<const float> values, const StampGeometry& g)
{
    const std::size_t side = g.shuffled_side(), width = g.frames();
    std::vector<double> acc(side * side, 0.0);
    for (std::size_t b = 0; b < g.bins(); b++)
        for (std::size_t f = 0; f < width; f++)
            acc[(b % side) * side + f % side] += values[b * width + f];
    const double k = static_cast<double>(g.tile_rows * g.tile_cols);
    std::vector<float> out(side * side);
    for (std::size_t i = 0; i < out.size(); i++)
        out[i] = static_cast<float>(acc[i] / k);
    return out;
}

} // namespace

Tensor tile_average(Tape& tape, const Tensor& spect, const StampGeometry& g)
{
    g.validate();
    if (spect.rank() != 2)
        throw DimensionError("tile_average: expected [bins,frames], got " + shape_str(spect.shape()));
    g.check_matches(spect.dim(0), spect.dim(1));
    const std::size_t side = g.shuffled_side();
    Tensor out({side, side}, average_tiles(spect.data(), g));
    tape.record("tile_average", {spect}, out, [=]() mutable {
        auto go = out.grad();
        auto gs = spect.grad();
        const float inv = 1.f / static_cast<float>(g.tile_rows * g.tile_cols);
        const std::size_t width = g.frames();
        for (std::size_t b = 0; b < g.bins(); b++)
            for (std::size_t f = 0; f < width; f++)
                gs[b * width + f] += inv * go[(b % side) * side + f % side];
    });
    return out;
}

std::vector<float> tile_average(const Spectrogram& spect, const StampGeometry& g)
{
    g.validate();
    g.check_matches(spect.bins(), spect.frames());
    return average_tiles(spect.values, g);
}

// ---- U-Net --------------------------------------------------------------------

namespace {

Tensor uniform_tensor(Shape shape, float bound, std::mt19937_64& rng)
{
    std::uniform_real_distribution<float> dist(-bound, bound);
    Tensor t(std::move(shape), true);
    for (float& v : t.data())
        v = dist(rng);
    return t;
}

constexpr std::size_t kDownStride = 64;

} // namespace

UNet::UNet(std::size_t in_channels, std::size_t base_width, std::mt19937_64& rng, float alpha)
    : in_channels_(in_channels), alpha_(alpha)
{
    if (in_channels == 0 || base_width == 0)
        throw DimensionError("UNet: channel counts must be positive");
    const std::size_t w = base_width;
    auto make_conv = [&](std::size_t cin, std::size_t cout) {
        const float bound = 1.f / std::sqrt(static_cast<float>(cin * 9));
        Layer l{uniform_tensor({cout, cin, 3, 3}, bound, rng), uniform_tensor({cout}, bound, rng),
                Tensor({cout}, std::vector<float>(cout, 1.f), true), Tensor({cout}, true)};
        convs_.push_back(std::move(l));
    };
    auto make_tconv = [&](std::size_t cin, std::size_t cout) {
        const float bound = 1.f / std::sqrt(static_cast<float>(cout * 9));
        Layer l{uniform_tensor({cin, cout, 3, 3}, bound, rng), uniform_tensor({cout}, bound, rng),
                Tensor({cout}, std::vector<float>(cout, 1.f), true), Tensor({cout}, true)};
        tconvs_.push_back(std::move(l));
    };
    // Creation order fixes the RNG stream: down path, then the up path in execution order.
    make_conv(in_channels, w);    // c1 s2
    make_conv(w, w);              // c2 s4
    make_conv(w, 2 * w);          // c3 s2
    make_conv(2 * w, 2 * w);      // c4 s4
    make_tconv(2 * w, 2 * w);     // t1 s4
    make_conv(4 * w, 2 * w);      // c5 (t1 ++ c3)
    make_tconv(2 * w, w);         // t2 s2
    make_conv(2 * w, w);          // c6 (t2 ++ c2)
    make_tconv(w, w);             // t3 s4
    make_conv(2 * w, w);          // c7 (t3 ++ c1)
    make_tconv(w, w);             // t4 s2
    make_conv(w + in_channels, w); // c8 (t4 ++ input)
    const float bound = 1.f / std::sqrt(static_cast<float>(w * 9));
    final_weight_ = uniform_tensor({1, w, 3, 3}, bound, rng);
    final_bias_ = uniform_tensor({1}, bound, rng);
}

Tensor UNet::block(Tape& tape, const Layer& l, const Tensor& x, bool transposed, std::size_t stride) const
{
    Tensor y;
    if (transposed)
        y = conv_transpose2d(tape, x, l.weight, l.bias, {stride, 1, stride == 4 ? 3u : 1u});
    else
        y = conv2d(tape, x, l.weight, l.bias, {stride, 1});
    return leaky_relu(tape, batch_norm2d(tape, y, l.gamma, l.beta), alpha_);
}

Tensor UNet::forward(Tape& tape, const Tensor& x) const
{
    if (x.rank() != 4 || x.dim(1) != in_channels_)
        throw DimensionError("UNet: expected [N," + std::to_string(in_channels_) + ",H,W], got "
                             + shape_str(x.shape()));
    if (x.dim(2) % kDownStride != 0 || x.dim(3) % kDownStride != 0)
        throw DimensionError("UNet: spatial size " + std::to_string(x.dim(2)) + "x" + std::to_string(x.dim(3))
                             + " must be divisible by 64");
    const Tensor d1 = block(tape, convs_[0], x, false, 2);
    const Tensor d2 = block(tape, convs_[1], d1, false, 4);
    const Tensor d3 = block(tape, convs_[2], d2, false, 2);
    const Tensor d4 = block(tape, convs_[3], d3, false, 4);

    Tensor u = block(tape, tconvs_[0], d4, true, 4);
    u = block(tape, convs_[4], concat_channels(tape, u, d3), false, 1);
    u = block(tape, tconvs_[1], u, true, 2);
    u = block(tape, convs_[5], concat_channels(tape, u, d2), false, 1);

    u = block(tape, tconvs_[2], u, true, 4);
    u = block(tape, convs_[6], concat_channels(tape, u, d1), false, 1);
    u = block(tape, tconvs_[3], u, true, 2);
    u = block(tape, convs_[7], concat_channels(tape, u, x), false, 1);

    return conv2d(tape, u, final_weight_, final_bias_, {1, 1});
}

void UNet::collect(const std::string& prefix, std::vector<NamedTensor>& out) const
{
    auto push = [&](const std::string& name, const Layer& l) {
        out.push_back({prefix + name + ".weight", l.weight});
        out.push_back({prefix + name + ".bias", l.bias});
        out.push_back({prefix + name + ".bn_gamma", l.gamma});
        out.push_back({prefix + name + ".bn_beta", l.beta});
    };
    for (std::size_t i = 0; i < convs_.size(); i++)
        push("conv" + std::to_string(i + 1), convs_[i]);
    for (std::size_t i = 0; i < tconvs_.size(); i++)
        push("tconv" + std::to_string(i + 1), tconvs_[i]);
    out.push_back({prefix + "out.weight", final_weight_});
    out.push_back({prefix + "out.bias", final_bias_});
}

// ---- StegoNet -----------------------------------------------------------------

namespace {

constexpr const char* kMetaName = "meta.config";
constexpr float kScaleInit = 0.01f;

} // namespace

StegoNet::StegoNet(StegoConfig config, std::uint64_t seed)
    : config_(config)
{
    build(seed);
}

void StegoNet::build(std::uint64_t seed)
{
    config_.geometry.validate();
    if (config_.hop == 0 || config_.hop > config_.frame_len())
        throw DimensionError("hop must be in [1, frame_len]");
    std::mt19937_64 rng(seed);
    switch (config_.variant)
    {
    case ArchVariant::ResIndep:
        hiding_ = std::make_unique<UNet>(1, config_.base_width, rng);
        break;
    case ArchVariant::ResDep:
    case ArchVariant::PlainDep:
        hiding_ = std::make_unique<UNet>(2, config_.base_width, rng);
        break;
    case ArchVariant::ResScale:
        scale_ = Tensor({1}, {kScaleInit}, true);
        break;
    }
    reveal_ = std::make_unique<UNet>(1, config_.base_width, rng);
}

StegoNet::StegoNet(const std::vector<NamedTensor>& checkpoint)
{
    auto meta = std::find_if(checkpoint.begin(), checkpoint.end(),
                             [](const NamedTensor& t) { return t.name == kMetaName; });
    if (meta == checkpoint.end())
        throw FormatError("checkpoint has no meta.config record");
    auto m = meta->tensor.data();
    if (m.size() != 7)
        throw FormatError("checkpoint meta.config has unexpected length");
    auto as_size = [](float v) { return static_cast<std::size_t>(std::lround(v)); };
    const int variant = static_cast<int>(std::lround(m[0]));
    if (variant < 0 || variant > 3)
        throw FormatError("checkpoint meta.config names an unknown variant");
    config_.variant = static_cast<ArchVariant>(variant);
    config_.geometry = StampGeometry{as_size(m[1]), as_size(m[2]), as_size(m[3])};
    config_.base_width = as_size(m[4]);
    config_.hop = as_size(m[5]);
    config_.sample_rate = static_cast<std::uint32_t>(as_size(m[6]));
    build(0);

    for (NamedTensor& p : named_parameters())
    {
        auto it = std::find_if(checkpoint.begin(), checkpoint.end(),
                               [&](const NamedTensor& t) { return t.name == p.name; });
        if (it == checkpoint.end())
            throw FormatError("checkpoint is missing parameter " + p.name);
        if (it->tensor.shape() != p.tensor.shape())
            throw FormatError("checkpoint parameter " + p.name + " has shape " + shape_str(it->tensor.shape())
                              + ", expected " + shape_str(p.tensor.shape()));
        std::copy(it->tensor.data().begin(), it->tensor.data().end(), p.tensor.data().begin());
    }
}

Tensor StegoNet::hide(Tape& tape, const Tensor& shuffled, const Tensor* host_summary) const
{
    const std::size_t side = config_.geometry.shuffled_side();
    if (shuffled.shape() != Shape{1, 1, side, side})
        throw DimensionError("hide: expected shuffled image [1,1," + std::to_string(side) + ","
                             + std::to_string(side) + "], got " + shape_str(shuffled.shape()));
    switch (config_.variant)
    {
    case ArchVariant::ResIndep:
        return hiding_->forward(tape, shuffled);
    case ArchVariant::ResScale:
        return scale_by(tape, shuffled, scale_);
    case ArchVariant::ResDep:
    case ArchVariant::PlainDep:
        if (host_summary == nullptr)
            throw ContractError("hide: cover-dependent variant requires a host summary");
        return hiding_->forward(tape, concat_channels(tape, shuffled, *host_summary));
    }
    throw ContractError("hide: unknown variant");
}

EmbedResult StegoNet::embed(Tape& tape, const Tensor& image, const Tensor& host) const
{
    const StampGeometry& g = config_.geometry;
    const std::size_t side = g.shuffled_side();
    if (host.rank() != 2)
        throw DimensionError("embed: host spectrogram must be [bins,frames]");
    g.check_matches(host.dim(0), host.dim(1));
    const Tensor shuffled = shuffle_image(image);

    Tensor summary;
    if (!is_cover_independent(config_.variant))
        summary = reshape(tape, tile_average(tape, host, g), {1, 1, side, side});
    const Tensor encoded =
        reshape(tape, hide(tape, shuffled, summary.defined() ? &summary : nullptr), {side, side});
    const Tensor tiled = tile(tape, encoded, g.tile_rows, g.tile_cols);
    if (config_.variant == ArchVariant::PlainDep)
        return {encoded, tiled};
    return {encoded, add(tape, host, tiled)};
}

Tensor StegoNet::reveal_raw(Tape& tape, const Tensor& container) const
{
    const StampGeometry& g = config_.geometry;
    const std::size_t side = g.shuffled_side();
    if (container.rank() != 2)
        throw DimensionError("reveal: container spectrogram must be [bins,frames]");
    g.check_matches(container.dim(0), container.dim(1));
    const Tensor avg = reshape(tape, tile_average(tape, container, g), {1, 1, side, side});
    const Tensor out = pixel_unshuffle(tape, reveal_->forward(tape, avg));
    return narrow_channels(tape, out, 0, 3);
}

std::vector<NamedTensor> StegoNet::named_parameters() const
{
    std::vector<NamedTensor> out;
    if (hiding_)
        hiding_->collect("hide.", out);
    if (scale_.defined())
        out.push_back({"scale.weight", scale_});
    reveal_->collect("reveal.", out);
    return out;
}

std::vector<Tensor> StegoNet::parameters() const
{
    std::vector<Tensor> out;
    for (const NamedTensor& p : named_parameters())
        out.push_back(p.tensor);
    return out;
}

std::size_t StegoNet::parameter_count() const
{
    std::size_t n = 0;
    for (const NamedTensor& p : named_parameters())
        n += p.tensor.numel();
    return n;
}

std::vector<NamedTensor> StegoNet::checkpoint_tensors() const
{
    std::vector<NamedTensor> out;
    const StampGeometry& g = config_.geometry;
    out.push_back({kMetaName,
                   Tensor({7}, {static_cast<float>(static_cast<int>(config_.variant)), static_cast<float>(g.image_side),
                                static_cast<float>(g.tile_rows), static_cast<float>(g.tile_cols),
                                static_cast<float>(config_.base_width), static_cast<float>(config_.hop),
                                static_cast<float>(config_.sample_rate)})});
    for (NamedTensor& p : named_parameters())
        out.push_back(std::move(p));
    return out;
}

VariantOutput variant_forward(Tape& tape, const StegoNet& net, const Tensor& image, const Tensor& host)
{
    EmbedResult e = net.embed(tape, image, host);
    return {e.container, net.reveal_raw(tape, e.container)};
}

std::vector<float> denormalize(const Tensor& revealed)
{
    if (revealed.rank() != 4 || revealed.dim(0) != 1 || revealed.dim(1) != 3)
        throw DimensionError("denormalize: expected [1,3,S,S], got " + shape_str(revealed.shape()));
    std::vector<float> out(revealed.data().begin(), revealed.data().end());
    for (float& v : out)
        v = std::clamp(v, 0.f, 1.f) * 255.f;
    return out;
}

std::vector<float> reveal(const StegoNet& net, const Spectrogram& container)
{
    Tape tape = Tape::inference();
    const Tensor c({container.bins(), container.frames()}, container.values);
    return denormalize(net.reveal_raw(tape, c));
}

// ---- stamps -------------------------------------------------------------------

Stamp compute_stamp(const StegoNet& net, const Image& image, const Digest& checkpoint_digest)
{
    if (!is_cover_independent(net.variant()))
        throw ContractError("cover-dependent variant cannot precompute stamps");
    const StampGeometry& g = net.config().geometry;
    if (image.width != g.image_side || image.height != g.image_side)
        throw DimensionError("compute_stamp: image must be " + std::to_string(g.image_side) + "x"
                             + std::to_string(g.image_side));
    Tape tape = Tape::inference();
    const Tensor residual = net.hide(tape, shuffle_image(normalize_image(image)), nullptr);
    check_finite(residual.data(), "stamp residual");
    return Stamp{{residual.data().begin(), residual.data().end()}, g, checkpoint_digest};
}

Spectrogram embed(const Stamp& stamp, const Spectrogram& host)
{
    const StampGeometry& g = stamp.geometry;
    g.validate();
    g.check_matches(host.bins(), host.frames());
    const std::size_t side = g.shuffled_side(), width = host.frames();
    if (stamp.residual.size() != side * side)
        throw DimensionError("embed: stamp payload does not match its geometry");
    Spectrogram out = host;
    for (std::size_t b = 0; b < host.bins(); b++)
        for (std::size_t f = 0; f < width; f++)
            out.values[b * width + f] = host.values[b * width + f] + stamp.residual[(b % side) * side + f % side];
    return out;
}

namespace {
constexpr char kStampMagic[4] = {'P', 'X', 'W', 'R'};
}

std::vector<std::uint8_t> encode_stamp(const Stamp& s)
{
    const std::size_t side = s.geometry.shuffled_side();
    if (s.residual.size() != side * side)
        throw DimensionError("encode_stamp: payload does not match geometry");
    std::vector<std::uint8_t> out(kStampMagic, kStampMagic + 4);
    le::put_u32(out, kStampVersion);
    le::put_u32(out, static_cast<std::uint32_t>(side));
    le::put_u32(out, static_cast<std::uint32_t>(s.geometry.tile_rows));
    le::put_u32(out, static_cast<std::uint32_t>(s.geometry.tile_cols));
    out.insert(out.end(), s.checkpoint_digest.begin(), s.checkpoint_digest.end());
    for (float v : s.residual)
        le::put_f32(out, v);
    return out;
}

Stamp decode_stamp(std::span<const std::uint8_t> bytes)
{
    le::Reader r(bytes);
    auto magic = r.take(4);
    if (std::memcmp(magic.data(), kStampMagic, 4) != 0)
        throw FormatError("stamp: bad magic (expected PXWR)");
    const std::uint32_t version = r.u32();
    if (version != kStampVersion)
        throw FormatError("stamp: unsupported version " + std::to_string(version));
    const std::uint32_t side = r.u32();
    if (side == 0 || side % 4 != 0)
        throw FormatError("stamp: side must be a positive multiple of 4");
    Stamp s;
    s.geometry.image_side = side / 2;
    s.geometry.tile_rows = r.u32();
    s.geometry.tile_cols = r.u32();
    auto digest = r.take(32);
    std::copy(digest.begin(), digest.end(), s.checkpoint_digest.begin());
    if (r.remaining() != static_cast<std::size_t>(side) * side * 4)
        throw FormatError("stamp: payload length does not match side " + std::to_string(side));
    s.residual.resize(static_cast<std::size_t>(side) * side);
    for (float& v : s.residual)
        v = r.f32();
    s.geometry.validate();
    return s;
}

void save_stamp(const std::filesystem::path& path, const Stamp& s) { write_file_bytes(path, encode_stamp(s)); }

Stamp load_stamp(const std::filesystem::path& path) { return decode_stamp(read_file_bytes(path)); }

} // namespace rstego
