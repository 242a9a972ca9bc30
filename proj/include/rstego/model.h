#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "rstego/checkpoint.h"
#include "rstego/data_io.h"
#include "rstego/dsp.h"
#include "rstego/tensor.h"

namespace rstego {

enum class ArchVariant { ResIndep, ResDep, PlainDep, ResScale };

std::string_view variant_name(ArchVariant v);
ArchVariant parse_variant(std::string_view name);
// Variants whose hiding path never reads the host.
bool is_cover_independent(ArchVariant v);

// The 2S x 2S shuffled image tiled tile_rows x tile_cols over the spectrogram.
struct StampGeometry {
    std::size_t image_side = 64;
    std::size_t tile_rows = 1;
    std::size_t tile_cols = 1;

    std::size_t shuffled_side() const { return 2 * image_side; }
    std::size_t bins() const { return tile_rows * shuffled_side(); }
    std::size_t frames() const { return tile_cols * shuffled_side(); }
    void validate() const;
    // Throws DimensionError unless bins x frames match.
    void check_matches(std::size_t spect_bins, std::size_t spect_frames) const;
};

// Samples needed for exactly geometry.frames() frames at the given hop.
std::size_t clip_samples_for(const StampGeometry& g, std::size_t hop);

inline constexpr float kLeakyAlpha = 0.8f;

// ---- pixel shuffle --------------------------------------------------------

// [N,4,S,S] -> [N,1,2S,2S]; out[2i+di, 2j+dj] = in[2*di+dj, i, j].
Tensor pixel_shuffle(Tape& tape, const Tensor& x);
// Exact inverse of pixel_shuffle.
Tensor pixel_unshuffle(Tape& tape, const Tensor& x);

// Image -> [1,3,S,S] in [0,1].
Tensor normalize_image(const Image& img);
// [1,3,S,S] -> [1,1,2S,2S] with a zero fourth channel.
Tensor shuffle_image(const Tensor& normalized);

// ---- tiling -----------------------------------------------------------------

// [2S,2S] -> [rows*2S, cols*2S]
Tensor tile(Tape& tape, const Tensor& stamp, std::size_t rows, std::size_t cols);
// [rows*2S, cols*2S] -> [2S,2S], mean over tiles.
Tensor tile_average(Tape& tape, const Tensor& spect, const StampGeometry& g);
std::vector<float> tile_average(const Spectrogram& spect, const StampGeometry& g);

// ---- networks -----------------------------------------------------------------

// U-Net with two stride-(2,4) down blocks and two mirrored up blocks. Maps
// [N,Cin,H,W] to [N,1,H,W] for H, W divisible by 64.
class UNet {
public:
    UNet(std::size_t in_channels, std::size_t base_width, std::mt19937_64& rng, float alpha = kLeakyAlpha);

    Tensor forward(Tape& tape, const Tensor& x) const;

    std::size_t in_channels() const { return in_channels_; }
    std::size_t conv_layer_count() const { return convs_.size() + tconvs_.size(); }
    void collect(const std::string& prefix, std::vector<NamedTensor>& out) const;

private:
    struct Layer {
        Tensor weight, bias, gamma, beta;
    };
    Tensor block(Tape& tape, const Layer& l, const Tensor& x, bool transposed, std::size_t stride) const;

    std::size_t in_channels_;
    float alpha_;
    std::vector<Layer> convs_;  // c1..c8
    std::vector<Layer> tconvs_; // t1..t4
    Tensor final_weight_, final_bias_;
};

struct StegoConfig {
    ArchVariant variant = ArchVariant::ResIndep;
    StampGeometry geometry;
    std::size_t base_width = 32;
    std::size_t hop = 63;
    std::uint32_t sample_rate = 16000;

    std::size_t frame_len() const { return geometry.bins(); }
    std::size_t clip_samples() const { return clip_samples_for(geometry, hop); }
};

struct EmbedResult {
    Tensor encoded;   // hiding-path output [2S,2S] (residual, or full map for PlainDep)
    Tensor container; // [bins, frames]
};

class StegoNet {
public:
    StegoNet(StegoConfig config, std::uint64_t seed);
    // Restores a network from checkpoint tensors (including the meta record).
    explicit StegoNet(const std::vector<NamedTensor>& checkpoint);

    const StegoConfig& config() const { return config_; }
    ArchVariant variant() const { return config_.variant; }

    // Host-side encoding. `shuffled` is [1,1,2S,2S]; `host_summary` (same shape)
    // is read only by the cover-dependent variants.
    Tensor hide(Tape& tape, const Tensor& shuffled, const Tensor* host_summary) const;

    // normalized image [1,3,S,S] + host spectrogram [bins,frames] -> container.
    EmbedResult embed(Tape& tape, const Tensor& image, const Tensor& host) const;
    // container [bins,frames] -> unclipped revealed image [1,3,S,S] (normalized scale).
    Tensor reveal_raw(Tape& tape, const Tensor& container) const;

    std::vector<Tensor> parameters() const;
    std::vector<NamedTensor> named_parameters() const;
    std::size_t parameter_count() const;
    // Parameters plus a "meta.config" record describing variant and geometry.
    std::vector<NamedTensor> checkpoint_tensors() const;

    const UNet* hiding_net() const { return hiding_.get(); }
    const UNet& reveal_net() const { return *reveal_; }
    Tensor scale_weight() const { return scale_; }

private:
    void build(std::uint64_t seed);

    StegoConfig config_;
    std::unique_ptr<UNet> hiding_;
    std::unique_ptr<UNet> reveal_;
    Tensor scale_;
};

struct VariantOutput {
    Tensor container;
    Tensor revealed; // unclipped, normalized scale
};

// Full forward of one variant without a transmission channel in between.
VariantOutput variant_forward(Tape& tape, const StegoNet& net, const Tensor& image, const Tensor& host);

// Unclipped [1,3,S,S] -> planar [3,S,S] in [0,255] after clipping to [0,1].
std::vector<float> denormalize(const Tensor& revealed);

// container spectrogram -> planar [3,S,S] image in [0,255].
std::vector<float> reveal(const StegoNet& net, const Spectrogram& container);

// ---- stamps -------------------------------------------------------------------

struct Stamp {
    std::vector<float> residual; // [2S x 2S] row-major
    StampGeometry geometry;
    Digest checkpoint_digest{};
};

// Host-free residual for a cover-independent network.
Stamp compute_stamp(const StegoNet& net, const Image& image, const Digest& checkpoint_digest);

// container[b,f] = host[b,f] + residual[b mod 2S, f mod 2S].
Spectrogram embed(const Stamp& stamp, const Spectrogram& host);

// "PXWR" | u32 version=1 | u32 side | u32 k_b | u32 k_f | 32-byte digest | f32 payload
inline constexpr std::uint32_t kStampVersion = 1;
std::vector<std::uint8_t> encode_stamp(const Stamp& s);
Stamp decode_stamp(std::span<const std::uint8_t> bytes);
void save_stamp(const std::filesystem::path& path, const Stamp& s);
Stamp load_stamp(const std::filesystem::path& path);

} // namespace rstego
