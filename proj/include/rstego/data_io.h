#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <vector>

#include "rstego/dsp.h"

namespace rstego {

// 8-bit RGB image, interleaved row-major (HWC).
struct Image {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> rgb;

    std::uint8_t at(std::size_t y, std::size_t x, std::size_t c) const { return rgb[(y * width + x) * 3 + c]; }
};

// ---- WAV ----------------------------------------------------------------

enum class WavEncoding { Pcm16, Float32 };

// Mono RIFF/WAVE, PCM16 or IEEE float32. PCM16 maps to [-1, 1) via /32768.
Waveform read_wav(const std::filesystem::path& path);
Waveform decode_wav(std::span<const std::uint8_t> bytes);
void write_wav(const std::filesystem::path& path, const Waveform& w, WavEncoding enc = WavEncoding::Float32);
std::vector<std::uint8_t> encode_wav(const Waveform& w, WavEncoding enc);

// ---- Images -------------------------------------------------------------

// Binary PPM (P6), maxval 255.
Image read_ppm(const std::filesystem::path& path);
Image decode_ppm(std::span<const std::uint8_t> bytes);
void write_ppm(const std::filesystem::path& path, const Image& img);
std::vector<std::uint8_t> encode_ppm(const Image& img);

// Center-crop to a square, then nearest-neighbor resize to side x side.
Image crop_resize(const Image& img, std::size_t side);
// read_ppm followed by crop_resize.
Image read_image(const std::filesystem::path& path, std::size_t side);
void write_image(const std::filesystem::path& path, const Image& img);

// Planar [3,H,W] floats in [0,255] <-> Image (rounded and saturated).
std::vector<float> image_to_planar(const Image& img);
Image planar_to_image(std::span<const float> planar, std::size_t height, std::size_t width);

// ---- Dataset pairing ----------------------------------------------------

struct DatasetSpec {
    std::filesystem::path image_dir;
    std::filesystem::path audio_dir;
    std::size_t image_side = 64;
    std::size_t clip_samples = 0;
    std::uint64_t pairing_seed = 0;
};

struct Pair {
    std::size_t image_index = 0;
    std::size_t clip_index = 0;
    std::size_t offset = 0;
    const Image* image = nullptr;
    Waveform segment;
};

// In-memory corpus: every image and clip is loaded once and validated.
class Dataset {
public:
    explicit Dataset(DatasetSpec spec);
    Dataset(DatasetSpec spec, std::vector<Image> images, std::vector<Waveform> clips);

    const DatasetSpec& spec() const { return spec_; }
    std::size_t num_images() const { return images_.size(); }
    std::size_t num_clips() const { return clips_.size(); }
    const Image& image(std::size_t i) const { return images_.at(i); }
    const Waveform& clip(std::size_t i) const { return clips_.at(i); }

    // Epoch-th pairing: images in seeded shuffled order, each with an
    // independently drawn clip and uniform start offset. Pure in (spec, epoch).
    std::vector<Pair> epoch(std::uint64_t epoch_index) const;

private:
    void validate() const;

    DatasetSpec spec_;
    std::vector<Image> images_;
    std::vector<Waveform> clips_;
};

// Single-consumer stream over successive epochs.
class PairIterator {
public:
    explicit PairIterator(const Dataset& data) : data_(&data) {}
    Pair next();
    std::uint64_t epoch() const { return epoch_; }

private:
    const Dataset* data_;
    std::uint64_t epoch_ = 0;
    std::size_t pos_ = 0;
    std::vector<Pair> current_;
};

// ---- Synthetic corpus ---------------------------------------------------

struct CorpusSpec {
    std::size_t n_images = 4;
    std::size_t n_clips = 4;
    std::size_t image_side = 64;
    std::size_t clip_samples = 0; // minimum length required by the geometry
    std::uint32_t sample_rate = 16000;
    std::uint64_t seed = 0;
};

inline constexpr float kCorpusPeak = 0.9f;

Image synth_image(std::size_t side, std::mt19937_64& rng);
Waveform synth_clip(std::size_t samples, std::uint32_t sample_rate, std::mt19937_64& rng);

// Writes images/img_XXX.ppm and audio/clip_XXX.wav under out_dir.
void generate_corpus(const std::filesystem::path& out_dir, const CorpusSpec& spec);

} // namespace rstego
