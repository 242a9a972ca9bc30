#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rstego/channel.h"
#include "rstego/data_io.h"
#include "rstego/losses.h"
#include "rstego/metrics.h"
#include "rstego/model.h"

namespace rstego {

struct TrainConfig {
    ArchVariant variant = ArchVariant::ResIndep;
    StampGeometry geometry{64, 1, 1};
    std::size_t hop = 63;
    std::uint32_t sample_rate = 16000;
    std::size_t base_width = 32;
    LossWeights weights{0.5f, 1e-4f, 1.0f};
    float lr = 0.01f;
    std::size_t batch = 1;
    std::size_t iterations = 2000;
    NoiseSpec train_noise;
    std::uint64_t seed = 0;
    std::size_t checkpoint_every = 0; // 0: final checkpoint only
    std::size_t dtw_decimation = 32;
    std::filesystem::path log_path;        // empty: no CSV log
    std::filesystem::path checkpoint_path; // empty: no checkpoint file
    std::filesystem::path image_dir;
    std::filesystem::path audio_dir;

    StegoConfig stego() const;
    std::size_t clip_samples() const { return clip_samples_for(geometry, hop); }
    DatasetSpec dataset_spec() const;
    void validate() const;
};

// Flat JSON document with the TrainConfig field names; unknown keys are rejected.
std::string config_to_json(const TrainConfig& c);
TrainConfig config_from_json(const std::string& text, TrainConfig base = {});
TrainConfig load_config(const std::filesystem::path& path, TrainConfig base = {});

inline constexpr const char* kLogHeader = "iteration,total_loss,image_mae,audio_mse,dtw_term,snr_db,ssim";

struct LogRow {
    std::size_t iteration = 0;
    float total_loss = 0.f;
    float image_mae = 0.f;
    float audio_mse = 0.f;
    float dtw_term = 0.f;
    Decibels snr_db = Decibels::infinite();
    double ssim = 0.0;
};

std::string format_log_row(const LogRow& r);

struct TrainResult {
    StegoNet net;
    std::vector<LogRow> log;
};

using ProgressFn = std::function<void(const LogRow&)>;

// End-to-end training: shuffle -> hide -> embed -> istdct -> channel -> stdct
// -> reveal -> total loss -> backward -> Adam. Deterministic in (config, data).
TrainResult train(const TrainConfig& config, const Dataset& data, const ProgressFn& progress = {});

// One pass of the inference pipeline for a single pair.
struct PipelineOutput {
    Waveform container;          // transmitted (pre-channel)
    Waveform received;           // after channel and misalignment
    std::vector<float> revealed; // planar [3,S,S] in [0,255]
    PairMetrics metrics;
};

PipelineOutput run_pipeline(const StegoNet& net, const Image& image, const Waveform& host, const NoiseSpec& noise,
                            long misalign_offset = 0);

struct EvalCell {
    NoiseKind kind = NoiseKind::None;
    double sigma = 0.0;
    MetricsReport report;
};

// Every (kind, sigma) cell over the evaluation pairs (epoch 0 of `data`).
std::vector<EvalCell> evaluate(const StegoNet& net, const Dataset& data, const std::vector<NoiseKind>& kinds,
                               const std::vector<double>& sigmas, std::uint64_t noise_seed = 0,
                               long misalign_offset = 0);

std::string eval_csv(const std::vector<EvalCell>& cells);

struct SweepRow {
    float beta = 0.f;
    Decibels snr_db = Decibels::infinite();
    double ssim = 0.0;
    Decibels psnr_db = Decibels::infinite();
};

std::vector<SweepRow> beta_sweep(const TrainConfig& base, const std::vector<float>& betas, const Dataset& data);
std::string sweep_csv(const std::vector<SweepRow>& rows);

// Payload bits per second: S*S*3*8 / (clip_samples / sample_rate).
double capacity_bps(std::size_t image_side, std::size_t clip_samples, std::uint32_t sample_rate);

} // namespace rstego
