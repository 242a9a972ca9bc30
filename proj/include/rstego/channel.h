#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "rstego/dsp.h"

namespace rstego {

enum class NoiseKind { None, Awgn, Speckle };

std::string_view noise_name(NoiseKind k);
NoiseKind parse_noise(std::string_view name);

struct NoiseSpec {
    NoiseKind kind = NoiseKind::None;
    double sigma = 0.0; // ||perturbation||_2 / ||signal||_2
    std::uint64_t seed = 0;

    bool is_identity() const { return kind == NoiseKind::None || sigma == 0.0; }
};

// One draw of the channel for a given input: out = gain * c + offset. AWGN
// fills `offset`, speckle fills `gain`; the other vector is empty.
struct NoiseDraw {
    std::vector<float> offset;
    std::vector<float> gain;
};

NoiseDraw draw_noise(std::span<const float> c, const NoiseSpec& spec);

// Perturbation added to `c`: awgn gives n, speckle gives c*m; in both cases
// scaled so its L2 norm is sigma * ||c||_2. Empty when the channel is identity.
std::vector<float> noise_perturbation(std::span<const float> c, const NoiseSpec& spec);

Waveform apply_noise(const Waveform& c, const NoiseSpec& spec);

// Circular shift; positive offset delays the capture (out[i] = c[i - offset]).
Waveform misalign(const Waveform& c, long offset_samples);

} // namespace rstego
