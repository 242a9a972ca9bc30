#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rstego/tensor.h"

namespace rstego {

struct Waveform {
    std::vector<float> samples;
    std::uint32_t sample_rate = 16000;
};

struct FrameSpec {
    std::size_t frame_len = 0;
    std::size_t hop = 0;
    std::size_t num_frames = 0;

    // Frames that fit in `length` samples: floor((length - frame_len) / hop) + 1.
    static FrameSpec for_length(std::size_t frame_len, std::size_t hop, std::size_t length);
    // Samples spanned by the frames: frame_len + (num_frames - 1) * hop.
    std::size_t covered() const { return frame_len + (num_frames - 1) * hop; }
};

std::size_t num_frames_for(std::size_t length, std::size_t frame_len, std::size_t hop);

// STDCT coefficients, row-major [frame_len bins x num_frames]. Samples past the
// last frame are kept verbatim in `trailing` and restored by istdct.
struct Spectrogram {
    std::vector<float> values;
    FrameSpec spec;
    std::size_t source_len = 0;
    std::vector<float> trailing;

    std::size_t bins() const { return spec.frame_len; }
    std::size_t frames() const { return spec.num_frames; }
    float at(std::size_t bin, std::size_t frame) const { return values[bin * spec.num_frames + frame]; }
};

// Orthonormal DCT-II / DCT-III (mutual inverses and transposes).
std::vector<float> dct2(std::span<const float> frame);
std::vector<float> dct3(std::span<const float> coeffs);

// Row-major N x N DCT-II basis, entry [k][n] = a(k) cos(pi (2n+1) k / 2N).
// Computed once per N and cached for the life of the process.
std::span<const float> dct_basis(std::size_t n);

Spectrogram stdct(std::span<const float> samples, std::size_t frame_len, std::size_t hop);
Spectrogram stdct(const Waveform& w, std::size_t frame_len, std::size_t hop);
std::vector<float> istdct(const Spectrogram& s);

// Adjoints of the two linear maps restricted to the framed region.
//   stdct_adjoint:  [frame_len x num_frames] -> covered samples (overlap-add of dct3 columns)
//   istdct_adjoint: covered samples -> [frame_len x num_frames] (dct2 of coverage-weighted frames)
std::vector<float> stdct_adjoint(std::span<const float> coeffs, const FrameSpec& spec);
std::vector<float> istdct_adjoint(std::span<const float> samples, const FrameSpec& spec);

// Differentiable versions on the tape.
// wave: [L] with L >= frame_len -> [frame_len, num_frames]; samples past the
// framed region are dropped (they carry no coefficients).
Tensor stdct(Tape& tape, const Tensor& wave, std::size_t frame_len, std::size_t hop);
// spect: [frame_len, num_frames] -> [covered + trailing.size()]; trailing
// samples are appended as constants.
Tensor istdct(Tape& tape, const Tensor& spect, std::size_t hop, std::span<const float> trailing = {});

} // namespace rstego
