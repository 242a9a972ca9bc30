#include "rstego/dsp.h"

#include <Eigen/Core>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "rstego/errors.h"

namespace rstego {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

std::vector<float> build_basis(std::size_t n)
{
    std::vector<float> b(n * n);
    const double nn = static_cast<double>(n);
    for (std::size_t k = 0; k < n; k++)
    {
        const double a = k == 0 ? std::sqrt(1.0 / nn) : std::sqrt(2.0 / nn);
        for (std::size_t i = 0; i < n; i++)
        {
            // Reduce the angle modulo 4N before the cosine to keep it exact for large N.
            const std::size_t m = ((2 * i + 1) * k) % (4 * n);
            b[k * n + i] = static_cast<float>(a * std::cos(std::numbers::pi * static_cast<double>(m) / (2.0 * nn)));
        }
    }
    return b;
}

void check_spec(const FrameSpec& spec)
{
    if (spec.frame_len == 0 || spec.hop == 0 || spec.num_frames == 0)
        throw DimensionError("frame spec must have positive frame_len, hop and num_frames");
    if (spec.hop > spec.frame_len)
        throw DimensionError("hop must not exceed frame_len");
}

// frames[n, t] = samples[t*hop + n]
std::vector<float> gather_frames(std::span<const float> samples, const FrameSpec& spec)
{
    std::vector<float> frames(spec.frame_len * spec.num_frames);
    for (std::size_t n = 0; n < spec.frame_len; n++)
        for (std::size_t t = 0; t < spec.num_frames; t++)
            frames[n * spec.num_frames + t] = samples[t * spec.hop + n];
    return frames;
}

// out[t*hop + n] += frames[n, t]
std::vector<float> overlap_add(std::span<const float> frames, const FrameSpec& spec)
{
    std::vector<float> out(spec.covered(), 0.f);
    for (std::size_t n = 0; n < spec.frame_len; n++)
        for (std::size_t t = 0; t < spec.num_frames; t++)
            out[t * spec.hop + n] += frames[n * spec.num_frames + t];
    return out;
}

std::vector<float> coverage(const FrameSpec& spec)
{
    std::vector<float> cov(spec.covered(), 0.f);
    for (std::size_t t = 0; t < spec.num_frames; t++)
        for (std::size_t n = 0; n < spec.frame_len; n++)
            cov[t * spec.hop + n] += 1.f;
    return cov;
}

// coeffs = D * frames
std::vector<float> forward_columns(std::span<const float> frames, const FrameSpec& spec)
{
    auto basis = dct_basis(spec.frame_len);
    std::vector<float> out(frames.size());
    MapMat(out.data(), spec.frame_len, spec.num_frames).noalias()
        = CMapMat(basis.data(), spec.frame_len, spec.frame_len)
          * CMapMat(frames.data(), spec.frame_len, spec.num_frames);
    return out;
}

// frames = D^T * coeffs
std::vector<float> inverse_columns(std::span<const float> coeffs, const FrameSpec& spec)
{
    auto basis = dct_basis(spec.frame_len);
    std::vector<float> out(coeffs.size());
    MapMat(out.data(), spec.frame_len, spec.num_frames).noalias()
        = CMapMat(basis.data(), spec.frame_len, spec.frame_len).transpose()
          * CMapMat(coeffs.data(), spec.frame_len, spec.num_frames);
    return out;
}

} // namespace

std::size_t num_frames_for(std::size_t length, std::size_t frame_len, std::size_t hop)
{
    if (frame_len == 0 || hop == 0)
        throw DimensionError("frame_len and hop must be positive");
    if (hop > frame_len)
        throw DimensionError("hop must not exceed frame_len");
    if (length < frame_len)
        throw DimensionError("waveform of " + std::to_string(length) + " samples is shorter than one frame of "
                             + std::to_string(frame_len));
    return (length - frame_len) / hop + 1;
}

FrameSpec FrameSpec::for_length(std::size_t frame_len, std::size_t hop, std::size_t length)
{
    return FrameSpec{frame_len, hop, num_frames_for(length, frame_len, hop)};
}

std::span<const float> dct_basis(std::size_t n)
{
    if (n == 0)
        throw DimensionError("DCT of empty frame");
    static std::mutex mu;
    static std::map<std::size_t, std::unique_ptr<const std::vector<float>>> cache;
    std::lock_guard lock(mu);
    auto& slot = cache[n];
    if (!slot)
        slot = std::make_unique<const std::vector<float>>(build_basis(n));
    return *slot;
}

std::vector<float> dct2(std::span<const float> frame)
{
    if (frame.empty())
        throw DimensionError("dct2: empty frame");
    return forward_columns(frame, FrameSpec{frame.size(), frame.size(), 1});
}

std::vector<float> dct3(std::span<const float> coeffs)
{
    if (coeffs.empty())
        throw DimensionError("dct3: empty input");
    return inverse_columns(coeffs, FrameSpec{coeffs.size(), coeffs.size(), 1});
}

Spectrogram stdct(std::span<const float> samples, std::size_t frame_len, std::size_t hop)
{
    Spectrogram s;
    s.spec = FrameSpec::for_length(frame_len, hop, samples.size());
    s.source_len = samples.size();
    s.values = forward_columns(gather_frames(samples, s.spec), s.spec);
    s.trailing.assign(samples.begin() + static_cast<std::ptrdiff_t>(s.spec.covered()), samples.end());
    check_finite(s.values, "stdct");
    return s;
}

Spectrogram stdct(const Waveform& w, std::size_t frame_len, std::size_t hop)
{
    return stdct(w.samples, frame_len, hop);
}

std::vector<float> istdct(const Spectrogram& s)
{
    check_spec(s.spec);
    if (s.values.size() != s.spec.frame_len * s.spec.num_frames)
        throw DimensionError("istdct: spectrogram values do not match its frame spec");
    if (s.source_len != s.spec.covered() + s.trailing.size())
        throw DimensionError("istdct: source length inconsistent with frame spec and trailing samples");
    std::vector<float> out = overlap_add(inverse_columns(s.values, s.spec), s.spec);
    const std::vector<float> cov = coverage(s.spec);
    for (std::size_t i = 0; i < out.size(); i++)
    {
        if (cov[i] == 0.f)
            throw NumericError("istdct: sample " + std::to_string(i) + " not covered by any frame");
        out[i] /= cov[i];
    }
    out.insert(out.end(), s.trailing.begin(), s.trailing.end());
    return out;
}

std::vector<float> stdct_adjoint(std::span<const float> coeffs, const FrameSpec& spec)
{
    check_spec(spec);
    if (coeffs.size() != spec.frame_len * spec.num_frames)
        throw DimensionError("stdct_adjoint: coefficient count mismatch");
    return overlap_add(inverse_columns(coeffs, spec), spec);
}

std::vector<float> istdct_adjoint(std::span<const float> samples, const FrameSpec& spec)
{
    check_spec(spec);
    if (samples.size() != spec.covered())
        throw DimensionError("istdct_adjoint: expected " + std::to_string(spec.covered()) + " samples");
    const std::vector<float> cov = coverage(spec);
    std::vector<float> weighted(samples.begin(), samples.end());
    for (std::size_t i = 0; i < weighted.size(); i++)
        weighted[i] /= cov[i];
    return forward_columns(gather_frames(weighted, spec), spec);
}

Tensor stdct(Tape& tape, const Tensor& wave, std::size_t frame_len, std::size_t hop)
{
    if (wave.rank() != 1)
        throw DimensionError("stdct: waveform tensor must be rank 1, got " + shape_str(wave.shape()));
    const FrameSpec spec = FrameSpec::for_length(frame_len, hop, wave.numel());
    Tensor out({spec.frame_len, spec.num_frames}, forward_columns(gather_frames(wave.data(), spec), spec));
    tape.record("stdct", {wave}, out, [=]() mutable {
        const std::vector<float> g = stdct_adjoint(out.grad(), spec);
        auto gw = wave.grad();
        for (std::size_t i = 0; i < g.size(); i++)
            gw[i] += g[i];
    });
    return out;
}

Tensor istdct(Tape& tape, const Tensor& spect, std::size_t hop, std::span<const float> trailing)
{
    if (spect.rank() != 2)
        throw DimensionError("istdct: spectrogram tensor must be rank 2, got " + shape_str(spect.shape()));
    const FrameSpec spec{spect.dim(0), hop, spect.dim(1)};
    check_spec(spec);
    std::vector<float> samples = overlap_add(inverse_columns(spect.data(), spec), spec);
    const std::vector<float> cov = coverage(spec);
    for (std::size_t i = 0; i < samples.size(); i++)
        samples[i] /= cov[i];
    samples.insert(samples.end(), trailing.begin(), trailing.end());
    const std::size_t n = samples.size();
    Tensor out({n}, std::move(samples));
    tape.record("istdct", {spect}, out, [=]() mutable {
        auto go = out.grad();
        const std::vector<float> g = istdct_adjoint(go.first(spec.covered()), spec);
        auto gs = spect.grad();
        for (std::size_t i = 0; i < g.size(); i++)
            gs[i] += g[i];
    });
    return out;
}

} // namespace rstego
