#include "rstego/channel.h"

#include <cmath>
#include <random>
#include <string>

#include "rstego/errors.h"

namespace rstego {

std::string_view noise_name(NoiseKind k)
{
    switch (k)
    {
    case NoiseKind::None: return "none";
    case NoiseKind::Awgn: return "awgn";
    case NoiseKind::Speckle: return "speckle";
    }
    return "unknown";
}

NoiseKind parse_noise(std::string_view name)
{
    for (NoiseKind k : {NoiseKind::None, NoiseKind::Awgn, NoiseKind::Speckle})
        if (noise_name(k) == name)
            return k;
    throw ContractError("unknown noise kind '" + std::string(name) + "' (expected none, awgn or speckle)");
}

NoiseDraw draw_noise(std::span<const float> c, const NoiseSpec& spec)
{
    if (spec.sigma < 0.0 || !std::isfinite(spec.sigma))
        throw ContractError("noise sigma must be a finite non-negative number");
    check_finite(c, "channel input");
    NoiseDraw d;
    if (spec.is_identity())
        return d;

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> g(c.size());
    double signal = 0.0, pert = 0.0;
    for (std::size_t i = 0; i < c.size(); i++)
    {
        g[i] = normal(rng);
        const double p = spec.kind == NoiseKind::Awgn ? g[i] : g[i] * c[i];
        signal += static_cast<double>(c[i]) * c[i];
        pert += p * p;
    }
    const double k = pert > 0.0 ? spec.sigma * std::sqrt(signal) / std::sqrt(pert) : 0.0;
    auto& out = spec.kind == NoiseKind::Awgn ? d.offset : d.gain;
    out.resize(c.size());
    for (std::size_t i = 0; i < c.size(); i++)
        out[i] = static_cast<float>(spec.kind == NoiseKind::Awgn ? k * g[i] : 1.0 + k * g[i]);
    return d;
}

std::vector<float> noise_perturbation(std::span<const float> c, const NoiseSpec& spec)
{
    const NoiseDraw d = draw_noise(c, spec);
    if (!d.offset.empty())
        return d.offset;
    if (d.gain.empty())
        return {};
    std::vector<float> p(c.size());
    for (std::size_t i = 0; i < c.size(); i++)
        p[i] = c[i] * (d.gain[i] - 1.f);
    return p;
}

Waveform apply_noise(const Waveform& c, const NoiseSpec& spec)
{
    Waveform out = c;
    const NoiseDraw d = draw_noise(c.samples, spec);
    for (std::size_t i = 0; i < d.offset.size(); i++)
        out.samples[i] += d.offset[i];
    for (std::size_t i = 0; i < d.gain.size(); i++)
        out.samples[i] *= d.gain[i];
    return out;
}

Waveform misalign(const Waveform& c, long offset_samples)
{
    const long n = static_cast<long>(c.samples.size());
    if (n == 0 || std::labs(offset_samples) >= n)
        throw ContractError("misalign: |offset| must be smaller than the waveform length");
    Waveform out = c;
    const long shift = ((offset_samples % n) + n) % n;
    for (long i = 0; i < n; i++)
        out.samples[static_cast<std::size_t>((i + shift) % n)] = c.samples[static_cast<std::size_t>(i)];
    return out;
}

} // namespace rstego
