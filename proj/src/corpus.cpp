#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "rstego/data_io.h"
#include "rstego/errors.h"

namespace rstego {

namespace {

struct Rgb {
    float r, g, b;
};

Rgb random_color(std::mt19937_64& rng)
{
    std::uniform_real_distribution<float> u(0.f, 255.f);
    return {u(rng), u(rng), u(rng)};
}

Rgb mix(const Rgb& a, const Rgb& b, float t)
{
    return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

} // namespace

Image synth_image(std::size_t side, std::mt19937_64& rng)
{
    Image img;
    img.width = img.height = side;
    img.rgb.resize(side * side * 3);
    std::uniform_int_distribution<int> pattern(0, 3);
    std::uniform_real_distribution<float> u(0.f, 1.f);
    const int kind = pattern(rng);
    const Rgb c0 = random_color(rng), c1 = random_color(rng), c2 = random_color(rng);
    const float angle = u(rng) * 2.f * std::numbers::pi_v<float>;
    const std::size_t cell = std::max<std::size_t>(2, side / (4 + static_cast<std::size_t>(u(rng) * 8)));
    const float cx = u(rng) * side, cy = u(rng) * side, radius = (0.2f + 0.3f * u(rng)) * side;
    const float freq = 1.f + 4.f * u(rng);

    for (std::size_t y = 0; y < side; y++)
    {
        for (std::size_t x = 0; x < side; x++)
        {
            const float fx = static_cast<float>(x) / side, fy = static_cast<float>(y) / side;
            Rgb px{};
            switch (kind)
            {
            case 0: // linear gradient
            {
                const float t = 0.5f + 0.5f * ((fx - 0.5f) * std::cos(angle) + (fy - 0.5f) * std::sin(angle)) * 1.4f;
                px = mix(c0, c1, std::clamp(t, 0.f, 1.f));
                break;
            }
            case 1: // checkerboard
                px = ((x / cell + y / cell) % 2) ? c0 : c1;
                break;
            case 2: // disc over gradient
            {
                const float dx = x - cx, dy = y - cy;
                px = (dx * dx + dy * dy < radius * radius) ? c2 : mix(c0, c1, fy);
                break;
            }
            default: // oriented stripes
            {
                const float t = 0.5f + 0.5f * std::sin(2.f * std::numbers::pi_v<float> * freq
                                                        * (fx * std::cos(angle) + fy * std::sin(angle)));
                px = mix(c0, c2, t);
                break;
            }
            }
            std::uint8_t* p = &img.rgb[(y * side + x) * 3];
            p[0] = static_cast<std::uint8_t>(std::lround(std::clamp(px.r, 0.f, 255.f)));
            p[1] = static_cast<std::uint8_t>(std::lround(std::clamp(px.g, 0.f, 255.f)));
            p[2] = static_cast<std::uint8_t>(std::lround(std::clamp(px.b, 0.f, 255.f)));
        }
    }
    return img;
}

Waveform synth_clip(std::size_t samples, std::uint32_t sample_rate, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double fs = static_cast<double>(sample_rate);
    const double nyq = fs / 2.0;
    std::vector<double> x(samples, 0.0);

    const int tones = 2 + static_cast<int>(u(rng) * 3);
    for (int k = 0; k < tones; k++)
    {
        const double f = 80.0 + u(rng) * (0.4 * nyq);
        const double a = 0.2 + 0.8 * u(rng);
        const double ph = u(rng) * 2.0 * std::numbers::pi;
        for (std::size_t i = 0; i < samples; i++)
            x[i] += a * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / fs + ph);
    }

    // Linear chirp.
    const double f0 = 100.0 + u(rng) * 0.2 * nyq, f1 = 100.0 + u(rng) * 0.6 * nyq;
    const double dur = static_cast<double>(samples) / fs, ca = 0.5 * u(rng);
    for (std::size_t i = 0; i < samples; i++)
    {
        const double t = static_cast<double>(i) / fs;
        x[i] += ca * std::sin(2.0 * std::numbers::pi * (f0 * t + 0.5 * (f1 - f0) / dur * t * t));
    }

    // One-pole low-passed noise.
    const double pole = 0.5 + 0.45 * u(rng), na = 0.3 * u(rng);
    double state = 0.0;
    for (std::size_t i = 0; i < samples; i++)
    {
        state = pole * state + (1.0 - pole) * normal(rng);
        x[i] += na * state * 3.0;
    }

    double peak = 0.0;
    for (double v : x)
        peak = std::max(peak, std::fabs(v));
    const double target = kCorpusPeak * (0.5 + 0.5 * u(rng));
    Waveform w;
    w.sample_rate = sample_rate;
    w.samples.resize(samples);
    for (std::size_t i = 0; i < samples; i++)
        w.samples[i] = static_cast<float>(peak > 0.0 ? x[i] * target / peak : 0.0);
    return w;
}

void generate_corpus(const std::filesystem::path& out_dir, const CorpusSpec& spec)
{
    if (spec.n_images == 0 || spec.n_clips == 0)
        throw ContractError("gen-corpus: counts must be positive");
    if (spec.clip_samples == 0)
        throw ContractError("gen-corpus: clip length must be positive");
    const auto img_dir = out_dir / "images";
    const auto wav_dir = out_dir / "audio";
    std::error_code ec;
    std::filesystem::create_directories(img_dir, ec);
    std::filesystem::create_directories(wav_dir, ec);
    if (ec)
        throw IoError("cannot create corpus directories under " + out_dir.string() + ": " + ec.message());

    std::mt19937_64 rng(spec.seed);
    // A quarter of extra length so segment offsets vary across epochs.
    const std::size_t clip_len = spec.clip_samples + spec.clip_samples / 4;
    char name[32];
    for (std::size_t i = 0; i < spec.n_images; i++)
    {
        std::snprintf(name, sizeof name, "img_%03zu.ppm", i);
        write_ppm(img_dir / name, synth_image(spec.image_side, rng));
    }
    for (std::size_t i = 0; i < spec.n_clips; i++)
    {
        std::snprintf(name, sizeof name, "clip_%03zu.wav", i);
        write_wav(wav_dir / name, synth_clip(clip_len, spec.sample_rate, rng));
    }
}

} // namespace rstego
