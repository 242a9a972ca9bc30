#include "rstego/metrics.h"

#include <array>
#include <cmath>
#include <cstdio>

#include "rstego/errors.h"

namespace rstego {

double Decibels::value() const
{
    if (!value_)
        throw ContractError("infinite dB value has no finite representation");
    return *value_;
}

std::string Decibels::str() const
{
    if (!value_)
        return "inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", *value_);
    return buf;
}

Decibels snr_db(std::span<const float> host, std::span<const float> container)
{
    if (host.size() != container.size())
        throw DimensionError("snr_db: length mismatch (" + std::to_string(host.size()) + " vs "
                             + std::to_string(container.size()) + ")");
    double signal = 0.0, noise = 0.0;
    for (std::size_t i = 0; i < host.size(); i++)
    {
        const double d = static_cast<double>(host[i]) - container[i];
        signal += static_cast<double>(host[i]) * host[i];
        noise += d * d;
    }
    if (signal == 0.0)
        throw NumericError("snr_db: host has zero energy");
    if (noise == 0.0)
        return Decibels::infinite();
    return Decibels::finite(10.0 * std::log10(signal / noise));
}

Decibels psnr(std::span<const float> a, std::span<const float> b)
{
    if (a.size() != b.size() || a.empty())
        throw DimensionError("psnr: images must be non-empty and the same size");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); i++)
    {
        const double d = static_cast<double>(a[i]) - b[i];
        acc += d * d;
    }
    if (acc == 0.0)
        return Decibels::infinite();
    const double mse = acc / static_cast<double>(a.size());
    return Decibels::finite(10.0 * std::log10(255.0 * 255.0 / mse));
}

namespace {

constexpr std::size_t kWin = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = (0.01 * 255.0) * (0.01 * 255.0);
constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);

std::array<double, kWin> gaussian_taps()
{
    std::array<double, kWin> g{};
    double s = 0.0;
    for (std::size_t i = 0; i < kWin; i++)
    {
        const double x = static_cast<double>(i) - 5.0;
        g[i] = std::exp(-x * x / (2.0 * kSigma * kSigma));
        s += g[i];
    }
    for (double& v : g)
        v /= s;
    return g;
}

// Separable valid-mode filter of an h x w plane with the 11-tap Gaussian.
std::vector<double> filter_valid(const std::vector<double>& in, std::size_t h, std::size_t w,
                                 const std::array<double, kWin>& g)
{
    const std::size_t ow = w - kWin + 1, oh = h - kWin + 1;
    std::vector<double> tmp(h * ow, 0.0);
    for (std::size_t y = 0; y < h; y++)
        for (std::size_t x = 0; x < ow; x++)
        {
            double acc = 0.0;
            for (std::size_t k = 0; k < kWin; k++)
                acc += g[k] * in[y * w + x + k];
            tmp[y * ow + x] = acc;
        }
    std::vector<double> out(oh * ow, 0.0);
    for (std::size_t y = 0; y < oh; y++)
        for (std::size_t x = 0; x < ow; x++)
        {
            double acc = 0.0;
            for (std::size_t k = 0; k < kWin; k++)
                acc += g[k] * tmp[(y + k) * ow + x];
            out[y * ow + x] = acc;
        }
    return out;
}

} // namespace

double ssim(std::span<const float> a, std::span<const float> b, std::size_t channels, std::size_t height,
            std::size_t width)
{
    const std::size_t plane = height * width;
    if (a.size() != channels * plane || b.size() != channels * plane)
        throw DimensionError("ssim: image buffers do not match the given shape");
    if (height < kWin || width < kWin)
        throw DimensionError("ssim: image smaller than the 11x11 window");
    const auto g = gaussian_taps();
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t c = 0; c < channels; c++)
    {
        std::vector<double> x(plane), y(plane), xx(plane), yy(plane), xy(plane);
        for (std::size_t i = 0; i < plane; i++)
        {
            x[i] = a[c * plane + i];
            y[i] = b[c * plane + i];
            xx[i] = x[i] * x[i];
            yy[i] = y[i] * y[i];
            xy[i] = x[i] * y[i];
        }
        const auto mx = filter_valid(x, height, width, g);
        const auto my = filter_valid(y, height, width, g);
        const auto sxx = filter_valid(xx, height, width, g);
        const auto syy = filter_valid(yy, height, width, g);
        const auto sxy = filter_valid(xy, height, width, g);
        for (std::size_t i = 0; i < mx.size(); i++)
        {
            const double vx = sxx[i] - mx[i] * mx[i];
            const double vy = syy[i] - my[i] * my[i];
            const double cxy = sxy[i] - mx[i] * my[i];
            const double num = (2.0 * mx[i] * my[i] + kC1) * (2.0 * cxy + kC2);
            const double den = (mx[i] * mx[i] + my[i] * my[i] + kC1) * (vx + vy + kC2);
            total += num / den;
        }
        count += mx.size();
    }
    return total / static_cast<double>(count);
}

MetricsReport MetricsReport::aggregate(std::vector<PairMetrics> pairs)
{
    MetricsReport r;
    double snr = 0.0, ps = 0.0, ss = 0.0;
    std::size_t n_snr = 0, n_ps = 0;
    for (const PairMetrics& p : pairs)
    {
        if (!p.audio_snr.is_infinite())
        {
            snr += p.audio_snr.value();
            n_snr++;
        }
        if (!p.image_psnr.is_infinite())
        {
            ps += p.image_psnr.value();
            n_ps++;
        }
        ss += p.image_ssim;
    }
    if (n_snr)
        r.audio_snr_db = Decibels::finite(snr / static_cast<double>(n_snr));
    if (n_ps)
        r.image_psnr_db = Decibels::finite(ps / static_cast<double>(n_ps));
    r.image_ssim = pairs.empty() ? 0.0 : ss / static_cast<double>(pairs.size());
    r.pairs = std::move(pairs);
    return r;
}

} // namespace rstego
