#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rstego {

// A ratio in dB, or the "infinite" marker when the distortion is exactly zero.
class Decibels {
public:
    static Decibels infinite() { return Decibels(); }
    static Decibels finite(double db) { return Decibels(db); }

    bool is_infinite() const { return !value_; }
    // Throws ContractError on the infinite marker.
    double value() const;
    std::string str() const;

private:
    Decibels() = default;
    explicit Decibels(double v) : value_(v) {}
    std::optional<double> value_;
};

// 10 log10(sum host^2 / sum (host - container)^2)
Decibels snr_db(std::span<const float> host, std::span<const float> container);

// 10 log10(255^2 / MSE) over images in [0,255].
Decibels psnr(std::span<const float> a, std::span<const float> b);

// Mean SSIM with an 11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03,
// L=255; images are planar [channels, height, width]. Valid windows only.
double ssim(std::span<const float> a, std::span<const float> b, std::size_t channels, std::size_t height,
            std::size_t width);

struct PairMetrics {
    Decibels audio_snr = Decibels::infinite();
    double image_ssim = 0.0;
    Decibels image_psnr = Decibels::infinite();
};

struct MetricsReport {
    // Means over pairs; infinite entries are skipped from the mean and the
    // result is infinite only when every pair is.
    Decibels audio_snr_db = Decibels::infinite();
    double image_ssim = 0.0;
    Decibels image_psnr_db = Decibels::infinite();
    std::vector<PairMetrics> pairs;

    static MetricsReport aggregate(std::vector<PairMetrics> pairs);
};

} // namespace rstego
