#include "rstego/losses.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <limits>

#include "rstego/errors.h"
#include "rstego/ops.h"

namespace rstego {

void LossWeights::validate() const
{
    if (!(beta >= 0.f && beta <= 1.f))
        throw ContractError("beta must lie in [0,1], got " + std::to_string(beta));
    if (!(lambda >= 0.f))
        throw ContractError("lambda must be non-negative");
    if (!(gamma > 0.f))
        throw ContractError("gamma must be positive");
}

Tensor composite_loss(Tape& tape, const Tensor& s, const Tensor& s_rev, const Tensor& host_spect,
                      const Tensor& container_spect, float beta)
{
    if (!(beta >= 0.f && beta <= 1.f))
        throw ContractError("composite_loss: beta must lie in [0,1], got " + std::to_string(beta));
    const Tensor image_term = scale(tape, mae(tape, s, s_rev), beta);
    const Tensor audio_term = scale(tape, mse(tape, host_spect, container_spect), 1.f - beta);
    return add(tape, image_term, audio_term);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// -gamma * log(sum exp(-x/gamma)), shifted by the minimum so the largest term is exp(0).
double softmin3(double a, double b, double c, double gamma)
{
    const double m = std::min({a, b, c});
    if (m == kInf)
        return kInf;
    const double s = std::exp(-(a - m) / gamma) + std::exp(-(b - m) / gamma) + std::exp(-(c - m) / gamma);
    return m - gamma * std::log(s);
}

void check_dtw_args(std::size_t n, std::size_t m, double gamma)
{
    if (n == 0 || m == 0)
        throw DimensionError("soft_dtw: sequences must be non-empty");
    if (!(gamma > 0.0))
        throw ContractError("soft_dtw: gamma must be positive");
}

// R is (n+2) x (m+2); R[i][j] for 1<=i<=n, 1<=j<=m holds the soft alignment cost.
std::vector<double> forward_table(std::span<const float> a, std::span<const float> b, double gamma)
{
    const std::size_t n = a.size(), m = b.size(), w = m + 2;
    std::vector<double> r((n + 2) * w, kInf);
    r[0] = 0.0;
    for (std::size_t i = 1; i <= n; i++)
    {
        for (std::size_t j = 1; j <= m; j++)
        {
            const double d = static_cast<double>(a[i - 1]) - b[j - 1];
            r[i * w + j] = d * d + softmin3(r[(i - 1) * w + j - 1], r[(i - 1) * w + j], r[i * w + j - 1], gamma);
        }
    }
    return r;
}

} // namespace

double soft_dtw(std::span<const float> a, std::span<const float> b, double gamma)
{
    check_dtw_args(a.size(), b.size(), gamma);
    const std::vector<double> r = forward_table(a, b, gamma);
    return r[a.size() * (b.size() + 2) + b.size()];
}

SoftDtwResult soft_dtw_with_grad(std::span<const float> a, std::span<const float> b, double gamma)
{
    check_dtw_args(a.size(), b.size(), gamma);
    const std::size_t n = a.size(), m = b.size(), w = m + 2;
    std::vector<double> r = forward_table(a, b, gamma);
    SoftDtwResult res;
    res.value = r[n * w + m];

    // Padded cost matrix (zero outside 1..n x 1..m).
    std::vector<double> d((n + 2) * w, 0.0);
    for (std::size_t i = 1; i <= n; i++)
        for (std::size_t j = 1; j <= m; j++)
        {
            const double diff = static_cast<double>(a[i - 1]) - b[j - 1];
            d[i * w + j] = diff * diff;
        }
    for (std::size_t i = 1; i <= n + 1; i++)
        r[i * w + m + 1] = -kInf;
    for (std::size_t j = 1; j <= m + 1; j++)
        r[(n + 1) * w + j] = -kInf;
    r[(n + 1) * w + m + 1] = r[n * w + m];

    // e[i][j] = dR(n,m)/dD(i,j), the expected alignment.
    std::vector<double> e((n + 2) * w, 0.0);
    e[(n + 1) * w + m + 1] = 1.0;
    for (std::size_t j = m; j >= 1; j--)
    {
        for (std::size_t i = n; i >= 1; i--)
        {
            const double rij = r[i * w + j];
            const double wa = std::exp((r[(i + 1) * w + j] - rij - d[(i + 1) * w + j]) / gamma);
            const double wb = std::exp((r[i * w + j + 1] - rij - d[i * w + j + 1]) / gamma);
            const double wc = std::exp((r[(i + 1) * w + j + 1] - rij - d[(i + 1) * w + j + 1]) / gamma);
            e[i * w + j] = e[(i + 1) * w + j] * wa + e[i * w + j + 1] * wb + e[(i + 1) * w + j + 1] * wc;
        }
    }

    res.grad_a.assign(n, 0.0);
    res.grad_b.assign(m, 0.0);
    for (std::size_t i = 1; i <= n; i++)
        for (std::size_t j = 1; j <= m; j++)
        {
            const double g = 2.0 * e[i * w + j] * (static_cast<double>(a[i - 1]) - b[j - 1]);
            res.grad_a[i - 1] += g;
            res.grad_b[j - 1] -= g;
        }
    return res;
}

Tensor soft_dtw(Tape& tape, const Tensor& a, const Tensor& b, double gamma)
{
    if (a.rank() != 1 || b.rank() != 1)
        throw DimensionError("soft_dtw: expected rank-1 sequences");
    auto res = std::make_shared<SoftDtwResult>(soft_dtw_with_grad(a.data(), b.data(), gamma));
    Tensor out = Tensor::scalar(static_cast<float>(res->value));
    check_finite(out.data(), "soft_dtw");
    tape.record("soft_dtw", {a, b}, out, [=]() mutable {
        const double g = out.grad()[0];
        if (a.requires_grad())
        {
            auto ga = a.grad();
            for (std::size_t i = 0; i < ga.size(); i++)
                ga[i] += static_cast<float>(g * res->grad_a[i]);
        }
        if (b.requires_grad())
        {
            auto gb = b.grad();
            for (std::size_t j = 0; j < gb.size(); j++)
                gb[j] += static_cast<float>(g * res->grad_b[j]);
        }
    });
    return out;
}

Tensor decimate(Tape& tape, const Tensor& x, std::size_t factor)
{
    if (x.rank() != 1)
        throw DimensionError("decimate: expected rank-1 tensor");
    if (factor == 0)
        throw ContractError("decimate: factor must be positive");
    const std::size_t n = (x.numel() + factor - 1) / factor;
    Tensor out({n});
    auto xv = x.data();
    auto o = out.data();
    for (std::size_t i = 0; i < n; i++)
        o[i] = xv[i * factor];
    tape.record("decimate", {x}, out, [=]() mutable {
        auto g = out.grad();
        auto gx = x.grad();
        for (std::size_t i = 0; i < n; i++)
            gx[i * factor] += g[i];
    });
    return out;
}

LossTerms total_loss(Tape& tape, const Tensor& s, const Tensor& s_rev, const Tensor& host_spect,
                     const Tensor& container_spect, const Tensor& host_wave, const Tensor& container_wave,
                     const LossWeights& weights, std::size_t decimation)
{
    weights.validate();
    LossTerms t;
    const Tensor image_mae = mae(tape, s, s_rev);
    const Tensor audio_mse = mse(tape, host_spect, container_spect);
    t.image_mae = image_mae.item();
    t.audio_mse = audio_mse.item();
    Tensor total = add(tape, scale(tape, image_mae, weights.beta), scale(tape, audio_mse, 1.f - weights.beta));

    if (weights.lambda > 0.f)
    {
        const Tensor dtw = soft_dtw(tape, decimate(tape, host_wave, decimation),
                                    decimate(tape, container_wave, decimation), weights.gamma);
        t.dtw = dtw.item();
        total = add(tape, total, scale(tape, dtw, weights.lambda));
    }
    else
    {
        Tape off = Tape::inference();
        t.dtw = soft_dtw(off, decimate(off, host_wave, decimation), decimate(off, container_wave, decimation),
                         weights.gamma)
                    .item();
    }
    t.total = total;
    return t;
}

} // namespace rstego
