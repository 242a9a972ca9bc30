#pragma once

// Finite-difference gradient checks: the library's float32 autodiff against
// central differences of the double-precision oracles in reference.h. Each
// check builds one seeded random instance and returns the worst element error.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "reference.h"
#include "rstego/dsp.h"
#include "rstego/losses.h"
#include "rstego/ops.h"

namespace gc {

using ref::Vec;
using namespace rstego;

inline std::vector<float> to_f(const Vec& v) { return std::vector<float>(v.begin(), v.end()); }

// Relative error per element; near-zero analytic values are compared absolutely.
inline double max_error(std::span<const float> analytic, const Vec& numeric)
{
    double worst = 0.0;
    for (std::size_t i = 0; i < numeric.size(); i++)
    {
        const double a = analytic.empty() ? 0.0 : analytic[i];
        const double n = numeric[i];
        double e;
        if (std::abs(a) < 1e-6)
            e = std::abs(a - n) <= 1e-5 ? 0.0 : std::numeric_limits<double>::infinity();
        else
            e = std::abs(a - n) / std::max(std::abs(a), std::abs(n));
        worst = std::max(worst, e);
    }
    return worst;
}

inline Tensor leaf(Shape shape, const Vec& v) { return Tensor(std::move(shape), to_f(v), true); }

// Values at least `gap` away from zero so kinks stay outside the FD stencil.
inline Vec away_from_zero(std::size_t n, std::mt19937_64& rng, double gap = 5e-3)
{
    Vec v = ref::uniform(n, rng);
    for (double& x : v)
        while (std::abs(x) < gap)
            x = ref::uniform(1, rng)[0];
    return v;
}

inline double conv2d(std::uint64_t seed, std::size_t stride)
{
    std::mt19937_64 rng(seed);
    const std::size_t n = 1 + seed % 2, cin = 2, cout = 3, h = 5 + seed % 4, w = 4 + (seed / 2) % 5;
    const Vec x = ref::uniform(n * cin * h * w, rng), wt = ref::uniform(cout * cin * 9, rng),
              b = ref::uniform(cout, rng);
    const std::size_t ho = (h - 1) / stride + 1, wo = (w - 1) / stride + 1;
    const Vec wout = ref::uniform(n * cout * ho * wo, rng);

    Tape tape;
    Tensor X = leaf({n, cin, h, w}, x), W = leaf({cout, cin, 3, 3}, wt), B = leaf({cout}, b);
    const auto wf = to_f(wout);
    tape.backward(weighted_sum(tape, rstego::conv2d(tape, X, W, B, {stride, 1}), wf));

    auto f = [&](const Vec& xx, const Vec& ww, const Vec& bb) {
        return ref::dot(ref::conv2d(xx, n, cin, h, w, ww, cout, bb, stride, 1), wout);
    };
    double e = max_error(X.grad(), ref::numeric_gradient([&](const Vec& v) { return f(v, wt, b); }, x));
    e = std::max(e, max_error(W.grad(), ref::numeric_gradient([&](const Vec& v) { return f(x, v, b); }, wt)));
    e = std::max(e, max_error(B.grad(), ref::numeric_gradient([&](const Vec& v) { return f(x, wt, v); }, b)));
    return e;
}

inline double conv_transpose2d(std::uint64_t seed, std::size_t stride)
{
    std::mt19937_64 rng(seed);
    const std::size_t n = 1 + seed % 2, cin = 3, cout = 2, h = 2 + seed % 3, w = 3 + (seed / 3) % 2;
    const std::size_t op = stride - 1;
    const Vec x = ref::uniform(n * cin * h * w, rng), wt = ref::uniform(cin * cout * 9, rng),
              b = ref::uniform(cout, rng);
    const std::size_t ho = (h - 1) * stride + 1 + op, wo = (w - 1) * stride + 1 + op;
    const Vec wout = ref::uniform(n * cout * ho * wo, rng);

    Tape tape;
    Tensor X = leaf({n, cin, h, w}, x), W = leaf({cin, cout, 3, 3}, wt), B = leaf({cout}, b);
    const auto wf = to_f(wout);
    tape.backward(weighted_sum(tape, rstego::conv_transpose2d(tape, X, W, B, {stride, 1, op}), wf));

    auto f = [&](const Vec& xx, const Vec& ww, const Vec& bb) {
        return ref::dot(ref::conv_transpose2d(xx, n, cin, h, w, ww, cout, bb, stride, 1, op), wout);
    };
    double e = max_error(X.grad(), ref::numeric_gradient([&](const Vec& v) { return f(v, wt, b); }, x));
    e = std::max(e, max_error(W.grad(), ref::numeric_gradient([&](const Vec& v) { return f(x, v, b); }, wt)));
    e = std::max(e, max_error(B.grad(), ref::numeric_gradient([&](const Vec& v) { return f(x, wt, v); }, b)));
    return e;
}

inline double batch_norm2d(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    const std::size_t n = 1 + seed % 2, c = 2, h = 3, w = 3 + seed % 2;
    const Vec x = ref::uniform(n * c * h * w, rng), g = ref::uniform(c, rng, 0.5, 1.5), b = ref::uniform(c, rng);
    const Vec wout = ref::uniform(x.size(), rng);

    Tape tape;
    Tensor X = leaf({n, c, h, w}, x), G = leaf({c}, g), B = leaf({c}, b);
    const auto wf = to_f(wout);
    tape.backward(weighted_sum(tape, rstego::batch_norm2d(tape, X, G, B, 1e-5f), wf));

    auto f = [&](const Vec& xx, const Vec& gg, const Vec& bb) {
        return ref::dot(ref::batch_norm(xx, n, c, h * w, gg, bb, 1e-5), wout);
    };
    double e = max_error(X.grad(), ref::numeric_gradient([&](const Vec& v) { return f(v, g, b); }, x));
    e = std::max(e, max_error(G.grad(), ref::numeric_gradient([&](const Vec& v) { return f(x, v, b); }, g)));
    e = std::max(e, max_error(B.grad(), ref::numeric_gradient([&](const Vec& v) { return f(x, g, v); }, b)));
    return e;
}

inline double leaky_relu(std::uint64_t seed, double alpha = 0.8)
{
    std::mt19937_64 rng(seed);
    const std::size_t n = 8 + seed % 16;
    const Vec x = away_from_zero(n, rng), wout = ref::uniform(n, rng);
    Tape tape;
    Tensor X = leaf({n}, x);
    const auto wf = to_f(wout);
    tape.backward(weighted_sum(tape, rstego::leaky_relu(tape, X, float(alpha)), wf));
    return max_error(X.grad(), ref::numeric_gradient(
                                   [&](const Vec& v) { return ref::dot(ref::leaky_relu(v, alpha), wout); }, x));
}

inline double mae(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    const std::size_t n = 4 + seed % 20;
    const Vec a = ref::uniform(n, rng), d = away_from_zero(n, rng);
    Vec b(n);
    for (std::size_t i = 0; i < n; i++)
        b[i] = double(float(a[i] + d[i]));
    Tape tape;
    Tensor A = leaf({n}, a), B = leaf({n}, b);
    tape.backward(rstego::mae(tape, A, B));
    double e = max_error(A.grad(), ref::numeric_gradient([&](const Vec& v) { return ref::mae(v, b); }, a));
    return std::max(e, max_error(B.grad(), ref::numeric_gradient([&](const Vec& v) { return ref::mae(a, v); }, b)));
}

inline double mse(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    const std::size_t n = 4 + seed % 20;
    const Vec a = ref::uniform(n, rng), b = ref::uniform(n, rng);
    Tape tape;
    Tensor A = leaf({n}, a), B = leaf({n}, b);
    tape.backward(rstego::mse(tape, A, B));
    double e = max_error(A.grad(), ref::numeric_gradient([&](const Vec& v) { return ref::mse(v, b); }, a));
    return std::max(e, max_error(B.grad(), ref::numeric_gradient([&](const Vec& v) { return ref::mse(a, v); }, b)));
}

// Gradient of a weighted stdct w.r.t. the waveform (its adjoint applied to the weights).
inline double stdct(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    const std::size_t frame = 4 + seed % 5, hop = 1 + seed % frame;
    const std::size_t len = frame + (1 + seed % 4) * hop + seed % 3; // may leave trailing samples
    const std::size_t frames = 1 + (len - frame) / hop;
    const Vec x = ref::uniform(len, rng), wout = ref::uniform(frame * frames, rng);
    Tape tape;
    Tensor X = leaf({len}, x);
    const auto wf = to_f(wout);
    tape.backward(weighted_sum(tape, rstego::stdct(tape, X, frame, hop), wf));
    return max_error(X.grad(), ref::numeric_gradient(
                                   [&](const Vec& v) { return ref::dot(ref::stdct(v, frame, hop), wout); }, x));
}

inline double istdct(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    const std::size_t frame = 4 + seed % 5, hop = 1 + seed % frame, frames = 2 + seed % 4;
    const std::size_t len = frame + (frames - 1) * hop;
    const Vec s = ref::uniform(frame * frames, rng), wout = ref::uniform(len, rng);
    Tape tape;
    Tensor S = leaf({frame, frames}, s);
    const auto wf = to_f(wout);
    tape.backward(weighted_sum(tape, rstego::istdct(tape, S, hop), wf));
    return max_error(S.grad(), ref::numeric_gradient(
                                   [&](const Vec& v) { return ref::dot(ref::istdct(v, frame, frames, hop), wout); }, s));
}

inline double soft_dtw(std::uint64_t seed, double gamma = 1.0)
{
    std::mt19937_64 rng(seed);
    const std::size_t n = 2 + seed % 9, m = 2 + (seed / 3) % 9;
    const Vec a = ref::uniform(n, rng), b = ref::uniform(m, rng);
    Tape tape;
    Tensor A = leaf({n}, a), B = leaf({m}, b);
    tape.backward(rstego::soft_dtw(tape, A, B, gamma));
    double e = max_error(A.grad(), ref::numeric_gradient([&](const Vec& v) { return ref::soft_dtw_dp(v, b, gamma); }, a));
    return std::max(
        e, max_error(B.grad(), ref::numeric_gradient([&](const Vec& v) { return ref::soft_dtw_dp(a, v, gamma); }, b)));
}

} // namespace gc
