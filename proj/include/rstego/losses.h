#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rstego/tensor.h"

namespace rstego {

struct LossWeights {
    float beta = 0.5f;     // image vs spectrogram trade-off, in [0,1]
    float lambda = 1e-4f;  // soft-DTW weight
    float gamma = 1.0f;    // soft-DTW smoothing
    void validate() const;
};

// beta * MAE(s, s_rev) + (1 - beta) * MSE(C, C_cont)
Tensor composite_loss(Tape& tape, const Tensor& s, const Tensor& s_rev, const Tensor& host_spect,
                      const Tensor& container_spect, float beta);

struct SoftDtwResult {
    double value = 0.0;
    std::vector<double> grad_a;
    std::vector<double> grad_b;
};

// Soft-DTW with squared-difference cost, log-sum-exp stabilized soft-min.
double soft_dtw(std::span<const float> a, std::span<const float> b, double gamma);
// Value and gradients w.r.t. both sequences (expected-alignment backward recursion).
SoftDtwResult soft_dtw_with_grad(std::span<const float> a, std::span<const float> b, double gamma);

// Differentiable soft-DTW between two rank-1 tensors.
Tensor soft_dtw(Tape& tape, const Tensor& a, const Tensor& b, double gamma);

// x[0], x[factor], x[2*factor], ...
Tensor decimate(Tape& tape, const Tensor& x, std::size_t factor);

struct LossTerms {
    Tensor total;
    float image_mae = 0.f;
    float audio_mse = 0.f;
    float dtw = 0.f; // unweighted soft-DTW of the decimated waveforms
};

// composite_loss + lambda * soft_dtw(decimate(c), decimate(c_cont)). With
// lambda == 0 the DTW value is still reported but not added to the graph.
LossTerms total_loss(Tape& tape, const Tensor& s, const Tensor& s_rev, const Tensor& host_spect,
                     const Tensor& container_spect, const Tensor& host_wave, const Tensor& container_wave,
                     const LossWeights& weights, std::size_t decimation);

} // namespace rstego
