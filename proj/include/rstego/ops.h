#pragma once

#include <cstddef>
#include <span>

#include "rstego/tensor.h"

namespace rstego {

// Layers used by the hiding and reveal networks. Every op records itself on
// the tape when any input requires grad; pass Tape::inference() otherwise.

struct Conv2dOptions {
    std::size_t stride = 1;
    std::size_t padding = 1;
};

struct ConvTranspose2dOptions {
    std::size_t stride = 1;
    std::size_t padding = 1;
    std::size_t output_padding = 0;
};

std::size_t conv2d_out_size(std::size_t in, std::size_t stride, std::size_t padding);
std::size_t conv_transpose2d_out_size(std::size_t in, std::size_t stride, std::size_t padding,
                                      std::size_t output_padding);

// input [N,Cin,H,W], weight [Cout,Cin,3,3], bias [Cout] -> [N,Cout,H',W'].
Tensor conv2d(Tape& tape, const Tensor& input, const Tensor& weight, const Tensor& bias,
              Conv2dOptions opt);

// input [N,Cin,H,W], weight [Cin,Cout,3,3], bias [Cout] -> [N,Cout,H',W'].
// The input-gradient adjoint of conv2d with the same stride and padding.
Tensor conv_transpose2d(Tape& tape, const Tensor& input, const Tensor& weight, const Tensor& bias,
                        ConvTranspose2dOptions opt);

// Per-channel standardization over N,H,W with current-batch statistics.
Tensor batch_norm2d(Tape& tape, const Tensor& input, const Tensor& gamma, const Tensor& beta_shift,
                    float eps = 1e-5f);

Tensor leaky_relu(Tape& tape, const Tensor& input, float alpha);

// Concatenate [N,Ca,H,W] and [N,Cb,H,W] along channels.
Tensor concat_channels(Tape& tape, const Tensor& a, const Tensor& b);
// Channels [start, start+count) of [N,C,H,W].
Tensor narrow_channels(Tape& tape, const Tensor& x, std::size_t start, std::size_t count);

Tensor reshape(Tape& tape, const Tensor& x, Shape shape);

Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape& tape, const Tensor& x, float factor);
// x scaled by a learnable single-element tensor.
Tensor scale_by(Tape& tape, const Tensor& x, const Tensor& factor);
// Elementwise product with a constant (non-differentiable) multiplier.
Tensor mul_const(Tape& tape, const Tensor& x, std::span<const float> multiplier);
Tensor add_const(Tape& tape, const Tensor& x, std::span<const float> offset);
Tensor square(Tape& tape, const Tensor& x);

Tensor sum(Tape& tape, const Tensor& x);
Tensor mean(Tape& tape, const Tensor& x);
// Dot product with constant weights; handy for gradient checks.
Tensor weighted_sum(Tape& tape, const Tensor& x, std::span<const float> weights);

// Mean absolute / mean squared error between same-shape tensors.
Tensor mae(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mse(Tape& tape, const Tensor& a, const Tensor& b);

} // namespace rstego
