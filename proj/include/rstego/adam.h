#pragma once

#include <cstdint>
#include <vector>

#include "rstego/tensor.h"

namespace rstego {

struct AdamOptions {
    float lr = 0.01f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float epsilon = 1e-8f;
};

struct AdamState {
    AdamOptions options;
    std::uint64_t step = 0;
    std::vector<std::vector<float>> first_moment;
    std::vector<std::vector<float>> second_moment;
};

// Adam with bias correction over a fixed parameter list.
class Adam {
public:
    Adam(std::vector<Tensor> params, AdamOptions options = {});

    // One update from the parameters' current gradients; a parameter without
    // a gradient buffer is treated as having zero gradient.
    void step();
    void zero_grad();

    const AdamState& state() const { return state_; }
    const std::vector<Tensor>& params() const { return params_; }

private:
    std::vector<Tensor> params_;
    AdamState state_;
};

} // namespace rstego
