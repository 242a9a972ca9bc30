#include "rstego/adam.h"

#include <cmath>

#include "rstego/errors.h"

namespace rstego {

Adam::Adam(std::vector<Tensor> params, AdamOptions options)
    : params_(std::move(params))
{
    if (!(options.lr > 0.f))
        throw ContractError("adam: learning rate must be positive");
    state_.options = options;
    for (const Tensor& p : params_)
    {
        state_.first_moment.emplace_back(p.numel(), 0.f);
        state_.second_moment.emplace_back(p.numel(), 0.f);
    }
}

void Adam::step()
{
    const AdamOptions& o = state_.options;
    state_.step++;
    const double t = static_cast<double>(state_.step);
    const float bc1 = static_cast<float>(1.0 - std::pow(static_cast<double>(o.beta1), t));
    const float bc2 = static_cast<float>(1.0 - std::pow(static_cast<double>(o.beta2), t));
    for (std::size_t k = 0; k < params_.size(); k++)
    {
        Tensor& p = params_[k];
        auto& m = state_.first_moment[k];
        auto& v = state_.second_moment[k];
        if (m.size() != p.numel())
            throw DimensionError("adam: parameter " + std::to_string(k) + " changed size");
        if (!p.has_grad())
            continue;
        auto g = p.grad();
        auto x = p.data();
        for (std::size_t i = 0; i < x.size(); i++)
        {
            m[i] = o.beta1 * m[i] + (1.f - o.beta1) * g[i];
            v[i] = o.beta2 * v[i] + (1.f - o.beta2) * g[i] * g[i];
            const float mhat = m[i] / bc1;
            const float vhat = v[i] / bc2;
            x[i] -= o.lr * mhat / (std::sqrt(vhat) + o.epsilon);
        }
    }
}

void Adam::zero_grad()
{
    for (Tensor& p : params_)
        p.zero_grad();
}

} // namespace rstego
