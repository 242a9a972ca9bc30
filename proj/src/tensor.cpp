#include "rstego/tensor.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rstego/errors.h"

namespace rstego {

std::size_t shape_numel(const Shape& shape)
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape)
{
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); i++)
    {
        if (i)
            s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

Tensor::Tensor(Shape shape, bool requires_grad)
    : impl_(std::make_shared<Storage>())
{
    for (std::size_t d : shape)
        if (d == 0)
            throw DimensionError("tensor dimensions must be positive, got " + shape_str(shape));
    impl_->data.assign(shape_numel(shape), 0.f);
    impl_->shape = std::move(shape);
    impl_->requires_grad = requires_grad;
}

Tensor::Tensor(Shape shape, std::vector<float> data, bool requires_grad)
    : impl_(std::make_shared<Storage>())
{
    for (std::size_t d : shape)
        if (d == 0)
            throw DimensionError("tensor dimensions must be positive, got " + shape_str(shape));
    if (shape_numel(shape) != data.size())
        throw DimensionError("tensor shape " + shape_str(shape) + " does not match "
                             + std::to_string(data.size()) + " values");
    impl_->shape = std::move(shape);
    impl_->data = std::move(data);
    impl_->requires_grad = requires_grad;
}

Tensor Tensor::scalar(float value, bool requires_grad)
{
    return Tensor({1}, {value}, requires_grad);
}

const Shape& Tensor::shape() const
{
    if (!impl_)
        throw ContractError("use of undefined tensor");
    return impl_->shape;
}

std::size_t Tensor::dim(std::size_t axis) const
{
    const Shape& s = shape();
    if (axis >= s.size())
        throw DimensionError("axis " + std::to_string(axis) + " out of range for " + shape_str(s));
    return s[axis];
}

std::size_t Tensor::numel() const { return impl_ ? impl_->data.size() : 0; }

std::span<float> Tensor::data()
{
    if (!impl_)
        throw ContractError("use of undefined tensor");
    return impl_->data;
}

std::span<const float> Tensor::data() const
{
    if (!impl_)
        throw ContractError("use of undefined tensor");
    return impl_->data;
}

float Tensor::item() const
{
    if (numel() != 1)
        throw DimensionError("item() on tensor of shape " + shape_str(shape()));
    return impl_->data[0];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

void Tensor::set_requires_grad(bool value)
{
    if (!impl_)
        throw ContractError("use of undefined tensor");
    impl_->requires_grad = value;
}

std::span<float> Tensor::grad() const
{
    if (!impl_)
        throw ContractError("use of undefined tensor");
    if (impl_->grad.empty())
        impl_->grad.assign(impl_->data.size(), 0.f);
    return impl_->grad;
}


bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }

void Tensor::zero_grad()
{
    if (impl_ && !impl_->grad.empty())
        std::fill(impl_->grad.begin(), impl_->grad.end(), 0.f);
}

Tensor Tensor::clone() const
{
    return Tensor(shape(), impl_->data, false);
}

Tensor Tensor::reshaped(Shape new_shape) const
{
    if (shape_numel(new_shape) != numel())
        throw DimensionError("cannot reshape " + shape_str(shape()) + " to " + shape_str(new_shape));
    return Tensor(std::move(new_shape), impl_->data, false);
}

void check_finite(std::span<const float> values, std::string_view what)
{
    for (std::size_t i = 0; i < values.size(); i++)
    {
        if (!std::isfinite(values[i]))
            throw NumericError(std::string(what) + ": non-finite value at index " + std::to_string(i));
    }
}

Tape Tape::inference()
{
    Tape t;
    t.enabled_ = false;
    return t;
}

bool Tape::record(std::string_view op, std::vector<Tensor> inputs, Tensor& output, BackwardFn fn)
{
    if (!enabled_)
        return false;
    bool any = std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
    if (!any)
        return false;
    output.set_requires_grad(true);
    entries_.push_back(Entry{std::string(op), std::move(inputs), output, std::move(fn)});
    return true;
}

void Tape::backward(const Tensor& loss)
{
    if (!loss.defined() || loss.numel() != 1)
        throw ContractError("backward() requires a scalar loss");
    auto it = std::find_if(entries_.rbegin(), entries_.rend(),
                           [&](const Entry& e) { return e.output.same_storage(loss); });
    if (it == entries_.rend())
        throw ContractError("backward(): loss was not produced on this tape (detached graph)");

    Tensor root = loss;
    root.grad()[0] += 1.f;
    for (; it != entries_.rend(); ++it)
    {
        if (!it->output.has_grad())
            continue;
        it->fn();
    }
    for (const Entry& e : entries_)
        for (const Tensor& in : e.inputs)
            if (in.has_grad())
                check_finite(in.grad(), "gradient of " + e.op + " input");
}

std::vector<std::string> Tape::op_names() const
{
    std::vector<std::string> names;
    names.reserve(entries_.size());
    for (const Entry& e : entries_)
        names.push_back(e.op);
    return names;
}

} // namespace rstego
