#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rstego {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Dense row-major float32 array with an optional gradient buffer.
//
// Tensor is a shared handle: copies alias the same storage, which is how the
// tape refers back to values produced during the forward pass. Use clone()
// for an independent copy.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, bool requires_grad = false);
    Tensor(Shape shape, std::vector<float> data, bool requires_grad = false);

    static Tensor scalar(float value, bool requires_grad = false);

    bool defined() const { return static_cast<bool>(impl_); }
    const Shape& shape() const;
    std::size_t rank() const { return shape().size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t numel() const;

    std::span<float> data();
    std::span<const float> data() const;
    float item() const;

    bool requires_grad() const;
    void set_requires_grad(bool value);

    // Gradient buffer, allocated (zeroed) on first access. Like the data it is
    // shared by every handle, so a const handle can still accumulate into it.
    std::span<float> grad() const;
    bool has_grad() const;
    void zero_grad();

    bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

    // Deep copy of shape and data; the copy has no gradient and is not on any tape.
    Tensor clone() const;
    // Same data under a new shape (element count must match); a detached copy.
    Tensor reshaped(Shape shape) const;

private:
    struct Storage {
        Shape shape;
        std::vector<float> data;
        std::vector<float> grad;
        bool requires_grad = false;
    };
    std::shared_ptr<Storage> impl_;
};

// Throws NumericError naming `what` if any value is NaN or infinite.
void check_finite(std::span<const float> values, std::string_view what);

// Ordered record of differentiable operations executed during a forward pass.
//
// Each entry owns a closure that reads its output's gradient and accumulates
// into its inputs' gradients. backward() replays the closures in exact reverse
// order, so fan-out accumulates additively.
class Tape {
public:
    using BackwardFn = std::function<void()>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;
    Tape(Tape&&) = default;
    Tape& operator=(Tape&&) = default;

    // A disabled tape records nothing; used for inference.
    static Tape inference();
    bool enabled() const { return enabled_; }

    // Records an op when the tape is enabled and any input requires grad.
    // Returns true when recorded; callers mark the output as requiring grad.
    bool record(std::string_view op, std::vector<Tensor> inputs, Tensor& output, BackwardFn fn);

    void backward(const Tensor& loss);

    std::size_t size() const { return entries_.size(); }
    void clear() { entries_.clear(); }
    std::vector<std::string> op_names() const;

private:
    struct Entry {
        std::string op;
        std::vector<Tensor> inputs;
        Tensor output;
        BackwardFn fn;
    };
    std::vector<Entry> entries_;
    bool enabled_ = true;
};

} // namespace rstego
