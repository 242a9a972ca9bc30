#include "rstego/ops.h"

#include <Eigen/Core>
#include <cmath>
#include <memory>

#include "rstego/errors.h"

namespace rstego {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

constexpr std::size_t kKernel = 3;
constexpr std::size_t kTaps = kKernel * kKernel;

// Geometry shared by conv2d and its transpose: an "image" of side H x W is
// sampled on a grid of side Ho x Wo with the given stride and padding.
struct ConvGeometry {
    std::size_t channels, h, w, stride, pad, ho, wo;
};

// cols[(c*9 + kh*3 + kw), oh*Wo + ow] = img[c, oh*s - p + kh, ow*s - p + kw] (0 outside).
void im2col(const float* img, const ConvGeometry& g, float* cols)
{
    const std::size_t plane = g.ho * g.wo;
    for (std::size_t c = 0; c < g.channels; c++)
    {
        const float* src = img + c * g.h * g.w;
        for (std::size_t kh = 0; kh < kKernel; kh++)
        {
            for (std::size_t kw = 0; kw < kKernel; kw++)
            {
                float* dst = cols + ((c * kKernel + kh) * kKernel + kw) * plane;
                for (std::size_t oh = 0; oh < g.ho; oh++)
                {
                    const long ih = static_cast<long>(oh * g.stride + kh) - static_cast<long>(g.pad);
                    float* row = dst + oh * g.wo;
                    if (ih < 0 || ih >= static_cast<long>(g.h))
                    {
                        std::fill(row, row + g.wo, 0.f);
                        continue;
                    }
                    const float* srow = src + static_cast<std::size_t>(ih) * g.w;
                    for (std::size_t ow = 0; ow < g.wo; ow++)
                    {
                        const long iw = static_cast<long>(ow * g.stride + kw) - static_cast<long>(g.pad);
                        row[ow] = (iw < 0 || iw >= static_cast<long>(g.w)) ? 0.f : srow[iw];
                    }
                }
            }
        }
    }
}

// Adjoint of im2col: scatter-add columns back into the image.
void col2im(const float* cols, const ConvGeometry& g, float* img)
{
    const std::size_t plane = g.ho * g.wo;
    for (std::size_t c = 0; c < g.channels; c++)
    {
        float* dst = img + c * g.h * g.w;
        for (std::size_t kh = 0; kh < kKernel; kh++)
        {
            for (std::size_t kw = 0; kw < kKernel; kw++)
            {
                const float* src = cols + ((c * kKernel + kh) * kKernel + kw) * plane;
                for (std::size_t oh = 0; oh < g.ho; oh++)
                {
                    const long ih = static_cast<long>(oh * g.stride + kh) - static_cast<long>(g.pad);
                    if (ih < 0 || ih >= static_cast<long>(g.h))
                        continue;
                    float* drow = dst + static_cast<std::size_t>(ih) * g.w;
                    const float* row = src + oh * g.wo;
                    for (std::size_t ow = 0; ow < g.wo; ow++)
                    {
                        const long iw = static_cast<long>(ow * g.stride + kw) - static_cast<long>(g.pad);
                        if (iw >= 0 && iw < static_cast<long>(g.w))
                            drow[iw] += row[ow];
                    }
                }
            }
        }
    }
}

void require_rank(const Tensor& t, std::size_t rank, const char* what)
{
    if (t.rank() != rank)
        throw DimensionError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got "
                             + shape_str(t.shape()));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what)
{
    if (a.shape() != b.shape())
        throw DimensionError(std::string(what) + ": shape mismatch " + shape_str(a.shape()) + " vs "
                             + shape_str(b.shape()));
}

void check_conv_params(const Tensor& weight, const Tensor& bias, std::size_t cin_axis_value,
                       std::size_t cin, std::size_t cout, const char* what)
{
    require_rank(weight, 4, what);
    if (weight.dim(2) != kKernel || weight.dim(3) != kKernel)
        throw DimensionError(std::string(what) + ": kernel must be 3x3, got " + shape_str(weight.shape()));
    if (cin_axis_value != cin)
        throw DimensionError(std::string(what) + ": input has " + std::to_string(cin)
                             + " channels but weight expects " + std::to_string(cin_axis_value));
    if (bias.rank() != 1 || bias.dim(0) != cout)
        throw DimensionError(std::string(what) + ": bias shape " + shape_str(bias.shape())
                             + " does not match " + std::to_string(cout) + " output channels");
}

void add_bias(float* out, const float* bias, std::size_t channels, std::size_t plane)
{
    for (std::size_t c = 0; c < channels; c++)
    {
        float* p = out + c * plane;
        const float b = bias[c];
        for (std::size_t i = 0; i < plane; i++)
            p[i] += b;
    }
}

void accumulate_bias_grad(const float* gout, float* gb, std::size_t channels, std::size_t plane)
{
    for (std::size_t c = 0; c < channels; c++)
    {
        const float* p = gout + c * plane;
        double acc = 0.0;
        for (std::size_t i = 0; i < plane; i++)
            acc += p[i];
        gb[c] += static_cast<float>(acc);
    }
}

} // namespace

std::size_t conv2d_out_size(std::size_t in, std::size_t stride, std::size_t padding)
{
    if (stride == 0)
        throw DimensionError("conv2d: stride must be positive");
    if (in + 2 * padding < kKernel)
        throw DimensionError("conv2d: input size " + std::to_string(in) + " too small for 3x3 kernel");
    return (in + 2 * padding - kKernel) / stride + 1;
}

std::size_t conv_transpose2d_out_size(std::size_t in, std::size_t stride, std::size_t padding,
                                      std::size_t output_padding)
{
    if (stride == 0)
        throw DimensionError("conv_transpose2d: stride must be positive");
    if (output_padding >= stride)
        throw DimensionError("conv_transpose2d: output_padding must be smaller than stride");
    const std::size_t full = (in - 1) * stride + kKernel + output_padding;
    if (full < 2 * padding + 1)
        throw DimensionError("conv_transpose2d: output size would be empty");
    return full - 2 * padding;
}

Tensor conv2d(Tape& tape, const Tensor& input, const Tensor& weight, const Tensor& bias,
              Conv2dOptions opt)
{
    require_rank(input, 4, "conv2d input");
    const std::size_t n = input.dim(0), cin = input.dim(1), h = input.dim(2), w = input.dim(3);
    check_conv_params(weight, bias, weight.rank() == 4 ? weight.dim(1) : 0, cin, weight.dim(0), "conv2d");
    const std::size_t cout = weight.dim(0);
    const ConvGeometry g{cin, h, w, opt.stride, opt.padding, conv2d_out_size(h, opt.stride, opt.padding),
                         conv2d_out_size(w, opt.stride, opt.padding)};
    const std::size_t plane = g.ho * g.wo;
    const std::size_t rows = cin * kTaps;

    Tensor out({n, cout, g.ho, g.wo});
    auto cols = std::make_shared<std::vector<float>>(n * rows * plane);
    CMapMat wm(weight.data().data(), cout, rows);
    for (std::size_t b = 0; b < n; b++)
    {
        float* cb = cols->data() + b * rows * plane;
        im2col(input.data().data() + b * cin * h * w, g, cb);
        MapMat om(out.data().data() + b * cout * plane, cout, plane);
        om.noalias() = wm * CMapMat(cb, rows, plane);
        add_bias(om.data(), bias.data().data(), cout, plane);
    }
    check_finite(out.data(), "conv2d output");

    tape.record("conv2d", {input, weight, bias}, out, [=]() mutable {
        const float* gout = out.grad().data();
        CMapMat wmat(weight.data().data(), cout, rows);
        std::vector<float> dcols;
        if (input.requires_grad())
            dcols.resize(rows * plane);
        for (std::size_t b = 0; b < n; b++)
        {
            CMapMat go(gout + b * cout * plane, cout, plane);
            const float* cb = cols->data() + b * rows * plane;
            if (weight.requires_grad())
                MapMat(weight.grad().data(), cout, rows).noalias() += go * CMapMat(cb, rows, plane).transpose();
            if (bias.requires_grad())
                accumulate_bias_grad(go.data(), bias.grad().data(), cout, plane);
            if (input.requires_grad())
            {
                MapMat(dcols.data(), rows, plane).noalias() = wmat.transpose() * go;
                col2im(dcols.data(), g, input.grad().data() + b * cin * h * w);
            }
        }
    });
    return out;
}

Tensor conv_transpose2d(Tape& tape, const Tensor& input, const Tensor& weight, const Tensor& bias,
                        ConvTranspose2dOptions opt)
{
    require_rank(input, 4, "conv_transpose2d input");
    const std::size_t n = input.dim(0), cin = input.dim(1), h = input.dim(2), w = input.dim(3);
    require_rank(weight, 4, "conv_transpose2d weight");
    check_conv_params(weight, bias, weight.dim(0), cin, weight.dim(1), "conv_transpose2d");
    const std::size_t cout = weight.dim(1);
    const std::size_t ho = conv_transpose2d_out_size(h, opt.stride, opt.padding, opt.output_padding);
    const std::size_t wo = conv_transpose2d_out_size(w, opt.stride, opt.padding, opt.output_padding);
    // The output plays the role of the conv2d "image"; the input is the sampling grid.
    const ConvGeometry g{cout, ho, wo, opt.stride, opt.padding, h, w};
    const std::size_t plane = h * w;
    const std::size_t rows = cout * kTaps;

    Tensor out({n, cout, ho, wo});
    CMapMat wm(weight.data().data(), cin, rows);
    std::vector<float> cols(rows * plane);
    for (std::size_t b = 0; b < n; b++)
    {
        CMapMat xm(input.data().data() + b * cin * plane, cin, plane);
        MapMat(cols.data(), rows, plane).noalias() = wm.transpose() * xm;
        float* ob = out.data().data() + b * cout * ho * wo;
        col2im(cols.data(), g, ob);
        add_bias(ob, bias.data().data(), cout, ho * wo);
    }
    check_finite(out.data(), "conv_transpose2d output");

    tape.record("conv_transpose2d", {input, weight, bias}, out, [=]() mutable {
        const float* gout = out.grad().data();
        CMapMat wmat(weight.data().data(), cin, rows);
        std::vector<float> dcols(rows * plane);
        for (std::size_t b = 0; b < n; b++)
        {
            const float* gb = gout + b * cout * ho * wo;
            im2col(gb, g, dcols.data());
            CMapMat dc(dcols.data(), rows, plane);
            if (input.requires_grad())
                MapMat(input.grad().data() + b * cin * plane, cin, plane).noalias() += wmat * dc;
            if (weight.requires_grad())
            {
                CMapMat xm(input.data().data() + b * cin * plane, cin, plane);
                MapMat(weight.grad().data(), cin, rows).noalias() += xm * dc.transpose();
            }
            if (bias.requires_grad())
                accumulate_bias_grad(gb, bias.grad().data(), cout, ho * wo);
        }
    });
    return out;
}

Tensor batch_norm2d(Tape& tape, const Tensor& input, const Tensor& gamma, const Tensor& beta_shift,
                    float eps)
{
    require_rank(input, 4, "batch_norm2d input");
    const std::size_t n = input.dim(0), c = input.dim(1), plane = input.dim(2) * input.dim(3);
    if (gamma.shape() != Shape{c} || beta_shift.shape() != Shape{c})
        throw DimensionError("batch_norm2d: affine parameters must have shape [" + std::to_string(c) + "]");
    if (!(eps > 0.f))
        throw ContractError("batch_norm2d: eps must be positive");
    const std::size_t count = n * plane;
    if (count < 2)
        throw NumericError("batch_norm2d: variance undefined for a single element per channel");

    Tensor out(input.shape());
    auto xhat = std::make_shared<std::vector<float>>(input.numel());
    auto inv_std = std::make_shared<std::vector<float>>(c);
    const float* x = input.data().data();
    float* y = out.data().data();
    for (std::size_t ch = 0; ch < c; ch++)
    {
        double s = 0.0;
        for (std::size_t b = 0; b < n; b++)
        {
            const float* p = x + (b * c + ch) * plane;
            for (std::size_t i = 0; i < plane; i++)
                s += p[i];
        }
        const double mu = s / static_cast<double>(count);
        double v = 0.0;
        for (std::size_t b = 0; b < n; b++)
        {
            const float* p = x + (b * c + ch) * plane;
            for (std::size_t i = 0; i < plane; i++)
            {
                const double d = p[i] - mu;
                v += d * d;
            }
        }
        v /= static_cast<double>(count);
        const double is = 1.0 / std::sqrt(v + eps);
        (*inv_std)[ch] = static_cast<float>(is);
        const float g = gamma.data()[ch], bt = beta_shift.data()[ch];
        for (std::size_t b = 0; b < n; b++)
        {
            const std::size_t off = (b * c + ch) * plane;
            for (std::size_t i = 0; i < plane; i++)
            {
                const float xh = static_cast<float>((x[off + i] - mu) * is);
                (*xhat)[off + i] = xh;
                y[off + i] = g * xh + bt;
            }
        }
    }
    check_finite(out.data(), "batch_norm2d output");

    tape.record("batch_norm2d", {input, gamma, beta_shift}, out, [=]() mutable {
        const float* gy = out.grad().data();
        const float* xh = xhat->data();
        for (std::size_t ch = 0; ch < c; ch++)
        {
            double sum_g = 0.0, sum_gx = 0.0;
            for (std::size_t b = 0; b < n; b++)
            {
                const std::size_t off = (b * c + ch) * plane;
                for (std::size_t i = 0; i < plane; i++)
                {
                    sum_g += gy[off + i];
                    sum_gx += static_cast<double>(gy[off + i]) * xh[off + i];
                }
            }
            if (gamma.requires_grad())
                gamma.grad()[ch] += static_cast<float>(sum_gx);
            if (beta_shift.requires_grad())
                beta_shift.grad()[ch] += static_cast<float>(sum_g);
            if (input.requires_grad())
            {
                const double g = gamma.data()[ch];
                const double k = g * (*inv_std)[ch] / static_cast<double>(count);
                const double m = static_cast<double>(count);
                float* gx = input.grad().data();
                for (std::size_t b = 0; b < n; b++)
                {
                    const std::size_t off = (b * c + ch) * plane;
                    for (std::size_t i = 0; i < plane; i++)
                        gx[off + i] += static_cast<float>(k * (m * gy[off + i] - sum_g - xh[off + i] * sum_gx));
                }
            }
        }
    });
    return out;
}

Tensor leaky_relu(Tape& tape, const Tensor& input, float alpha)
{
    Tensor out(input.shape());
    auto x = input.data();
    auto y = out.data();
    for (std::size_t i = 0; i < x.size(); i++)
        y[i] = x[i] >= 0.f ? x[i] : alpha * x[i];
    tape.record("leaky_relu", {input}, out, [=]() mutable {
        auto gy = out.grad();
        auto gx = input.grad();
        auto xv = input.data();
        for (std::size_t i = 0; i < gy.size(); i++)
            gx[i] += xv[i] >= 0.f ? gy[i] : alpha * gy[i];
    });
    return out;
}

Tensor concat_channels(Tape& tape, const Tensor& a, const Tensor& b)
{
    require_rank(a, 4, "concat_channels");
    require_rank(b, 4, "concat_channels");
    if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3))
        throw DimensionError("concat_channels: incompatible shapes " + shape_str(a.shape()) + " and "
                             + shape_str(b.shape()));
    const std::size_t n = a.dim(0), ca = a.dim(1), cb = b.dim(1), plane = a.dim(2) * a.dim(3);
    Tensor out({n, ca + cb, a.dim(2), a.dim(3)});
    for (std::size_t i = 0; i < n; i++)
    {
        float* dst = out.data().data() + i * (ca + cb) * plane;
        std::copy_n(a.data().data() + i * ca * plane, ca * plane, dst);
        std::copy_n(b.data().data() + i * cb * plane, cb * plane, dst + ca * plane);
    }
    tape.record("concat_channels", {a, b}, out, [=]() mutable {
        const float* g = out.grad().data();
        for (std::size_t i = 0; i < n; i++)
        {
            const float* src = g + i * (ca + cb) * plane;
            if (a.requires_grad())
            {
                float* ga = a.grad().data() + i * ca * plane;
                for (std::size_t k = 0; k < ca * plane; k++)
                    ga[k] += src[k];
            }
            if (b.requires_grad())
            {
                float* gb = b.grad().data() + i * cb * plane;
                for (std::size_t k = 0; k < cb * plane; k++)
                    gb[k] += src[ca * plane + k];
            }
        }
    });
    return out;
}

Tensor narrow_channels(Tape& tape, const Tensor& x, std::size_t start, std::size_t count)
{
    require_rank(x, 4, "narrow_channels");
    const std::size_t n = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
    if (count == 0 || start + count > c)
        throw DimensionError("narrow_channels: range out of bounds for " + shape_str(x.shape()));
    Tensor out({n, count, x.dim(2), x.dim(3)});
    for (std::size_t i = 0; i < n; i++)
        std::copy_n(x.data().data() + (i * c + start) * plane, count * plane,
                    out.data().data() + i * count * plane);
    tape.record("narrow_channels", {x}, out, [=]() mutable {
        const float* g = out.grad().data();
        float* gx = x.grad().data();
        for (std::size_t i = 0; i < n; i++)
            for (std::size_t k = 0; k < count * plane; k++)
                gx[(i * c + start) * plane + k] += g[i * count * plane + k];
    });
    return out;
}

Tensor reshape(Tape& tape, const Tensor& x, Shape shape)
{
    Tensor out = x.reshaped(std::move(shape));
    tape.record("reshape", {x}, out, [=]() mutable {
        auto g = out.grad();
        auto gx = x.grad();
        for (std::size_t i = 0; i < g.size(); i++)
            gx[i] += g[i];
    });
    return out;
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b)
{
    require_same_shape(a, b, "add");
    Tensor out(a.shape());
    auto av = a.data(), bv = b.data();
    auto o = out.data();
    for (std::size_t i = 0; i < o.size(); i++)
        o[i] = av[i] + bv[i];
    tape.record("add", {a, b}, out, [=]() mutable {
        auto g = out.grad();
        if (a.requires_grad())
        {
            auto ga = a.grad();
            for (std::size_t i = 0; i < g.size(); i++)
                ga[i] += g[i];
        }
        if (b.requires_grad())
        {
            auto gb = b.grad();
            for (std::size_t i = 0; i < g.size(); i++)
                gb[i] += g[i];
        }
    });
    return out;
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b)
{
    require_same_shape(a, b, "sub");
    Tensor out(a.shape());
    auto av = a.data(), bv = b.data();
    auto o = out.data();
    for (std::size_t i = 0; i < o.size(); i++)
        o[i] = av[i] - bv[i];
    tape.record("sub", {a, b}, out, [=]() mutable {
        auto g = out.grad();
        if (a.requires_grad())
        {
            auto ga = a.grad();
            for (std::size_t i = 0; i < g.size(); i++)
                ga[i] += g[i];
        }
        if (b.requires_grad())
        {
            auto gb = b.grad();
            for (std::size_t i = 0; i < g.size(); i++)
                gb[i] -= g[i];
        }
    });
    return out;
}

Tensor scale(Tape& tape, const Tensor& x, float factor)
{
    Tensor out(x.shape());
    auto xv = x.data();
    auto o = out.data();
    for (std::size_t i = 0; i < o.size(); i++)
        o[i] = factor * xv[i];
    tape.record("scale", {x}, out, [=]() mutable {
        auto g = out.grad();
        auto gx = x.grad();
        for (std::size_t i = 0; i < g.size(); i++)
            gx[i] += factor * g[i];
    });
    return out;
}

Tensor scale_by(Tape& tape, const Tensor& x, const Tensor& factor)
{
    if (factor.numel() != 1)
        throw DimensionError("scale_by: factor must have exactly one element");
    const float f = factor.item();
    Tensor out(x.shape());
    auto xv = x.data();
    auto o = out.data();
    for (std::size_t i = 0; i < o.size(); i++)
        o[i] = f * xv[i];
    tape.record("scale_by", {x, factor}, out, [=]() mutable {
        auto g = out.grad();
        auto xd = x.data();
        if (x.requires_grad())
        {
            auto gx = x.grad();
            for (std::size_t i = 0; i < g.size(); i++)
                gx[i] += f * g[i];
        }
        if (factor.requires_grad())
        {
            double acc = 0.0;
            for (std::size_t i = 0; i < g.size(); i++)
                acc += static_cast<double>(g[i]) * xd[i];
            factor.grad()[0] += static_cast<float>(acc);
        }
    });
    return out;
}

Tensor mul_const(Tape& tape, const Tensor& x, std::span<const float> multiplier)
{
    if (multiplier.size() != x.numel())
        throw DimensionError("mul_const: multiplier length mismatch");
    std::vector<float> m(multiplier.begin(), multiplier.end());
    Tensor out(x.shape());
    auto xv = x.data();
    auto o = out.data();
    for (std::size_t i = 0; i < o.size(); i++)
        o[i] = xv[i] * m[i];
    tape.record("mul_const", {x}, out, [=, m = std::move(m)]() mutable {
        auto g = out.grad();
        auto gx = x.grad();
        for (std::size_t i = 0; i < g.size(); i++)
            gx[i] += m[i] * g[i];
    });
    return out;
}

Tensor add_const(Tape& tape, const Tensor& x, std::span<const float> offset)
{
    if (offset.size() != x.numel())
        throw DimensionError("add_const: offset length mismatch");
    Tensor out(x.shape());
    auto xv = x.data();
    auto o = out.data();
    for (std::size_t i = 0; i < o.size(); i++)
        o[i] = xv[i] + offset[i];
    tape.record("add_const", {x}, out, [=]() mutable {
        auto g = out.grad();
        auto gx = x.grad();
        for (std::size_t i = 0; i < g.size(); i++)
            gx[i] += g[i];
    });
    return out;
}

Tensor square(Tape& tape, const Tensor& x)
{
    Tensor out(x.shape());
    auto xv = x.data();
    auto o = out.data();
    for (std::size_t i = 0; i < o.size(); i++)
        o[i] = xv[i] * xv[i];
    tape.record("square", {x}, out, [=]() mutable {
        auto g = out.grad();
        auto gx = x.grad();
        auto xd = x.data();
        for (std::size_t i = 0; i < g.size(); i++)
            gx[i] += 2.f * xd[i] * g[i];
    });
    return out;
}

Tensor sum(Tape& tape, const Tensor& x)
{
    double acc = 0.0;
    for (float v : x.data())
        acc += v;
    Tensor out = Tensor::scalar(static_cast<float>(acc));
    tape.record("sum", {x}, out, [=]() mutable {
        const float g = out.grad()[0];
        for (float& v : x.grad())
            v += g;
    });
    return out;
}

Tensor mean(Tape& tape, const Tensor& x)
{
    double acc = 0.0;
    for (float v : x.data())
        acc += v;
    const std::size_t n = x.numel();
    Tensor out = Tensor::scalar(static_cast<float>(acc / static_cast<double>(n)));
    tape.record("mean", {x}, out, [=]() mutable {
        const float g = out.grad()[0] / static_cast<float>(n);
        for (float& v : x.grad())
            v += g;
    });
    return out;
}

Tensor weighted_sum(Tape& tape, const Tensor& x, std::span<const float> weights)
{
    if (weights.size() != x.numel())
        throw DimensionError("weighted_sum: weight length mismatch");
    std::vector<float> wv(weights.begin(), weights.end());
    double acc = 0.0;
    auto xv = x.data();
    for (std::size_t i = 0; i < xv.size(); i++)
        acc += static_cast<double>(xv[i]) * wv[i];
    Tensor out = Tensor::scalar(static_cast<float>(acc));
    tape.record("weighted_sum", {x}, out, [=, wv = std::move(wv)]() mutable {
        const float g = out.grad()[0];
        auto gx = x.grad();
        for (std::size_t i = 0; i < gx.size(); i++)
            gx[i] += g * wv[i];
    });
    return out;
}

Tensor mae(Tape& tape, const Tensor& a, const Tensor& b)
{
    require_same_shape(a, b, "mae");
    auto av = a.data(), bv = b.data();
    double acc = 0.0;
    for (std::size_t i = 0; i < av.size(); i++)
        acc += std::fabs(static_cast<double>(av[i]) - bv[i]);
    const std::size_t n = av.size();
    Tensor out = Tensor::scalar(static_cast<float>(acc / static_cast<double>(n)));
    tape.record("mae", {a, b}, out, [=]() mutable {
        const float g = out.grad()[0] / static_cast<float>(n);
        auto ad = a.data(), bd = b.data();
        for (std::size_t i = 0; i < n; i++)
        {
            const float d = ad[i] - bd[i];
            const float s = d > 0.f ? g : (d < 0.f ? -g : 0.f);
            if (a.requires_grad())
                a.grad()[i] += s;
            if (b.requires_grad())
                b.grad()[i] -= s;
        }
    });
    return out;
}

Tensor mse(Tape& tape, const Tensor& a, const Tensor& b)
{
    require_same_shape(a, b, "mse");
    auto av = a.data(), bv = b.data();
    double acc = 0.0;
    for (std::size_t i = 0; i < av.size(); i++)
    {
        const double d = static_cast<double>(av[i]) - bv[i];
        acc += d * d;
    }
    const std::size_t n = av.size();
    Tensor out = Tensor::scalar(static_cast<float>(acc / static_cast<double>(n)));
    tape.record("mse", {a, b}, out, [=]() mutable {
        const float g = 2.f * out.grad()[0] / static_cast<float>(n);
        auto ad = a.data(), bd = b.data();
        for (std::size_t i = 0; i < n; i++)
        {
            const float s = g * (ad[i] - bd[i]);
            if (a.requires_grad())
                a.grad()[i] += s;
            if (b.requires_grad())
                b.grad()[i] -= s;
        }
    });
    return out;
}

} // namespace rstego
