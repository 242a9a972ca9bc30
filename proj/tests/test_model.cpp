#include <cstring>

#include "doctest.h"
#include "gradcheck.h"
#include "rstego/errors.h"
#include "rstego/model.h"

using namespace rstego;

namespace {

StegoConfig small_config(ArchVariant v, std::size_t side = 64, std::size_t rows = 1, std::size_t cols = 1)
{
    StegoConfig c;
    c.variant = v;
    c.geometry = StampGeometry{side, rows, cols};
    c.base_width = 4;
    c.hop = 32;
    return c;
}

Image random_image(std::size_t side, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    Image img;
    img.width = img.height = side;
    img.rgb.resize(side * side * 3);
    for (auto& v : img.rgb)
        v = static_cast<std::uint8_t>(rng() & 0xff);
    return img;
}

Tensor random_tensor(Shape s, std::uint64_t seed, double scale = 1.0)
{
    std::mt19937_64 rng(seed);
    auto v = ref::uniform(shape_numel(s), rng, -scale, scale);
    return Tensor(std::move(s), gc::to_f(v));
}

Spectrogram random_spect(const StegoConfig& c, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    return stdct(gc::to_f(ref::uniform(c.clip_samples(), rng, -0.5, 0.5)), c.frame_len(), c.hop);
}

Tensor as_tensor(const Spectrogram& s) { return Tensor({s.bins(), s.frames()}, s.values); }

bool bitwise_equal(std::span<const float> a, std::span<const float> b)
{
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

} // namespace

TEST_CASE("pixel shuffle layout")
{
    Tape tape = Tape::inference();
    Tensor x({1, 4, 1, 1}, {1.f, 2.f, 3.f, 0.f});
    Tensor y = pixel_shuffle(tape, x);
    CHECK(y.shape() == Shape{1, 1, 2, 2});
    CHECK(std::vector<float>(y.data().begin(), y.data().end()) == std::vector<float>{1.f, 2.f, 3.f, 0.f});
    CHECK(bitwise_equal(pixel_unshuffle(tape, y).data(), x.data()));

    Tensor m = random_tensor({1, 1, 8, 8}, 3);
    CHECK(bitwise_equal(pixel_shuffle(tape, pixel_unshuffle(tape, m)).data(), m.data()));
    Tensor z = pixel_shuffle(tape, Tensor({1, 4, 3, 3}));
    for (float v : z.data())
        CHECK(v == 0.f);
    CHECK_THROWS_AS(pixel_unshuffle(tape, Tensor({1, 1, 3, 3})), DimensionError);
    CHECK_THROWS_AS(pixel_shuffle(tape, Tensor({1, 3, 2, 2})), DimensionError);
}

TEST_CASE("shuffle_image appends a zero channel")
{
    Image img{1, 1, {10, 20, 30}};
    Tensor s = shuffle_image(normalize_image(img));
    CHECK(s.shape() == Shape{1, 1, 2, 2});
    CHECK(s.data()[0] == doctest::Approx(10.f / 255.f));
    CHECK(s.data()[1] == doctest::Approx(20.f / 255.f));
    CHECK(s.data()[2] == doctest::Approx(30.f / 255.f));
    CHECK(s.data()[3] == 0.f);
}

TEST_CASE("U-Net preserves spatial shape")
{
    std::mt19937_64 rng(1);
    UNet net(1, 4, rng);
    Tape tape = Tape::inference();
    CHECK(net.forward(tape, random_tensor({1, 1, 128, 128}, 2)).shape() == Shape{1, 1, 128, 128});
    // a 64x64 input reaches a 1x1 bottleneck where batch statistics are undefined
    CHECK_THROWS_AS(net.forward(tape, random_tensor({1, 1, 64, 64}, 2)), NumericError);
    CHECK_THROWS_AS(net.forward(tape, random_tensor({1, 1, 96, 96}, 2)), DimensionError);
}

TEST_CASE("gradient reaches every parameter")
{
    for (ArchVariant v : {ArchVariant::ResIndep, ArchVariant::ResDep, ArchVariant::PlainDep, ArchVariant::ResScale})
    {
        CAPTURE(variant_name(v));
        const StegoConfig cfg = small_config(v);
        StegoNet net(cfg, 5);
        Tape tape;
        Tensor img = normalize_image(random_image(64, 6));
        Tensor host = as_tensor(random_spect(cfg, 7));
        VariantOutput out = variant_forward(tape, net, img, host);
        tape.backward(add(tape, mae(tape, img, out.revealed), mse(tape, host, out.container)));
        for (const auto& p : net.named_parameters())
        {
            CAPTURE(p.name);
            double norm = 0;
            for (float g : p.tensor.grad())
                norm += double(g) * g;
            CHECK(norm > 0.0);
        }
    }
}

TEST_CASE("cover independence and additivity")
{
    const StegoConfig cfg = small_config(ArchVariant::ResIndep);
    StegoNet net(cfg, 11);
    const Image img = random_image(64, 12);
    const Stamp ref_stamp = compute_stamp(net, img, {});
    Tape tape = Tape::inference();
    for (std::uint64_t h = 0; h < 4; h++)
    {
        const Spectrogram host = random_spect(cfg, 100 + h);
        const EmbedResult e = net.embed(tape, normalize_image(img), as_tensor(host));
        CHECK(bitwise_equal(e.encoded.data(), ref_stamp.residual));
        const Spectrogram c = embed(ref_stamp, host);
        for (std::size_t i = 0; i < c.values.size(); i++)
            REQUIRE(c.values[i] - host.values[i] == doctest::Approx(ref_stamp.residual[i]).epsilon(1e-6));
    }
}

TEST_CASE("stamp embedding")
{
    const StegoConfig cfg = small_config(ArchVariant::ResIndep, 64, 2, 2);
    const std::size_t side = cfg.geometry.shuffled_side();
    Stamp zero{std::vector<float>(side * side), cfg.geometry, {}};
    const Spectrogram host = random_spect(cfg, 1);
    REQUIRE(host.bins() == 2 * side);
    CHECK(bitwise_equal(embed(zero, host).values, host.values));

    const Tensor r = random_tensor({side, side}, 2);
    const Stamp s{{r.data().begin(), r.data().end()}, cfg.geometry, {}};
    Spectrogram zero_host = host;
    std::fill(zero_host.values.begin(), zero_host.values.end(), 0.f);
    const Spectrogram tiled = embed(s, zero_host);
    CHECK(bitwise_equal(tile_average(tiled, cfg.geometry), s.residual));

    const Spectrogram other = random_spect(cfg, 3);
    const Spectrogram c1 = embed(s, host), c2 = embed(s, other);
    for (std::size_t i = 0; i < c1.values.size(); i += 13)
        CHECK(c1.values[i] - c2.values[i] == doctest::Approx(host.values[i] - other.values[i]).epsilon(1e-5));

    const Spectrogram wrong = stdct(std::vector<float>(cfg.clip_samples()), cfg.frame_len() / 2, 16);
    CHECK_THROWS_AS(embed(s, wrong), DimensionError);
}

TEST_CASE("tile averaging reduces noise variance")
{
    const StampGeometry g{32, 2, 2};
    const std::size_t side = g.shuffled_side();
    std::mt19937_64 rng(9);
    std::normal_distribution<float> normal(0.f, 1.f);
    Spectrogram s;
    s.spec = FrameSpec{g.bins(), 1, g.frames()};
    s.values.resize(g.bins() * g.frames());
    double var = 0;
    std::size_t count = 0;
    for (int draw = 0; draw < 1000; draw++)
    {
        for (float& v : s.values)
            v = normal(rng);
        const auto avg = tile_average(s, g);
        for (std::size_t i = 0; i < side * side; i += 257)
        {
            var += double(avg[i]) * avg[i];
            count++;
        }
    }
    CHECK(var / double(count) == doctest::Approx(1.0 / 4.0).epsilon(0.1));

    const StampGeometry one{32, 1, 1};
    s.spec = FrameSpec{one.bins(), 1, one.frames()};
    s.values.assign(one.bins() * one.frames(), 0.f);
    for (std::size_t i = 0; i < s.values.size(); i++)
        s.values[i] = float(i % 17);
    CHECK(bitwise_equal(tile_average(s, one), s.values));
}

TEST_CASE("reveal output range")
{
    const StegoConfig cfg = small_config(ArchVariant::ResIndep);
    StegoNet net(cfg, 21);
    Spectrogram c = random_spect(cfg, 22);
    for (float& v : c.values)
        v *= 50.f;
    const auto img = reveal(net, c);
    CHECK(img.size() == 3 * 64 * 64);
    for (float v : img)
    {
        REQUIRE(std::isfinite(v));
        REQUIRE(v >= 0.f);
        REQUIRE(v <= 255.f);
    }
}

TEST_CASE("variant forward contracts")
{
    Tape tape = Tape::inference();
    SUBCASE("res-scale with zero weight leaves the host untouched")
    {
        const StegoConfig cfg = small_config(ArchVariant::ResScale);
        StegoNet net(cfg, 1);
        net.scale_weight().data()[0] = 0.f;
        const Tensor host = as_tensor(random_spect(cfg, 2));
        const auto out = variant_forward(tape, net, normalize_image(random_image(64, 3)), host);
        CHECK(bitwise_equal(out.container.data(), host.data()));
        CHECK(net.scale_weight().data()[0] == 0.f);
        StegoNet fresh(cfg, 1);
        CHECK(fresh.scale_weight().data()[0] == doctest::Approx(0.01f));
    }
    SUBCASE("plain-dep has no identity path")
    {
        const StegoConfig cfg = small_config(ArchVariant::PlainDep);
        StegoNet net(cfg, 4);
        const Tensor host = as_tensor(random_spect(cfg, 5));
        Image black{64, 64, std::vector<std::uint8_t>(64 * 64 * 3, 0)};
        const auto out = variant_forward(tape, net, normalize_image(black), host);
        CHECK_FALSE(bitwise_equal(out.container.data(), host.data()));
    }
    SUBCASE("res-dep with zero host-channel weights equals res-indep")
    {
        const StegoConfig ci = small_config(ArchVariant::ResIndep), cd = small_config(ArchVariant::ResDep);
        StegoNet indep(ci, 7), dep(cd, 8);
        const auto src = indep.named_parameters();
        for (const auto& p : dep.named_parameters())
        {
            const auto it = std::find_if(src.begin(), src.end(), [&](const NamedTensor& s) { return s.name == p.name; });
            REQUIRE(it != src.end());
            Tensor handle = p.tensor;
            auto dst = handle.data();
            // layers fed the network input have one extra (last) host channel
            if (p.tensor.numel() != it->tensor.numel())
            {
                const std::size_t cout = p.tensor.dim(0), cin = it->tensor.dim(1), k2 = 9;
                REQUIRE(p.tensor.dim(1) == cin + 1);
                for (std::size_t o = 0; o < cout; o++)
                    for (std::size_t c = 0; c <= cin; c++)
                        for (std::size_t k = 0; k < k2; k++)
                            dst[(o * (cin + 1) + c) * k2 + k] = c < cin ? it->tensor.data()[(o * cin + c) * k2 + k] : 0.f;
            }
            else
                std::copy(it->tensor.data().begin(), it->tensor.data().end(), dst.begin());
        }
        const Tensor img = normalize_image(random_image(64, 9));
        const Tensor host = as_tensor(random_spect(ci, 10));
        const auto a = variant_forward(tape, indep, img, host);
        const auto b = variant_forward(tape, dep, img, host);
        for (std::size_t i = 0; i < a.container.numel(); i++)
            REQUIRE(a.container.data()[i] == doctest::Approx(b.container.data()[i]).epsilon(1e-5));
    }
}

TEST_CASE("stamp file format")
{
    const StegoConfig cfg = small_config(ArchVariant::ResIndep);
    StegoNet net(cfg, 31);
    Digest d{};
    d[0] = 0xab;
    d[31] = 0x01;
    const Stamp s = compute_stamp(net, random_image(64, 32), d);
    const auto bytes = encode_stamp(s);
    const std::size_t side = cfg.geometry.shuffled_side();
    CHECK(bytes.size() == 16 + 32 + 4 + 4 * side * side);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "PXWR");
    const Stamp back = decode_stamp(bytes);
    CHECK(back.checkpoint_digest == d);
    CHECK(bitwise_equal(back.residual, s.residual));
    CHECK(back.geometry.image_side == 64);
    CHECK(encode_stamp(compute_stamp(net, random_image(64, 32), d)) == bytes);

    auto bad = bytes;
    bad.resize(bad.size() - 1);
    CHECK_THROWS_AS(decode_stamp(bad), FormatError);

    StegoNet dep(small_config(ArchVariant::ResDep), 1);
    CHECK_THROWS_WITH_AS(compute_stamp(dep, random_image(64, 1), d), "cover-dependent variant cannot precompute stamps",
                         ContractError);
}

TEST_CASE("network checkpoint round trip")
{
    const StegoConfig cfg = small_config(ArchVariant::ResScale, 64, 1, 2);
    StegoNet net(cfg, 41);
    const auto restored = StegoNet(decode_checkpoint(encode_checkpoint(net.checkpoint_tensors())));
    CHECK(restored.variant() == ArchVariant::ResScale);
    CHECK(restored.config().geometry.tile_cols == 2);
    CHECK(restored.config().hop == cfg.hop);
    CHECK(restored.parameter_count() == net.parameter_count());
    const Spectrogram c = random_spect(cfg, 42);
    CHECK(reveal(net, c) == reveal(restored, c));
}
