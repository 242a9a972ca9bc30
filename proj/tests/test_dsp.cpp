#include <cmath>
#include <numbers>

#include "doctest.h"
#include "gradcheck.h"
#include "rstego/dsp.h"
#include "rstego/errors.h"

using namespace rstego;

namespace {

std::vector<float> random_floats(std::size_t n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    return gc::to_f(ref::uniform(n, rng));
}

double max_abs_diff(std::span<const float> a, std::span<const float> b)
{
    double m = 0;
    for (std::size_t i = 0; i < a.size(); i++)
        m = std::max(m, std::abs(double(a[i]) - b[i]));
    return m;
}

} // namespace

TEST_CASE("dct2 examples")
{
    const std::vector<float> c(16, 0.5f);
    const auto X = dct2(c);
    CHECK(X[0] == doctest::Approx(0.5 * 4.0).epsilon(1e-6));
    for (std::size_t k = 1; k < 16; k++)
        CHECK(std::abs(X[k]) < 1e-6);

    const auto D = dct2(std::vector<float>{1.f, 0.f, 0.f, 0.f});
    for (std::size_t k = 0; k < 4; k++)
    {
        const double a = k == 0 ? 0.5 : std::sqrt(0.5);
        CHECK(D[k] == doctest::Approx(a * std::cos(std::numbers::pi * double(k) / 8.0)).epsilon(1e-6));
    }
    CHECK_THROWS(dct2(std::vector<float>{}));
}

TEST_CASE("dct3 inverts dct2 and is its transpose")
{
    for (std::size_t n : {62, 4096})
    {
        const auto x = random_floats(n, n);
        CHECK(max_abs_diff(dct3(dct2(x)), x) < 1e-5);
        double ex = 0, eX = 0;
        const auto X = dct2(x);
        for (std::size_t i = 0; i < n; i++)
        {
            ex += double(x[i]) * x[i];
            eX += double(X[i]) * X[i];
        }
        CHECK(std::sqrt(eX) == doctest::Approx(std::sqrt(ex)).epsilon(1e-5));
    }
    const auto dc = dct3(std::vector<float>{2.f * 3.f, 0.f, 0.f, 0.f, 0.f, 0.f, 0.f, 0.f, 0.f});
    for (float v : dc)
        CHECK(v == doctest::Approx(2.f).epsilon(1e-6));

    const auto x = random_floats(64, 1), y = random_floats(64, 2);
    const auto dx = dct2(x), ty = dct3(y);
    double l = 0, r = 0;
    for (std::size_t i = 0; i < 64; i++)
    {
        l += double(dx[i]) * y[i];
        r += double(x[i]) * ty[i];
    }
    CHECK(l == doctest::Approx(r).epsilon(1e-5));
}

TEST_CASE("dct2 matches the direct cosine sum")
{
    const auto x = random_floats(37, 9);
    const auto X = dct2(x);
    for (std::size_t k = 0; k < 37; k++)
    {
        double acc = 0;
        for (std::size_t n = 0; n < 37; n++)
            acc += ref::dct_coef(k, n, 37) * x[n];
        CHECK(X[k] == doctest::Approx(acc).epsilon(1e-5));
    }
}

TEST_CASE("stdct frame counts")
{
    CHECK(num_frames_for(67522, 4096, 62) == 1024);
    CHECK(num_frames_for(8129, 128, 63) == 128);
    // floor((8192-128)/63)+1 is 129: 8192 samples do not give a 128-frame grid at hop 63.
    CHECK(num_frames_for(8192, 128, 63) == 129);
    CHECK_THROWS_AS(num_frames_for(100, 128, 63), DimensionError);
    for (std::size_t len = 128; len < 400; len += 7)
        CHECK(num_frames_for(len, 128, 63) == (len - 128) / 63 + 1);
}

TEST_CASE("stdct and istdct")
{
    SUBCASE("zero waveform")
    {
        const auto s = stdct(std::vector<float>(300), 32, 16);
        for (float v : s.values)
            CHECK(v == 0.f);
    }
    SUBCASE("matches reference and round trips with trailing samples")
    {
        const auto x = random_floats(8129 + 17, 4);
        const auto s = stdct(x, 128, 63);
        CHECK(s.bins() == 128);
        CHECK(s.frames() == 128);
        const auto r = ref::stdct(ref::Vec(x.begin(), x.begin() + 8129), 128, 63);
        for (std::size_t i = 0; i < r.size(); i += 97)
            CHECK(s.values[i] == doctest::Approx(r[i]).epsilon(1e-4));
        const auto back = istdct(s);
        REQUIRE(back.size() == x.size());
        CHECK(max_abs_diff(back, x) < 1e-4);
        for (std::size_t i = 8129; i < x.size(); i++)
            CHECK(back[i] == x[i]);
    }
    SUBCASE("single frame reduces to dct3")
    {
        const auto x = random_floats(16, 5);
        const auto s = stdct(x, 16, 4);
        CHECK(s.frames() == 1);
        CHECK(max_abs_diff(istdct(s), dct3(s.values)) < 1e-7);
    }
    SUBCASE("linearity of istdct")
    {
        auto a = stdct(random_floats(200, 6), 20, 9);
        auto b = stdct(random_floats(200, 7), 20, 9);
        Spectrogram sum = a;
        for (std::size_t i = 0; i < sum.values.size(); i++)
            sum.values[i] += b.values[i];
        const auto ia = istdct(a), ib = istdct(b), is = istdct(sum);
        for (std::size_t i = 0; i < is.size(); i++)
            CHECK(is[i] == doctest::Approx(ia[i] + ib[i]).epsilon(1e-5));
    }
    SUBCASE("shorter than one frame")
    {
        CHECK_THROWS_AS(stdct(std::vector<float>(10), 16, 4), DimensionError);
    }
}

TEST_CASE("adjoint identities")
{
    const auto w = random_floats(8129, 10);
    const auto S = random_floats(128 * 128, 11);
    const auto spec = FrameSpec::for_length(128, 63, 8129);
    const auto fw = stdct(w, 128, 63);
    const auto adj = stdct_adjoint(S, spec);
    double l = 0, r = 0;
    for (std::size_t i = 0; i < S.size(); i++)
        l += double(fw.values[i]) * S[i];
    for (std::size_t i = 0; i < w.size(); i++)
        r += double(w[i]) * adj[i];
    CHECK(l == doctest::Approx(r).epsilon(1e-4));

    Spectrogram sp = fw;
    sp.values = S;
    sp.trailing.clear();
    const auto iw = istdct(sp);
    const auto iadj = istdct_adjoint(w, spec);
    l = r = 0;
    for (std::size_t i = 0; i < w.size(); i++)
        l += double(iw[i]) * w[i];
    for (std::size_t i = 0; i < S.size(); i++)
        r += double(S[i]) * iadj[i];
    CHECK(l == doctest::Approx(r).epsilon(1e-4));

    const auto zero = stdct_adjoint(std::vector<float>(S.size()), spec);
    for (float v : zero)
        CHECK(v == 0.f);
}

TEST_CASE("tape stdct and istdct gradients")
{
    for (std::uint64_t seed = 0; seed < 8; seed++)
    {
        CAPTURE(seed);
        CHECK(gc::stdct(seed) < 1e-3);
        CHECK(gc::istdct(seed) < 1e-3);
    }
    // gradient of sum(istdct(S)) on an 8x4 spectrogram
    std::mt19937_64 rng(3);
    const auto s = ref::uniform(32, rng);
    Tape tape;
    Tensor S({8, 4}, gc::to_f(s), true);
    tape.backward(sum(tape, istdct(tape, S, 4)));
    auto f = [](const ref::Vec& v) {
        double t = 0;
        for (double e : ref::istdct(v, 8, 4, 4))
            t += e;
        return t;
    };
    CHECK(gc::max_error(S.grad(), ref::numeric_gradient(f, s)) < 1e-3);
}
