#include <cstring>
#include <filesystem>

#include "doctest.h"
#include "gradcheck.h"
#include "rstego/checkpoint.h"
#include "rstego/data_io.h"
#include "rstego/errors.h"

using namespace rstego;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("rstego_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

Image pattern(std::size_t w, std::size_t h)
{
    Image img{w, h, std::vector<std::uint8_t>(w * h * 3)};
    for (std::size_t i = 0; i < img.rgb.size(); i++)
        img.rgb[i] = static_cast<std::uint8_t>((i * 37) & 0xff);
    return img;
}

// Minimal RIFF header for hand-made files.
std::vector<std::uint8_t> wav_bytes(std::uint16_t format, std::uint16_t channels, std::uint16_t bits,
                                    const std::vector<std::uint8_t>& payload)
{
    std::vector<std::uint8_t> out;
    auto str = [&](const char* s) { out.insert(out.end(), s, s + 4); };
    str("RIFF");
    le::put_u32(out, static_cast<std::uint32_t>(36 + payload.size()));
    str("WAVE");
    str("fmt ");
    le::put_u32(out, 16);
    le::put_u16(out, format);
    le::put_u16(out, channels);
    le::put_u32(out, 16000);
    le::put_u32(out, 16000u * channels * bits / 8);
    le::put_u16(out, static_cast<std::uint16_t>(channels * bits / 8));
    le::put_u16(out, bits);
    str("data");
    le::put_u32(out, static_cast<std::uint32_t>(payload.size()));
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

} // namespace

TEST_CASE("wav round trips")
{
    std::mt19937_64 rng(1);
    Waveform w{gc::to_f(ref::uniform(1000, rng)), 22050};
    const Waveform f = decode_wav(encode_wav(w, WavEncoding::Float32));
    CHECK(f.sample_rate == 22050);
    CHECK(std::memcmp(f.samples.data(), w.samples.data(), w.samples.size() * 4) == 0);

    const Waveform p = decode_wav(encode_wav(w, WavEncoding::Pcm16));
    for (std::size_t i = 0; i < w.samples.size(); i++)
        REQUIRE(std::abs(p.samples[i] - w.samples[i]) <= 1.0f / 32768.f);

    Waveform loud{{2.f, -2.f}, 16000};
    const Waveform sat = decode_wav(encode_wav(loud, WavEncoding::Pcm16));
    CHECK(sat.samples[0] == doctest::Approx(32767.f / 32768.f));
    CHECK(sat.samples[1] == -1.f);

    const fs::path dir = scratch("wav");
    write_wav(dir / "a.wav", w);
    CHECK(read_wav(dir / "a.wav").samples == w.samples);
}

TEST_CASE("wav rejects unsupported input")
{
    const std::vector<std::uint8_t> four(8, 0);
    CHECK_THROWS_AS(decode_wav(wav_bytes(1, 2, 16, four)), FormatError);
    CHECK_THROWS_AS(decode_wav(wav_bytes(1, 1, 8, four)), FormatError);
    CHECK_THROWS_AS(decode_wav(wav_bytes(2, 1, 16, four)), FormatError);
    auto cut = wav_bytes(1, 1, 16, four);
    cut.resize(cut.size() - 3);
    CHECK_THROWS_AS(decode_wav(cut), FormatError);
    CHECK_THROWS_AS(decode_wav(std::vector<std::uint8_t>{'R', 'I', 'F', 'F'}), FormatError);
    CHECK_THROWS_AS(read_wav("/nonexistent/x.wav"), IoError);
    const Waveform pcm = decode_wav(wav_bytes(1, 1, 16, {0x00, 0x40, 0x00, 0x80}));
    CHECK(pcm.samples == std::vector<float>{0.5f, -1.f});
}

TEST_CASE("ppm round trip and validation")
{
    const Image img = pattern(7, 5);
    const Image back = decode_ppm(encode_ppm(img));
    CHECK(back.width == 7);
    CHECK(back.height == 5);
    CHECK(back.rgb == img.rgb);

    const std::string with_comment = "P6\n# made by hand\n2 1\n255\n";
    std::vector<std::uint8_t> bytes(with_comment.begin(), with_comment.end());
    for (int i = 0; i < 6; i++)
        bytes.push_back(static_cast<std::uint8_t>(i));
    CHECK(decode_ppm(bytes).rgb[5] == 5);

    const std::string one_bit = "P6\n2 1\n1\n";
    std::vector<std::uint8_t> ob(one_bit.begin(), one_bit.end());
    ob.resize(ob.size() + 6, 0);
    CHECK_THROWS_AS(decode_ppm(ob), FormatError);
    const std::string p4 = "P4\n2 1\n";
    CHECK_THROWS_AS(decode_ppm(std::vector<std::uint8_t>(p4.begin(), p4.end())), FormatError);
    auto truncated = encode_ppm(img);
    truncated.pop_back();
    CHECK_THROWS_AS(decode_ppm(truncated), FormatError);
}

TEST_CASE("crop and resize")
{
    Image wide = pattern(512, 256);
    const Image out = crop_resize(wide, 64);
    CHECK(out.width == 64);
    CHECK(out.height == 64);
    // nearest neighbour from the centred 256x256 crop starting at column 128
    for (std::size_t c = 0; c < 3; c++)
    {
        CHECK(out.at(0, 0, c) == wide.at(0, 128, c));
        CHECK(out.at(5, 9, c) == wide.at(20, 128 + 36, c));
    }
    const Image same = crop_resize(pattern(16, 16), 16);
    CHECK(same.rgb == pattern(16, 16).rgb);

    const auto planar = image_to_planar(same);
    CHECK(planar_to_image(planar, 16, 16).rgb == same.rgb);
}

TEST_CASE("dataset pairing")
{
    std::vector<Image> imgs{pattern(8, 8), pattern(8, 8), pattern(8, 8)};
    std::vector<Waveform> clips{{std::vector<float>(100, 0.1f), 16000}, {std::vector<float>(120, 0.2f), 16000}};
    const Dataset d(DatasetSpec{{}, {}, 8, 90, 5}, imgs, clips);
    const auto e0 = d.epoch(0), again = d.epoch(0), e1 = d.epoch(1);
    REQUIRE(e0.size() == 3);
    bool differs = false;
    for (std::size_t i = 0; i < 3; i++)
    {
        CHECK(e0[i].image_index == again[i].image_index);
        CHECK(e0[i].offset == again[i].offset);
        CHECK(e0[i].segment.samples.size() == 90);
        differs |= e0[i].image_index != e1[i].image_index || e0[i].clip_index != e1[i].clip_index
                   || e0[i].offset != e1[i].offset;
    }
    CHECK(differs);

    PairIterator it(d);
    for (int i = 0; i < 3; i++)
        CHECK(it.next().image_index == e0[std::size_t(i)].image_index);
    CHECK(it.next().image_index == e1[0].image_index);
    CHECK(it.epoch() == 1);

    CHECK_THROWS_AS(Dataset(DatasetSpec{{}, {}, 8, 200, 0}, imgs, clips), DimensionError);
    CHECK_THROWS_AS(Dataset(DatasetSpec{{}, {}, 8, 50, 0}, {}, clips), ContractError);
}

TEST_CASE("corpus generator")
{
    const fs::path a = scratch("corpus_a"), b = scratch("corpus_b");
    CorpusSpec spec;
    spec.n_images = 3;
    spec.n_clips = 2;
    spec.image_side = 64;
    spec.clip_samples = 8129;
    spec.seed = 4;
    generate_corpus(a, spec);
    generate_corpus(b, spec);
    for (const char* f : {"images/img_000.ppm", "images/img_002.ppm", "audio/clip_001.wav"})
        CHECK(read_file_bytes(a / f) == read_file_bytes(b / f));
    for (int i = 0; i < 2; i++)
    {
        const Waveform w = read_wav(a / "audio" / ("clip_00" + std::to_string(i) + ".wav"));
        CHECK(w.samples.size() >= spec.clip_samples);
        float peak = 0;
        for (float v : w.samples)
            peak = std::max(peak, std::abs(v));
        CHECK(peak <= kCorpusPeak);
        CHECK(peak > 0.f);
    }
    const Dataset d(DatasetSpec{a / "images", a / "audio", 64, 8129, 0});
    CHECK(d.num_images() == 3);
    CHECK(d.num_clips() == 2);
    CHECK_THROWS(Dataset(DatasetSpec{scratch("empty"), a / "audio", 64, 8129, 0}));
}
