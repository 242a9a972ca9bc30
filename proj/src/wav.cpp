#include <bit>
#include <cmath>
#include <cstring>

#include "rstego/checkpoint.h"
#include "rstego/data_io.h"
#include "rstego/errors.h"

namespace rstego {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xfffe;

bool tag_is(std::span<const std::uint8_t> s, const char* tag) { return std::memcmp(s.data(), tag, 4) == 0; }

} // namespace

Waveform decode_wav(std::span<const std::uint8_t> bytes)
{
    le::Reader r(bytes);
    if (!tag_is(r.take(4), "RIFF"))
        throw FormatError("wav: missing RIFF header");
    r.u32();
    if (!tag_is(r.take(4), "WAVE"))
        throw FormatError("wav: not a WAVE file");

    bool have_fmt = false;
    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    while (r.remaining() >= 8)
    {
        auto id = r.take(4);
        const std::uint32_t size = r.u32();
        if (size > r.remaining())
            throw FormatError("wav: truncated chunk");
        auto body = r.take(size);
        if (size % 2 == 1 && r.remaining() > 0)
            r.take(1);
        if (tag_is(id, "fmt "))
        {
            le::Reader f(body);
            format = f.u16();
            channels = f.u16();
            rate = f.u32();
            f.u32();
            f.u16();
            bits = f.u16();
            if (format == kFormatExtensible)
            {
                if (f.remaining() < 10)
                    throw FormatError("wav: truncated extensible fmt chunk");
                f.u16();
                f.u16();
                f.u32();
                format = f.u16();
            }
            have_fmt = true;
        }
        else if (tag_is(id, "data"))
        {
            if (!have_fmt)
                throw FormatError("wav: data chunk before fmt chunk");
            if (channels != 1)
                throw FormatError("wav: unsupported format: " + std::to_string(channels)
                                  + " channels (mono required)");
            if (rate == 0)
                throw FormatError("wav: zero sample rate");
            Waveform w;
            w.sample_rate = rate;
            le::Reader d(body);
            if (format == kFormatPcm && bits == 16)
            {
                if (size % 2 != 0)
                    throw FormatError("wav: truncated PCM16 payload");
                w.samples.resize(size / 2);
                for (float& v : w.samples)
                    v = static_cast<float>(static_cast<std::int16_t>(d.u16())) / 32768.f;
            }
            else if (format == kFormatFloat && bits == 32)
            {
                if (size % 4 != 0)
                    throw FormatError("wav: truncated float32 payload");
                w.samples.resize(size / 4);
                for (float& v : w.samples)
                    v = d.f32();
                check_finite(w.samples, "wav samples");
            }
            else
            {
                throw FormatError("wav: unsupported codec (format " + std::to_string(format) + ", "
                                  + std::to_string(bits) + " bits); PCM16 or float32 required");
            }
            return w;
        }
    }
    throw FormatError("wav: no data chunk");
}

Waveform read_wav(const std::filesystem::path& path)
{
    return decode_wav(read_file_bytes(path));
}

std::vector<std::uint8_t> encode_wav(const Waveform& w, WavEncoding enc)
{
    const bool pcm = enc == WavEncoding::Pcm16;
    const std::uint16_t bits = pcm ? 16 : 32;
    const std::uint32_t bytes_per_sample = bits / 8;
    const std::uint32_t data_size = static_cast<std::uint32_t>(w.samples.size() * bytes_per_sample);
    std::vector<std::uint8_t> out;
    out.reserve(44 + data_size);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    le::put_u32(out, 36 + data_size);
    out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    le::put_u32(out, 16);
    le::put_u16(out, pcm ? kFormatPcm : kFormatFloat);
    le::put_u16(out, 1);
    le::put_u32(out, w.sample_rate);
    le::put_u32(out, w.sample_rate * bytes_per_sample);
    le::put_u16(out, static_cast<std::uint16_t>(bytes_per_sample));
    le::put_u16(out, bits);
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    le::put_u32(out, data_size);
    for (float v : w.samples)
    {
        if (pcm)
        {
            const float q = std::round(v * 32768.f);
            const float c = std::fmin(32767.f, std::fmax(-32768.f, q));
            le::put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(c)));
        }
        else
        {
            le::put_f32(out, v);
        }
    }
    return out;
}

void write_wav(const std::filesystem::path& path, const Waveform& w, WavEncoding enc)
{
    check_finite(w.samples, "wav samples");
    write_file_bytes(path, encode_wav(w, enc));
}

} // namespace rstego
