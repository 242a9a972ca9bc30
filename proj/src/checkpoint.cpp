#include "rstego/checkpoint.h"

#include <openssl/evp.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "rstego/errors.h"

namespace rstego {

namespace le {

void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v) { out.push_back(v); }

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v)
{
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v)
{
    for (int i = 0; i < 4; i++)
        out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_f32(std::vector<std::uint8_t>& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

std::span<const std::uint8_t> Reader::take(std::size_t n)
{
    if (n > remaining())
        throw FormatError("unexpected end of data: need " + std::to_string(n) + " bytes, "
                          + std::to_string(remaining()) + " left");
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
}

std::uint8_t Reader::u8() { return take(1)[0]; }

std::uint16_t Reader::u16()
{
    auto s = take(2);
    return static_cast<std::uint16_t>(s[0] | (s[1] << 8));
}

std::uint32_t Reader::u32()
{
    auto s = take(4);
    return static_cast<std::uint32_t>(s[0]) | (static_cast<std::uint32_t>(s[1]) << 8)
           | (static_cast<std::uint32_t>(s[2]) << 16) | (static_cast<std::uint32_t>(s[3]) << 24);
}

float Reader::f32() { return std::bit_cast<float>(u32()); }

} // namespace le

namespace {
constexpr char kMagic[4] = {'P', 'X', 'W', 'C'};
}

std::vector<std::uint8_t> encode_checkpoint(std::span<const NamedTensor> tensors)
{
    std::vector<std::uint8_t> out(kMagic, kMagic + 4);
    le::put_u32(out, kCheckpointVersion);
    le::put_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const NamedTensor& nt : tensors)
    {
        if (nt.name.size() > 0xffff)
            throw FormatError("checkpoint: tensor name too long");
        le::put_u16(out, static_cast<std::uint16_t>(nt.name.size()));
        out.insert(out.end(), nt.name.begin(), nt.name.end());
        const Shape& s = nt.tensor.shape();
        if (s.size() > 0xff)
            throw FormatError("checkpoint: rank too large");
        le::put_u8(out, static_cast<std::uint8_t>(s.size()));
        for (std::size_t d : s)
            le::put_u32(out, static_cast<std::uint32_t>(d));
        for (float v : nt.tensor.data())
            le::put_f32(out, v);
    }
    return out;
}

std::vector<NamedTensor> decode_checkpoint(std::span<const std::uint8_t> bytes)
{
    le::Reader r(bytes);
    auto magic = r.take(4);
    if (std::memcmp(magic.data(), kMagic, 4) != 0)
        throw FormatError("checkpoint: bad magic (expected PXWC)");
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw FormatError("checkpoint: unsupported version " + std::to_string(version));
    const std::uint32_t count = r.u32();
    std::vector<NamedTensor> out;
    for (std::uint32_t k = 0; k < count; k++)
    {
        const std::uint16_t len = r.u16();
        auto name = r.take(len);
        const std::uint8_t rank = r.u8();
        Shape shape(rank);
        for (auto& d : shape)
            d = r.u32();
        const std::size_t n = shape_numel(shape);
        if (n * 4 > r.remaining())
            throw FormatError("checkpoint: truncated payload");
        std::vector<float> data(n);
        for (auto& v : data)
            v = r.f32();
        out.push_back({std::string(name.begin(), name.end()), Tensor(std::move(shape), std::move(data))});
    }
    if (r.remaining() != 0)
        throw FormatError("checkpoint: trailing bytes after last tensor");
    return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw IoError("write failed for " + path.string());
}

void save_checkpoint(const std::filesystem::path& path, std::span<const NamedTensor> tensors)
{
    write_file_bytes(path, encode_checkpoint(tensors));
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path)
{
    return decode_checkpoint(read_file_bytes(path));
}

Digest sha256(std::span<const std::uint8_t> bytes)
{
    Digest d{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), d.data(), &len, EVP_sha256(), nullptr) != 1 || len != d.size())
        throw IoError("sha256 failed");
    return d;
}

std::string digest_hex(const Digest& d)
{
    static const char* hex = "0123456789abcdef";
    std::string s;
    for (std::uint8_t b : d)
    {
        s += hex[b >> 4];
        s += hex[b & 15];
    }
    return s;
}

} // namespace rstego
