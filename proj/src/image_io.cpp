#include <algorithm>
#include <cctype>
#include <cmath>

#include "rstego/checkpoint.h"
#include "rstego/data_io.h"
#include "rstego/errors.h"

namespace rstego {

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string ppm_token(std::span<const std::uint8_t> b, std::size_t& pos)
{
    for (;;)
    {
        while (pos < b.size() && std::isspace(b[pos]))
            pos++;
        if (pos < b.size() && b[pos] == '#')
        {
            while (pos < b.size() && b[pos] != '\n')
                pos++;
            continue;
        }
        break;
    }
    std::string tok;
    while (pos < b.size() && !std::isspace(b[pos]) && b[pos] != '#')
        tok += static_cast<char>(b[pos++]);
    if (tok.empty())
        throw FormatError("ppm: truncated header");
    return tok;
}

std::size_t ppm_number(std::span<const std::uint8_t> b, std::size_t& pos, const char* what)
{
    const std::string tok = ppm_token(b, pos);
    if (!std::all_of(tok.begin(), tok.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
        throw FormatError(std::string("ppm: malformed ") + what + " '" + tok + "'");
    return std::stoul(tok);
}

} // namespace

Image decode_ppm(std::span<const std::uint8_t> bytes)
{
    std::size_t pos = 0;
    const std::string magic = ppm_token(bytes, pos);
    if (magic != "P6")
        throw FormatError("ppm: expected binary P6 header, got '" + magic + "'");
    Image img;
    img.width = ppm_number(bytes, pos, "width");
    img.height = ppm_number(bytes, pos, "height");
    const std::size_t maxval = ppm_number(bytes, pos, "maxval");
    if (img.width == 0 || img.height == 0)
        throw FormatError("ppm: zero-sized image");
    if (maxval != 255)
        throw FormatError("ppm: unsupported bit depth (maxval " + std::to_string(maxval) + ", 255 required)");
    if (pos >= bytes.size() || !std::isspace(bytes[pos]))
        throw FormatError("ppm: missing separator before pixel data");
    pos++;
    const std::size_t n = img.width * img.height * 3;
    if (bytes.size() - pos < n)
        throw FormatError("ppm: truncated pixel data");
    img.rgb.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                   bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
    return img;
}

Image read_ppm(const std::filesystem::path& path) { return decode_ppm(read_file_bytes(path)); }

std::vector<std::uint8_t> encode_ppm(const Image& img)
{
    if (img.rgb.size() != img.width * img.height * 3)
        throw DimensionError("ppm: pixel buffer does not match dimensions");
    const std::string header = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.rgb.begin(), img.rgb.end());
    return out;
}

void write_ppm(const std::filesystem::path& path, const Image& img) { write_file_bytes(path, encode_ppm(img)); }

Image crop_resize(const Image& img, std::size_t side)
{
    if (side == 0)
        throw DimensionError("crop_resize: side must be positive");
    const std::size_t crop = std::min(img.width, img.height);
    const std::size_t x0 = (img.width - crop) / 2, y0 = (img.height - crop) / 2;
    Image out;
    out.width = out.height = side;
    out.rgb.resize(side * side * 3);
    for (std::size_t y = 0; y < side; y++)
    {
        const std::size_t sy = y0 + y * crop / side;
        for (std::size_t x = 0; x < side; x++)
        {
            const std::size_t sx = x0 + x * crop / side;
            for (std::size_t c = 0; c < 3; c++)
                out.rgb[(y * side + x) * 3 + c] = img.at(sy, sx, c);
        }
    }
    return out;
}

Image read_image(const std::filesystem::path& path, std::size_t side)
{
    return crop_resize(read_ppm(path), side);
}

void write_image(const std::filesystem::path& path, const Image& img) { write_ppm(path, img); }

std::vector<float> image_to_planar(const Image& img)
{
    const std::size_t plane = img.width * img.height;
    std::vector<float> out(3 * plane);
    for (std::size_t i = 0; i < plane; i++)
        for (std::size_t c = 0; c < 3; c++)
            out[c * plane + i] = img.rgb[i * 3 + c];
    return out;
}

Image planar_to_image(std::span<const float> planar, std::size_t height, std::size_t width)
{
    const std::size_t plane = height * width;
    if (planar.size() != 3 * plane)
        throw DimensionError("planar_to_image: buffer does not match 3 x height x width");
    Image img;
    img.width = width;
    img.height = height;
    img.rgb.resize(3 * plane);
    for (std::size_t i = 0; i < plane; i++)
        for (std::size_t c = 0; c < 3; c++)
            img.rgb[i * 3 + c] = static_cast<std::uint8_t>(std::clamp(std::lround(planar[c * plane + i]), 0L, 255L));
    return img;
}

} // namespace rstego
