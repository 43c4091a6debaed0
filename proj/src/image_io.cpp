#include "poregrad/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

namespace poregrad {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode)
{
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f)
        throw IoError("cannot open " + path.string());
    return f;
}

[[noreturn]] void png_error_handler(png_structp, png_const_charp msg)
{
    throw IoError(std::string("png: ") + msg);
}

void png_warning_handler(png_structp, png_const_charp) {}

bool has_extension(const std::filesystem::path& path, const char* ext)
{
    auto e = path.extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char ch) { return std::tolower(ch); });
    return e == ext;
}

Image read_png(const std::filesystem::path& path, int* max_level)
{
    auto file = open_file(path, "rb");
    png_byte header[8];
    if (std::fread(header, 1, 8, file.get()) != 8 || png_sig_cmp(header, 0, 8) != 0)
        throw IoError(path.string() + ": not a PNG file");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler,
                                             png_warning_handler);
    if (!png)
        throw IoError("png: cannot allocate read struct");
    png_infop info = png_create_info_struct(png);
    struct Guard {
        png_structp* png;
        png_infop* info;
        ~Guard() { png_destroy_read_struct(png, info, nullptr); }
    } guard{&png, &info};
    if (!info)
        throw IoError("png: cannot allocate info struct");

    png_init_io(png, file.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const auto width = static_cast<int>(png_get_image_width(png, info));
    const auto height = static_cast<int>(png_get_image_height(png, info));
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (color != PNG_COLOR_TYPE_GRAY)
        throw IoError(path.string() + ": only single-channel grayscale images are supported");
    if (depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (depth == 16)
        png_set_swap(png);  // PNG is big-endian; read as host little-endian
    png_read_update_info(png, info);

    const int bytes = depth == 16 ? 2 : 1;
    std::vector<png_byte> row(static_cast<std::size_t>(width) * static_cast<std::size_t>(bytes));
    Image img(width, height);
    for (int r = 0; r < height; ++r) {
        png_read_row(png, row.data(), nullptr);
        for (int c = 0; c < width; ++c) {
            if (bytes == 2) {
                std::uint16_t v;
                std::memcpy(&v, &row[static_cast<std::size_t>(2 * c)], 2);
                img(r, c) = v;
            } else {
                img(r, c) = row[static_cast<std::size_t>(c)];
            }
        }
    }
    if (max_level)
        *max_level = depth == 16 ? 65535 : 255;
    return img;
}

std::string next_token(std::istream& in)
{
    std::string tok;
    while (in) {
        const int ch = in.peek();
        if (ch == '#') {
            std::string skip;
            std::getline(in, skip);
        } else if (std::isspace(ch)) {
            in.get();
        } else {
            break;
        }
    }
    in >> tok;
    return tok;
}

Image read_pgm(const std::filesystem::path& path, int* max_level)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    if (next_token(in) != "P5")
        throw IoError(path.string() + ": only binary PGM (P5) is supported");
    int width = 0, height = 0, maxval = 0;
    try {
        width = std::stoi(next_token(in));
        height = std::stoi(next_token(in));
        maxval = std::stoi(next_token(in));
    } catch (const std::exception&) {
        throw IoError(path.string() + ": malformed PGM header");
    }
    if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535)
        throw IoError(path.string() + ": malformed PGM header");
    in.get();  // single whitespace after maxval
    const int bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> data(static_cast<std::size_t>(width) * height * bytes);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (in.gcount() != static_cast<std::streamsize>(data.size()))
        throw IoError(path.string() + ": truncated PGM data");
    Image img(width, height);
    for (std::size_t i = 0; i < img.size(); ++i)
        img[i] = bytes == 2 ? (data[2 * i] << 8 | data[2 * i + 1]) : data[i];
    if (max_level)
        *max_level = maxval;
    return img;
}

std::uint16_t to_level16(double v, double scale)
{
    const double x = std::round(v * scale);
    return static_cast<std::uint16_t>(std::clamp(x, 0.0, 65535.0));
}

void write_png_raw(const std::filesystem::path& path, int width, int height, int depth,
                   const std::vector<png_byte>& data)
{
    auto file = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler,
                                              png_warning_handler);
    if (!png)
        throw IoError("png: cannot allocate write struct");
    png_infop info = png_create_info_struct(png);
    struct Guard {
        png_structp* png;
        png_infop* info;
        ~Guard() { png_destroy_write_struct(png, info); }
    } guard{&png, &info};
    if (!info)
        throw IoError("png: cannot allocate info struct");

    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
                 depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::size_t stride = static_cast<std::size_t>(width) * (depth == 16 ? 2 : 1);
    for (int r = 0; r < height; ++r)
        png_write_row(png, &data[static_cast<std::size_t>(r) * stride]);
    png_write_end(png, nullptr);
}

}  // namespace

Image read_gray_levels(const std::filesystem::path& path, int* max_level)
{
    if (has_extension(path, ".pgm"))
        return read_pgm(path, max_level);
    return read_png(path, max_level);
}

Radiograph read_radiograph(const std::filesystem::path& path, double pixel_pitch)
{
    int max_level = 1;
    Radiograph out;
    out.pixels = read_gray_levels(path, &max_level);
    for (double& v : out.pixels.values())
        v /= max_level;
    out.pixel_pitch = pixel_pitch;
    out.id = path.stem().string();
    return out;
}

void write_png16(const std::filesystem::path& path, const Image& img, double scale)
{
    std::vector<png_byte> data(img.size() * 2);
    for (std::size_t i = 0; i < img.size(); ++i) {
        const auto v = to_level16(img[i], scale);
        data[2 * i] = static_cast<png_byte>(v >> 8);
        data[2 * i + 1] = static_cast<png_byte>(v & 0xff);
    }
    write_png_raw(path, img.width(), img.height(), 16, data);
}

void write_pgm16(const std::filesystem::path& path, const Image& img, double scale)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open " + path.string());
    out << "P5\n" << img.width() << ' ' << img.height() << "\n65535\n";
    for (double v : img.values()) {
        const auto level = to_level16(v, scale);
        out.put(static_cast<char>(level >> 8));
        out.put(static_cast<char>(level & 0xff));
    }
    if (!out)
        throw IoError("write failed: " + path.string());
}

void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask)
{
    std::vector<png_byte> data(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i)
        data[i] = mask[i] ? 255 : 0;
    write_png_raw(path, mask.width(), mask.height(), 8, data);
}

BinaryMask read_mask(const std::filesystem::path& path)
{
    const auto levels = read_gray_levels(path);
    BinaryMask mask(levels.width(), levels.height());
    for (std::size_t i = 0; i < levels.size(); ++i)
        mask[i] = levels[i] != 0 ? 1 : 0;
    return mask;
}

}  // namespace poregrad
