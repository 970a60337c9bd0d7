#include "alis/image_io.hpp"

#include <png.h>

#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "alis/error.hpp"

namespace alis {

namespace {

struct Raster {
    int width = 0;
    int height = 0;
    int channels = 0;  // 1 or 3
    std::vector<std::uint8_t> data;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool is_png(const std::vector<std::uint8_t>& b) {
    return b.size() >= 8 && png_sig_cmp(b.data(), 0, 8) == 0;
}

Raster decode_png(const std::vector<std::uint8_t>& bytes, int channels, const std::string& name) {
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
        throw InputError("cannot decode PNG '" + name + "': " + img.message);
    }
    img.format = channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    Raster r;
    r.width = static_cast<int>(img.width);
    r.height = static_cast<int>(img.height);
    r.channels = channels;
    r.data.resize(PNG_IMAGE_SIZE(img));
    // Any alpha is composited onto black.
    png_color background{0, 0, 0};
    if (!png_image_finish_read(&img, &background, r.data.data(), 0, nullptr)) {
        png_image_free(&img);
        throw InputError("cannot decode PNG '" + name + "': " + img.message);
    }
    return r;
}

// Binary P5 (gray) / P6 (RGB) with maxval <= 255.
Raster decode_netpbm(const std::vector<std::uint8_t>& b, const std::string& name) {
    std::size_t pos = 2;
    auto next_int = [&]() {
        for (;;) {
            while (pos < b.size() && std::isspace(b[pos])) ++pos;
            if (pos < b.size() && b[pos] == '#') {
                while (pos < b.size() && b[pos] != '\n') ++pos;
                continue;
            }
            break;
        }
        if (pos >= b.size() || !std::isdigit(b[pos])) {
            throw InputError("malformed Netpbm header in '" + name + "'");
        }
        long v = 0;
        while (pos < b.size() && std::isdigit(b[pos])) {
            v = v * 10 + (b[pos++] - '0');
            if (v > (1L << 24)) throw InputError("Netpbm dimension too large in '" + name + "'");
        }
        return static_cast<int>(v);
    };
    Raster r;
    r.channels = b[1] == '5' ? 1 : 3;
    r.width = next_int();
    r.height = next_int();
    const int maxval = next_int();
    if (maxval < 1 || maxval > 255) throw InputError("only 8-bit Netpbm is supported: '" + name + "'");
    ++pos;  // single whitespace before the raster
    const std::size_t n = static_cast<std::size_t>(r.width) * r.height * r.channels;
    if (pos > b.size() || b.size() - pos < n) throw InputError("truncated Netpbm raster in '" + name + "'");
    r.data.assign(b.begin() + static_cast<std::ptrdiff_t>(pos),
                  b.begin() + static_cast<std::ptrdiff_t>(pos + n));
    if (maxval != 255) {
        for (auto& v : r.data) v = static_cast<std::uint8_t>((v * 255 + maxval / 2) / maxval);
    }
    return r;
}

Raster decode(const std::filesystem::path& path, int png_channels) {
    const auto bytes = read_file(path);
    const std::string name = path.string();
    Raster r;
    if (is_png(bytes)) {
        r = decode_png(bytes, png_channels, name);
    } else if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6')) {
        r = decode_netpbm(bytes, name);
    } else {
        throw InputError("'" + name + "' is neither PNG nor binary PPM/PGM");
    }
    if (r.width < 1 || r.height < 1) throw InputError("'" + name + "' is empty");
    return r;
}

void write_file(const std::filesystem::path& path, const void* data, std::size_t n) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out) throw InputError("write to '" + path.string() + "' failed");
}

void write_png_raw(const std::uint8_t* data, int w, int h, bool gray, const std::filesystem::path& path) {
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(w);
    img.height = static_cast<png_uint_32>(h);
    img.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&img, nullptr, &size, 0, data, 0, nullptr)) {
        throw InputError("cannot encode PNG '" + path.string() + "': " + img.message);
    }
    std::vector<std::uint8_t> buf(size);
    if (!png_image_write_to_memory(&img, buf.data(), &size, 0, data, 0, nullptr)) {
        throw InputError("cannot encode PNG '" + path.string() + "': " + img.message);
    }
    write_file(path, buf.data(), size);
}

}  // namespace

Image::Image(int w, int h, std::uint8_t fill) : width(w), height(h) {
    if (w < 0 || h < 0) throw ShapeError("image dimensions must be non-negative");
    rgb.assign(static_cast<std::size_t>(w) * h * 3, fill);
}

Image read_image(const std::filesystem::path& path) {
    Raster r = decode(path, 3);
    Image img(r.width, r.height);
    if (r.channels == 3) {
        img.rgb = std::move(r.data);
    } else {
        for (std::size_t i = 0; i < r.data.size(); ++i) {
            img.rgb[3 * i] = img.rgb[3 * i + 1] = img.rgb[3 * i + 2] = r.data[i];
        }
    }
    return img;
}

void write_png(const Image& img, const std::filesystem::path& path) {
    if (img.empty()) throw InputError("cannot write an empty image");
    write_png_raw(img.rgb.data(), img.width, img.height, false, path);
}

SegMask read_mask(const std::filesystem::path& path) {
    const Raster r = decode(path, 1);
    SegMask m(r.width, r.height);
    for (std::size_t i = 0; i < m.data.size(); ++i) {
        unsigned v = r.data[i * r.channels];
        if (r.channels == 3) v = (r.data[i * 3] + r.data[i * 3 + 1] + r.data[i * 3 + 2]) / 3;
        m.data[i] = v > 127 ? 1 : 0;
    }
    return m;
}

void write_mask(const SegMask& mask, const std::filesystem::path& path) {
    mask.validate();
    if (mask.width == 0 || mask.height == 0) throw InputError("cannot write an empty mask");
    std::vector<std::uint8_t> gray(mask.data.size());
    for (std::size_t i = 0; i < gray.size(); ++i) gray[i] = mask.data[i] ? 255 : 0;
    if (path.extension() == ".pgm") {
        std::string head = "P5\n" + std::to_string(mask.width) + " " + std::to_string(mask.height) + "\n255\n";
        head.append(gray.begin(), gray.end());
        write_file(path, head.data(), head.size());
    } else {
        write_png_raw(gray.data(), mask.width, mask.height, true, path);
    }
}

}  // namespace alis
