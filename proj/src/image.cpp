#include "chromatwin/image.hpp"

#include "chromatwin/errors.hpp"

#include <openssl/evp.h>
#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>

namespace chromatwin {

Image::Image(int width, int height, Rgb8 fill) : width_(width), height_(height) {
    if (width < 1 || height < 1) throw ValidationError("image dimensions must be positive", {"size"});
    data_.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
    for (std::size_t i = 0; i < data_.size(); i += 3) {
        data_[i] = fill.r;
        data_[i + 1] = fill.g;
        data_[i + 2] = fill.b;
    }
}

std::vector<std::uint8_t> encode_ppm(const Image& img) {
    const std::string header = "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.bytes().begin(), img.bytes().end());
    return out;
}

namespace {

// Reads the next whitespace-separated header token, skipping '#' comments.
long ppm_token(std::span<const std::uint8_t> bytes, std::size_t& pos) {
    for (;;) {
        while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
        if (pos < bytes.size() && bytes[pos] == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            continue;
        }
        break;
    }
    long v = 0;
    const std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
        v = v * 10 + (bytes[pos] - '0');
        if (v > 1'000'000) throw ValidationError("PPM header value too large", {"image"});
        ++pos;
    }
    if (pos == start) throw ValidationError("malformed PPM header", {"image"});
    return v;
}

} // namespace

Image decode_ppm(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6')
        throw ValidationError("not a binary PPM (P6) file", {"image"});
    std::size_t pos = 2;
    const long w = ppm_token(bytes, pos);
    const long h = ppm_token(bytes, pos);
    const long maxval = ppm_token(bytes, pos);
    if (maxval != 255) throw ValidationError("only 8-bit PPM (maxval 255) is supported", {"image"});
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw ValidationError("malformed PPM header", {"image"});
    ++pos;
    if (w < 1 || h < 1) throw ValidationError("PPM dimensions must be positive", {"image"});
    const auto need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3;
    if (bytes.size() - pos < need) throw ValidationError("truncated PPM pixel data", {"image"});
    Image img(static_cast<int>(w), static_cast<int>(h));
    std::memcpy(img.bytes().data(), bytes.data() + pos, need);
    return img;
}

std::vector<std::uint8_t> encode_png(const Image& img) {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(img.width());
    png.height = static_cast<png_uint_32>(img.height());
    png.format = PNG_FORMAT_RGB;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&png, nullptr, &size, 0, img.bytes().data(), 0, nullptr))
        throw Error(std::string("PNG encode failed: ") + png.message);
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&png, out.data(), &size, 0, img.bytes().data(), 0, nullptr))
        throw Error(std::string("PNG encode failed: ") + png.message);
    out.resize(size);
    return out;
}

Image decode_png(std::span<const std::uint8_t> bytes) {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size()))
        throw ValidationError(std::string("PNG decode failed: ") + png.message, {"image"});
    png.format = PNG_FORMAT_RGB;
    if (png.width < 1 || png.height < 1 || png.width > 20000 || png.height > 20000) {
        png_image_free(&png);
        throw ValidationError("PNG dimensions out of range", {"image"});
    }
    Image img(static_cast<int>(png.width), static_cast<int>(png.height));
    // Composite any alpha onto white, which is what the template paper is.
    png_color white{255, 255, 255};
    if (!png_image_finish_read(&png, &white, img.bytes().data(), 0, nullptr))
        throw ValidationError(std::string("PNG decode failed: ") + png.message, {"image"});
    return img;
}

Image decode_image(std::span<const std::uint8_t> bytes) {
    static constexpr std::uint8_t png_magic[] = {0x89, 'P', 'N', 'G'};
    if (bytes.size() >= 4 && std::memcmp(bytes.data(), png_magic, 4) == 0) return decode_png(bytes);
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return decode_ppm(bytes);
    throw ValidationError("unsupported image format (expected PNG or binary PPM)", {"image"});
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StorageError("cannot read " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw StorageError("write failed for " + path.string());
}

Image load_image(const std::filesystem::path& path) { return decode_image(read_file(path)); }

void save_image(const Image& img, const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    write_file(path, ext == ".png" || ext == ".PNG" ? encode_png(img) : encode_ppm(img));
}

std::string content_digest(std::span<const std::uint8_t> bytes) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), md, &len) != 1)
        throw Error("SHA-256 digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xf];
    }
    return out;
}

} // namespace chromatwin
