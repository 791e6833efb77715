#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace chromatwin {

struct Rgb8 {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    bool operator==(const Rgb8&) const = default;
};

// Row-major 8-bit RGB image. Pixel (x, y) covers the continuous square
// [x, x+1) x [y, y+1); its center is (x + 0.5, y + 0.5).
class Image {
public:
    Image(int width, int height, Rgb8 fill = {255, 255, 255});

    int width() const { return width_; }
    int height() const { return height_; }

    Rgb8 at(int x, int y) const {
        const auto i = index(x, y);
        return {data_[i], data_[i + 1], data_[i + 2]};
    }
    void set(int x, int y, Rgb8 c) {
        const auto i = index(x, y);
        data_[i] = c.r;
        data_[i + 1] = c.g;
        data_[i + 2] = c.b;
    }
    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

    std::span<const std::uint8_t> bytes() const { return data_; }
    std::span<std::uint8_t> bytes() { return data_; }

    bool operator==(const Image&) const = default;

private:
    std::size_t index(int x, int y) const {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * 3;
    }

    int width_;
    int height_;
    std::vector<std::uint8_t> data_;
};

// Binary PPM (P6, maxval 255).
std::vector<std::uint8_t> encode_ppm(const Image& img);
Image decode_ppm(std::span<const std::uint8_t> bytes);

// PNG via libpng; any PNG libpng understands is converted to 8-bit RGB.
std::vector<std::uint8_t> encode_png(const Image& img);
Image decode_png(std::span<const std::uint8_t> bytes);

// Dispatches on the file signature (P6 or PNG).
Image decode_image(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

Image load_image(const std::filesystem::path& path);
// Format from the extension: .png writes PNG, anything else PPM.
void save_image(const Image& img, const std::filesystem::path& path);

// Hex SHA-256 of the encoded bytes.
std::string content_digest(std::span<const std::uint8_t> bytes);

} // namespace chromatwin
