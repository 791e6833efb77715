#pragma once

#include <array>
#include <cmath>
#include <string>
#include <string_view>

namespace chromatwin {

inline constexpr int kChannelCount = 3;

// Real-valued RGB triple, nominally on [0, 255]. Model predictions may fall
// outside that range and are never clamped here.
struct ColorRGB {
    double r = 0.0;
    double g = 0.0;
    double b = 0.0;

    double operator[](int ch) const { return ch == 0 ? r : ch == 1 ? g : b; }
    double& operator[](int ch) { return ch == 0 ? r : ch == 1 ? g : b; }

    bool is_finite() const { return std::isfinite(r) && std::isfinite(g) && std::isfinite(b); }
    bool operator==(const ColorRGB&) const = default;
};

inline double squared_distance(const ColorRGB& a, const ColorRGB& b) {
    double s = 0.0;
    for (int ch = 0; ch < kChannelCount; ++ch) {
        const double d = a[ch] - b[ch];
        s += d * d;
    }
    return s;
}

// Target colors must lie in [0, 255] on every channel.
class TargetColor {
public:
    TargetColor(double r, double g, double b);
    explicit TargetColor(const ColorRGB& c) : TargetColor(c.r, c.g, c.b) {}

    const ColorRGB& rgb() const { return rgb_; }
    double operator[](int ch) const { return rgb_[ch]; }
    bool operator==(const TargetColor&) const = default;

private:
    ColorRGB rgb_;
};

// "R,G,B" or "R G B".
ColorRGB parse_color(std::string_view text);
// "R G B" with two decimals.
std::string format_color(const ColorRGB& c);

} // namespace chromatwin
