#include "chromatwin/color.hpp"

#include "chromatwin/errors.hpp"

#include <cstdio>
#include <cstdlib>
#include <string>

namespace chromatwin {

TargetColor::TargetColor(double r, double g, double b) : rgb_{r, g, b} {
    static constexpr const char* names[] = {"r", "g", "b"};
    std::vector<std::string> bad;
    for (int ch = 0; ch < kChannelCount; ++ch)
        if (!(rgb_[ch] >= 0.0 && rgb_[ch] <= 255.0)) bad.emplace_back(names[ch]);
    if (!bad.empty()) throw ValidationError("target channels must lie in [0, 255]", bad);
}

ColorRGB parse_color(std::string_view text) {
    std::string buf(text);
    for (char& c : buf)
        if (c == ',') c = ' ';
    ColorRGB out;
    const char* p = buf.c_str();
    for (int ch = 0; ch < kChannelCount; ++ch) {
        char* end = nullptr;
        const double v = std::strtod(p, &end);
        if (end == p) throw ValidationError("color must have three numeric channels: '" + buf + "'",
                                            {"rgb"});
        out[ch] = v;
        p = end;
    }
    while (*p == ' ') ++p;
    if (*p != '\0') throw ValidationError("trailing characters in color: '" + std::string(text) + "'",
                                          {"rgb"});
    if (!out.is_finite()) throw ValidationError("color channels must be finite", {"rgb"});
    return out;
}

std::string format_color(const ColorRGB& c) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.2f %.2f %.2f", c.r, c.g, c.b);
    return buf;
}

} // namespace chromatwin
