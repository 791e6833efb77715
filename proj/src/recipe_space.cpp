#include "chromatwin/recipe_space.hpp"

#include "chromatwin/errors.hpp"

#include <charconv>
#include <cmath>

namespace chromatwin {

std::string_view dye_name(Dye dye) {
    switch (dye) {
    case Dye::Red: return "red";
    case Dye::Yellow: return "yellow";
    case Dye::Blue: return "blue";
    case Dye::Green: return "green";
    }
    return "unknown";
}

int Recipe::operator[](Dye dye) const {
    return drops()[static_cast<std::size_t>(dye)];
}

DesignSpace::DesignSpace(int max_drops) : max_drops_(max_drops) {
    if (max_drops < 1) throw ValidationError("max_drops must be >= 1", {"max_drops"});
}

std::size_t DesignSpace::size() const {
    const auto l = static_cast<std::size_t>(levels());
    return l * l * l * l;
}

Recipe DesignSpace::at(std::size_t index) const {
    const auto l = static_cast<std::size_t>(levels());
    Recipe r;
    r.green = static_cast<int>(index % l);
    index /= l;
    r.blue = static_cast<int>(index % l);
    index /= l;
    r.yellow = static_cast<int>(index % l);
    index /= l;
    r.red = static_cast<int>(index);
    return r;
}

std::size_t DesignSpace::index_of(const Recipe& r) const {
    const auto l = static_cast<std::size_t>(levels());
    return ((static_cast<std::size_t>(r.red) * l + static_cast<std::size_t>(r.yellow)) * l +
            static_cast<std::size_t>(r.blue)) * l + static_cast<std::size_t>(r.green);
}

bool DesignSpace::contains(const Recipe& r) const {
    for (int d : r.drops())
        if (d < 0 || d > max_drops_) return false;
    return true;
}

void validate_recipe(const Recipe& r, const DesignSpace& space) {
    const auto drops = r.drops();
    for (int i = 0; i < kDyeCount; ++i) {
        if (drops[i] < 0 || drops[i] > space.max_drops()) {
            const auto name = std::string(dye_name(static_cast<Dye>(i)));
            throw ValidationError(name + " drops " + std::to_string(drops[i]) + " outside [0, " +
                                      std::to_string(space.max_drops()) + "]",
                                  {name});
        }
    }
}

std::vector<Recipe> enumerate(const DesignSpace& space) {
    std::vector<Recipe> out;
    out.reserve(space.size());
    const int m = space.max_drops();
    for (int r = 0; r <= m; ++r)
        for (int y = 0; y <= m; ++y)
            for (int b = 0; b <= m; ++b)
                for (int g = 0; g <= m; ++g) out.push_back({r, y, b, g});
    return out;
}

FeatureVector encode(const Recipe& r, const DesignSpace& space) {
    validate_recipe(r, space);
    FeatureVector f{};
    const auto drops = r.drops();
    // A zero-width space encodes everything at the origin.
    const double scale = space.max_drops() > 0 ? static_cast<double>(space.max_drops()) : 1.0;
    for (int i = 0; i < kDyeCount; ++i) f[i] = drops[i] / scale;
    return f;
}

Recipe decode(const FeatureVector& f, const DesignSpace& space) {
    std::array<int, kDyeCount> d{};
    for (int i = 0; i < kDyeCount; ++i)
        d[i] = static_cast<int>(std::lround(f[i] * space.max_drops()));
    Recipe r{d[0], d[1], d[2], d[3]};
    validate_recipe(r, space);
    return r;
}

const std::vector<Recipe>& seed_recipes() {
    static const std::vector<Recipe> seeds{
        {0, 0, 0, 0},   {20, 0, 0, 0},   {0, 20, 0, 0},   {0, 0, 20, 0},
        {0, 0, 0, 20},  {10, 10, 10, 10}, {20, 20, 20, 20},
    };
    return seeds;
}

std::string format_recipe(const Recipe& r) {
    return std::to_string(r.red) + "," + std::to_string(r.yellow) + "," + std::to_string(r.blue) +
           "," + std::to_string(r.green);
}

Recipe parse_recipe(std::string_view text) {
    std::array<int, kDyeCount> d{};
    std::size_t pos = 0;
    for (int i = 0; i < kDyeCount; ++i) {
        const auto name = std::string(dye_name(static_cast<Dye>(i)));
        const std::size_t end = i + 1 < kDyeCount ? text.find(',', pos) : text.size();
        if (end == std::string_view::npos)
            throw ValidationError("recipe must have four comma-separated counts", {name});
        auto field = text.substr(pos, end - pos);
        while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
        while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
        const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), d[i]);
        if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty())
            throw ValidationError(name + " drop count is not an integer: '" + std::string(field) + "'",
                                  {name});
        pos = end + 1;
    }
    return {d[0], d[1], d[2], d[3]};
}

} // namespace chromatwin
