#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace chromatwin {

inline constexpr int kDyeCount = 4;
inline constexpr int kDefaultMaxDrops = 20;

enum class Dye { Red = 0, Yellow = 1, Blue = 2, Green = 3 };

std::string_view dye_name(Dye dye);

// Drop counts of the four dyes. Ordering is lexicographic by
// (red, yellow, blue, green), which is also the enumeration order.
struct Recipe {
    int red = 0;
    int yellow = 0;
    int blue = 0;
    int green = 0;

    int operator[](Dye dye) const;
    std::array<int, kDyeCount> drops() const { return {red, yellow, blue, green}; }

    auto operator<=>(const Recipe&) const = default;
};

// Four normalized features, each drops / max_drops.
using FeatureVector = std::array<double, kDyeCount>;

class DesignSpace {
public:
    explicit DesignSpace(int max_drops = kDefaultMaxDrops);

    int max_drops() const { return max_drops_; }
    int levels() const { return max_drops_ + 1; }
    std::size_t size() const;

    // Recipe at position `index` of the lexicographic enumeration.
    Recipe at(std::size_t index) const;
    std::size_t index_of(const Recipe& r) const;

    bool contains(const Recipe& r) const;

private:
    int max_drops_;
};

// Throws ValidationError naming the first offending dye.
void validate_recipe(const Recipe& r, const DesignSpace& space);

std::vector<Recipe> enumerate(const DesignSpace& space);

FeatureVector encode(const Recipe& r, const DesignSpace& space);
Recipe decode(const FeatureVector& f, const DesignSpace& space);

// The seven corner-point recipes used to seed every dataset.
const std::vector<Recipe>& seed_recipes();

// "r,y,b,g"
std::string format_recipe(const Recipe& r);
Recipe parse_recipe(std::string_view text);

} // namespace chromatwin

template <>
struct std::hash<chromatwin::Recipe> {
    std::size_t operator()(const chromatwin::Recipe& r) const noexcept {
        std::size_t h = 0;
        for (int d : r.drops()) h = h * 1000003u + static_cast<std::size_t>(d);
        return h;
    }
};
