#include "chromatwin/color.hpp"
#include "chromatwin/errors.hpp"

#include <doctest.h>

#include <limits>

using namespace chromatwin;

TEST_CASE("target colors are range checked") {
    CHECK_NOTHROW(TargetColor(0, 255, 127.5));
    CHECK_THROWS_AS(TargetColor(-0.1, 0, 0), ValidationError);
    CHECK_THROWS_AS(TargetColor(0, 255.01, 0), ValidationError);
    CHECK_THROWS_AS(TargetColor(0, 0, std::numeric_limits<double>::quiet_NaN()), ValidationError);
}

TEST_CASE("parse and format colors") {
    CHECK(parse_color("4,90,152") == ColorRGB{4, 90, 152});
    CHECK(parse_color("4 90 152") == ColorRGB{4, 90, 152});
    CHECK(parse_color("1.5, 2.25, 3") == ColorRGB{1.5, 2.25, 3});
    CHECK_THROWS_AS(parse_color("1,2"), ValidationError);
    CHECK_THROWS_AS(parse_color("a,b,c"), ValidationError);
    CHECK(format_color({4, 90, 152}) == "4.00 90.00 152.00");
}

TEST_CASE("squared distance") {
    CHECK(squared_distance({0, 0, 0}, {1, 2, 2}) == 9.0);
    CHECK(ColorRGB{1, 2, 3}[2] == 3.0);
}
