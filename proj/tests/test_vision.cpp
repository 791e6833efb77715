#include "chromatwin/errors.hpp"
#include "chromatwin/vision.hpp"

#include "oracles/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

using namespace chromatwin;
using namespace chromatwin::vision;

namespace {

// Photo of the canonical image under `photo_to_canonical`, rendered by
// supersampling each photo pixel with nearest-neighbor lookups.
Image project(const Image& canonical, const Homography& photo_to_canonical, int w, int h) {
    Image out(w, h, {255, 255, 255});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int acc[3] = {0, 0, 0}, n = 0;
            for (int sy = 0; sy < 3; ++sy)
                for (int sx = 0; sx < 3; ++sx) {
                    const Point2 p = photo_to_canonical.apply({x + (sx + 0.5) / 3, y + (sy + 0.5) / 3});
                    const int cx = static_cast<int>(std::floor(p.x)), cy = static_cast<int>(std::floor(p.y));
                    const Rgb8 c = canonical.contains(cx, cy) ? canonical.at(cx, cy) : Rgb8{255, 255, 255};
                    acc[0] += c.r;
                    acc[1] += c.g;
                    acc[2] += c.b;
                    ++n;
                }
            out.set(x, y, {static_cast<std::uint8_t>((acc[0] + n / 2) / n), static_cast<std::uint8_t>((acc[1] + n / 2) / n),
                           static_cast<std::uint8_t>((acc[2] + n / 2) / n)});
        }
    return out;
}

// Canonical page corners placed in a photo: rotated by `deg`, tilted so one
// side is shorter (perspective), centered in a w x h frame.
Homography page_pose(const TemplateGeometry& g, double deg, double tilt, int w, int h) {
    const double a = deg * std::acos(-1.0) / 180.0;
    const std::array<Point2, 4> page{Point2{0, 0}, Point2{double(g.width), 0}, Point2{double(g.width), double(g.height)},
                                     Point2{0, double(g.height)}};
    std::array<Point2, 4> photo;
    for (std::size_t i = 0; i < 4; ++i) {
        double x = page[i].x - g.width / 2.0, y = page[i].y - g.height / 2.0;
        if (i < 2) x *= 1.0 - tilt;  // top edge foreshortened
        photo[i] = {w / 2.0 + x * std::cos(a) - y * std::sin(a), h / 2.0 + x * std::sin(a) + y * std::cos(a)};
    }
    return estimate_homography(photo, page);
}

void check_color(const ColorRGB& c, Rgb8 want, double tol) {
    CHECK(std::abs(c.r - want.r) <= tol);
    CHECK(std::abs(c.g - want.g) <= tol);
    CHECK(std::abs(c.b - want.b) <= tol);
}

} // namespace

TEST_CASE("dictionary words stay distinct under rotation") {
    for (auto w : kMarkerWords) CHECK(rotate_word(rotate_word(rotate_word(rotate_word(w)))) == w);
    for (std::size_t i = 0; i < kMarkerWords.size(); ++i) {
        std::uint16_t r = kMarkerWords[i];
        for (int k = 1; k < 4; ++k) {
            r = rotate_word(r);
            CHECK(hamming(kMarkerWords[i], r) >= 3);
        }
        for (std::size_t j = i + 1; j < kMarkerWords.size(); ++j) {
            std::uint16_t rj = kMarkerWords[j];
            for (int k = 0; k < 4; ++k, rj = rotate_word(rj)) CHECK(hamming(kMarkerWords[i], rj) >= 3);
        }
    }
    CHECK(marker_bit(0b10, 0, 1));
    CHECK_FALSE(marker_bit(0b10, 0, 0));
    // Rotating clockwise moves the top-left bit to the top-right.
    CHECK(marker_bit(rotate_word(1), 0, 3));
}

TEST_CASE("template geometry") {
    const auto g = TemplateGeometry::standard();
    CHECK_NOTHROW(g.validate());
    const Rect roi = g.roi();
    CHECK(roi.x == 260);
    CHECK(roi.y == 340);
    CHECK(roi.width == 80);
    CHECK(roi.height == 120);
    CHECK(g.marker_center(2).x == 600 - 32 - 48);
    auto bad = g;
    bad.roi_fraction = 0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = g;
    bad.container = {20, 20, 300, 300};
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = g;
    bad.marker_size = 5;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    CHECK_THROWS_AS(g.marker_rect(4), ValidationError);
    CHECK_THROWS_AS(generate_template(bad), ValidationError);
}

TEST_CASE("Otsu threshold matches brute force") {
    std::mt19937 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        Image img(40, 30);
        std::normal_distribution<double> dark(60 + trial, 15), light(190, 20);
        std::vector<int> gray;
        for (int y = 0; y < 30; ++y)
            for (int x = 0; x < 40; ++x) {
                const double v = std::clamp((x < 10 + trial ? dark(rng) : light(rng)), 0.0, 255.0);
                const auto u = static_cast<std::uint8_t>(v);
                const Rgb8 c{u, static_cast<std::uint8_t>(std::min(255, u + trial % 3)), u};
                img.set(x, y, c);
                gray.push_back(gray_level(c));
            }
        const auto mask = binarize(img);
        const int brute = oracle::otsu_brute(gray);
        CHECK(oracle::within_class_variance(gray, mask.threshold) ==
              doctest::Approx(oracle::within_class_variance(gray, brute)).epsilon(1e-12));
        for (int y = 0; y < 30; ++y)
            for (int x = 0; x < 40; ++x) CHECK(mask.at(x, y) == (gray_level(img.at(x, y)) <= mask.threshold));
    }
    const auto flat = binarize(Image(8, 8, {77, 77, 77}));
    CHECK(flat.degenerate);
    CHECK(detect_markers(Image(50, 50, {77, 77, 77})).empty());
    // Two equally populated levels: every threshold between them ties; the lowest wins.
    Image two(2, 1);
    two.set(0, 0, {10, 10, 10});
    two.set(1, 0, {200, 200, 200});
    CHECK(binarize(two).threshold == 10);
}

TEST_CASE("homography maps correspondences and rejects degenerate input") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-200, 200);
    for (int trial = 0; trial < 50; ++trial) {
        std::array<Point2, 4> src{Point2{0, 0}, Point2{100, 0}, Point2{100, 100}, Point2{0, 100}}, dst;
        for (std::size_t i = 0; i < 4; ++i) dst[i] = {src[i].x * 3 + u(rng) / 10 + 500, src[i].y * 3 + u(rng) / 10 + 400};
        const auto h = estimate_homography(src, dst);
        for (std::size_t i = 0; i < 4; ++i) {
            const auto p = h.apply(src[i]);
            CHECK(p.x == doctest::Approx(dst[i].x).epsilon(1e-9));
            CHECK(p.y == doctest::Approx(dst[i].y).epsilon(1e-9));
        }
        const auto back = h.inverse().apply(dst[2]);
        CHECK(back.x == doctest::Approx(100).epsilon(1e-9));
        CHECK(h.m(2, 2) == 1.0);
    }
    const std::array<Point2, 4> line{Point2{0, 0}, Point2{1, 1}, Point2{2, 2}, Point2{0, 5}};
    const std::array<Point2, 4> sq{Point2{0, 0}, Point2{1, 0}, Point2{1, 1}, Point2{0, 1}};
    CHECK_THROWS_AS(estimate_homography(line, sq), ValidationError);
    CHECK_THROWS_AS(estimate_homography(sq, line), ValidationError);
    CHECK_THROWS_AS(estimate_homography(std::span(sq).first(3), std::span(sq).first(3)), ValidationError);
}

TEST_CASE("warp flags samples outside the source") {
    const Image src(10, 10, {50, 60, 70});
    const auto same = warp_perspective(src, Homography{}, 10, 10);
    CHECK(same.image == src);
    CHECK(same.flagged_count == 0);
    Homography shift;
    shift.m(0, 2) = 5;  // source x -> output x + 5
    const auto moved = warp_perspective(src, shift, 10, 10);
    CHECK(moved.flagged_count == 50);
    CHECK(moved.flagged[0] == 1);
    CHECK(moved.image.at(7, 3) == Rgb8{50, 60, 70});
}

TEST_CASE("generated template markers are found at their exact corners") {
    const auto g = TemplateGeometry::standard();
    const auto dets = detect_markers(generate_template(g));
    REQUIRE(dets.size() == 4);
    for (const auto& d : dets) {
        CHECK(d.rotation == 0);
        CHECK(d.bit_errors == 0);
        const auto want = g.marker_corners(d.id);
        for (std::size_t j = 0; j < 4; ++j) {
            CHECK(d.corners[j].x == doctest::Approx(want[j].x).epsilon(1e-6));
            CHECK(d.corners[j].y == doctest::Approx(want[j].y).epsilon(1e-6));
        }
    }
}

TEST_CASE("ROI extraction from an unwarped sample") {
    const auto g = TemplateGeometry::standard();
    const Rgb8 fill{4, 90, 152};
    const auto m = process_submission(render_sample(g, fill), g);
    check_color(m.rgb, fill, 1e-9);
    CHECK(m.diagnostics.markers_found == 4);
    CHECK(m.diagnostics.roi_pixels == 80u * 120u);
    CHECK(m.diagnostics.reprojection_rms < 1e-6);
    CHECK_FALSE(m.diagnostics.color_correction);

    auto wide = g;
    wide.roi_fraction = 0.5;
    CHECK(process_submission(render_sample(wide, fill), wide).diagnostics.roi_pixels == 160u * 240u);
    CHECK_THROWS_AS(extract_roi_mean(Image(10, 10), g), ValidationError);
}

TEST_CASE("perspective and rotation") {
    const auto g = TemplateGeometry::standard();
    const Rgb8 fill{4, 90, 152};
    const Image sample = render_sample(g, fill);
    for (double deg : {0.0, 12.0, 30.0, -25.0, 90.0, 180.0, 270.0}) {
        for (double tilt : {0.0, 0.15}) {
            const Image photo = project(sample, page_pose(g, deg, tilt, 1000, 1000), 1000, 1000);
            const auto m = process_submission(photo, g);
            check_color(m.rgb, fill, 2.0);
            CHECK(m.diagnostics.reprojection_rms < 1.0);
            if (deg == 90.0 && tilt == 0.0) {
                for (const auto& d : detect_markers(photo)) CHECK(d.rotation == 90);
            }
        }
    }
}

TEST_CASE("noisy photo") {
    const auto g = TemplateGeometry::standard();
    const Rgb8 fill{200, 30, 90};
    Image photo = project(render_sample(g, fill), page_pose(g, 20, 0.1, 900, 1000), 900, 1000);
    std::mt19937 rng(1);
    std::normal_distribution<double> n(0, 6);
    for (int y = 0; y < photo.height(); ++y)
        for (int x = 0; x < photo.width(); ++x) {
            Rgb8 c = photo.at(x, y);
            auto j = [&](std::uint8_t v) { return static_cast<std::uint8_t>(std::clamp(v + n(rng), 0.0, 255.0)); };
            photo.set(x, y, {j(c.r), j(c.g), j(c.b)});
        }
    check_color(process_submission(photo, g).rgb, fill, 2.0);
}

TEST_CASE("missing markers are rejected with a count") {
    const auto g = TemplateGeometry::standard();
    Image img = render_sample(g, {4, 90, 152});
    const Rect r = g.marker_rect(2);
    for (int y = static_cast<int>(r.y) - 2; y < static_cast<int>(r.bottom()) + 2; ++y)
        for (int x = static_cast<int>(r.x) - 2; x < static_cast<int>(r.right()) + 2; ++x) img.set(x, y, {255, 255, 255});
    try {
        process_submission(img, g);
        FAIL("expected rejection");
    } catch (const VisionRejection& e) {
        CHECK(e.markers_found() == 3);
    }
    try {
        process_submission(Image(300, 300), g);
        FAIL("expected rejection");
    } catch (const VisionRejection& e) {
        CHECK(e.markers_found() == 0);
    }
}

TEST_CASE("cropped photos") {
    const auto g = TemplateGeometry::standard();
    const Image sample = render_sample(g, {4, 90, 152});
    // Exact page crop: every marker keeps its quiet zone.
    Image cropped(600, 800);
    for (int y = 0; y < 800; ++y)
        for (int x = 0; x < 600; ++x) cropped.set(x, y, sample.at(x, y));
    CHECK_NOTHROW(process_submission(cropped, g));
    // A marker partly cut by the frame edge is not detected.
    Image cut(600, 700);
    for (int y = 0; y < 700; ++y)
        for (int x = 0; x < 600; ++x) cut.set(x, y, sample.at(x, y));
    CHECK_THROWS_AS(process_submission(cut, g), VisionRejection);
}
