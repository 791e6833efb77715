#pragma once

#include "chromatwin/color.hpp"
#include "chromatwin/image.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace chromatwin::vision {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

using Quad = std::array<Point2, 4>;

// Continuous axis-aligned rectangle in canonical template pixels.
struct Rect {
    double x = 0.0;
    double y = 0.0;
    double width = 0.0;
    double height = 0.0;

    double right() const { return x + width; }
    double bottom() const { return y + height; }
    bool contains(const Rect& inner) const;
    bool intersects(const Rect& other) const;
};

// Self-defined four-word dictionary. Each marker is a 6x6 cell grid: a black
// one-cell border around 4x4 data bits, bit (row, col) at position row*4+col,
// set bits rendered black.
inline constexpr int kMarkerCells = 6;
inline constexpr int kMarkerCount = 4;
inline constexpr std::array<std::uint16_t, kMarkerCount> kMarkerWords{7254, 40603, 31335, 5055};

bool marker_bit(std::uint16_t word, int row, int col);
// Grid rotated 90 degrees clockwise.
std::uint16_t rotate_word(std::uint16_t word);
int hamming(std::uint16_t a, std::uint16_t b);

// Printable template: markers 0..3 at the top-left, top-right, bottom-right
// and bottom-left corners, a container window in the middle, and a central
// region of interest covering `roi_fraction` of the container's width and
// height.
struct TemplateGeometry {
    int width = 600;
    int height = 800;
    int marker_size = 96;
    int marker_margin = 32;
    Rect container{140, 160, 320, 480};
    double roi_fraction = 0.25;

    static TemplateGeometry standard() { return {}; }

    void validate() const;
    Rect marker_rect(int id) const;
    // Corners clockwise from the marker's own top-left.
    Quad marker_corners(int id) const;
    Point2 marker_center(int id) const;
    Rect roi() const;
};

// Template with the container window blank (white inside a dark outline).
Image generate_template(const TemplateGeometry& g);

// Template with the container window filled by `fill`, as a photographed
// sample would look.
Image render_sample(const TemplateGeometry& g, Rgb8 fill);

struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> foreground;  // 1 = dark
    int threshold = 0;                     // gray <= threshold is foreground
    bool degenerate = false;               // single gray level; mask all background
    double dark_mean = 0.0;
    double light_mean = 0.0;

    bool at(int x, int y) const {
        return foreground[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)] != 0;
    }
};

// (R + G + B) / 3, rounded down.
int gray_level(Rgb8 c);

// Global Otsu threshold; ties go to the lower threshold.
BinaryMask binarize(const Image& img);

struct MarkerDetection {
    int id = -1;
    int rotation = 0;  // degrees, 0/90/180/270: direction of the marker's top edge in the image
    Quad corners{};    // clockwise from the marker's own top-left
    int bit_errors = 0;

    Point2 center() const;
};

std::vector<MarkerDetection> detect_markers(const Image& img);

// 3x3 projective map, normalized so m(2,2) == 1.
struct Homography {
    Eigen::Matrix3d m = Eigen::Matrix3d::Identity();

    Point2 apply(const Point2& p) const;
    Homography inverse() const;
};

// Exact four-point DLT. Throws ValidationError when three points on either
// side are collinear or the result is singular.
Homography estimate_homography(std::span<const Point2> src, std::span<const Point2> dst);

struct WarpResult {
    Image image;
    std::vector<std::uint8_t> flagged;  // 1 where the source position fell outside the photo
    std::size_t flagged_count = 0;
};

// Resamples `src` into an out_w x out_h image; `src_to_dst` maps source
// coordinates to output coordinates and is inverted per output pixel.
WarpResult warp_perspective(const Image& src, const Homography& src_to_dst, int out_w, int out_h,
                            Rgb8 outside = {0, 0, 0});

// `photo_to_canonical` maps photo coordinates into template coordinates.
WarpResult warp_to_canonical(const Image& photo, const Homography& photo_to_canonical,
                             const TemplateGeometry& g);

ColorRGB extract_roi_mean(const Image& canonical, const TemplateGeometry& g);

struct Diagnostics {
    int markers_found = 0;
    std::vector<int> marker_ids;
    double reprojection_rms = 0.0;  // marker corners through the homography, canonical px
    int threshold = 0;
    std::size_t roi_pixels = 0;
    std::size_t flagged_pixels = 0;
    std::optional<std::string> color_correction;  // reserved; no correction is applied
};

struct Measurement {
    ColorRGB rgb;
    Diagnostics diagnostics;
};

// Detect, rectify, and average the ROI. Throws VisionRejection when the four
// markers are not all found or the rectified ROI leaves the photo.
Measurement process_submission(const Image& photo, const TemplateGeometry& g = TemplateGeometry::standard());

} // namespace chromatwin::vision
