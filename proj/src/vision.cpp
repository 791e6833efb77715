#include "chromatwin/vision.hpp"

#include "chromatwin/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numbers>

namespace chromatwin::vision {

bool Rect::contains(const Rect& inner) const {
    return inner.x >= x && inner.y >= y && inner.right() <= right() && inner.bottom() <= bottom();
}

bool Rect::intersects(const Rect& o) const {
    return x < o.right() && o.x < right() && y < o.bottom() && o.y < bottom();
}

bool marker_bit(std::uint16_t word, int row, int col) {
    return ((word >> (row * 4 + col)) & 1u) != 0;
}

std::uint16_t rotate_word(std::uint16_t word) {
    std::uint16_t out = 0;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            if (marker_bit(word, 3 - c, r)) out = static_cast<std::uint16_t>(out | (1u << (r * 4 + c)));
    return out;
}

int hamming(std::uint16_t a, std::uint16_t b) {
    return std::popcount(static_cast<unsigned>(a ^ b));
}

// ---------------------------------------------------------------------------
// Template geometry and rendering

namespace {

constexpr int kOutline = 3;
constexpr Rgb8 kBlack{0, 0, 0};
constexpr Rgb8 kOutlineColor{40, 40, 40};

Rect outlined(const Rect& r) {
    return {r.x - kOutline, r.y - kOutline, r.width + 2 * kOutline, r.height + 2 * kOutline};
}

} // namespace

void TemplateGeometry::validate() const {
    std::vector<std::string> bad;
    if (width < 1 || height < 1) bad.emplace_back("size");
    if (marker_size < 2 * kMarkerCells) bad.emplace_back("marker_size");
    if (marker_margin * kMarkerCells < marker_size) bad.emplace_back("marker_margin");
    if (2 * (marker_margin + marker_size) > width || 2 * (marker_margin + marker_size) > height)
        bad.emplace_back("marker_layout");
    if (!(roi_fraction > 0.0 && roi_fraction <= 1.0)) bad.emplace_back("roi_fraction");
    const Rect page{0, 0, static_cast<double>(width), static_cast<double>(height)};
    if (!(container.width > 0 && container.height > 0) || !page.contains(outlined(container)))
        bad.emplace_back("container");
    if (bad.empty()) {
        for (int id = 0; id < kMarkerCount; ++id)
            if (outlined(container).intersects(marker_rect(id))) {
                bad.emplace_back("container");
                break;
            }
        if (!container.contains(roi()) || roi().width <= 0 || roi().height <= 0) bad.emplace_back("roi");
    }
    if (!bad.empty()) throw ValidationError("invalid template geometry", bad);
}

Rect TemplateGeometry::marker_rect(int id) const {
    const double s = marker_size;
    const double m = marker_margin;
    switch (id) {
    case 0: return {m, m, s, s};
    case 1: return {width - m - s, m, s, s};
    case 2: return {width - m - s, height - m - s, s, s};
    case 3: return {m, height - m - s, s, s};
    }
    throw ValidationError("marker id must be 0..3", {"id"});
}

Quad TemplateGeometry::marker_corners(int id) const {
    const Rect r = marker_rect(id);
    return {Point2{r.x, r.y}, Point2{r.right(), r.y}, Point2{r.right(), r.bottom()}, Point2{r.x, r.bottom()}};
}

Point2 TemplateGeometry::marker_center(int id) const {
    const Rect r = marker_rect(id);
    return {r.x + r.width / 2, r.y + r.height / 2};
}

Rect TemplateGeometry::roi() const {
    const double w = container.width * roi_fraction;
    const double h = container.height * roi_fraction;
    return {container.x + (container.width - w) / 2, container.y + (container.height - h) / 2, w, h};
}

namespace {

template <typename Fn>
void for_pixels_in(const Rect& r, const Image& img, Fn&& fn) {
    const int x0 = std::max(0, static_cast<int>(std::floor(r.x - 0.5)));
    const int y0 = std::max(0, static_cast<int>(std::floor(r.y - 0.5)));
    const int x1 = std::min(img.width(), static_cast<int>(std::ceil(r.right() + 0.5)));
    const int y1 = std::min(img.height(), static_cast<int>(std::ceil(r.bottom() + 0.5)));
    for (int y = y0; y < y1; ++y) {
        const double cy = y + 0.5;
        if (cy < r.y || cy >= r.bottom()) continue;
        for (int x = x0; x < x1; ++x) {
            const double cx = x + 0.5;
            if (cx < r.x || cx >= r.right()) continue;
            fn(x, y);
        }
    }
}

} // namespace

Image generate_template(const TemplateGeometry& g) {
    g.validate();
    Image img(g.width, g.height);

    const Rect ring = outlined(g.container);
    for_pixels_in(ring, img, [&](int x, int y) { img.set(x, y, kOutlineColor); });
    for_pixels_in(g.container, img, [&](int x, int y) { img.set(x, y, {255, 255, 255}); });

    for (int id = 0; id < kMarkerCount; ++id) {
        const Rect r = g.marker_rect(id);
        const double cell = r.width / kMarkerCells;
        const std::uint16_t word = kMarkerWords[static_cast<std::size_t>(id)];
        for_pixels_in(r, img, [&](int x, int y) {
            const int col = std::clamp(static_cast<int>((x + 0.5 - r.x) / cell), 0, kMarkerCells - 1);
            const int row = std::clamp(static_cast<int>((y + 0.5 - r.y) / cell), 0, kMarkerCells - 1);
            const bool border = row == 0 || col == 0 || row == kMarkerCells - 1 || col == kMarkerCells - 1;
            if (border || marker_bit(word, row - 1, col - 1)) img.set(x, y, kBlack);
        });
    }
    return img;
}

Image render_sample(const TemplateGeometry& g, Rgb8 fill) {
    Image img = generate_template(g);
    for_pixels_in(g.container, img, [&](int x, int y) { img.set(x, y, fill); });
    return img;
}

// ---------------------------------------------------------------------------
// Binarization

int gray_level(Rgb8 c) { return (c.r + c.g + c.b) / 3; }

BinaryMask binarize(const Image& img) {
    BinaryMask mask;
    mask.width = img.width();
    mask.height = img.height();
    const auto n = static_cast<std::size_t>(img.width()) * static_cast<std::size_t>(img.height());
    mask.foreground.assign(n, 0);

    std::array<std::uint64_t, 256> hist{};
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) ++hist[static_cast<std::size_t>(gray_level(img.at(x, y)))];

    std::uint64_t total_sum = 0;
    for (int v = 0; v < 256; ++v) total_sum += hist[static_cast<std::size_t>(v)] * static_cast<std::uint64_t>(v);

    // Between-class variance w0 w1 (mu0 - mu1)^2 for class 0 = gray <= t.
    double best = 0.0;
    int best_t = -1;
    std::uint64_t n0 = 0;
    std::uint64_t s0 = 0;
    for (int t = 0; t < 255; ++t) {
        n0 += hist[static_cast<std::size_t>(t)];
        s0 += hist[static_cast<std::size_t>(t)] * static_cast<std::uint64_t>(t);
        const std::uint64_t n1 = n - n0;
        if (n0 == 0 || n1 == 0) continue;
        const double mu0 = static_cast<double>(s0) / static_cast<double>(n0);
        const double mu1 = static_cast<double>(total_sum - s0) / static_cast<double>(n1);
        const double w0 = static_cast<double>(n0) / static_cast<double>(n);
        const double w1 = static_cast<double>(n1) / static_cast<double>(n);
        const double var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if (var > best) {
            best = var;
            best_t = t;
        }
    }
    if (best_t < 0) {
        mask.degenerate = true;
        mask.threshold = -1;
        return mask;
    }

    mask.threshold = best_t;
    std::uint64_t dn = 0, ds = 0;
    for (int v = 0; v <= best_t; ++v) {
        dn += hist[static_cast<std::size_t>(v)];
        ds += hist[static_cast<std::size_t>(v)] * static_cast<std::uint64_t>(v);
    }
    mask.dark_mean = static_cast<double>(ds) / static_cast<double>(dn);
    mask.light_mean = static_cast<double>(total_sum - ds) / static_cast<double>(n - dn);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            if (gray_level(img.at(x, y)) <= best_t)
                mask.foreground[static_cast<std::size_t>(y) * static_cast<std::size_t>(img.width()) +
                                static_cast<std::size_t>(x)] = 1;
    return mask;
}

// ---------------------------------------------------------------------------
// Homography

Point2 Homography::apply(const Point2& p) const {
    const double w = m(2, 0) * p.x + m(2, 1) * p.y + m(2, 2);
    if (std::abs(w) < 1e-15) return {std::nan(""), std::nan("")};
    return {(m(0, 0) * p.x + m(0, 1) * p.y + m(0, 2)) / w, (m(1, 0) * p.x + m(1, 1) * p.y + m(1, 2)) / w};
}

Homography Homography::inverse() const {
    Homography h;
    h.m = m.inverse();
    if (std::abs(h.m(2, 2)) > 1e-300) h.m /= h.m(2, 2);
    return h;
}

namespace {

double cross(const Point2& o, const Point2& a, const Point2& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool has_collinear_triple(std::span<const Point2> pts) {
    double scale = 0.0;
    for (const auto& p : pts)
        for (const auto& q : pts) scale = std::max(scale, std::hypot(p.x - q.x, p.y - q.y));
    if (scale == 0.0) return true;
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            for (std::size_t k = j + 1; k < pts.size(); ++k)
                if (std::abs(cross(pts[i], pts[j], pts[k])) <= 1e-9 * scale * scale) return true;
    return false;
}

// Similarity taking the centroid to the origin with mean distance sqrt(2).
Eigen::Matrix3d normalizer(std::span<const Point2> pts) {
    double cx = 0, cy = 0;
    for (const auto& p : pts) {
        cx += p.x;
        cy += p.y;
    }
    cx /= static_cast<double>(pts.size());
    cy /= static_cast<double>(pts.size());
    double mean_dist = 0;
    for (const auto& p : pts) mean_dist += std::hypot(p.x - cx, p.y - cy);
    mean_dist /= static_cast<double>(pts.size());
    const double s = std::numbers::sqrt2 / mean_dist;
    Eigen::Matrix3d t;
    t << s, 0, -s * cx, 0, s, -s * cy, 0, 0, 1;
    return t;
}

} // namespace

Homography estimate_homography(std::span<const Point2> src, std::span<const Point2> dst) {
    if (src.size() != 4 || dst.size() != 4)
        throw ValidationError("homography needs exactly four correspondences", {"points"});
    if (has_collinear_triple(src) || has_collinear_triple(dst))
        throw ValidationError("degenerate correspondences: three points are collinear", {"points"});

    const Eigen::Matrix3d ts = normalizer(src);
    const Eigen::Matrix3d td = normalizer(dst);
    Eigen::Matrix<double, 8, 8> a;
    Eigen::Matrix<double, 8, 1> rhs;
    for (int i = 0; i < 4; ++i) {
        const Eigen::Vector3d s = ts * Eigen::Vector3d(src[static_cast<std::size_t>(i)].x, src[static_cast<std::size_t>(i)].y, 1);
        const Eigen::Vector3d d = td * Eigen::Vector3d(dst[static_cast<std::size_t>(i)].x, dst[static_cast<std::size_t>(i)].y, 1);
        const double x = s[0] / s[2], y = s[1] / s[2], u = d[0] / d[2], v = d[1] / d[2];
        a.row(2 * i) << x, y, 1, 0, 0, 0, -u * x, -u * y;
        a.row(2 * i + 1) << 0, 0, 0, x, y, 1, -v * x, -v * y;
        rhs[2 * i] = u;
        rhs[2 * i + 1] = v;
    }
    const Eigen::FullPivLU<Eigen::Matrix<double, 8, 8>> lu(a);
    if (lu.rank() < 8) throw ValidationError("degenerate correspondences: singular DLT system", {"points"});
    const Eigen::Matrix<double, 8, 1> h = lu.solve(rhs);

    Eigen::Matrix3d hn;
    hn << h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], 1.0;
    Homography out;
    out.m = td.inverse() * hn * ts;
    if (std::abs(out.m(2, 2)) < 1e-12) throw ValidationError("degenerate homography", {"points"});
    out.m /= out.m(2, 2);
    if (!(std::abs(out.m.determinant()) > 1e-12)) throw ValidationError("singular homography", {"points"});
    return out;
}

// ---------------------------------------------------------------------------
// Sampling and warping

namespace {

struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<float> v;

    explicit GrayImage(const Image& img) : width(img.width()), height(img.height()) {
        v.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                const Rgb8 c = img.at(x, y);
                v[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)] =
                    static_cast<float>((c.r + c.g + c.b) / 3.0);
            }
    }

    float px(int x, int y) const {
        x = std::clamp(x, 0, width - 1);
        y = std::clamp(y, 0, height - 1);
        return v[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)];
    }

    // Bilinear at a continuous coordinate (pixel centers at +0.5).
    double sample(double x, double y) const {
        const double u = x - 0.5, w = y - 0.5;
        const int x0 = static_cast<int>(std::floor(u)), y0 = static_cast<int>(std::floor(w));
        const double fx = u - x0, fy = w - y0;
        return (1 - fy) * ((1 - fx) * px(x0, y0) + fx * px(x0 + 1, y0)) +
               fy * ((1 - fx) * px(x0, y0 + 1) + fx * px(x0 + 1, y0 + 1));
    }
};

} // namespace

WarpResult warp_perspective(const Image& src, const Homography& src_to_dst, int out_w, int out_h,
                            Rgb8 outside) {
    const Homography inv = src_to_dst.inverse();
    WarpResult out{Image(out_w, out_h, outside), {}, 0};
    out.flagged.assign(static_cast<std::size_t>(out_w) * static_cast<std::size_t>(out_h), 0);
    for (int y = 0; y < out_h; ++y) {
        for (int x = 0; x < out_w; ++x) {
            const Point2 p = inv.apply({x + 0.5, y + 0.5});
            const double u = p.x - 0.5, v = p.y - 0.5;
            if (!(u >= -0.5 && v >= -0.5 && u <= src.width() - 0.5 && v <= src.height() - 0.5)) {
                out.flagged[static_cast<std::size_t>(y) * static_cast<std::size_t>(out_w) + static_cast<std::size_t>(x)] = 1;
                ++out.flagged_count;
                continue;
            }
            const int x0 = static_cast<int>(std::floor(u)), y0 = static_cast<int>(std::floor(v));
            const double fx = u - x0, fy = v - y0;
            auto at = [&](int xx, int yy) {
                return src.at(std::clamp(xx, 0, src.width() - 1), std::clamp(yy, 0, src.height() - 1));
            };
            const Rgb8 c00 = at(x0, y0), c10 = at(x0 + 1, y0), c01 = at(x0, y0 + 1), c11 = at(x0 + 1, y0 + 1);
            auto mix = [&](std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d) {
                const double val = (1 - fy) * ((1 - fx) * a + fx * b) + fy * ((1 - fx) * c + fx * d);
                return static_cast<std::uint8_t>(std::clamp(std::lround(val), 0L, 255L));
            };
            out.image.set(x, y, {mix(c00.r, c10.r, c01.r, c11.r), mix(c00.g, c10.g, c01.g, c11.g),
                                 mix(c00.b, c10.b, c01.b, c11.b)});
        }
    }
    return out;
}

WarpResult warp_to_canonical(const Image& photo, const Homography& photo_to_canonical, const TemplateGeometry& g) {
    return warp_perspective(photo, photo_to_canonical, g.width, g.height);
}

ColorRGB extract_roi_mean(const Image& canonical, const TemplateGeometry& g) {
    if (canonical.width() != g.width || canonical.height() != g.height)
        throw ValidationError("image is not at canonical template size", {"image"});
    double sum[3] = {0, 0, 0};
    std::size_t count = 0;
    for_pixels_in(g.roi(), canonical, [&](int x, int y) {
        const Rgb8 c = canonical.at(x, y);
        sum[0] += c.r;
        sum[1] += c.g;
        sum[2] += c.b;
        ++count;
    });
    if (count == 0) throw ValidationError("region of interest contains no pixels", {"roi"});
    const auto n = static_cast<double>(count);
    return {sum[0] / n, sum[1] / n, sum[2] / n};
}

// ---------------------------------------------------------------------------
// Marker detection

Point2 MarkerDetection::center() const {
    // Intersection of the diagonals: the projective image of the square's center.
    const Point2 &a = corners[0], &b = corners[1], &c = corners[2], &d = corners[3];
    const double d1x = c.x - a.x, d1y = c.y - a.y, d2x = d.x - b.x, d2y = d.y - b.y;
    const double den = d1x * d2y - d1y * d2x;
    if (std::abs(den) < 1e-12) return {(a.x + b.x + c.x + d.x) / 4, (a.y + b.y + c.y + d.y) / 4};
    const double t = ((b.x - a.x) * d2y - (b.y - a.y) * d2x) / den;
    return {a.x + t * d1x, a.y + t * d1y};
}

namespace {

struct IPoint {
    std::int64_t x, y;
    auto operator<=>(const IPoint&) const = default;
};

std::int64_t icross(const IPoint& o, const IPoint& a, const IPoint& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

std::vector<IPoint> convex_hull(std::vector<IPoint> pts) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) return pts;
    std::vector<IPoint> hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && icross(hull[k - 2], hull[k - 1], p) <= 0) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
        while (k >= lower && icross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

double polygon_area(std::span<const Point2> poly) {
    double a = 0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const auto& p = poly[i];
        const auto& q = poly[(i + 1) % poly.size()];
        a += p.x * q.y - q.x * p.y;
    }
    return a / 2;
}

// Four extreme hull vertices: the diameter endpoints plus the farthest point
// on each side of it. Returned clockwise in image coordinates (y down).
std::optional<Quad> quad_from_hull(const std::vector<IPoint>& hull) {
    if (hull.size() < 4) return std::nullopt;
    std::size_t ia = 0, ic = 0;
    std::int64_t best = -1;
    for (std::size_t i = 0; i < hull.size(); ++i)
        for (std::size_t j = i + 1; j < hull.size(); ++j) {
            const auto dx = hull[i].x - hull[j].x, dy = hull[i].y - hull[j].y;
            if (dx * dx + dy * dy > best) {
                best = dx * dx + dy * dy;
                ia = i;
                ic = j;
            }
        }
    std::int64_t pos = 0, neg = 0;
    std::size_t ib = 0, id = 0;
    for (std::size_t i = 0; i < hull.size(); ++i) {
        const auto c = icross(hull[ia], hull[ic], hull[i]);
        if (c > pos) {
            pos = c;
            ib = i;
        }
        if (c < neg) {
            neg = c;
            id = i;
        }
    }
    if (pos == 0 || neg == 0) return std::nullopt;
    auto p = [&](std::size_t i) { return Point2{static_cast<double>(hull[i].x), static_cast<double>(hull[i].y)}; };
    Quad q{p(ia), p(ib), p(ic), p(id)};
    if (polygon_area(q) < 0) std::swap(q[1], q[3]);
    return q;
}

constexpr double kMinContrast = 40.0;

struct Line {
    Point2 point;
    Point2 dir;
};

std::optional<Point2> intersect(const Line& a, const Line& b) {
    const double den = a.dir.x * b.dir.y - a.dir.y * b.dir.x;
    if (std::abs(den) < 1e-6) return std::nullopt;
    const double t = ((b.point.x - a.point.x) * b.dir.y - (b.point.y - a.point.y) * b.dir.x) / den;
    return Point2{a.point.x + t * a.dir.x, a.point.y + t * a.dir.y};
}

// Fits each side to sub-pixel edge crossings of the mid gray level and
// re-intersects adjacent sides.
Quad refine_corners(const Quad& q, const GrayImage& gray) {
    std::array<Line, 4> lines;
    for (int i = 0; i < 4; ++i) {
        const Point2 a = q[static_cast<std::size_t>(i)], b = q[static_cast<std::size_t>((i + 1) % 4)];
        const double len = std::hypot(b.x - a.x, b.y - a.y);
        if (len < 6) return q;
        const Point2 dir{(b.x - a.x) / len, (b.y - a.y) / len};
        const Point2 out{dir.y, -dir.x};
        const double reach = std::clamp(0.35 * len / kMarkerCells, 1.0, 4.0);
        constexpr double step = 0.25;

        std::vector<Point2> edge;
        constexpr int samples = 24;
        for (int k = 0; k < samples; ++k) {
            const double t = 0.15 + 0.7 * k / (samples - 1);
            const Point2 base{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
            double prev_s = -reach;
            double prev_g = gray.sample(base.x + prev_s * out.x, base.y + prev_s * out.y);
            const double outer = gray.sample(base.x + reach * out.x, base.y + reach * out.y);
            if (outer - prev_g < kMinContrast) continue;
            const double level = (prev_g + outer) / 2;
            for (double s = -reach + step; s <= reach + 1e-9; s += step) {
                const double g = gray.sample(base.x + s * out.x, base.y + s * out.y);
                if (g >= level) {
                    const double cross_s = prev_s + (level - prev_g) / (g - prev_g) * step;
                    edge.push_back({base.x + cross_s * out.x, base.y + cross_s * out.y});
                    break;
                }
                prev_s = s;
                prev_g = g;
            }
        }
        if (edge.size() < samples / 2) return q;

        double cx = 0, cy = 0;
        for (const auto& p : edge) {
            cx += p.x;
            cy += p.y;
        }
        cx /= static_cast<double>(edge.size());
        cy /= static_cast<double>(edge.size());
        double sxx = 0, sxy = 0, syy = 0;
        for (const auto& p : edge) {
            sxx += (p.x - cx) * (p.x - cx);
            sxy += (p.x - cx) * (p.y - cy);
            syy += (p.y - cy) * (p.y - cy);
        }
        const double angle = 0.5 * std::atan2(2 * sxy, sxx - syy);
        lines[static_cast<std::size_t>(i)] = {{cx, cy}, {std::cos(angle), std::sin(angle)}};
    }
    Quad refined;
    for (int i = 0; i < 4; ++i) {
        const auto p = intersect(lines[static_cast<std::size_t>((i + 3) % 4)], lines[static_cast<std::size_t>(i)]);
        const Point2 orig = q[static_cast<std::size_t>(i)];
        if (!p || std::hypot(p->x - orig.x, p->y - orig.y) > 3.0) return q;
        refined[static_cast<std::size_t>(i)] = *p;
    }
    return refined;
}

// Mean gray over a small patch around the center of cell (row, col).
double cell_gray(const Homography& cells_to_image, const GrayImage& gray, int row, int col) {
    double sum = 0;
    int n = 0;
    for (double dy : {-0.2, 0.0, 0.2})
        for (double dx : {-0.2, 0.0, 0.2}) {
            const Point2 p = cells_to_image.apply({col + 0.5 + dx, row + 0.5 + dy});
            sum += gray.sample(p.x, p.y);
            ++n;
        }
    return sum / n;
}

struct Decoded {
    int id = -1;
    int bit_errors = 99;
    int start = 0;
};

std::optional<Decoded> decode_quad(const Quad& q, const GrayImage& gray) {
    static const std::array<Point2, 4> unit{Point2{0, 0}, Point2{kMarkerCells, 0},
                                            Point2{kMarkerCells, kMarkerCells}, Point2{0, kMarkerCells}};
    Decoded best;
    double level = 0;
    for (int start = 0; start < 4; ++start) {
        std::array<Point2, 4> corners;
        for (int j = 0; j < 4; ++j) corners[static_cast<std::size_t>(j)] = q[static_cast<std::size_t>((start + j) % 4)];
        Homography h;
        try {
            h = estimate_homography(unit, corners);
        } catch (const ValidationError&) {
            return std::nullopt;
        }
        if (start == 0) {
            // Local level: midway between the border ring and the quiet zone
            // half a cell outside it.
            double border_sum = 0, quiet_sum = 0;
            std::vector<double> border;
            for (int i = 0; i < kMarkerCells; ++i)
                for (int j = 0; j < kMarkerCells; ++j)
                    if (i == 0 || j == 0 || i == kMarkerCells - 1 || j == kMarkerCells - 1)
                        border.push_back(cell_gray(h, gray, i, j));
            for (double b : border) border_sum += b;
            int quiet_n = 0;
            for (int k = 0; k < kMarkerCells; ++k)
                for (const Point2 c : {Point2{k + 0.5, -0.5}, Point2{k + 0.5, kMarkerCells + 0.5},
                                       Point2{-0.5, k + 0.5}, Point2{kMarkerCells + 0.5, k + 0.5}}) {
                    const Point2 p = h.apply(c);
                    quiet_sum += gray.sample(p.x, p.y);
                    ++quiet_n;
                }
            const double border_mean = border_sum / static_cast<double>(border.size());
            const double quiet_mean = quiet_sum / quiet_n;
            if (quiet_mean - border_mean < kMinContrast) return std::nullopt;
            level = (border_mean + quiet_mean) / 2;
            int dark_border = 0;
            for (double b : border)
                if (b < level) ++dark_border;
            if (dark_border < 4 * (kMarkerCells - 1) - 2) return std::nullopt;
        }
        std::uint16_t word = 0;
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c)
                if (cell_gray(h, gray, r + 1, c + 1) < level) word = static_cast<std::uint16_t>(word | (1u << (r * 4 + c)));
        for (int id = 0; id < kMarkerCount; ++id) {
            const int d = hamming(word, kMarkerWords[static_cast<std::size_t>(id)]);
            if (d < best.bit_errors) best = {id, d, start};
        }
    }
    if (best.bit_errors > 1) return std::nullopt;
    return best;
}

} // namespace

std::vector<MarkerDetection> detect_markers(const Image& img) {
    const BinaryMask mask = binarize(img);
    if (mask.degenerate) return {};
    const GrayImage gray(img);
    const int w = img.width(), h = img.height();

    std::vector<std::int32_t> label(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), -1);
    auto idx = [w](int x, int y) { return static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x); };

    std::map<int, std::pair<MarkerDetection, double>> by_id;  // id -> (detection, area)
    std::vector<std::pair<int, int>> stack, pixels;
    std::int32_t next_label = 0;
    constexpr std::size_t kMinArea = 64;

    for (int sy = 0; sy < h; ++sy) {
        for (int sx = 0; sx < w; ++sx) {
            if (!mask.at(sx, sy) || label[idx(sx, sy)] >= 0) continue;
            const std::int32_t lab = next_label++;
            pixels.clear();
            stack.assign(1, {sx, sy});
            label[idx(sx, sy)] = lab;
            bool touches_edge = false;
            while (!stack.empty()) {
                const auto [x, y] = stack.back();
                stack.pop_back();
                pixels.emplace_back(x, y);
                if (x == 0 || y == 0 || x == w - 1 || y == h - 1) touches_edge = true;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = x + dx, ny = y + dy;
                        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                        if (!mask.at(nx, ny) || label[idx(nx, ny)] >= 0) continue;
                        label[idx(nx, ny)] = lab;
                        stack.emplace_back(nx, ny);
                    }
            }
            if (touches_edge || pixels.size() < kMinArea) continue;

            // Pixel-corner points of boundary pixels.
            std::vector<IPoint> pts;
            for (const auto& [x, y] : pixels) {
                const bool inner = x > 0 && y > 0 && x < w - 1 && y < h - 1 && label[idx(x - 1, y)] == lab &&
                                   label[idx(x + 1, y)] == lab && label[idx(x, y - 1)] == lab &&
                                   label[idx(x, y + 1)] == lab;
                if (inner) continue;
                pts.push_back({x, y});
                pts.push_back({x + 1, y});
                pts.push_back({x, y + 1});
                pts.push_back({x + 1, y + 1});
            }
            const auto hull = convex_hull(std::move(pts));
            const auto quad = quad_from_hull(hull);
            if (!quad) continue;
            std::vector<Point2> hull_pts;
            for (const auto& p : hull) hull_pts.push_back({static_cast<double>(p.x), static_cast<double>(p.y)});
            const double hull_area = polygon_area(hull_pts);
            const double quad_area = polygon_area(*quad);
            if (quad_area < static_cast<double>(kMinArea) || quad_area < 0.85 * hull_area) continue;

            const Quad refined = refine_corners(*quad, gray);
            const auto decoded = decode_quad(refined, gray);
            if (!decoded) continue;

            MarkerDetection det;
            det.id = decoded->id;
            det.bit_errors = decoded->bit_errors;
            for (int j = 0; j < 4; ++j)
                det.corners[static_cast<std::size_t>(j)] = refined[static_cast<std::size_t>((decoded->start + j) % 4)];
            const double angle = std::atan2(det.corners[1].y - det.corners[0].y, det.corners[1].x - det.corners[0].x);
            det.rotation = static_cast<int>(((std::lround(angle / (std::numbers::pi / 2)) % 4) + 4) % 4) * 90;

            auto it = by_id.find(det.id);
            if (it == by_id.end() || det.bit_errors < it->second.first.bit_errors ||
                (det.bit_errors == it->second.first.bit_errors && quad_area > it->second.second))
                by_id[det.id] = {det, quad_area};
        }
    }

    std::vector<MarkerDetection> out;
    for (auto& [id, entry] : by_id) out.push_back(entry.first);
    return out;
}

// ---------------------------------------------------------------------------

Measurement process_submission(const Image& photo, const TemplateGeometry& g) {
    g.validate();
    const auto detections = detect_markers(photo);
    Measurement m;
    m.diagnostics.markers_found = static_cast<int>(detections.size());
    for (const auto& d : detections) m.diagnostics.marker_ids.push_back(d.id);
    if (detections.size() < kMarkerCount)
        throw VisionRejection("found " + std::to_string(detections.size()) + " of 4 template markers",
                              static_cast<int>(detections.size()));

    std::array<Point2, 4> src, dst;
    for (const auto& d : detections) {
        src[static_cast<std::size_t>(d.id)] = d.center();
        dst[static_cast<std::size_t>(d.id)] = g.marker_center(d.id);
    }
    Homography h;
    try {
        h = estimate_homography(src, dst);
    } catch (const ValidationError& e) {
        throw VisionRejection(std::string("cannot rectify photo: ") + e.what(), kMarkerCount);
    }

    double sq = 0;
    int n = 0;
    for (const auto& d : detections) {
        const Quad expected = g.marker_corners(d.id);
        for (int j = 0; j < 4; ++j) {
            const Point2 p = h.apply(d.corners[static_cast<std::size_t>(j)]);
            sq += (p.x - expected[static_cast<std::size_t>(j)].x) * (p.x - expected[static_cast<std::size_t>(j)].x) +
                  (p.y - expected[static_cast<std::size_t>(j)].y) * (p.y - expected[static_cast<std::size_t>(j)].y);
            ++n;
        }
    }
    m.diagnostics.reprojection_rms = std::sqrt(sq / n);
    m.diagnostics.threshold = binarize(photo).threshold;

    const WarpResult warped = warp_to_canonical(photo, h, g);
    std::size_t roi_pixels = 0, roi_flagged = 0;
    for_pixels_in(g.roi(), warped.image, [&](int x, int y) {
        ++roi_pixels;
        roi_flagged += warped.flagged[static_cast<std::size_t>(y) * static_cast<std::size_t>(g.width) + static_cast<std::size_t>(x)];
    });
    m.diagnostics.roi_pixels = roi_pixels;
    m.diagnostics.flagged_pixels = warped.flagged_count;
    if (roi_flagged > 0)
        throw VisionRejection("region of interest falls outside the photo", kMarkerCount);
    m.rgb = extract_roi_mean(warped.image, g);
    return m;
}

} // namespace chromatwin::vision
