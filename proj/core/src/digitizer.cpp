#include "feast/digitizer.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace feast {

namespace {

std::vector<double> luma(const RasterImage& img) {
    std::vector<double> gray(static_cast<std::size_t>(img.width) *
                             static_cast<std::size_t>(img.height));
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const std::uint8_t* p = img.at(x, y);
            gray[static_cast<std::size_t>(y) * static_cast<std::size_t>(img.width) +
                 static_cast<std::size_t>(x)] =
                0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
        }
    return gray;
}

// Windowed box sums via a summed-area table.
class BoxSum {
public:
    BoxSum(const std::vector<double>& values, int w, int h) : w_(w), h_(h), table_((w + 1) * (h + 1), 0.0) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                table_[idx(x + 1, y + 1)] = values[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)] +
                                            table_[idx(x, y + 1)] + table_[idx(x + 1, y)] -
                                            table_[idx(x, y)];
    }

    double window(int cx, int cy, int radius) const {
        int x0 = std::max(0, cx - radius), y0 = std::max(0, cy - radius);
        int x1 = std::min(w_ - 1, cx + radius), y1 = std::min(h_ - 1, cy + radius);
        return table_[idx(x1 + 1, y1 + 1)] - table_[idx(x0, y1 + 1)] - table_[idx(x1 + 1, y0)] +
               table_[idx(x0, y0)];
    }

private:
    std::size_t idx(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(w_ + 1) +
               static_cast<std::size_t>(x);
    }
    int w_, h_;
    std::vector<double> table_;
};

}  // namespace

std::vector<CornerResponse> harris_corners(const RasterImage& image, int window, double k,
                                           double threshold) {
    if (window < 3 || window % 2 == 0)
        throw ConfigError("harris: window must be odd and >= 3");
    if (image.width < window || image.height < window)
        throw InputError("harris: image smaller than the window");

    const int w = image.width, h = image.height;
    std::vector<double> gray = luma(image);
    auto g = [&](int x, int y) {
        return gray[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                    static_cast<std::size_t>(x)];
    };

    std::vector<double> ixx(gray.size(), 0.0), iyy(gray.size(), 0.0), ixy(gray.size(), 0.0);
    for (int y = 1; y < h - 1; ++y)
        for (int x = 1; x < w - 1; ++x) {
            double gx = 0.5 * (g(x + 1, y) - g(x - 1, y));
            double gy = 0.5 * (g(x, y + 1) - g(x, y - 1));
            std::size_t i = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                            static_cast<std::size_t>(x);
            ixx[i] = gx * gx;
            iyy[i] = gy * gy;
            ixy[i] = gx * gy;
        }

    const int radius = window / 2;
    BoxSum sxx(ixx, w, h), syy(iyy, w, h), sxy(ixy, w, h);
    std::vector<double> response(gray.size(), 0.0);
    double peak = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double a = sxx.window(x, y, radius);
            double b = syy.window(x, y, radius);
            double c = sxy.window(x, y, radius);
            double r = a * b - c * c - k * (a + b) * (a + b);
            response[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                     static_cast<std::size_t>(x)] = r;
            peak = std::max(peak, r);
        }
    if (peak <= 0.0) return {};

    const double cutoff = threshold * peak;
    auto r_at = [&](int x, int y) {
        return response[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                        static_cast<std::size_t>(x)];
    };

    // Least-squares intersection of the edge gradients around the peak:
    // exact for ideal step corners, which removes the inward bias of the
    // raw Harris maximum.
    auto refine = [&](int px, int py) -> Eigen::Vector2d {
        const int rr = window;
        Eigen::Matrix2d A = Eigen::Matrix2d::Zero();
        Eigen::Vector2d b = Eigen::Vector2d::Zero();
        for (int qy = std::max(1, py - rr); qy <= std::min(h - 2, py + rr); ++qy)
            for (int qx = std::max(1, px - rr); qx <= std::min(w - 2, px + rr); ++qx) {
                double gx = 0.5 * (g(qx + 1, qy) - g(qx - 1, qy));
                double gy = 0.5 * (g(qx, qy + 1) - g(qx, qy - 1));
                Eigen::Matrix2d outer;
                outer << gx * gx, gx * gy, gx * gy, gy * gy;
                A += outer;
                b += outer * Eigen::Vector2d(qx, qy);
            }
        if (std::abs(A.determinant()) < 1e-9 * (1.0 + A.trace() * A.trace()))
            return {static_cast<double>(px), static_cast<double>(py)};
        Eigen::Vector2d p = A.inverse() * b;
        // A refinement that leaves the window is spurious; keep the peak.
        if ((p - Eigen::Vector2d(px, py)).norm() > radius + 1.0)
            return {static_cast<double>(px), static_cast<double>(py)};
        return p;
    };

    std::vector<CornerResponse> corners;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double r = r_at(x, y);
            if (r < cutoff) continue;
            // Non-maximum suppression; plateau ties go to the first pixel
            // in scan order.
            bool is_max = true;
            for (int dy = -radius; dy <= radius && is_max; ++dy)
                for (int dx = -radius; dx <= radius && is_max; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    int nx = x + dx, ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    double rn = r_at(nx, ny);
                    if (rn > r || (rn == r && (ny < y || (ny == y && nx < x)))) is_max = false;
                }
            if (is_max) {
                Eigen::Vector2d p = refine(x, y);
                corners.push_back({p.x(), p.y(), r});
            }
        }
    return corners;
}

SheetGeometry select_sheet_corners(std::span<const CornerResponse> candidates, int width,
                                   int height) {
    if (candidates.size() < 4) throw InputError("corner selection: need at least 4 candidates");
    const double cx = 0.5 * (width - 1);
    const double cy = 0.5 * (height - 1);

    // Quadrants: 0 TL, 1 TR, 2 BR, 3 BL.
    std::array<const CornerResponse*, 4> best = {nullptr, nullptr, nullptr, nullptr};
    std::array<double, 4> best_dist = {-1.0, -1.0, -1.0, -1.0};
    for (const auto& c : candidates) {
        bool left = c.x < cx, top = c.y < cy;
        int q = top ? (left ? 0 : 1) : (left ? 3 : 2);
        double dx = c.x - cx, dy = c.y - cy;
        double dist = dx * dx + dy * dy;
        if (dist > best_dist[static_cast<std::size_t>(q)]) {
            best_dist[static_cast<std::size_t>(q)] = dist;
            best[static_cast<std::size_t>(q)] = &c;
        }
    }
    for (int q = 0; q < 4; ++q)
        if (!best[static_cast<std::size_t>(q)])
            throw InputError("corner selection: image quadrant " + std::to_string(q) +
                             " has no corner candidate");

    SheetGeometry g;
    for (int q = 0; q < 4; ++q)
        g.corners[static_cast<std::size_t>(q)] =
            Eigen::Vector2d(best[static_cast<std::size_t>(q)]->x,
                            best[static_cast<std::size_t>(q)]->y);
    return g;
}

Eigen::Matrix3d homography_from_corners(const SheetGeometry& geometry, int target_w,
                                        int target_h) {
    const std::array<Eigen::Vector2d, 4> targets = {
        Eigen::Vector2d(0, 0), Eigen::Vector2d(target_w - 1, 0),
        Eigen::Vector2d(target_w - 1, target_h - 1), Eigen::Vector2d(0, target_h - 1)};

    Eigen::Matrix<double, 8, 9> A;
    for (int i = 0; i < 4; ++i) {
        double x = geometry.corners[static_cast<std::size_t>(i)].x();
        double y = geometry.corners[static_cast<std::size_t>(i)].y();
        double u = targets[static_cast<std::size_t>(i)].x();
        double v = targets[static_cast<std::size_t>(i)].y();
        A.row(2 * i) << x, y, 1, 0, 0, 0, -u * x, -u * y, -u;
        A.row(2 * i + 1) << 0, 0, 0, x, y, 1, -v * x, -v * y, -v;
    }

    Eigen::JacobiSVD<Eigen::Matrix<double, 8, 9>> svd(A, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (sv(7) < 1e-12 * sv(0))
        throw NumericError("homography: singular system (collinear corners)");

    Eigen::Matrix<double, 9, 1> hvec = svd.matrixV().col(8);
    if (std::abs(hvec(8)) < 1e-14)
        throw NumericError("homography: degenerate solution");
    hvec /= hvec(8);

    Eigen::Matrix3d H;
    H << hvec(0), hvec(1), hvec(2), hvec(3), hvec(4), hvec(5), hvec(6), hvec(7), hvec(8);
    return H;
}

RasterImage rectify(const RasterImage& image, const Eigen::Matrix3d& H, int target_w,
                    int target_h) {
    if (std::abs(H.determinant()) < 1e-14)
        throw NumericError("rectify: homography is not invertible");
    Eigen::Matrix3d Hinv = H.inverse();

    RasterImage out = RasterImage::filled(target_w, target_h, 0, 0, 0);
    auto sample = [&](double x, double y, int c) -> double {
        int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
        double fx = x - x0, fy = y - y0;
        double acc = 0.0;
        for (int dy = 0; dy <= 1; ++dy)
            for (int dx = 0; dx <= 1; ++dx) {
                int px = x0 + dx, py = y0 + dy;
                double weight = (dx ? fx : 1 - fx) * (dy ? fy : 1 - fy);
                if (weight == 0.0) continue;
                double value = 0.0;  // outside the source reads as black
                if (px >= 0 && py >= 0 && px < image.width && py < image.height)
                    value = image.at(px, py)[c];
                acc += weight * value;
            }
        return acc;
    };

    for (int v = 0; v < target_h; ++v)
        for (int u = 0; u < target_w; ++u) {
            Eigen::Vector3d s = Hinv * Eigen::Vector3d(u, v, 1.0);
            if (std::abs(s(2)) < 1e-12) continue;  // stays black
            double x = s(0) / s(2), y = s(1) / s(2);
            if (x < -1.0 || y < -1.0 || x > image.width || y > image.height) continue;
            std::uint8_t* p = out.at(u, v);
            for (int c = 0; c < 3; ++c)
                p[c] = static_cast<std::uint8_t>(
                    std::clamp(std::lround(sample(x, y, c)), 0L, 255L));
        }
    return out;
}

Hsv rgb_to_hsv(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
    double r = r8 / 255.0, g = g8 / 255.0, b = b8 / 255.0;
    double mx = std::max({r, g, b}), mn = std::min({r, g, b});
    double delta = mx - mn;

    Hsv hsv;
    hsv.v = mx;
    hsv.s = (mx == 0.0) ? 0.0 : delta / mx;
    if (delta == 0.0) {
        hsv.h = 0.0;
    } else if (mx == r) {
        hsv.h = 60.0 * std::fmod((g - b) / delta + 6.0, 6.0);
    } else if (mx == g) {
        hsv.h = 60.0 * ((b - r) / delta + 2.0);
    } else {
        hsv.h = 60.0 * ((r - g) / delta + 4.0);
    }
    if (hsv.h >= 360.0) hsv.h -= 360.0;
    return hsv;
}

const PaletteEntry* ColorPalette::find(const std::string& name) const {
    for (const auto& e : entries)
        if (e.name == name) return &e;
    return nullptr;
}

std::vector<std::uint8_t> threshold_hsv(const RasterImage& image, const PaletteEntry& entry) {
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(image.width) *
                                       static_cast<std::size_t>(image.height),
                                   0);
    auto hue_in_range = [&](double h) {
        if (entry.hue_min <= entry.hue_max) return h >= entry.hue_min && h <= entry.hue_max;
        return h >= entry.hue_min || h <= entry.hue_max;  // wraps through 360
    };
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x) {
            const std::uint8_t* p = image.at(x, y);
            Hsv hsv = rgb_to_hsv(p[0], p[1], p[2]);
            if (hue_in_range(hsv.h) && hsv.s >= entry.sat_min && hsv.s <= entry.sat_max &&
                hsv.v >= entry.val_min && hsv.v <= entry.val_max)
                mask[static_cast<std::size_t>(y) * static_cast<std::size_t>(image.width) +
                     static_cast<std::size_t>(x)] = 1;
        }
    return mask;
}

std::vector<Blob> detect_blobs(std::span<const std::uint8_t> mask, int width, int height,
                               std::int64_t min_area) {
    std::vector<std::uint8_t> visited(mask.size(), 0);
    std::vector<Blob> blobs;
    std::deque<std::pair<int, int>> frontier;

    auto index = [&](int x, int y) {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
               static_cast<std::size_t>(x);
    };

    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            if (!mask[index(x, y)] || visited[index(x, y)]) continue;
            double sum_x = 0.0, sum_y = 0.0;
            std::int64_t area = 0;
            frontier.push_back({x, y});
            visited[index(x, y)] = 1;
            while (!frontier.empty()) {
                auto [px, py] = frontier.front();
                frontier.pop_front();
                sum_x += px;
                sum_y += py;
                ++area;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        int nx = px + dx, ny = py + dy;
                        if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
                        if (!mask[index(nx, ny)] || visited[index(nx, ny)]) continue;
                        visited[index(nx, ny)] = 1;
                        frontier.push_back({nx, ny});
                    }
            }
            if (area >= min_area)
                blobs.push_back({sum_x / static_cast<double>(area),
                                 sum_y / static_cast<double>(area), area});
        }

    std::sort(blobs.begin(), blobs.end(), [](const Blob& a, const Blob& b) {
        if (a.area != b.area) return a.area > b.area;
        if (a.cy != b.cy) return a.cy < b.cy;
        return a.cx < b.cx;
    });
    return blobs;
}

DigitizeResult digitize_sheet(const RasterImage& photo, const ColorPalette& palette,
                              const std::map<std::string, WineId>& legend,
                              const SheetKey& key, const DigitizerParams& params) {
    auto candidates = harris_corners(photo, params.harris_window, params.harris_k,
                                     params.harris_threshold);
    SheetGeometry geometry = select_sheet_corners(candidates, photo.width, photo.height);
    Eigen::Matrix3d H =
        homography_from_corners(geometry, params.canonical_width, params.canonical_height);
    RasterImage sheet = rectify(photo, H, params.canonical_width, params.canonical_height);

    DigitizeResult result;
    for (const auto& [color, wine] : legend) {
        const PaletteEntry* entry = palette.find(color);
        if (!entry) throw ConfigError("digitize: palette has no entry for color '" + color + "'");
        auto mask = threshold_hsv(sheet, *entry);
        auto blobs = detect_blobs(mask, sheet.width, sheet.height, params.min_blob_area);
        if (blobs.empty()) {
            result.missing_colors.push_back(color);
            continue;
        }
        const Blob& largest = blobs.front();
        StickerAnnotation a;
        a.event_name = key.event_name;
        a.session_round_name = key.session_round_name;
        a.experiment_no = key.experiment_no;
        a.wine = wine;
        a.coor1 = largest.cx;
        a.coor2 = largest.cy;
        a.color = color;
        result.annotations.push_back(std::move(a));
    }
    return result;
}

}  // namespace feast
