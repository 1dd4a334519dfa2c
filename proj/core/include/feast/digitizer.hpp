#pragma once

#include "feast/image.hpp"
#include "feast/types.hpp"

#include <Eigen/Core>

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace feast {

struct CornerResponse {
    double x = 0.0;
    double y = 0.0;
    double response = 0.0;
};

/// Harris corner detector over the luma channel. `threshold` is relative to
/// the peak response; survivors are non-maximum-suppressed within the
/// window and refined to subpixel positions by the gradient-weighted
/// least-squares (Forstner) fit.
std::vector<CornerResponse> harris_corners(const RasterImage& image, int window = 5,
                                           double k = 0.04, double threshold = 0.01);

/// Detected sheet corners ordered TL, TR, BR, BL in source-image pixels.
struct SheetGeometry {
    std::array<Eigen::Vector2d, 4> corners;
};

/// Pick, per image quadrant, the candidate farthest from the image centre.
SheetGeometry select_sheet_corners(std::span<const CornerResponse> candidates, int width,
                                   int height);

/// Direct linear transform mapping the sheet corners onto the target
/// rectangle; normalized so H(2,2) = 1.
Eigen::Matrix3d homography_from_corners(const SheetGeometry& geometry, int target_w,
                                        int target_h);

/// Inverse-map every target pixel through H^-1 with bilinear sampling;
/// out-of-bounds samples are black.
RasterImage rectify(const RasterImage& image, const Eigen::Matrix3d& H, int target_w,
                    int target_h);

struct Hsv {
    double h = 0.0;  // degrees in [0, 360)
    double s = 0.0;
    double v = 0.0;
};
Hsv rgb_to_hsv(std::uint8_t r, std::uint8_t g, std::uint8_t b);

struct PaletteEntry {
    std::string name;
    double hue_min = 0.0, hue_max = 360.0;  // wrapping range when min > max
    double sat_min = 0.0, sat_max = 1.0;
    double val_min = 0.0, val_max = 1.0;
};

struct ColorPalette {
    std::vector<PaletteEntry> entries;

    const PaletteEntry* find(const std::string& name) const;
};

/// Binary mask (1 inside all three component ranges, hue wrap handled).
std::vector<std::uint8_t> threshold_hsv(const RasterImage& image, const PaletteEntry& entry);

struct Blob {
    double cx = 0.0;
    double cy = 0.0;
    std::int64_t area = 0;
};

/// 8-connected components of area >= min_area, centroids as coordinate
/// means, sorted by descending area.
std::vector<Blob> detect_blobs(std::span<const std::uint8_t> mask, int width, int height,
                               std::int64_t min_area);

struct DigitizerParams {
    int harris_window = 5;
    double harris_k = 0.04;
    double harris_threshold = 0.01;  // fraction of the peak response
    int canonical_width = 1050;      // A4 aspect at ~2 px/mm
    int canonical_height = 1485;
    std::int64_t min_blob_area = 20;
};

struct SheetKey {
    std::string event_name;
    std::string session_round_name;
    std::int64_t experiment_no = 0;
};

struct DigitizeResult {
    std::vector<StickerAnnotation> annotations;  // rectified coordinates
    std::vector<std::string> missing_colors;     // legend colors with no blob
};

/// Full per-sheet pipeline: corners, rectification to the canonical
/// resolution, per-color thresholding, largest blob per color.
DigitizeResult digitize_sheet(const RasterImage& photo, const ColorPalette& palette,
                              const std::map<std::string, WineId>& legend,
                              const SheetKey& key, const DigitizerParams& params = {});

}  // namespace feast
