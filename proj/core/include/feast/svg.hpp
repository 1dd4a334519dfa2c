#pragma once

#include "feast/types.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>

namespace feast {

/// Standalone scatter SVG: one circle per wine in ascending id order,
/// viewBox fitted with a 5% margin, class colors from a fixed 12-color
/// cycle and a legend block when labels are given.
std::string scatter_svg(const Embedding2D& e, const std::optional<LabelSet>& labels);
void emit_scatter(const Embedding2D& e, const std::optional<LabelSet>& labels,
                  const std::filesystem::path& path);

/// Bar chart of binned reals (Sturges' rule) or category counts.
std::string histogram_svg(std::span<const double> values);
std::string histogram_svg(const std::map<std::string, std::int64_t>& category_counts);
void emit_histogram(std::span<const double> values, const std::filesystem::path& path);
void emit_histogram(const std::map<std::string, std::int64_t>& category_counts,
                    const std::filesystem::path& path);

}  // namespace feast
