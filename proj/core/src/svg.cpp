#include "feast/svg.hpp"

#include "feast/csv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

namespace feast {

namespace {

const char* kColorCycle[12] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                               "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                               "#bcbd22", "#17becf", "#aec7e8", "#ffbb78"};

void write_file(const std::string& content, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write file: " + path.string());
    out << content;
    if (!out) throw InputError("write failed: " + path.string());
}

// Fixed-point layout numbers; trailing zeros trimmed.
std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    std::string s = buf;
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    if (s == "-0") s = "0";
    return s;
}

}  // namespace

std::string scatter_svg(const Embedding2D& e, const std::optional<LabelSet>& labels) {
    if (e.size() == 0) throw InputError("scatter: empty embedding");

    double min_x = e.points.col(0).minCoeff(), max_x = e.points.col(0).maxCoeff();
    double min_y = e.points.col(1).minCoeff(), max_y = e.points.col(1).maxCoeff();
    double span_x = std::max(max_x - min_x, 1e-9);
    double span_y = std::max(max_y - min_y, 1e-9);
    double margin_x = 0.05 * span_x, margin_y = 0.05 * span_y;
    double radius = 0.015 * std::max(span_x, span_y);

    std::unordered_map<WineId, int> label_of;
    if (labels)
        for (std::size_t i = 0; i < labels->ids.size(); ++i)
            label_of[labels->ids[i]] = labels->labels[i];

    // Ascending id order keeps the output deterministic.
    std::vector<std::size_t> order(e.ids.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return e.ids[a] < e.ids[b]; });

    std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" + num(min_x - margin_x) +
           " " + num(min_y - margin_y) + " " + num(span_x + 2 * margin_x) + " " +
           num(span_y + 2 * margin_y) + "\">\n";

    for (std::size_t i : order) {
        const auto row = static_cast<Eigen::Index>(i);
        std::string fill = "#444444";
        if (labels) {
            auto it = label_of.find(e.ids[i]);
            if (it != label_of.end()) fill = kColorCycle[it->second % 12];
        }
        svg += "  <circle cx=\"" + num(e.points(row, 0)) + "\" cy=\"" + num(e.points(row, 1)) +
               "\" r=\"" + num(radius) + "\" fill=\"" + fill + "\"/>\n";
    }

    if (labels && !labels->class_names.empty()) {
        double lx = min_x - margin_x + 0.02 * span_x;
        double ly = min_y - margin_y + 0.02 * span_y;
        double step = 0.04 * span_y;
        double box = 0.02 * span_y;
        svg += "  <g class=\"legend\" font-size=\"" + num(0.025 * span_y) + "\">\n";
        for (std::size_t c = 0; c < labels->class_names.size(); ++c) {
            double y = ly + static_cast<double>(c) * step;
            svg += "    <rect class=\"legend-swatch\" x=\"" + num(lx) + "\" y=\"" + num(y) +
                   "\" width=\"" + num(box) + "\" height=\"" + num(box) + "\" fill=\"" +
                   kColorCycle[c % 12] + "\"/>\n";
            svg += "    <text x=\"" + num(lx + 1.5 * box) + "\" y=\"" + num(y + 0.8 * box) +
                   "\">" + labels->class_names[c] + "</text>\n";
        }
        svg += "  </g>\n";
    }
    svg += "</svg>\n";
    return svg;
}

void emit_scatter(const Embedding2D& e, const std::optional<LabelSet>& labels,
                  const std::filesystem::path& path) {
    write_file(scatter_svg(e, labels), path);
}

namespace {

std::string bars_svg(const std::vector<std::string>& names, const std::vector<double>& heights) {
    const double bar_w = 40.0, gap = 10.0, chart_h = 200.0, label_h = 20.0;
    double peak = *std::max_element(heights.begin(), heights.end());
    if (peak <= 0.0) peak = 1.0;
    double width = static_cast<double>(names.size()) * (bar_w + gap) + gap;

    std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " + num(width) + " " +
           num(chart_h + label_h) + "\">\n";
    for (std::size_t i = 0; i < names.size(); ++i) {
        double h = chart_h * heights[i] / peak;
        double x = gap + static_cast<double>(i) * (bar_w + gap);
        svg += "  <rect class=\"bar\" x=\"" + num(x) + "\" y=\"" + num(chart_h - h) +
               "\" width=\"" + num(bar_w) + "\" height=\"" + num(h) + "\" fill=\"" +
               kColorCycle[0] + "\"/>\n";
        svg += "  <text x=\"" + num(x + 0.5 * bar_w) + "\" y=\"" + num(chart_h + 14.0) +
               "\" font-size=\"10\" text-anchor=\"middle\">" + names[i] + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace

std::string histogram_svg(std::span<const double> values) {
    if (values.empty()) throw InputError("histogram: empty input");
    const std::size_t n = values.size();
    const int bins = static_cast<int>(std::ceil(std::log2(static_cast<double>(n)))) + 1;

    double lo = *std::min_element(values.begin(), values.end());
    double hi = *std::max_element(values.begin(), values.end());
    double width = (hi > lo) ? (hi - lo) / bins : 1.0;

    std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
    for (double v : values) {
        int b = (hi > lo) ? std::min(bins - 1, static_cast<int>((v - lo) / width)) : 0;
        counts[static_cast<std::size_t>(b)] += 1.0;
    }
    std::vector<std::string> names;
    for (int b = 0; b < bins; ++b) names.push_back(num(lo + b * width));
    return bars_svg(names, counts);
}

std::string histogram_svg(const std::map<std::string, std::int64_t>& category_counts) {
    if (category_counts.empty()) throw InputError("histogram: empty input");
    std::vector<std::string> names;
    std::vector<double> heights;
    for (const auto& [name, count] : category_counts) {
        names.push_back(name);
        heights.push_back(static_cast<double>(count));
    }
    return bars_svg(names, heights);
}

void emit_histogram(std::span<const double> values, const std::filesystem::path& path) {
    write_file(histogram_svg(values), path);
}

void emit_histogram(const std::map<std::string, std::int64_t>& category_counts,
                    const std::filesystem::path& path) {
    write_file(histogram_svg(category_counts), path);
}

}  // namespace feast
