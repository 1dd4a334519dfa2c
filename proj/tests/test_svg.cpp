#include "feast/svg.hpp"

#include "support/planted.hpp"

#include "doctest.h"

#include <regex>

using namespace feast;

namespace {

std::size_t count_of(const std::string& haystack, const std::string& needle) {
    std::size_t count = 0, pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

}  // namespace

TEST_SUITE("svg") {

TEST_CASE("scatter draws one circle per wine and is deterministic") {
    Embedding2D e;
    e.ids = {3, 1, 2};
    e.points.resize(3, 2);
    e.points << 0.0, 0.0, 1.0, 2.0, -1.0, 0.5;

    std::string svg = scatter_svg(e, std::nullopt);
    CHECK(count_of(svg, "<circle") == 3);
    CHECK(svg.find("viewBox=") != std::string::npos);
    CHECK(scatter_svg(e, std::nullopt) == svg);
}

TEST_CASE("labeled scatter carries a legend and distinct fills") {
    Embedding2D e;
    e.ids = {0, 1, 2, 3};
    e.points.resize(4, 2);
    e.points << 0, 0, 1, 0, 0, 1, 1, 1;
    LabelSet labels{{0, 1, 2, 3}, {0, 0, 1, 1}, {"low", "high"}};

    std::string svg = scatter_svg(e, labels);
    CHECK(count_of(svg, "legend-swatch") == 2);
    CHECK(svg.find(">low</text>") != std::string::npos);
    CHECK(svg.find(">high</text>") != std::string::npos);
    CHECK(svg.find("#1f77b4") != std::string::npos);
    CHECK(svg.find("#ff7f0e") != std::string::npos);
}

TEST_CASE("category histogram bars are proportional to counts") {
    std::map<std::string, std::int64_t> counts = {{"a", 2}, {"b", 3}};
    std::string svg = histogram_svg(counts);
    CHECK(count_of(svg, "class=\"bar\"") == 2);

    std::regex height_re("height=\"([0-9.]+)\"");
    std::vector<double> heights;
    for (std::sregex_iterator it(svg.begin(), svg.end(), height_re), end; it != end; ++it)
        heights.push_back(std::stod((*it)[1]));
    REQUIRE(heights.size() == 2);
    CHECK(heights[0] / heights[1] == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("continuous histogram uses Sturges' rule") {
    std::vector<double> eight = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
    std::string svg = histogram_svg(eight);
    CHECK(count_of(svg, "class=\"bar\"") == 4);  // ceil(log2 8) + 1
}

TEST_CASE("empty inputs are rejected") {
    CHECK_THROWS_AS(histogram_svg(std::vector<double>{}), InputError);
    CHECK_THROWS_AS(histogram_svg(std::map<std::string, std::int64_t>{}), InputError);
    Embedding2D empty;
    empty.points.resize(0, 2);
    CHECK_THROWS_AS(scatter_svg(empty, std::nullopt), InputError);
}

}  // TEST_SUITE
