#pragma once

#include "feast/csv.hpp"
#include "feast/data_model.hpp"

#include "support/planted.hpp"
#include "support/tmpdir.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace testsupport {

/// A desk-scale synthetic dataset: napping sheets, attributes and a
/// high-dimensional "encoder" table, all derived from one planted 2D
/// flavor configuration so every pipeline stage has signal to recover.
struct SyntheticDataset {
    Eigen::MatrixXd planted;  // n x 2
    std::vector<feast::WineId> ids;
    std::filesystem::path napping_csv;
    std::filesystem::path attributes_csv;
    std::filesystem::path embeddings_csv;
};

inline int quantile_bin(double value, const std::vector<double>& sorted, int bins) {
    auto rank = std::lower_bound(sorted.begin(), sorted.end(), value) - sorted.begin();
    int b = static_cast<int>(rank * bins / static_cast<std::ptrdiff_t>(sorted.size()));
    return std::min(b, bins - 1);
}

/// Seven attributes carved deterministically out of planted coordinates, so
/// a faithful embedding of the configuration predicts them well.
inline std::vector<feast::WineRecord> synthetic_records(const Eigen::MatrixXd& planted) {
    const int n = static_cast<int>(planted.rows());
    std::vector<double> xs(static_cast<std::size_t>(n)), ys(xs), sums(xs), diffs(xs);
    for (int i = 0; i < n; ++i) {
        xs[static_cast<std::size_t>(i)] = planted(i, 0);
        ys[static_cast<std::size_t>(i)] = planted(i, 1);
        sums[static_cast<std::size_t>(i)] = planted(i, 0) + planted(i, 1);
        diffs[static_cast<std::size_t>(i)] = planted(i, 0) - planted(i, 1);
    }
    auto sorted = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v;
    };
    auto sx = sorted(xs), sy = sorted(ys), ssum = sorted(sums), sdiff = sorted(diffs);

    static const char* countries[4] = {"Italy", "France", "Spain", "Chile"};
    static const char* regions[6] = {"Tuscany", "Piedmont", "Rioja", "Bordeaux", "Maipo",
                                     "Sicily"};
    static const char* grape_names[4] = {"Sangiovese", "Merlot", "Tempranillo", "Syrah"};

    std::vector<feast::WineRecord> records;
    records.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double angle = std::atan2(planted(i, 1), planted(i, 0)) + M_PI;
        feast::WineRecord r;
        r.vintage_id = 10000 + i;
        r.experiment_id = i;
        r.country = countries[std::min(3, static_cast<int>(angle / (2 * M_PI) * 4))];
        r.region = regions[std::min(5, static_cast<int>(angle / (2 * M_PI) * 6))];
        r.grapes = {grape_names[std::min(3, static_cast<int>(angle / (2 * M_PI) * 4 + 0.5) % 4)]};
        r.alcohol = 11.0 + 0.5 * quantile_bin(xs[static_cast<std::size_t>(i)], sx, 6);
        r.price = 7.0 + 3.0 * quantile_bin(ys[static_cast<std::size_t>(i)], sy, 10);
        r.rating = 3.0 + 0.5 * quantile_bin(sums[static_cast<std::size_t>(i)], ssum, 4);
        r.year = 2005 + quantile_bin(diffs[static_cast<std::size_t>(i)], sdiff, 12);
        r.review = "fine wine";
        records.push_back(std::move(r));
    }
    return records;
}

inline SyntheticDataset make_dataset(const TempDir& dir, int n_wines, int sheets,
                                     std::uint64_t seed, double machine_noise = 0.5,
                                     double sheet_noise = 5.0) {
    SyntheticDataset ds;
    ds.planted = planted_points(n_wines, 3.0, seed);
    for (int i = 0; i < n_wines; ++i) ds.ids.push_back(i);
    std::mt19937_64 rng(seed ^ 0x5bd1e995);

    // Napping sheets: five wines placed by their planted geometry, scaled
    // onto a 500x500 sheet with placement noise.
    std::normal_distribution<double> jitter(0.0, sheet_noise);
    std::string napping =
        "session_round_name,event_name,experiment_no,experiment_id,coor1,coor2,color\n";
    const char* colors[5] = {"red", "green", "blue", "yellow", "magenta"};
    for (int s = 0; s < sheets; ++s) {
        std::set<int> chosen;
        while (chosen.size() < 5) chosen.insert(static_cast<int>(rng() % n_wines));
        std::vector<int> wines(chosen.begin(), chosen.end());

        double min_x = 1e18, min_y = 1e18;
        for (int w : wines) {
            min_x = std::min(min_x, ds.planted(w, 0));
            min_y = std::min(min_y, ds.planted(w, 1));
        }
        int c = 0;
        for (int w : wines) {
            double x = (ds.planted(w, 0) - min_x) * 40.0 + 50.0 + jitter(rng);
            double y = (ds.planted(w, 1) - min_y) * 40.0 + 50.0 + jitter(rng);
            napping += "r" + std::to_string(s % 3) + ",event" + std::to_string(s / 3) + "," +
                       std::to_string(s) + "," + std::to_string(w) + "," +
                       feast::format_double(std::max(0.0, x)) + "," +
                       feast::format_double(std::max(0.0, y)) + "," + colors[c++ % 5] + "\n";
        }
    }
    ds.napping_csv = dir.write("napping.csv", napping);

    // Attributes carved out of the planted coordinates.
    std::string attrs =
        "vintage_id,experiment_id,year,country,region,price,rating,alcohol,grape,review,image\n";
    for (const auto& r : synthetic_records(ds.planted)) {
        attrs += std::to_string(r.vintage_id) + "," + std::to_string(*r.experiment_id) + "," +
                 std::to_string(*r.year) + "," + *r.country + "," + *r.region + "," +
                 feast::format_double(*r.price) + "," + feast::format_double(*r.rating) + "," +
                 feast::format_double(*r.alcohol) + "," + r.grapes.front() + ",fine wine,\n";
    }
    ds.attributes_csv = dir.write("attributes.csv", attrs);

    // Machine table: noisy planted coordinates plus distractor dimensions.
    std::normal_distribution<double> gauss(0.0, 1.0);
    double spread = std::sqrt((ds.planted.array() - ds.planted.mean()).square().mean());
    std::string table = "id,e0,e1,e2,e3,e4,e5\n";
    for (int i = 0; i < n_wines; ++i) {
        double e0 = ds.planted(i, 0) + machine_noise * spread * gauss(rng);
        double e1 = ds.planted(i, 1) + machine_noise * spread * gauss(rng);
        table += std::to_string(i) + "," + feast::format_double(e0) + "," +
                 feast::format_double(e1);
        for (int d = 0; d < 4; ++d)
            table += "," + feast::format_double(0.3 * spread * gauss(rng));
        table += "\n";
    }
    ds.embeddings_csv = dir.write("embeddings.csv", table);
    return ds;
}

}  // namespace testsupport
