#include "feast/evaluation.hpp"

#include "feast/data_model.hpp"
#include "support/planted.hpp"

#include "doctest.h"

#include <cmath>
#include <random>
#include <set>

using namespace feast;
using testsupport::planted_points;

namespace {

Embedding2D embedding_from(const Eigen::MatrixXd& points) {
    Embedding2D e;
    e.points = points;
    for (Eigen::Index i = 0; i < points.rows(); ++i) e.ids.push_back(i);
    return e;
}

LabelSet labels_of(std::vector<WineId> ids, std::vector<int> labels,
                   std::vector<std::string> names) {
    return LabelSet{std::move(ids), std::move(labels), std::move(names)};
}

WineRecord record_with_id(WineId experiment_id) {
    WineRecord r;
    r.vintage_id = 10000 + experiment_id;
    r.experiment_id = experiment_id;
    return r;
}

}  // namespace

TEST_SUITE("evaluation") {

TEST_CASE("tar of the generating configuration is 1.0") {
    auto X = planted_points(25, 3.0, 60);
    auto m = testsupport::exact_distances(X);
    auto triplets = triplets_from_matrix(m);
    auto e = embedding_from(X);
    auto res = tar_score(e, triplets);
    CHECK(res.tar == 1.0);
    CHECK(res.skipped == 0);
    CHECK(res.evaluated == static_cast<std::int64_t>(triplets.size()));
}

TEST_CASE("tar of a random embedding sits at the 0.5 chance level") {
    auto X = planted_points(40, 3.0, 61);
    auto m = testsupport::exact_distances(X);
    auto all = triplets_from_matrix(m);
    std::mt19937_64 rng(62);
    for (std::size_t i = all.size() - 1; i > 0; --i)
        std::swap(all[i], all[rng() % (i + 1)]);
    all.resize(1000);

    auto random_e = embedding_from(planted_points(40, 1.0, 63));
    auto res = tar_score(random_e, all);
    CHECK(res.tar > 0.45);
    CHECK(res.tar < 0.55);
}

TEST_CASE("tar is invariant under isometries and uniform scaling") {
    auto X = planted_points(20, 2.0, 64);
    auto m = testsupport::exact_distances(X);
    auto triplets = triplets_from_matrix(m);
    auto probe = embedding_from(planted_points(20, 2.0, 65));
    auto base = tar_score(probe, triplets);

    Eigen::MatrixXd mirrored = probe.points;
    mirrored.col(0) = -mirrored.col(0);
    CHECK(tar_score(embedding_from(mirrored), triplets).tar == base.tar);

    Eigen::Matrix2d rot;
    const double theta = 1.2;
    rot << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    Eigen::MatrixXd moved = (probe.points * rot.transpose()) * 3.7;
    moved.rowwise() += Eigen::RowVector2d(5.0, -1.0);
    CHECK(tar_score(embedding_from(moved), triplets).tar == base.tar);
}

TEST_CASE("tar skips triplets with unknown ids and rejects empty input") {
    auto e = embedding_from(planted_points(5, 1.0, 66));
    std::vector<FlavorTriplet> triplets = {{0, 1, 2}, {0, 1, 99}};
    auto res = tar_score(e, triplets);
    CHECK(res.evaluated == 1);
    CHECK(res.skipped == 1);

    CHECK_THROWS_AS(tar_score(e, std::vector<FlavorTriplet>{}), InputError);
    std::vector<FlavorTriplet> unknown = {{90, 91, 92}};
    CHECK_THROWS_AS(tar_score(e, unknown), InputError);
}

TEST_CASE("exact distance ties count as disagreement") {
    Embedding2D e;
    e.ids = {1, 2, 3};
    e.points.resize(3, 2);
    e.points << 0, 0, 1, 0, -1, 0;  // d(1,2) == d(1,3)
    std::vector<FlavorTriplet> t = {{1, 2, 3}};
    CHECK(tar_score(e, t).tar == 0.0);
}

TEST_CASE("bin_attribute yields the documented random baselines") {
    std::vector<WineRecord> records;
    for (int i = 0; i < 60; ++i) {
        auto r = record_with_id(i);
        r.alcohol = 11.0 + 0.5 * (i % 6);  // 6 distinct values
        r.rating = 3.0 + 0.5 * (i % 4);    // 4 distinct values
        records.push_back(r);
    }
    auto alc = bin_attribute(records, Attribute::Alcohol);
    CHECK(alc.labels.num_classes() == 6);
    CHECK(random_baseline(alc.labels) == doctest::Approx(1.0 / 6.0));

    auto rating = bin_attribute(records, Attribute::Rating);
    CHECK(rating.labels.num_classes() == 4);
    CHECK(random_baseline(rating.labels) == doctest::Approx(0.25));
}

TEST_CASE("grape labels use the dominant variety; categories sort lexicographically") {
    std::vector<WineRecord> records;
    auto r1 = record_with_id(1);
    r1.grapes = {"Sangiovese", "Merlot"};
    auto r2 = record_with_id(2);
    r2.grapes = {"Barbera"};
    auto r3 = record_with_id(3);  // no grapes: dropped
    records = {r1, r2, r3};

    auto res = bin_attribute(records, Attribute::Grape);
    CHECK(res.dropped == 1);
    REQUIRE(res.labels.class_names.size() == 2);
    CHECK(res.labels.class_names[0] == "Barbera");
    CHECK(res.labels.class_names[1] == "Sangiovese");
    auto idx = std::find(res.labels.ids.begin(), res.labels.ids.end(), 1) -
               res.labels.ids.begin();
    CHECK(res.labels.labels[static_cast<std::size_t>(idx)] == 1);
}

TEST_CASE("quantile binning caps the class count") {
    std::vector<WineRecord> records;
    for (int i = 0; i < 100; ++i) {
        auto r = record_with_id(i);
        r.price = 5.0 + 0.37 * i;  // 100 distinct values
        records.push_back(r);
    }
    auto res = bin_attribute(records, Attribute::Price);  // auto -> quantile, target 10
    CHECK(res.labels.num_classes() == 10);
    CHECK(random_baseline(res.labels) == doctest::Approx(0.10));
}

TEST_CASE("oversample balances counts to the majority and keeps originals") {
    Eigen::MatrixXd features(4, 2);
    features << 0, 0, 1, 0, 2, 0, 9, 9;
    auto labels = labels_of({10, 11, 12, 13}, {0, 0, 0, 1}, {"a", "b"});
    auto out = oversample(features, labels, 42);

    std::map<int, int> counts;
    for (int l : out.labels.labels) ++counts[l];
    CHECK(counts[0] == 3);
    CHECK(counts[1] == 3);
    // Originals retained in order.
    for (int i = 0; i < 4; ++i) {
        CHECK(out.labels.ids[static_cast<std::size_t>(i)] == labels.ids[static_cast<std::size_t>(i)]);
        CHECK((out.features.row(i) - features.row(i)).norm() == 0.0);
    }
    // Duplicates are copies of class-1 rows.
    for (Eigen::Index i = 4; i < out.features.rows(); ++i)
        CHECK((out.features.row(i) - features.row(3)).norm() == 0.0);

    auto again = oversample(features, labels, 42);
    CHECK(again.labels.ids == out.labels.ids);

    auto balanced = labels_of({1, 2}, {0, 1}, {"a", "b"});
    Eigen::MatrixXd f2(2, 2);
    f2 << 0, 0, 1, 1;
    auto noop = oversample(f2, balanced, 7);
    CHECK(noop.labels.ids == balanced.ids);
}

TEST_CASE("knn_cv is perfect on separated clusters and chance on permuted labels") {
    std::mt19937_64 rng(70);
    std::normal_distribution<double> gauss(0.0, 0.3);
    const int per = 30;
    Eigen::MatrixXd points(2 * per, 2);
    std::vector<WineId> ids;
    std::vector<int> labels;
    for (int i = 0; i < 2 * per; ++i) {
        int c = i < per ? 0 : 1;
        points(i, 0) = gauss(rng) + (c == 0 ? 0.0 : 10.0);
        points(i, 1) = gauss(rng);
        ids.push_back(i);
        labels.push_back(c);
    }
    auto e = embedding_from(points);
    auto ls = labels_of(ids, labels, {"near", "far"});
    auto cv = knn_cv(e, ls, 5, 5, 1);
    CHECK(cv.mean_accuracy == 1.0);
    CHECK(cv.fold_accuracies.size() == 5);

    // Permuted 4-class labels: accuracy concentrates near 1/4.
    std::vector<int> four(2 * per);
    for (std::size_t i = 0; i < four.size(); ++i) four[i] = static_cast<int>(i % 4);
    for (std::size_t i = four.size() - 1; i > 0; --i)
        std::swap(four[i], four[rng() % (i + 1)]);
    auto ls4 = labels_of(ids, four, {"a", "b", "c", "d"});
    double total = 0.0;
    for (std::uint64_t s = 0; s < 10; ++s) total += knn_cv(e, ls4, 5, 5, s).mean_accuracy;
    CHECK(std::abs(total / 10.0 - 0.25) < 0.1);

    auto rerun = knn_cv(e, ls, 5, 5, 1);
    CHECK(rerun.mean_accuracy == cv.mean_accuracy);

    CHECK_THROWS_AS(knn_cv(e, ls, 60, 5, 1), ConfigError);  // k >= training fold
}

TEST_CASE("mlp_cv solves the XOR-patterned clusters") {
    std::mt19937_64 rng(71);
    std::normal_distribution<double> gauss(0.0, 0.15);
    Eigen::MatrixXd points(80, 2);
    std::vector<WineId> ids;
    std::vector<int> labels;
    const double centers[4][2] = {{0, 0}, {1, 1}, {0, 1}, {1, 0}};
    for (int i = 0; i < 80; ++i) {
        int cluster = i % 4;
        points(i, 0) = centers[cluster][0] + gauss(rng);
        points(i, 1) = centers[cluster][1] + gauss(rng);
        ids.push_back(i);
        labels.push_back(cluster < 2 ? 0 : 1);  // XOR pattern
    }
    auto e = embedding_from(points);
    auto ls = labels_of(ids, labels, {"diag", "anti"});
    auto cv = mlp_cv(e, ls, 16, 300, 0.05, 5, 3);
    CHECK(cv.mean_accuracy >= 0.95);

    CHECK_THROWS_AS(mlp_cv(e, ls, 0, 10, 0.05, 5, 3), ConfigError);
}

TEST_CASE("mlp training loss decreases on separable data") {
    Eigen::MatrixXd features(20, 2);
    std::vector<int> labels(20);
    for (int i = 0; i < 20; ++i) {
        features(i, 0) = (i < 10) ? -2.0 + 0.1 * i : 2.0 + 0.1 * i;
        features(i, 1) = 0.0;
        labels[static_cast<std::size_t>(i)] = (i < 10) ? 0 : 1;
    }
    auto model = train_mlp(features, labels, 2, 8, 100, 0.05, 5);
    REQUIRE(model.epoch_loss.size() == 100);
    CHECK(model.epoch_loss.back() < model.epoch_loss.front());
}

TEST_CASE("random_baseline is 1 over the class count") {
    CHECK(random_baseline(labels_of({1}, {0}, {"only"})) == 1.0);
    LabelSet six{{1, 2, 3, 4, 5, 6}, {0, 1, 2, 3, 4, 5}, {"a", "b", "c", "d", "e", "f"}};
    CHECK(random_baseline(six) == doctest::Approx(0.1667).epsilon(1e-3));
    LabelSet ten;
    for (int i = 0; i < 10; ++i) {
        ten.ids.push_back(i);
        ten.labels.push_back(i);
        ten.class_names.push_back(std::to_string(i));
    }
    CHECK(random_baseline(ten) == doctest::Approx(0.10));
}

TEST_CASE("attribute_report: constant embedding scores near chance, separable country hits 1") {
    std::mt19937_64 rng(75);
    std::normal_distribution<double> gauss(0.0, 0.2);
    const int n = 60;
    std::vector<WineRecord> records;
    Eigen::MatrixXd separable(n, 2);
    for (int i = 0; i < n; ++i) {
        auto r = record_with_id(i);
        int country = i % 3;
        r.country = std::string("Country") + std::to_string(country);
        r.rating = 3.0 + 0.5 * static_cast<double>(rng() % 4);
        records.push_back(r);
        separable(i, 0) = 10.0 * country + gauss(rng);
        separable(i, 1) = gauss(rng);
    }

    auto sep = attribute_report(embedding_from(separable), records, {.seed = 5});
    CHECK(sep.per_attribute_accuracy.at("country") == 1.0);
    CHECK(sep.per_attribute_accuracy.count("alcohol") == 0);  // nobody carries it
    double mean = (sep.per_attribute_accuracy.at("country") +
                   sep.per_attribute_accuracy.at("rating")) /
                  2.0;
    CHECK(sep.mean_accuracy == doctest::Approx(mean));
    CHECK(sep.baselines.at("country") == doctest::Approx(1.0 / 3.0));

    Eigen::MatrixXd constant = Eigen::MatrixXd::Zero(n, 2);
    auto flat = attribute_report(embedding_from(constant), records, {.seed = 6});
    CHECK(std::abs(flat.per_attribute_accuracy.at("country") - 1.0 / 3.0) < 0.2);
}

TEST_CASE("attribute_report needs ten shared ids") {
    std::vector<WineRecord> records;
    for (int i = 0; i < 5; ++i) {
        auto r = record_with_id(i);
        r.country = "X";
        records.push_back(r);
    }
    auto e = embedding_from(planted_points(5, 1.0, 80));
    CHECK_THROWS_AS(attribute_report(e, records, {}), InputError);
}

}  // TEST_SUITE
