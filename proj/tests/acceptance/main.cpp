// Acceptance suite: end-to-end checks at pinned tolerances, one verdict
// line per criterion. Exit code is nonzero if any required criterion fails.

#include "feast/combiners.hpp"
#include "feast/data_model.hpp"
#include "feast/digitizer.hpp"
#include "feast/evaluation.hpp"
#include "feast/nmds.hpp"
#include "feast/pca.hpp"
#include "feast/pipeline.hpp"
#include "feast/tsne.hpp"
#include "feast/tste.hpp"

#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "support/planted.hpp"
#include "support/sheet_renderer.hpp"
#include "support/stats.hpp"
#include "support/tmpdir.hpp"

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace feast;
using namespace testsupport;

namespace {

struct Verdict {
    int id;
    bool pass = false;
    bool skipped = false;
    std::string detail;
};

std::vector<Verdict> verdicts;

class CheckFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void require(bool condition, const std::string& what) {
    if (!condition) throw CheckFailure(what);
}

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof buf, format, args);
    va_end(args);
    return buf;
}

template <class F>
void criterion(int id, F&& body) {
    Verdict v;
    v.id = id;
    try {
        v.detail = body();
        v.pass = true;
    } catch (const CheckFailure& e) {
        v.detail = e.what();
    } catch (const std::exception& e) {
        v.detail = std::string("unexpected error: ") + e.what();
    }
    verdicts.push_back(std::move(v));
}

void skip(int id, const std::string& why) {
    verdicts.push_back({id, false, true, why});
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Embedding2D embedding_of(const Eigen::MatrixXd& points) {
    Embedding2D e;
    e.points = points;
    for (Eigen::Index i = 0; i < points.rows(); ++i) e.ids.push_back(i);
    return e;
}

// Distances of a planted configuration under multiplicative noise.
DistanceMatrix noisy_distances(const Eigen::MatrixXd& Z, double log_sigma, std::uint64_t seed) {
    auto m = exact_distances(Z);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, log_sigma);
    for (Eigen::Index i = 0; i < m.size(); ++i)
        for (Eigen::Index j = i + 1; j < m.size(); ++j) {
            double v = m.d(i, j) * std::exp(gauss(rng));
            m.d(i, j) = m.d(j, i) = v;
        }
    return m;
}

std::vector<FlavorTriplet> subsample(std::vector<FlavorTriplet> triplets, std::size_t count,
                                     std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = triplets.size() - 1; i > 0; --i)
        std::swap(triplets[i], triplets[rng() % (i + 1)]);
    if (triplets.size() > count) triplets.resize(count);
    return triplets;
}

double coordinate_spread(const Eigen::MatrixXd& Z) {
    Eigen::MatrixXd centered = Z.rowwise() - Z.colwise().mean();
    return std::sqrt(centered.array().square().mean());
}

// --- criteria -------------------------------------------------------------

std::string criterion_smacof() {
    // Monotone stress for several seeds and weight patterns.
    std::mt19937_64 outer(7);
    for (int trial = 0; trial < 10; ++trial) {
        int n = 8 + static_cast<int>(outer() % 8);
        auto X = planted_points(n, 3.0, outer());
        auto m = exact_distances(X);
        Eigen::MatrixXd weights = Eigen::MatrixXd::Ones(n, n);
        weights.diagonal().setZero();
        if (trial % 2 == 0) weights(0, 1) = weights(1, 0) = 0.0;
        auto run = smacof_single(m.d, weights, planted_points(n, 1.0, outer()), 300, 0.0);
        for (std::size_t k = 1; k < run.trace.size(); ++k)
            require(run.trace[k] <= run.trace[k - 1],
                    fmt("stress increased at iteration %zu of trial %d", k, trial));
    }

    // Planted 20-point recovery on exact distances.
    auto X = planted_points(20, 5.0, 101);
    auto m = exact_distances(X);
    auto result = nmds_smacof(m, {.n_init = 10, .max_iter = 500, .eps = 1e-8, .seed = 1});
    require(result.stress < 1e-3, fmt("final stress %.3g >= 1e-3", result.stress));

    std::vector<double> in, out;
    for (Eigen::Index i = 0; i < m.size(); ++i)
        for (Eigen::Index j = i + 1; j < m.size(); ++j) {
            in.push_back(m.d(i, j));
            out.push_back((result.embedding.points.row(i) - result.embedding.points.row(j)).norm());
        }
    double rho = spearman(in, out);
    require(rho > 0.99, fmt("spearman %.4f <= 0.99", rho));

    // Runtime at the flavor-subset size.
    auto X108 = planted_points(108, 4.0, 103);
    auto m108 = exact_distances(X108);
    auto start = std::chrono::steady_clock::now();
    auto big = nmds_smacof(m108, {.n_init = 10, .max_iter = 500, .eps = 1e-4, .seed = 2});
    double elapsed = seconds_since(start);
    require(elapsed < 2.0, fmt("N=108 run took %.2fs >= 2s", elapsed));
    return fmt("stress=%.2e spearman=%.4f n108=%.2fs (stress %.3g)", result.stress, rho,
               elapsed, big.stress);
}

std::string criterion_pca() {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        EmbeddingTable t;
        t.vectors.resize(30, 5);
        for (int i = 0; i < 30; ++i) {
            t.ids.push_back(i);
            for (int c = 0; c < 5; ++c) t.vectors(i, c) = gauss(rng);
        }
        auto e = pca_reduce(t);
        Eigen::MatrixXd oracle = power_iteration_projection(t.vectors);
        double err = (e.points - oracle).cwiseAbs().maxCoeff();
        worst = std::max(worst, err);
        require(err < 1e-8, fmt("trial %d: pca vs oracle error %.3g >= 1e-8", trial, err));
    }
    return fmt("50 tables, worst |pca - oracle| = %.2e", worst);
}

std::string criterion_tsne() {
    // Gradient versus central differences.
    std::mt19937_64 rng(31);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double worst_rel = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        EmbeddingTable t;
        t.vectors.resize(10, 4);
        for (int i = 0; i < 10; ++i) {
            t.ids.push_back(i);
            for (int c = 0; c < 4; ++c) t.vectors(i, c) = gauss(rng);
        }
        Eigen::MatrixXd P = perplexity_affinities(t, 3.0);
        Eigen::MatrixXd Y(10, 2);
        for (int i = 0; i < 10; ++i)
            for (int c = 0; c < 2; ++c) Y(i, c) = gauss(rng);
        Eigen::MatrixXd analytic = kl_gradient(P, Y);
        Eigen::MatrixXd numeric(10, 2);
        const double h = 1e-6;
        for (int i = 0; i < 10; ++i)
            for (int c = 0; c < 2; ++c) {
                Eigen::MatrixXd hi = Y, lo = Y;
                hi(i, c) += h;
                lo(i, c) -= h;
                numeric(i, c) = (kl_objective(P, hi) - kl_objective(P, lo)) / (2 * h);
            }
        double rel = (analytic - numeric).cwiseAbs().maxCoeff() /
                     std::max(1e-12, analytic.cwiseAbs().maxCoeff());
        worst_rel = std::max(worst_rel, rel);
        require(rel < 1e-4, fmt("state %d: gradient error %.3g >= 1e-4", trial, rel));
    }

    // Three separated 10D clusters, N = 150.
    std::mt19937_64 cluster_rng(41);
    EmbeddingTable t;
    std::vector<int> labels;
    t.vectors.resize(150, 10);
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < 50; ++i) {
            int row = c * 50 + i;
            t.ids.push_back(row);
            labels.push_back(c);
            for (int d = 0; d < 10; ++d)
                t.vectors(row, d) = gauss(cluster_rng) + (d == c ? 25.0 : 0.0);
        }
    auto start = std::chrono::steady_clock::now();
    auto result = tsne_reduce(t, {.perplexity = 30.0, .max_iters = 600,
                                  .exaggeration_iters = 150, .seed = 2});
    double elapsed = seconds_since(start);
    double purity = knn_purity(result.embedding.points, labels, 10);
    require(purity >= 0.95, fmt("cluster purity %.3f < 0.95", purity));
    require(elapsed < 30.0, fmt("t-SNE took %.1fs >= 30s", elapsed));
    return fmt("grad rel err <= %.2e, purity=%.3f, runtime=%.2fs", worst_rel, purity, elapsed);
}

std::string criterion_tste() {
    // Gradient check at 1e-5.
    std::mt19937_64 rng(51);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double worst_rel = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::MatrixXd X(8, 2);
        for (int i = 0; i < 8; ++i)
            for (int c = 0; c < 2; ++c) X(i, c) = gauss(rng);
        std::vector<IndexTriplet> triplets;
        while (triplets.size() < 20) {
            Eigen::Index a = rng() % 8, b = rng() % 8, c = rng() % 8;
            if (a == b || b == c || a == c) continue;
            triplets.push_back({a, b, c});
        }
        Eigen::MatrixXd analytic = tste_gradient(X, triplets, 1.0);
        Eigen::MatrixXd numeric(8, 2);
        const double h = 1e-6;
        for (int i = 0; i < 8; ++i)
            for (int c = 0; c < 2; ++c) {
                Eigen::MatrixXd hi = X, lo = X;
                hi(i, c) += h;
                lo(i, c) -= h;
                numeric(i, c) = (tste_log_likelihood(hi, triplets, 1.0) -
                                 tste_log_likelihood(lo, triplets, 1.0)) /
                                (2 * h);
            }
        double rel = (analytic - numeric).cwiseAbs().maxCoeff() /
                     std::max(1e-12, analytic.cwiseAbs().maxCoeff());
        worst_rel = std::max(worst_rel, rel);
        require(rel < 1e-5, fmt("state %d: gradient error %.3g >= 1e-5", trial, rel));
    }

    // Planted 50-point configuration, 2000 triplets, held-in satisfaction.
    auto Z = planted_points(50, 3.0, 53);
    auto triplets = subsample(triplets_from_matrix(exact_distances(Z)), 2000, 54);
    auto e = tste_embed(triplets, {.alpha = 1.0, .learning_rate = 20.0, .max_iters = 2000,
                                   .seed = 4});
    double satisfied = triplet_satisfaction(e, triplets);
    require(satisfied >= 0.90, fmt("held-in satisfaction %.3f < 0.90", satisfied));
    return fmt("grad rel err <= %.2e, satisfaction=%.3f", worst_rel, satisfied);
}

std::string criterion_cca() {
    // Invertible affine transform of one side.
    auto machine = embedding_of(planted_points(60, 3.0, 61));
    Eigen::Matrix2d R;
    const double theta = 37.0 * M_PI / 180.0;
    R << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    Eigen::MatrixXd warped = (machine.points * R.transpose()) * 2.5;
    warped.rowwise() += Eigen::RowVector2d(3.0, -4.0);
    auto res = cca_align(machine, embedding_of(warped));
    require(std::abs(res.correlations[0] - 1.0) < 1e-6 &&
                std::abs(res.correlations[1] - 1.0) < 1e-6,
            fmt("affine case correlations (%.8f, %.8f) not (1,1)", res.correlations[0],
                res.correlations[1]));

    // Monte-Carlo null at N = 200 over 20 frozen seeds. 0.25 sits at about
    // the 99th percentile of this null (measured exceedance 1%), so the
    // frozen draws represent typical behaviour.
    double worst_null = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        auto a = embedding_of(planted_points(200, 1.0, 1040 + 2 * s));
        auto b = embedding_of(planted_points(200, 1.0, 1041 + 2 * s));
        auto null_res = cca_align(a, b);
        worst_null = std::max(worst_null, null_res.correlations[0]);
        require(null_res.correlations[0] < 0.25,
                fmt("seed %llu: null correlation %.3f >= 0.25",
                    static_cast<unsigned long long>(s), null_res.correlations[0]));
    }
    return fmt("affine corr within 1e-6 of 1; null max corr = %.3f over 20 seeds", worst_null);
}

std::string criterion_procrustes_icp() {
    // Procrustes under planted similarity transforms, with reflections.
    std::mt19937_64 rng(71);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        auto ref = embedding_of(planted_points(25, 2.0, rng()));
        double theta = 0.1 + 0.5 * static_cast<double>(trial);
        Eigen::Matrix2d R;
        R << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
        Eigen::MatrixXd moved = (ref.points * R.transpose()) * (0.5 + 0.3 * trial);
        if (trial % 2 == 1) moved.col(0) = -moved.col(0);  // reflection
        moved.rowwise() += Eigen::RowVector2d(1.0 + trial, -2.0);
        auto res = procrustes_align(ref, embedding_of(moved));
        worst = std::max(worst, res.disparity);
        require(res.disparity < 1e-10,
                fmt("trial %d: disparity %.3g >= 1e-10", trial, res.disparity));
    }

    // ICP recovers a planted rigid transform; MSE monotone non-increasing.
    auto ref = embedding_of(planted_points(20, 3.0, 30));
    Eigen::Matrix2d R;
    const double theta = 25.0 * M_PI / 180.0;
    R << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    Eigen::MatrixXd moved = ref.points * R.transpose();
    moved.rowwise() += Eigen::RowVector2d(1.5, -0.7);
    auto icp = icp_align(ref, embedding_of(moved), 100, 1e-14);
    double recovery = (icp.aligned.points - ref.points).cwiseAbs().maxCoeff();
    require(recovery < 1e-6, fmt("icp recovery error %.3g >= 1e-6", recovery));
    for (std::size_t k = 1; k < icp.mse_trace.size(); ++k)
        require(icp.mse_trace[k] <= icp.mse_trace[k - 1], fmt("icp mse rose at step %zu", k));
    return fmt("procrustes worst disparity=%.2e, icp recovery=%.2e", worst, recovery);
}

std::string criterion_tar() {
    auto Z = planted_points(40, 3.0, 61);
    auto triplets = subsample(triplets_from_matrix(exact_distances(Z)), 1000, 62);

    auto generating = tar_score(embedding_of(Z), triplets);
    require(generating.tar == 1.0, fmt("generating configuration tar %.4f != 1", generating.tar));

    auto random_e = embedding_of(planted_points(40, 1.0, 63));
    auto random_tar = tar_score(random_e, triplets);
    require(random_tar.tar >= 0.45 && random_tar.tar <= 0.55,
            fmt("random tar %.4f outside 0.5 +- 0.05", random_tar.tar));
    return fmt("generating=%.2f random=%.3f over %lld triplets", generating.tar, random_tar.tar,
               static_cast<long long>(random_tar.evaluated));
}

std::string criterion_combined_beats_machine() {
    double total_gain = 0.0;
    double min_gain = 1.0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        auto Z = planted_points(40, 3.0, 800 + s);
        auto triplets = subsample(triplets_from_matrix(exact_distances(Z)), 4000, 900 + s);
        auto split = split_triplets_by_wine(triplets, 0.3, s);

        double spread = coordinate_spread(Z);
        std::mt19937_64 rng(700 + s);
        std::normal_distribution<double> gauss(0.0, 0.5 * spread);
        Eigen::MatrixXd noisy = Z;
        for (Eigen::Index i = 0; i < noisy.rows(); ++i)
            for (int c = 0; c < 2; ++c) noisy(i, c) += gauss(rng);
        auto machine = embedding_of(noisy);

        auto human_matrix = noisy_distances(Z, 0.15, 750 + s);
        auto human = nmds_smacof(human_matrix,
                                 {.n_init = 6, .max_iter = 300, .eps = 1e-6, .seed = s});

        auto combined = cca_align(machine, human.embedding).combined;
        double tar_combined = tar_score(combined, split.test).tar;
        double tar_machine = tar_score(machine, split.test).tar;
        total_gain += tar_combined - tar_machine;
        min_gain = std::min(min_gain, tar_combined - tar_machine);
    }
    double mean_gain = total_gain / 10.0;
    require(mean_gain >= 0.03,
            fmt("mean TAR(combined) - TAR(machine) = %.4f < 0.03", mean_gain));
    return fmt("mean TAR gain over 10 seeds = %+.3f (min %+.3f)", mean_gain, min_gain);
}

std::string criterion_nmds_beats_tste() {
    int wins = 0;
    double mean_nmds = 0.0, mean_tste = 0.0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        auto Z = planted_points(40, 3.0, 400 + s);
        auto records = synthetic_records(Z);
        auto m = noisy_distances(Z, 0.15, 450 + s);

        auto nmds = nmds_smacof(m, {.n_init = 6, .max_iter = 300, .eps = 1e-6, .seed = s});
        auto triplets = subsample(triplets_from_matrix(m), 2500, 460 + s);
        auto tste = tste_embed(triplets, {.alpha = 1.0, .learning_rate = 20.0,
                                          .max_iters = 1500, .seed = s});

        ReportOptions opts;
        opts.seed = 470 + s;
        double acc_nmds = attribute_report(nmds.embedding, records, opts).mean_accuracy;
        double acc_tste = attribute_report(tste, records, opts).mean_accuracy;
        mean_nmds += acc_nmds;
        mean_tste += acc_tste;
        if (acc_nmds >= acc_tste) ++wins;
    }
    require(wins >= 7, fmt("NMDS won only %d of 10 seeds", wins));
    return fmt("NMDS >= t-STE in %d/10 seeds (mean acc %.3f vs %.3f)", wins, mean_nmds / 10.0,
               mean_tste / 10.0);
}

std::string criterion_digitizer() {
    DigitizerParams params;
    auto palette = test_palette();
    std::map<std::string, WineId> legend = {
        {"red", 1}, {"green", 2}, {"blue", 3}, {"yellow", 4}, {"magenta", 5}};

    std::mt19937_64 rng(81);
    std::uniform_real_distribution<double> coord(0.12, 0.88);
    double worst_centroid = 0.0;
    double total_time = 0.0;

    std::vector<StickerAnnotation> all_annotations;
    std::map<std::pair<WineId, WineId>, std::vector<double>> truth_samples;

    for (int sheet = 0; sheet < 20; ++sheet) {
        SheetScene scene;
        double theta = 6.0 + 24.0 * sheet / 19.0;
        scene.quad = oblique_quad(sheet % 2 == 0 ? theta : -theta, scene.photo_w, scene.photo_h);
        scene.noise_sigma = 2.0;
        scene.seed = 500 + static_cast<std::uint64_t>(sheet);
        scene.disks = standard_disks();
        // Scatter the disks afresh per sheet, keeping them apart.
        for (auto& d : scene.disks) {
            for (int attempt = 0; attempt < 200; ++attempt) {
                double u = coord(rng), v = coord(rng);
                bool clear = true;
                for (const auto& other : scene.disks) {
                    if (&other == &d) break;
                    double du = (u - other.u) * (params.canonical_width - 1);
                    double dv = (v - other.v) * (params.canonical_height - 1);
                    if (std::hypot(du, dv) < 6.0 * d.radius_px) clear = false;
                }
                if (clear) {
                    d.u = u;
                    d.v = v;
                    break;
                }
            }
        }

        auto photo = render_scene(scene, params.canonical_width, params.canonical_height);
        auto start = std::chrono::steady_clock::now();
        auto result = digitize_sheet(photo, palette, legend,
                                     {"event", "r1", sheet}, params);
        total_time += seconds_since(start);

        require(result.annotations.size() == 5,
                fmt("sheet %d: found %zu of 5 stickers", sheet, result.annotations.size()));
        std::map<WineId, Eigen::Vector2d> truth;
        for (const auto& d : scene.disks)
            truth[legend.at(d.color_name)] =
                ground_truth_rectified(d, params.canonical_width, params.canonical_height);
        for (const auto& a : result.annotations) {
            double err = (Eigen::Vector2d(a.coor1, a.coor2) - truth.at(a.wine)).norm();
            worst_centroid = std::max(worst_centroid, err);
            require(err <= 2.0, fmt("sheet %d wine %lld: centroid error %.2f px > 2", sheet,
                                    static_cast<long long>(a.wine), err));
        }
        all_annotations.insert(all_annotations.end(), result.annotations.begin(),
                               result.annotations.end());
        for (auto ia = truth.begin(); ia != truth.end(); ++ia)
            for (auto ib = std::next(ia); ib != truth.end(); ++ib)
                truth_samples[{ia->first, ib->first}].push_back(
                    (ia->second - ib->second).norm());
    }

    double per_sheet = total_time / 20.0;
    require(per_sheet < 1.0, fmt("digitization took %.2fs per sheet >= 1s", per_sheet));

    auto built = build_distance_matrix(all_annotations);
    double worst_rel = 0.0;
    for (const auto& [pair, samples] : truth_samples) {
        double mean_truth = 0.0;
        for (double v : samples) mean_truth += v;
        mean_truth /= static_cast<double>(samples.size());
        auto i = built.matrix.index_of(pair.first);
        auto j = built.matrix.index_of(pair.second);
        require(i.has_value() && j.has_value(), "pair missing from assembled matrix");
        double rel = std::abs(built.matrix.d(*i, *j) / mean_truth - 1.0);
        worst_rel = std::max(worst_rel, rel);
        require(rel <= 0.01, fmt("pair (%lld,%lld): matrix error %.3f%% > 1%%",
                                 static_cast<long long>(pair.first),
                                 static_cast<long long>(pair.second), 100.0 * rel));
    }
    return fmt("worst centroid=%.2fpx, worst matrix err=%.3f%%, %.3fs/sheet", worst_centroid,
               100.0 * worst_rel, per_sheet);
}

std::string criterion_classification_harness() {
    // Permutation null converges to 1/C.
    auto e = embedding_of(planted_points(60, 2.0, 91));
    std::mt19937_64 rng(92);
    std::vector<double> accuracies;
    for (int trial = 0; trial < 50; ++trial) {
        LabelSet labels;
        labels.class_names = {"a", "b", "c", "d"};
        std::vector<int> raw(60);
        for (int i = 0; i < 60; ++i) raw[static_cast<std::size_t>(i)] = i % 4;
        for (std::size_t i = raw.size() - 1; i > 0; --i)
            std::swap(raw[i], raw[rng() % (i + 1)]);
        for (int i = 0; i < 60; ++i) {
            labels.ids.push_back(i);
            labels.labels.push_back(raw[static_cast<std::size_t>(i)]);
        }
        accuracies.push_back(
            knn_cv(e, labels, 5, 5, 100 + static_cast<std::uint64_t>(trial)).mean_accuracy);
    }
    double mean = 0.0;
    for (double a : accuracies) mean += a;
    mean /= 50.0;
    double var = 0.0;
    for (double a : accuracies) var += (a - mean) * (a - mean);
    double se = std::sqrt(var / 49.0) / std::sqrt(50.0);
    require(std::abs(mean - 0.25) <= 3.0 * se,
            fmt("null accuracy %.4f is %.1f SEs from 0.25", mean,
                std::abs(mean - 0.25) / se));

    // Perfectly separable clusters.
    std::normal_distribution<double> gauss(0.0, 0.3);
    Eigen::MatrixXd sep(60, 2);
    LabelSet sep_labels;
    sep_labels.class_names = {"near", "far"};
    for (int i = 0; i < 60; ++i) {
        int c = i < 30 ? 0 : 1;
        sep(i, 0) = gauss(rng) + 12.0 * c;
        sep(i, 1) = gauss(rng);
        sep_labels.ids.push_back(i);
        sep_labels.labels.push_back(c);
    }
    double sep_acc = knn_cv(embedding_of(sep), sep_labels, 5, 5, 7).mean_accuracy;
    require(sep_acc == 1.0, fmt("separable clusters scored %.3f != 1.0", sep_acc));

    // Random baselines are exactly 1/C at the documented class counts.
    auto baseline_of = [](int c) {
        LabelSet l;
        for (int i = 0; i < c; ++i) {
            l.ids.push_back(i);
            l.labels.push_back(i);
            l.class_names.push_back(std::to_string(i));
        }
        return random_baseline(l);
    };
    require(baseline_of(6) == 1.0 / 6.0 && std::abs(baseline_of(6) - 0.17) < 0.005,
            "6-class baseline mismatch");
    require(baseline_of(4) == 0.25, "4-class baseline mismatch");
    require(baseline_of(10) == 0.10, "10-class baseline mismatch");
    return fmt("null=%.4f (|dev|=%.1f SE), separable=1.0, baselines 0.17/0.25/0.10 ok", mean,
               std::abs(mean - 0.25) / se);
}

std::string criterion_real_dataset() {
    const char* dataset_dir = std::getenv("FEAST_DATASET_DIR");
    require(dataset_dir != nullptr, "unset");
    std::filesystem::path dir(dataset_dir);

    auto annotations = parse_napping(dir / "napping.csv");
    std::set<WineId> wines;
    for (const auto& a : annotations) wines.insert(a.wine);
    require(wines.size() == 108,
            fmt("expected 108 unique experiment ids, found %zu", wines.size()));

    std::map<std::tuple<std::string, std::string, std::int64_t>, int> sheet_sizes;
    for (const auto& a : annotations)
        ++sheet_sizes[{a.event_name, a.session_round_name, a.experiment_no}];
    long long pair_annotations = 0;
    for (const auto& [key, count] : sheet_sizes)
        pair_annotations += static_cast<long long>(count) * (count - 1) / 2;
    require(pair_annotations > 5000,
            fmt("only %lld pairwise distances (need > 5000)", pair_annotations));

    if (!std::filesystem::exists(dir / "embeddings.csv"))
        throw CheckFailure("napping checks passed but embeddings.csv is absent; cannot run the "
                           "full pipeline tier");

    TempDir out;
    std::string config = std::string("{\n") +
        "  \"inputs\": {\n" +
        "    \"napping_csv\": \"" + (dir / "napping.csv").string() + "\",\n" +
        (std::filesystem::exists(dir / "images_reviews_attributes.csv")
             ? "    \"attributes_csv\": \"" + (dir / "images_reviews_attributes.csv").string() +
                   "\",\n"
             : "") +
        "    \"embeddings\": [\"" + (dir / "embeddings.csv").string() + "\"]\n" +
        "  },\n" +
        "  \"human_kernel\": {\"method\": \"nmds\"},\n" +
        "  \"machine_kernel\": {\"method\": \"tsne\", \"tsne\": {\"perplexity\": 30}},\n" +
        "  \"combiner\": {\"method\": \"cca\"},\n" +
        "  \"evaluation\": {\"tar_test_fraction\": 0.3},\n" +
        "  \"seed\": 0,\n" +
        "  \"output_dir\": \"" + (out.path() / "run").string() + "\"\n" +
        "}\n";
    auto parsed = parse_pipeline_config(config, dir);
    std::string report = run_pipeline(parsed);
    auto find_number = [&](const std::string& key) {
        auto pos = report.find("\"" + key + "\":");
        require(pos != std::string::npos, "report lacks " + key);
        return std::stod(report.substr(pos + key.size() + 3));
    };
    double tar = find_number("tar");
    double tar_machine = find_number("tar_machine_only");
    require(tar > tar_machine, fmt("TAR(combined)=%.3f <= TAR(machine)=%.3f", tar, tar_machine));
    return fmt("108 wines, %lld pair annotations, TAR %.3f > machine-only %.3f",
               pair_annotations, tar, tar_machine);
}

}  // namespace

int main() {
    criterion(1, criterion_smacof);
    criterion(2, criterion_pca);
    criterion(3, criterion_tsne);
    criterion(4, criterion_tste);
    criterion(5, criterion_cca);
    criterion(6, criterion_procrustes_icp);
    criterion(7, criterion_tar);
    criterion(8, criterion_combined_beats_machine);
    criterion(9, criterion_nmds_beats_tste);
    criterion(10, criterion_digitizer);
    criterion(11, criterion_classification_harness);
    if (std::getenv("FEAST_DATASET_DIR")) criterion(12, criterion_real_dataset);
    else skip(12, "optional real-data tier: set FEAST_DATASET_DIR to run");

    int failed = 0;
    for (const auto& v : verdicts) {
        const char* status = v.skipped ? "SKIP" : (v.pass ? "PASS" : "FAIL");
        std::printf("criterion %02d: %s  %s\n", v.id, status, v.detail.c_str());
        if (!v.pass && !v.skipped) ++failed;
    }
    std::printf("acceptance: %d passed, %d failed, %d skipped\n",
                static_cast<int>(verdicts.size()) - failed -
                    static_cast<int>(std::count_if(verdicts.begin(), verdicts.end(),
                                                   [](const Verdict& v) { return v.skipped; })),
                failed,
                static_cast<int>(std::count_if(verdicts.begin(), verdicts.end(),
                                               [](const Verdict& v) { return v.skipped; })));
    return failed == 0 ? 0 : 1;
}
