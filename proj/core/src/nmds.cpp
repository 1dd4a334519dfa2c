#include "feast/nmds.hpp"

#include "feast/data_model.hpp"
#include "feast/isotonic.hpp"
#include "feast/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace feast {

namespace {

struct PairList {
    std::vector<Eigen::Index> i, j;  // observed pairs, i < j
    std::vector<double> delta;
    std::vector<double> w;
};

PairList observed_pairs(const Eigen::MatrixXd& delta, const Eigen::MatrixXd& weights) {
    PairList p;
    for (Eigen::Index a = 0; a < delta.rows(); ++a)
        for (Eigen::Index b = a + 1; b < delta.cols(); ++b)
            if (weights(a, b) > 0.0) {
                p.i.push_back(a);
                p.j.push_back(b);
                p.delta.push_back(delta(a, b));
                p.w.push_back(weights(a, b));
            }
    return p;
}

Eigen::VectorXd pair_distances(const Eigen::MatrixXd& X, const PairList& p) {
    Eigen::VectorXd d(static_cast<Eigen::Index>(p.i.size()));
    for (std::size_t k = 0; k < p.i.size(); ++k)
        d[static_cast<Eigen::Index>(k)] = (X.row(p.i[k]) - X.row(p.j[k])).norm();
    return d;
}

struct Evaluation {
    Eigen::VectorXd distances;
    Eigen::VectorXd disparities;
    double stress = 0.0;
};

// Monotone-regress the configuration distances against the input
// dissimilarity order (primary tie handling: within a tie block, distances
// are pre-sorted so PAVA leaves them free), then rescale so the disparities
// carry the same weighted norm as the distances.
Evaluation evaluate_configuration(const Eigen::MatrixXd& X, const PairList& p) {
    Evaluation ev;
    ev.distances = pair_distances(X, p);
    const auto m = ev.distances.size();

    std::vector<std::size_t> order(p.i.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (p.delta[a] != p.delta[b]) return p.delta[a] < p.delta[b];
        double da = ev.distances[static_cast<Eigen::Index>(a)];
        double db = ev.distances[static_cast<Eigen::Index>(b)];
        if (da != db) return da < db;
        return a < b;
    });

    std::vector<double> sorted(p.i.size());
    for (std::size_t k = 0; k < order.size(); ++k)
        sorted[k] = ev.distances[static_cast<Eigen::Index>(order[k])];
    std::vector<double> fitted = pava_isotonic(sorted);

    ev.disparities.resize(m);
    for (std::size_t k = 0; k < order.size(); ++k)
        ev.disparities[static_cast<Eigen::Index>(order[k])] = fitted[k];

    double dist_norm = 0.0, disp_norm = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) {
        dist_norm += p.w[static_cast<std::size_t>(k)] * ev.distances[k] * ev.distances[k];
        disp_norm += p.w[static_cast<std::size_t>(k)] * ev.disparities[k] * ev.disparities[k];
    }
    if (dist_norm <= 0.0 || disp_norm <= 0.0)
        throw NumericError("configuration collapsed to coincident points");
    ev.disparities *= std::sqrt(dist_norm / disp_norm);

    double residual = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) {
        double r = ev.disparities[k] - ev.distances[k];
        residual += p.w[static_cast<std::size_t>(k)] * r * r;
    }
    ev.stress = std::sqrt(residual / dist_norm);
    if (!std::isfinite(ev.stress)) throw NumericError("non-finite stress");
    return ev;
}

Eigen::MatrixXd guttman_update(const Eigen::MatrixXd& X, const PairList& p,
                               const Evaluation& ev, bool uniform,
                               const Eigen::MatrixXd& v_pinv) {
    const auto n = X.rows();
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t k = 0; k < p.i.size(); ++k) {
        double dist = ev.distances[static_cast<Eigen::Index>(k)];
        if (dist <= 0.0) continue;  // coincident pair exerts no pull
        double val = p.w[k] * ev.disparities[static_cast<Eigen::Index>(k)] / dist;
        B(p.i[k], p.j[k]) -= val;
        B(p.j[k], p.i[k]) -= val;
        B(p.i[k], p.i[k]) += val;
        B(p.j[k], p.j[k]) += val;
    }
    if (uniform) return (B * X) / static_cast<double>(n);
    return v_pinv * (B * X);
}

}  // namespace

SmacofRun smacof_single(const Eigen::MatrixXd& dissimilarities,
                        const Eigen::MatrixXd& weights, Eigen::MatrixXd init,
                        int max_iter, double eps) {
    const auto n = dissimilarities.rows();
    PairList pairs = observed_pairs(dissimilarities, weights);
    if (pairs.i.empty()) throw InputError("all dissimilarities are missing");

    const bool uniform =
        std::all_of(pairs.w.begin(), pairs.w.end(), [](double w) { return w == 1.0; }) &&
        static_cast<Eigen::Index>(pairs.i.size()) == n * (n - 1) / 2;

    Eigen::MatrixXd v_pinv;
    if (!uniform) {
        Eigen::MatrixXd V = Eigen::MatrixXd::Zero(n, n);
        for (std::size_t k = 0; k < pairs.i.size(); ++k) {
            V(pairs.i[k], pairs.j[k]) -= pairs.w[k];
            V(pairs.j[k], pairs.i[k]) -= pairs.w[k];
            V(pairs.i[k], pairs.i[k]) += pairs.w[k];
            V(pairs.j[k], pairs.j[k]) += pairs.w[k];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(V);
        const double tol = 1e-10 * eig.eigenvalues().cwiseAbs().maxCoeff();
        Eigen::VectorXd inv = eig.eigenvalues();
        for (Eigen::Index k = 0; k < inv.size(); ++k)
            inv[k] = (inv[k] > tol) ? 1.0 / inv[k] : 0.0;
        v_pinv = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
    }

    SmacofRun run;
    Eigen::MatrixXd X = std::move(init);
    Evaluation current = evaluate_configuration(X, pairs);
    run.trace.push_back(current.stress);

    for (int it = 0; it < max_iter; ++it) {
        Eigen::MatrixXd candidate = guttman_update(X, pairs, current, uniform, v_pinv);
        if (!candidate.allFinite()) throw NumericError("non-finite configuration update");
        Evaluation next = evaluate_configuration(candidate, pairs);
        if (next.stress > current.stress) break;  // keep the better iterate
        double improvement = current.stress - next.stress;
        X = std::move(candidate);
        current = std::move(next);
        run.trace.push_back(current.stress);
        ++run.iterations;
        if (improvement < eps) break;
    }

    run.points = std::move(X);
    run.stress = current.stress;
    return run;
}

NmdsResult nmds_smacof(const DistanceMatrix& m, const NmdsParams& params) {
    validate_distance_matrix(m);
    if (params.n_init < 1 || params.max_iter < 1 || params.eps < 0.0)
        throw ConfigError("nmds: n_init and max_iter must be >= 1, eps >= 0");
    const auto n = m.size();
    if (n < 3) throw InputError("nmds needs at least 3 wines");

    Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(n, n);
    Eigen::Index observed = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            if (m.d(i, j) > 0.0) {
                weights(i, j) = weights(j, i) = 1.0;
                ++observed;
            }
    if (observed == 0) throw InputError("all dissimilarities are missing");
    if (observed < 3) throw InputError("nmds needs at least 3 observed dissimilarities");

    std::vector<SmacofRun> runs(static_cast<std::size_t>(params.n_init));
    detail::parallel_for(params.n_init, [&](int r) {
        std::mt19937_64 rng(params.seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(r) + 1));
        std::normal_distribution<double> gauss(0.0, 1.0);
        Eigen::MatrixXd init(n, 2);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index c = 0; c < 2; ++c) init(i, c) = gauss(rng);
        try {
            runs[static_cast<std::size_t>(r)] =
                smacof_single(m.d, weights, std::move(init), params.max_iter, params.eps);
        } catch (const NumericError& e) {
            throw NumericError("nmds restart " + std::to_string(r) + ": " + e.what());
        }
    });

    int best = 0;
    for (int r = 1; r < params.n_init; ++r)
        if (runs[static_cast<std::size_t>(r)].stress < runs[static_cast<std::size_t>(best)].stress)
            best = r;

    NmdsResult result;
    result.embedding.ids = m.ids;
    result.embedding.points = std::move(runs[static_cast<std::size_t>(best)].points);
    result.stress = runs[static_cast<std::size_t>(best)].stress;
    result.iterations_used = runs[static_cast<std::size_t>(best)].iterations;
    result.restart_index = best;
    result.stress_trace = std::move(runs[static_cast<std::size_t>(best)].trace);
    return result;
}

}  // namespace feast
