#include "feast/tste.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

namespace feast {

namespace {

inline double kernel_base(const Eigen::MatrixXd& X, Eigen::Index a, Eigen::Index b,
                          double alpha) {
    return 1.0 + (X.row(a) - X.row(b)).squaredNorm() / alpha;
}

}  // namespace

double tste_log_likelihood(const Eigen::MatrixXd& points,
                           std::span<const IndexTriplet> triplets, double alpha) {
    const double exponent = -(alpha + 1.0) / 2.0;
    double total = 0.0;
    for (const auto& t : triplets) {
        double t_ij = std::pow(kernel_base(points, t[0], t[1], alpha), exponent);
        double t_ik = std::pow(kernel_base(points, t[0], t[2], alpha), exponent);
        total += std::log(std::max(t_ij / (t_ij + t_ik), 1e-300));
    }
    return total / static_cast<double>(triplets.size());
}

Eigen::MatrixXd tste_gradient(const Eigen::MatrixXd& points,
                              std::span<const IndexTriplet> triplets, double alpha) {
    const double exponent = -(alpha + 1.0) / 2.0;
    const double c = (alpha + 1.0) / alpha;
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(points.rows(), points.cols());
    for (const auto& t : triplets) {
        const Eigen::Index i = t[0], j = t[1], k = t[2];
        double u_ij = kernel_base(points, i, j, alpha);
        double u_ik = kernel_base(points, i, k, alpha);
        double t_ij = std::pow(u_ij, exponent);
        double t_ik = std::pow(u_ik, exponent);
        double w = t_ik / (t_ij + t_ik);  // 1 - p_ijk

        Eigen::RowVector2d dij = (points.row(i) - points.row(j)) / u_ij;
        Eigen::RowVector2d dik = (points.row(i) - points.row(k)) / u_ik;
        grad.row(i) += c * w * (dik - dij);
        grad.row(j) += c * w * dij;
        grad.row(k) -= c * w * dik;
    }
    return grad / static_cast<double>(triplets.size());
}

Embedding2D tste_embed(std::span<const FlavorTriplet> triplets, const TsteParams& params) {
    if (triplets.empty()) throw InputError("tste: empty triplet list");
    if (params.alpha <= 0.0 || params.learning_rate <= 0.0 || params.max_iters < 1)
        throw ConfigError("tste: alpha and learning_rate must be positive, max_iters >= 1");

    std::set<WineId> universe;
    for (const auto& t : triplets) {
        universe.insert(t.anchor);
        universe.insert(t.near);
        universe.insert(t.far);
    }
    std::map<WineId, Eigen::Index> index;
    Eigen::Index n = 0;
    for (WineId id : universe) index[id] = n++;

    std::vector<IndexTriplet> idx;
    idx.reserve(triplets.size());
    for (const auto& t : triplets)
        idx.push_back({index[t.anchor], index[t.near], index[t.far]});

    std::mt19937_64 rng(params.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd X(n, 2);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index c = 0; c < 2; ++c) X(i, c) = 0.1 * gauss(rng);

    double objective = tste_log_likelihood(X, idx, params.alpha);
    double step = params.learning_rate;
    for (int it = 0; it < params.max_iters; ++it) {
        Eigen::MatrixXd candidate = X + step * tste_gradient(X, idx, params.alpha);
        double cand_objective = tste_log_likelihood(candidate, idx, params.alpha);
        if (!std::isfinite(cand_objective)) throw NumericError("tste: non-finite objective");
        if (cand_objective >= objective) {
            X = std::move(candidate);
            objective = cand_objective;
        } else {
            step *= 0.5;
            if (step < 1e-12) break;
        }
    }

    Embedding2D out;
    out.ids.assign(universe.begin(), universe.end());
    out.points = std::move(X);
    return out;
}

}  // namespace feast
