#include "feast/tsne.hpp"

#include "feast/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace feast {

namespace {

Eigen::MatrixXd pairwise_squared_distances(const Eigen::MatrixXd& X) {
    Eigen::VectorXd sq = X.rowwise().squaredNorm();
    Eigen::MatrixXd D = sq.replicate(1, X.rows()) + sq.transpose().replicate(X.rows(), 1) -
                        2.0 * X * X.transpose();
    return D.cwiseMax(0.0);
}

// Student-t weights w_ij = 1/(1+||yi-yj||^2) with zero diagonal.
Eigen::MatrixXd student_weights(const Eigen::MatrixXd& Y) {
    Eigen::MatrixXd W = (1.0 + pairwise_squared_distances(Y).array()).inverse().matrix();
    W.diagonal().setZero();
    return W;
}

void validate_params(const TsneParams& p, Eigen::Index n) {
    if (!(p.perplexity > 1.0)) throw ConfigError("tsne: perplexity must exceed 1");
    if (!(p.perplexity < static_cast<double>(n)))
        throw ConfigError("tsne: perplexity must be below the number of points");
    if (p.learning_rate <= 0.0) throw ConfigError("tsne: learning_rate must be positive");
    if (p.exaggeration < 1.0) throw ConfigError("tsne: exaggeration must be >= 1");
    if (p.exaggeration_iters >= p.max_iters)
        throw ConfigError("tsne: exaggeration_iters must be below max_iters");
}

}  // namespace

Eigen::MatrixXd perplexity_conditionals(const Eigen::MatrixXd& squared_distances,
                                        double perplexity) {
    const Eigen::Index n = squared_distances.rows();
    if (!(perplexity > 1.0 && perplexity < static_cast<double>(n)))
        throw ConfigError("perplexity must lie in (1, N)");

    const double target = std::log2(perplexity);
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);

    for (Eigen::Index i = 0; i < n; ++i) {
        double beta = 1.0;
        double beta_min = -std::numeric_limits<double>::infinity();
        double beta_max = std::numeric_limits<double>::infinity();

        double shift = std::numeric_limits<double>::max();
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i) shift = std::min(shift, squared_distances(i, j));

        Eigen::VectorXd row(n);
        for (int step = 0; step < 50; ++step) {
            double sum = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                row[j] = (j == i) ? 0.0 : std::exp(-beta * (squared_distances(i, j) - shift));
                sum += row[j];
            }
            row /= sum;
            double entropy = 0.0;  // bits
            for (Eigen::Index j = 0; j < n; ++j)
                if (row[j] > 0.0) entropy -= row[j] * std::log2(row[j]);

            double diff = entropy - target;
            if (std::abs(diff) < 1e-4) break;
            if (diff > 0.0) {  // too spread out: narrow the kernel
                beta_min = beta;
                beta = std::isinf(beta_max) ? beta * 2.0 : 0.5 * (beta + beta_max);
            } else {
                beta_max = beta;
                beta = std::isinf(beta_min) ? beta * 0.5 : 0.5 * (beta + beta_min);
            }
        }
        P.row(i) = row.transpose();
    }
    return P;
}

Eigen::MatrixXd perplexity_affinities(const Eigen::MatrixXd& squared_distances,
                                      double perplexity) {
    Eigen::MatrixXd cond = perplexity_conditionals(squared_distances, perplexity);
    Eigen::MatrixXd P =
        (cond + cond.transpose()) / (2.0 * static_cast<double>(cond.rows()));
    P.diagonal().setZero();
    return P;
}

Eigen::MatrixXd perplexity_affinities(const EmbeddingTable& t, double perplexity) {
    return perplexity_affinities(pairwise_squared_distances(t.vectors), perplexity);
}

double kl_objective(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Y) {
    Eigen::MatrixXd W = student_weights(Y);
    const double Z = W.sum();
    double kl = 0.0;
    for (Eigen::Index i = 0; i < P.rows(); ++i)
        for (Eigen::Index j = 0; j < P.cols(); ++j)
            if (P(i, j) > 0.0) {
                double q = std::max(W(i, j) / Z, 1e-12);
                kl += P(i, j) * std::log(P(i, j) / q);
            }
    return kl;
}

Eigen::MatrixXd kl_gradient(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Y) {
    Eigen::MatrixXd W = student_weights(Y);
    const double Z = W.sum();
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(Y.rows(), Y.cols());
    for (Eigen::Index i = 0; i < Y.rows(); ++i)
        for (Eigen::Index j = 0; j < Y.rows(); ++j) {
            if (j == i) continue;
            double mult = 4.0 * (P(i, j) - W(i, j) / Z) * W(i, j);
            grad.row(i) += mult * (Y.row(i) - Y.row(j));
        }
    return grad;
}

namespace {

TsneResult tsne_optimize(Eigen::MatrixXd P, std::vector<WineId> ids, const TsneParams& p,
                         bool jitter_applied) {
    const Eigen::Index n = P.rows();
    std::mt19937_64 rng(p.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd Y(n, 2);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index c = 0; c < 2; ++c) Y(i, c) = 1e-4 * gauss(rng);

    Eigen::MatrixXd velocity = Eigen::MatrixXd::Zero(n, 2);
    TsneResult result;
    result.jitter_applied = jitter_applied;
    result.kl_trace.reserve(static_cast<std::size_t>(p.max_iters));

    for (int it = 0; it < p.max_iters; ++it) {
        const bool early = it < p.exaggeration_iters;
        Eigen::MatrixXd Peff = early ? (p.exaggeration * P).eval() : P;
        Eigen::MatrixXd grad = kl_gradient(Peff, Y);
        if (!grad.allFinite())
            throw NumericError("tsne: non-finite gradient at iteration " + std::to_string(it));

        const double momentum = early ? p.momentum_early : p.momentum_late;
        velocity = momentum * velocity - p.learning_rate * grad;
        Y += velocity;
        Y.rowwise() -= Y.colwise().mean();  // keep the configuration centered

        result.kl_trace.push_back(kl_objective(P, Y));
        if (it + 1 == p.exaggeration_iters)
            result.kl_after_exaggeration = result.kl_trace.back();
    }
    if (p.exaggeration_iters <= 0 && !result.kl_trace.empty())
        result.kl_after_exaggeration = result.kl_trace.front();

    result.kl_final = result.kl_trace.empty() ? 0.0 : result.kl_trace.back();
    result.iterations = p.max_iters;
    result.embedding.ids = std::move(ids);
    result.embedding.points = std::move(Y);
    return result;
}

}  // namespace

TsneResult tsne_reduce(const EmbeddingTable& t, const TsneParams& params) {
    if (t.size() < 5) throw InputError("tsne needs at least 5 points");
    validate_params(params, t.size());

    Eigen::MatrixXd vectors = t.vectors;
    Eigen::MatrixXd sqd = pairwise_squared_distances(vectors);
    bool jitter = false;
    for (Eigen::Index i = 0; i < sqd.rows() && !jitter; ++i)
        for (Eigen::Index j = i + 1; j < sqd.cols() && !jitter; ++j)
            if (sqd(i, j) == 0.0) jitter = true;
    if (jitter) {
        // Coincident inputs would force infinite-precision bandwidths.
        std::mt19937_64 rng(params.seed ^ 0x6a09e667f3bcc909ULL);
        std::normal_distribution<double> gauss(0.0, 1e-12);
        for (Eigen::Index i = 0; i < vectors.rows(); ++i)
            for (Eigen::Index c = 0; c < vectors.cols(); ++c) vectors(i, c) += gauss(rng);
        sqd = pairwise_squared_distances(vectors);
    }

    Eigen::MatrixXd P = perplexity_affinities(sqd, params.perplexity);
    return tsne_optimize(std::move(P), t.ids, params, jitter);
}

TsneResult tsne_from_distances(const DistanceMatrix& m, const TsneParams& params) {
    validate_distance_matrix(m);
    if (m.size() < 5) throw InputError("tsne needs at least 5 points");
    validate_params(params, m.size());

    // Missing pairs get the matrix maximum: "unknown" reads as "far".
    double max_entry = m.d.maxCoeff();
    if (max_entry <= 0.0) throw InputError("all dissimilarities are missing");
    Eigen::MatrixXd filled = m.d;
    for (Eigen::Index i = 0; i < filled.rows(); ++i)
        for (Eigen::Index j = 0; j < filled.cols(); ++j)
            if (i != j && filled(i, j) == 0.0) filled(i, j) = max_entry;

    Eigen::MatrixXd P = perplexity_affinities(filled.cwiseProduct(filled), params.perplexity);
    return tsne_optimize(std::move(P), m.ids, params, false);
}

}  // namespace feast
