#pragma once

#include "feast/types.hpp"

#include <cstdint>
#include <vector>

namespace feast {

struct TsneParams {
    double perplexity = 30.0;
    double learning_rate = 200.0;
    int max_iters = 1000;
    double exaggeration = 12.0;
    int exaggeration_iters = 250;
    double momentum_early = 0.5;
    double momentum_late = 0.8;
    std::uint64_t seed = 0;
};

/// Gaussian conditionals p_{j|i} with per-point bandwidths tuned so each
/// row's Shannon entropy is log2(perplexity), within 1e-4 over at most 50
/// bisection steps. Input is the matrix of squared distances.
Eigen::MatrixXd perplexity_conditionals(const Eigen::MatrixXd& squared_distances,
                                        double perplexity);

/// Symmetrized affinities p_ij = (p_{j|i} + p_{i|j}) / 2N; zero diagonal,
/// entries sum to 1.
Eigen::MatrixXd perplexity_affinities(const Eigen::MatrixXd& squared_distances,
                                      double perplexity);
Eigen::MatrixXd perplexity_affinities(const EmbeddingTable& t, double perplexity);

/// KL(P || Q) with Student-t low-dimensional affinities.
double kl_objective(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Y);

/// Analytic t-SNE gradient dKL/dY.
Eigen::MatrixXd kl_gradient(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Y);

struct TsneResult {
    Embedding2D embedding;
    double kl_final = 0.0;
    double kl_after_exaggeration = 0.0;
    std::vector<double> kl_trace;  // true (unexaggerated) KL per iteration
    bool jitter_applied = false;
    int iterations = 0;
};

/// Exact O(N^2) t-SNE with early exaggeration and momentum switching.
/// Sequential and bit-reproducible for a fixed seed.
TsneResult tsne_reduce(const EmbeddingTable& t, const TsneParams& params = {});

/// t-SNE over a precomputed dissimilarity matrix (the distance-matrix human
/// kernel). Missing entries are filled with the matrix maximum before
/// perplexity calibration.
TsneResult tsne_from_distances(const DistanceMatrix& m, const TsneParams& params = {});

}  // namespace feast
