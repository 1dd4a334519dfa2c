#pragma once

#include "feast/types.hpp"

#include <array>
#include <cstdint>
#include <span>

namespace feast {

struct TsteParams {
    double alpha = 1.0;  // heavy-tail degrees of freedom (dims - 1 for 2D)
    double learning_rate = 20.0;
    int max_iters = 1000;
    std::uint64_t seed = 0;
};

/// Index-based triplet: {anchor, near, far} as row indices into a point matrix.
using IndexTriplet = std::array<Eigen::Index, 3>;

/// Mean log-likelihood of the triplet orderings under the heavy-tailed
/// similarity kernel.
double tste_log_likelihood(const Eigen::MatrixXd& points,
                           std::span<const IndexTriplet> triplets, double alpha);

/// Analytic gradient of the mean log-likelihood w.r.t. the points.
Eigen::MatrixXd tste_gradient(const Eigen::MatrixXd& points,
                              std::span<const IndexTriplet> triplets, double alpha);

/// Embed triplet orderings into 2D by maximizing the log-likelihood with
/// fixed-step gradient ascent (step halves whenever the objective drops).
Embedding2D tste_embed(std::span<const FlavorTriplet> triplets, const TsteParams& params = {});

}  // namespace feast
