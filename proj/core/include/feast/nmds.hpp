#pragma once

#include "feast/types.hpp"

#include <cstdint>
#include <vector>

namespace feast {

struct NmdsParams {
    int n_init = 10;
    int max_iter = 500;
    double eps = 1e-4;
    std::uint64_t seed = 0;
};

struct NmdsResult {
    Embedding2D embedding;
    double stress = 0.0;        // Kruskal stress-1 of the winning restart
    int iterations_used = 0;
    int restart_index = 0;
    std::vector<double> stress_trace;  // per-iteration stress of the winning restart
};

/// Non-metric MDS by SMACOF majorization. Zero off-diagonal entries are
/// treated as missing (weight 0) and exert no force. Runs n_init seeded
/// restarts (in parallel, capped by FEAST_THREADS) and returns the one with
/// minimal stress.
NmdsResult nmds_smacof(const DistanceMatrix& m, const NmdsParams& params = {});

/// One SMACOF run on explicit dissimilarities/weights from a given start.
/// Exposed so the zero-weight and monotonicity contracts can be tested
/// against raw matrices.
struct SmacofRun {
    Eigen::MatrixXd points;  // n x 2
    double stress = 0.0;
    int iterations = 0;
    std::vector<double> trace;
};
SmacofRun smacof_single(const Eigen::MatrixXd& dissimilarities,
                        const Eigen::MatrixXd& weights, Eigen::MatrixXd init,
                        int max_iter, double eps);

}  // namespace feast
