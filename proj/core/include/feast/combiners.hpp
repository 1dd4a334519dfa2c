#pragma once

#include "feast/tsne.hpp"
#include "feast/tste.hpp"
#include "feast/types.hpp"

#include <span>
#include <vector>

namespace feast {

/// y = x * linear + offset (row-vector convention).
struct AffineMap2D {
    Eigen::Matrix2d linear = Eigen::Matrix2d::Identity();
    Eigen::RowVector2d offset = Eigen::RowVector2d::Zero();

    Eigen::RowVector2d apply(const Eigen::RowVector2d& x) const { return x * linear + offset; }
};

struct CcaResult {
    Embedding2D combined;               // machine-side ids, shared rows averaged
    Eigen::Vector2d correlations;       // canonical correlations, descending in [0,1]
    AffineMap2D machine_transform;
    AffineMap2D human_transform;
    std::vector<bool> overlap_supported;  // per combined row: backed by both sides
    bool rank_deficient = false;          // whitening hit the eigenvalue floor
};

/// Canonical correlation alignment of the two 2D kernels over their shared
/// ids. Wines only the machine side knows are projected through the
/// machine-side canonical transform alone.
CcaResult cca_align(const Embedding2D& machine, const Embedding2D& human);

struct ProcrustesResult {
    Embedding2D aligned;     // moving set mapped into the reference frame
    double disparity = 0.0;  // min ||A - B R||^2 after centering + unit norm
};

/// Orthogonal Procrustes over shared ids; reflections permitted.
ProcrustesResult procrustes_align(const Embedding2D& reference, const Embedding2D& moving);

struct RigidTransform2D {
    Eigen::Matrix2d rotation = Eigen::Matrix2d::Identity();
    Eigen::RowVector2d translation = Eigen::RowVector2d::Zero();
    double scale = 1.0;  // fixed 1 for ICP

    Eigen::RowVector2d apply(const Eigen::RowVector2d& x) const {
        return scale * (x * rotation.transpose()) + translation;
    }
};

struct IcpResult {
    RigidTransform2D transform;
    Embedding2D aligned;
    std::vector<double> mse_trace;  // per-iteration mean-squared correspondence error
    int iterations = 0;
};

/// Iterative closest point with true nearest-neighbour correspondences
/// (ties broken by lowest reference id) and Kabsch rigid updates.
IcpResult icp_align(const Embedding2D& reference, const Embedding2D& moving,
                    int max_iter = 50, double tol = 1e-9);

/// SNaCK objective at a configuration:
/// C = lambda * KL(P||Q) + (1 - lambda) * (-mean triplet log-likelihood).
double snack_objective(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Y,
                       std::span<const IndexTriplet> triplets, double lambda, double alpha);
Eigen::MatrixXd snack_gradient(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Y,
                               std::span<const IndexTriplet> triplets, double lambda,
                               double alpha);

/// Joint embedding of machine affinities and human triplets; the
/// early-exaggeration schedule applies to the P term only.
Embedding2D snack_embed(const EmbeddingTable& machine, std::span<const FlavorTriplet> triplets,
                        double lambda, const TsneParams& tsne_params = {},
                        const TsteParams& tste_params = {});

}  // namespace feast
