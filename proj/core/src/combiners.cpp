#include "feast/combiners.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <unordered_map>

namespace feast {

namespace {

std::vector<WineId> shared_ids(const Embedding2D& a, const Embedding2D& b) {
    std::set<WineId> sa(a.ids.begin(), a.ids.end());
    std::vector<WineId> shared;
    for (WineId id : b.ids)
        if (sa.count(id)) shared.push_back(id);
    std::sort(shared.begin(), shared.end());
    return shared;
}

Eigen::MatrixXd rows_for(const Embedding2D& e, const std::vector<WineId>& ids) {
    auto index = e.index_map();
    Eigen::MatrixXd out(static_cast<Eigen::Index>(ids.size()), 2);
    for (std::size_t k = 0; k < ids.size(); ++k)
        out.row(static_cast<Eigen::Index>(k)) = e.points.row(index.at(ids[k]));
    return out;
}

// Symmetric inverse square root of a 2x2 covariance with an eigenvalue
// floor; sets `floored` when the floor engages.
Eigen::Matrix2d whitening_matrix(const Eigen::Matrix2d& cov, bool& floored) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
    Eigen::Vector2d lambda = eig.eigenvalues();
    Eigen::Vector2d inv_sqrt;
    for (int i = 0; i < 2; ++i) {
        double l = lambda[i];
        if (l < 1e-12) {
            l = 1e-12;
            floored = true;
        }
        inv_sqrt[i] = 1.0 / std::sqrt(l);
    }
    return eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

CcaResult cca_align(const Embedding2D& machine, const Embedding2D& human) {
    auto shared = shared_ids(machine, human);
    if (shared.size() < 3) throw InputError("cca needs at least 3 shared ids");
    const double n = static_cast<double>(shared.size());

    Eigen::MatrixXd X = rows_for(machine, shared);
    Eigen::MatrixXd Y = rows_for(human, shared);
    Eigen::RowVector2d mu_x = X.colwise().mean();
    Eigen::RowVector2d mu_y = Y.colwise().mean();
    Eigen::MatrixXd Xc = X.rowwise() - mu_x;
    Eigen::MatrixXd Yc = Y.rowwise() - mu_y;

    CcaResult result;
    Eigen::Matrix2d cov_x = (Xc.transpose() * Xc) / (n - 1.0);
    Eigen::Matrix2d cov_y = (Yc.transpose() * Yc) / (n - 1.0);
    Eigen::Matrix2d Wx = whitening_matrix(cov_x, result.rank_deficient);
    Eigen::Matrix2d Wy = whitening_matrix(cov_y, result.rank_deficient);

    Eigen::Matrix2d cross = (Xc * Wx).transpose() * (Yc * Wy) / (n - 1.0);
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);

    result.correlations = svd.singularValues().cwiseMin(1.0).cwiseMax(0.0);

    Eigen::Matrix2d A = Wx * svd.matrixU();  // machine-side canonical directions
    Eigen::Matrix2d B = Wy * svd.matrixV();  // human-side canonical directions
    // Deterministic sign: largest-magnitude machine loading positive, the
    // human side flips in tandem so correlations stay positive.
    for (int c = 0; c < 2; ++c) {
        Eigen::Index argmax = 0;
        A.col(c).cwiseAbs().maxCoeff(&argmax);
        if (A(argmax, c) < 0.0) {
            A.col(c) = -A.col(c);
            B.col(c) = -B.col(c);
        }
    }

    result.machine_transform = {A, -mu_x * A};
    result.human_transform = {B, -mu_y * B};

    std::set<WineId> shared_set(shared.begin(), shared.end());
    auto human_index = human.index_map();
    result.combined.ids = machine.ids;
    result.combined.points.resize(machine.size(), 2);
    result.overlap_supported.resize(static_cast<std::size_t>(machine.size()));
    for (Eigen::Index i = 0; i < machine.size(); ++i) {
        WineId id = machine.ids[static_cast<std::size_t>(i)];
        Eigen::RowVector2d u = result.machine_transform.apply(machine.points.row(i));
        if (shared_set.count(id)) {
            Eigen::RowVector2d v =
                result.human_transform.apply(human.points.row(human_index.at(id)));
            result.combined.points.row(i) = 0.5 * (u + v);
            result.overlap_supported[static_cast<std::size_t>(i)] = true;
        } else {
            result.combined.points.row(i) = u;
            result.overlap_supported[static_cast<std::size_t>(i)] = false;
        }
    }
    return result;
}

ProcrustesResult procrustes_align(const Embedding2D& reference, const Embedding2D& moving) {
    auto shared = shared_ids(reference, moving);
    if (shared.size() < 2) throw InputError("procrustes needs at least 2 shared ids");

    Eigen::MatrixXd A = rows_for(reference, shared);
    Eigen::MatrixXd B = rows_for(moving, shared);
    Eigen::RowVector2d mu_a = A.colwise().mean();
    Eigen::RowVector2d mu_b = B.colwise().mean();
    A.rowwise() -= mu_a;
    B.rowwise() -= mu_b;

    double norm_a = A.norm(), norm_b = B.norm();
    if (norm_a == 0.0 || norm_b == 0.0)
        throw InputError("procrustes: all points coincident on one side");
    A /= norm_a;
    B /= norm_b;

    // min ||A - B R||_F over orthogonal R (reflections allowed).
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(B.transpose() * A,
                                          Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix2d R = svd.matrixU() * svd.matrixV().transpose();
    double disparity = std::max(0.0, 2.0 - 2.0 * svd.singularValues().sum());

    ProcrustesResult result;
    result.disparity = disparity;
    result.aligned.ids = moving.ids;
    result.aligned.points.resize(moving.size(), 2);
    for (Eigen::Index i = 0; i < moving.size(); ++i) {
        Eigen::RowVector2d p = (moving.points.row(i) - mu_b) / norm_b;
        result.aligned.points.row(i) = (p * R) * norm_a + mu_a;
    }
    return result;
}

namespace {

RigidTransform2D kabsch_rigid(const Eigen::MatrixXd& from, const Eigen::MatrixXd& to) {
    Eigen::RowVector2d mu_from = from.colwise().mean();
    Eigen::RowVector2d mu_to = to.colwise().mean();
    Eigen::Matrix2d H = (from.rowwise() - mu_from).transpose() * (to.rowwise() - mu_to);
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix2d R = svd.matrixV() * svd.matrixU().transpose();
    if (R.determinant() < 0.0) {  // proper rotation only
        Eigen::Matrix2d V = svd.matrixV();
        V.col(1) = -V.col(1);
        R = V * svd.matrixU().transpose();
    }
    RigidTransform2D t;
    t.rotation = R;
    t.translation = mu_to - (mu_from * R.transpose());
    return t;
}

}  // namespace

IcpResult icp_align(const Embedding2D& reference, const Embedding2D& moving, int max_iter,
                    double tol) {
    if (reference.size() == 0 || moving.size() == 0)
        throw InputError("icp: empty point set");
    if (max_iter < 1) throw ConfigError("icp: max_iter must be >= 1");

    IcpResult result;
    Eigen::MatrixXd transformed = moving.points;
    double prev_mse = std::numeric_limits<double>::infinity();

    for (int it = 0; it < max_iter; ++it) {
        Eigen::MatrixXd targets(moving.size(), 2);
        double sq_error = 0.0;
        for (Eigen::Index i = 0; i < moving.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            Eigen::Index best_j = 0;
            for (Eigen::Index j = 0; j < reference.size(); ++j) {
                double d = (transformed.row(i) - reference.points.row(j)).squaredNorm();
                // Ties break toward the lowest reference id.
                if (d < best ||
                    (d == best && reference.ids[static_cast<std::size_t>(j)] <
                                      reference.ids[static_cast<std::size_t>(best_j)])) {
                    best = d;
                    best_j = j;
                }
            }
            targets.row(i) = reference.points.row(best_j);
            sq_error += best;
        }
        double mse = sq_error / static_cast<double>(moving.size());
        result.mse_trace.push_back(mse);
        ++result.iterations;
        if (mse == 0.0 || prev_mse - mse < tol) break;
        prev_mse = mse;

        result.transform = kabsch_rigid(moving.points, targets);
        for (Eigen::Index i = 0; i < moving.size(); ++i)
            transformed.row(i) = result.transform.apply(moving.points.row(i));
    }

    result.aligned.ids = moving.ids;
    result.aligned.points = std::move(transformed);
    return result;
}

double snack_objective(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Y,
                       std::span<const IndexTriplet> triplets, double lambda, double alpha) {
    double kl = (lambda > 0.0) ? kl_objective(P, Y) : 0.0;
    double ll = (lambda < 1.0) ? tste_log_likelihood(Y, triplets, alpha) : 0.0;
    return lambda * kl - (1.0 - lambda) * ll;
}

Eigen::MatrixXd snack_gradient(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Y,
                               std::span<const IndexTriplet> triplets, double lambda,
                               double alpha) {
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(Y.rows(), Y.cols());
    if (lambda > 0.0) grad += lambda * kl_gradient(P, Y);
    if (lambda < 1.0) grad -= (1.0 - lambda) * tste_gradient(Y, triplets, alpha);
    return grad;
}

Embedding2D snack_embed(const EmbeddingTable& machine, std::span<const FlavorTriplet> triplets,
                        double lambda, const TsneParams& tsne_params,
                        const TsteParams& tste_params) {
    if (machine.size() == 0) throw InputError("snack: empty machine table");
    if (triplets.empty()) throw InputError("snack: empty triplet list");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("snack: lambda must lie in [0, 1]");

    std::unordered_map<WineId, Eigen::Index> index;
    for (std::size_t i = 0; i < machine.ids.size(); ++i)
        index[machine.ids[i]] = static_cast<Eigen::Index>(i);
    std::vector<IndexTriplet> idx;
    idx.reserve(triplets.size());
    for (const auto& t : triplets) {
        auto a = index.find(t.anchor), b = index.find(t.near), c = index.find(t.far);
        if (a == index.end() || b == index.end() || c == index.end())
            throw InputError("snack: triplet references an id absent from the machine table");
        idx.push_back({a->second, b->second, c->second});
    }

    const Eigen::Index n = machine.size();
    Eigen::MatrixXd P = perplexity_affinities(machine, tsne_params.perplexity);

    std::mt19937_64 rng(tsne_params.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd Y(n, 2);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index c = 0; c < 2; ++c) Y(i, c) = 1e-4 * gauss(rng);

    Eigen::MatrixXd velocity = Eigen::MatrixXd::Zero(n, 2);
    for (int it = 0; it < tsne_params.max_iters; ++it) {
        const bool early = it < tsne_params.exaggeration_iters;
        // Exaggeration boosts the machine-affinity term only.
        Eigen::MatrixXd Peff = early ? (tsne_params.exaggeration * P).eval() : P;
        Eigen::MatrixXd grad = snack_gradient(Peff, Y, idx, lambda, tste_params.alpha);
        if (!grad.allFinite())
            throw NumericError("snack: non-finite gradient at iteration " + std::to_string(it));
        const double momentum = early ? tsne_params.momentum_early : tsne_params.momentum_late;
        velocity = momentum * velocity - tsne_params.learning_rate * grad;
        Y += velocity;
        Y.rowwise() -= Y.colwise().mean();
    }

    Embedding2D out;
    out.ids = machine.ids;
    out.points = std::move(Y);
    return out;
}

}  // namespace feast
