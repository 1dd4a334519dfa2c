#include "feast/pca.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>

namespace feast {

EmbeddingTable standardize(const EmbeddingTable& t) {
    if (t.size() < 2) throw InputError("standardize needs at least 2 rows");
    const double n = static_cast<double>(t.size());
    EmbeddingTable out;
    out.ids = t.ids;
    out.vectors = t.vectors;
    for (Eigen::Index c = 0; c < out.vectors.cols(); ++c) {
        double mean = out.vectors.col(c).mean();
        out.vectors.col(c).array() -= mean;
        double var = out.vectors.col(c).squaredNorm() / n;
        if (var > 0.0) out.vectors.col(c) /= std::sqrt(var);
    }
    return out;
}

Embedding2D pca_reduce(const EmbeddingTable& t) {
    if (t.size() < 3) throw InputError("pca needs at least 3 rows");
    if (t.dims() < 2) throw InputError("pca needs at least 2 input dimensions");

    Eigen::MatrixXd centered = t.vectors.rowwise() - t.vectors.colwise().mean();
    Eigen::MatrixXd cov =
        centered.transpose() * centered / static_cast<double>(t.size() - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) throw NumericError("pca: eigendecomposition failed");

    // Eigen orders eigenvalues ascending; take the last two, largest first.
    Eigen::MatrixXd components(t.dims(), 2);
    components.col(0) = eig.eigenvectors().col(t.dims() - 1);
    components.col(1) = eig.eigenvectors().col(t.dims() - 2);
    for (Eigen::Index c = 0; c < 2; ++c) {
        Eigen::Index argmax = 0;
        components.col(c).cwiseAbs().maxCoeff(&argmax);
        if (components(argmax, c) < 0.0) components.col(c) = -components.col(c);
    }

    Embedding2D out;
    out.ids = t.ids;
    out.points = centered * components;
    return out;
}

EmbeddingTable pool_embeddings(const EmbeddingRows& rows, PoolMode mode) {
    if (rows.ids.empty()) throw InputError("pool_embeddings: empty input");
    std::map<WineId, std::vector<Eigen::Index>> groups;
    for (std::size_t i = 0; i < rows.ids.size(); ++i)
        groups[rows.ids[i]].push_back(static_cast<Eigen::Index>(i));

    const Eigen::Index d = rows.vectors.cols();
    EmbeddingTable out;
    out.ids.reserve(groups.size());

    if (mode == PoolMode::ConcatTruncate) {
        std::size_t min_rows = rows.ids.size();
        for (const auto& [id, members] : groups) min_rows = std::min(min_rows, members.size());
        const Eigen::Index width = static_cast<Eigen::Index>(min_rows) * d;
        out.vectors.resize(static_cast<Eigen::Index>(groups.size()), width);
        Eigen::Index r = 0;
        for (const auto& [id, members] : groups) {
            out.ids.push_back(id);
            for (std::size_t k = 0; k < min_rows; ++k)
                out.vectors.block(r, static_cast<Eigen::Index>(k) * d, 1, d) =
                    rows.vectors.row(members[k]);
            ++r;
        }
        return out;
    }

    out.vectors.resize(static_cast<Eigen::Index>(groups.size()), d);
    Eigen::Index r = 0;
    for (const auto& [id, members] : groups) {
        out.ids.push_back(id);
        if (mode == PoolMode::First) {
            out.vectors.row(r) = rows.vectors.row(members.front());
        } else {
            Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(d);
            for (Eigen::Index m : members) mean += rows.vectors.row(m);
            out.vectors.row(r) = mean / static_cast<double>(members.size());
        }
        ++r;
    }
    return out;
}

}  // namespace feast
