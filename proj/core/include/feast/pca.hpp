#pragma once

#include "feast/data_model.hpp"
#include "feast/types.hpp"

namespace feast {

/// Center every dimension; scale nonzero-variance dimensions to unit
/// (population) variance, leave zero-variance dimensions centered.
EmbeddingTable standardize(const EmbeddingTable& t);

/// Project onto the top-2 eigenvectors of the sample covariance, ordered by
/// descending eigenvalue. Each component's sign is fixed so its
/// largest-magnitude loading is positive.
Embedding2D pca_reduce(const EmbeddingTable& t);

enum class PoolMode { Mean, First, ConcatTruncate };

/// Collapse repeated ids (one row per review/image) into one vector per
/// wine. ConcatTruncate concatenates a wine's rows in file order and
/// truncates to the shortest concatenation so the table stays rectangular.
EmbeddingTable pool_embeddings(const EmbeddingRows& rows, PoolMode mode = PoolMode::Mean);

}  // namespace feast
