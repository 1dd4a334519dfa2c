#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace feast {

/// Wine identifier: experiment_id for the flavor subset, vintage_id for the corpus.
using WineId = std::int64_t;

// Error categories map 1:1 onto the CLI exit-code contract
// (2 = config, 3 = input, 4 = numerical failure).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One sticker on one napping sheet, in sheet pixels.
struct StickerAnnotation {
    std::string session_round_name;
    std::string event_name;
    std::int64_t experiment_no = 0;
    WineId wine = 0;
    double coor1 = 0.0;
    double coor2 = 0.0;
    std::string color;

    bool operator==(const StickerAnnotation&) const = default;
};

/// Per-wine attributes; absent fields stay absent, never zero.
struct WineRecord {
    WineId vintage_id = 0;
    std::optional<WineId> experiment_id;
    std::optional<int> year;
    std::optional<std::string> country;
    std::optional<std::string> region;
    std::optional<double> price;    // USD
    std::optional<double> rating;   // 1-5
    std::optional<double> alcohol;  // percent
    std::vector<std::string> grapes;  // descending blend share
    std::optional<std::string> review;
    std::optional<std::string> image_ref;
};

/// N x N symmetric flavor dissimilarities. A zero off-diagonal entry means
/// the pair was never co-annotated (missing), not "identical taste".
struct DistanceMatrix {
    std::vector<WineId> ids;
    Eigen::MatrixXd d;

    Eigen::Index size() const { return static_cast<Eigen::Index>(ids.size()); }
    std::optional<Eigen::Index> index_of(WineId id) const;
};

/// Ordered triple: anchor tastes closer to near than to far.
struct FlavorTriplet {
    WineId anchor = 0;
    WineId near = 0;
    WineId far = 0;

    bool operator==(const FlavorTriplet&) const = default;
};

/// Precomputed encoder outputs, one D-dimensional row per wine.
struct EmbeddingTable {
    std::vector<WineId> ids;
    Eigen::MatrixXd vectors;  // N x D

    Eigen::Index size() const { return static_cast<Eigen::Index>(ids.size()); }
    Eigen::Index dims() const { return vectors.cols(); }
};

/// A 2D embedding (any kernel or combined space).
struct Embedding2D {
    std::vector<WineId> ids;
    Eigen::MatrixXd points;  // N x 2

    Eigen::Index size() const { return static_cast<Eigen::Index>(ids.size()); }
    std::optional<Eigen::Index> index_of(WineId id) const;
    std::unordered_map<WineId, Eigen::Index> index_map() const;
};

/// Integer class labels over a set of wines.
struct LabelSet {
    std::vector<WineId> ids;
    std::vector<int> labels;
    std::vector<std::string> class_names;

    int num_classes() const { return static_cast<int>(class_names.size()); }
};

}  // namespace feast
