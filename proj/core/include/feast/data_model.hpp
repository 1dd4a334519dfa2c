#pragma once

#include "feast/types.hpp"

#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace feast {

/// Read napping.csv (the published seven-column schema). Columns are
/// resolved by header
/// name, not position. Throws InputError citing the record number on
/// malformed rows.
std::vector<StickerAnnotation> parse_napping(const std::filesystem::path& path);

/// Read images_reviews_attributes.csv. Absent optional cells become
/// "missing", never zero; the grape cell is split on commas preserving
/// the descending-blend-share order.
std::vector<WineRecord> parse_attributes(const std::filesystem::path& path);

/// One row of participants.csv, linking a napping sheet to its annotator.
struct ParticipantRecord {
    std::string session_round_name;
    std::string event_name;
    std::int64_t experiment_no = 0;
    int round_id = 0;
    std::int64_t participant_id = 0;

    bool operator==(const ParticipantRecord&) const = default;
};
std::vector<ParticipantRecord> parse_participants(const std::filesystem::path& path);

/// Read an "id,e0,...,e{D-1}" table. Duplicate ids, ragged rows and
/// non-finite values are rejected.
EmbeddingTable load_embeddings(const std::filesystem::path& path);

/// Same format as load_embeddings but ids may repeat (one row per review or
/// image); pooling into one vector per wine happens downstream.
struct EmbeddingRows {
    std::vector<WineId> ids;
    Eigen::MatrixXd vectors;
};
EmbeddingRows load_embedding_rows(const std::filesystem::path& path);

enum class PairAggregate { Mean, Median };

struct DistanceOptions {
    /// Divide each sheet's distances by that sheet's sticker bounding-box
    /// diagonal before aggregation.
    bool normalize = false;
    PairAggregate aggregate = PairAggregate::Mean;
};

struct DistanceBuildResult {
    DistanceMatrix matrix;
    int skipped_sheets = 0;  // sheets with < 2 stickers
};

/// Assemble the wine-pair dissimilarity matrix from sticker annotations.
/// Per sheet, pairwise Euclidean pixel distances are computed; a pair seen
/// on several sheets is aggregated (mean by default). Pairs never
/// co-annotated stay 0.
DistanceBuildResult build_distance_matrix(std::span<const StickerAnnotation> annotations,
                                          const DistanceOptions& options = {});

/// Throws InputError unless d is square over ids, symmetric, nonnegative
/// with a zero diagonal.
void validate_distance_matrix(const DistanceMatrix& m);

/// Every ordered anchor with two observed, unequal dissimilarities yields
/// one triplet; ties and missing pairs yield nothing. Deterministic
/// ascending index scan.
std::vector<FlavorTriplet> triplets_from_matrix(const DistanceMatrix& m);

struct TripletSplit {
    std::vector<FlavorTriplet> train;
    std::vector<FlavorTriplet> test;
    std::set<WineId> train_wines;
    std::set<WineId> test_wines;
    std::int64_t discarded = 0;  // triplets straddling the wine partition
};

/// Partition the wine universe (seeded) and keep only triplets wholly
/// inside one side; |test wines| = round(test_fraction * N).
TripletSplit split_triplets_by_wine(std::span<const FlavorTriplet> triplets,
                                    double test_fraction, std::uint64_t seed);

// CSV serialization of pipeline artifacts.
std::string napping_to_csv(std::span<const StickerAnnotation> annotations);
void write_napping_csv(std::span<const StickerAnnotation> annotations,
                       const std::filesystem::path& path);

std::string embedding2d_to_csv(const Embedding2D& e);
void write_embedding2d_csv(const Embedding2D& e, const std::filesystem::path& path);
Embedding2D read_embedding2d_csv(const std::filesystem::path& path);

}  // namespace feast
