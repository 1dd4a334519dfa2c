#pragma once

#include "feast/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace feast {

struct TarResult {
    double tar = 0.0;
    std::int64_t evaluated = 0;
    std::int64_t skipped = 0;  // triplets with an id missing from the embedding
};

/// Triplet Agreement Ratio: agreements / evaluated. Exact distance ties
/// count as disagreement; triplets referencing unknown ids are skipped.
TarResult tar_score(const Embedding2D& e, std::span<const FlavorTriplet> triplets);

enum class Attribute { Alcohol, Country, Grape, Price, Rating, Region, Year };

Attribute attribute_from_name(const std::string& name);
std::string attribute_name(Attribute a);

/// All seven evaluated attributes, in report order.
std::span<const Attribute> all_attributes();

enum class BinMode {
    Auto,      // Distinct when the value count fits the target, else Quantile
    Distinct,  // one class per distinct value
    Quantile,  // equal-frequency bins with target_classes bins
};

struct BinningScheme {
    BinMode mode = BinMode::Auto;
    int target_classes = 0;  // 0: per-attribute default (alcohol 6, price 10, rating 4, year 12)
};

struct BinResult {
    LabelSet labels;
    int dropped = 0;  // records missing the attribute
};

/// Label wines by an attribute. Categorical attributes map distinct values
/// to classes in lexicographic order; grape uses the dominant (first-listed)
/// variety; continuous attributes are binned per the scheme. A record's wine
/// id is its experiment_id when present, else its vintage_id.
BinResult bin_attribute(std::span<const WineRecord> records, Attribute attribute,
                        const BinningScheme& scheme = {});

struct Oversampled {
    Eigen::MatrixXd features;
    LabelSet labels;
};

/// Upsample every non-majority class by seeded sampling with replacement
/// until all class counts match the majority. Originals are always kept.
Oversampled oversample(const Eigen::MatrixXd& features, const LabelSet& labels,
                       std::uint64_t seed);

struct CvResult {
    double mean_accuracy = 0.0;
    std::vector<double> fold_accuracies;
};

/// Seeded shuffled k-fold CV with oversampling applied to training folds
/// only. k-NN: Euclidean majority vote, vote ties broken by the nearest
/// neighbour among the tied classes.
CvResult knn_cv(const Embedding2D& e, const LabelSet& labels, int k, int folds,
                std::uint64_t seed);

/// Same fold protocol with a one-hidden-layer ReLU/softmax network trained
/// by seeded mini-batch SGD.
CvResult mlp_cv(const Embedding2D& e, const LabelSet& labels, int hidden, int epochs,
                double lr, int folds, std::uint64_t seed);

/// 1 / C.
double random_baseline(const LabelSet& labels);

// One-hidden-layer MLP, exposed so training behaviour is testable.
struct MlpModel {
    Eigen::MatrixXd w1, w2;
    Eigen::RowVectorXd b1, b2;
    std::vector<double> epoch_loss;  // mean training cross-entropy per epoch

    std::vector<int> predict(const Eigen::MatrixXd& features) const;
};
MlpModel train_mlp(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                   int num_classes, int hidden, int epochs, double lr, std::uint64_t seed);

enum class Classifier { Knn, Mlp };

struct ReportOptions {
    Classifier classifier = Classifier::Knn;
    int folds = 5;
    int knn_k = 5;
    int mlp_hidden = 100;
    int mlp_epochs = 200;
    double mlp_lr = 1e-3;
    std::uint64_t seed = 0;
    std::map<Attribute, BinningScheme> schemes;  // per-attribute overrides
};

struct EvalReport {
    std::optional<double> tar;
    std::int64_t tar_evaluated = 0;
    std::int64_t skipped_triplets = 0;
    std::map<std::string, double> per_attribute_accuracy;
    std::map<std::string, std::vector<double>> per_attribute_folds;
    std::map<std::string, double> baselines;
    std::map<std::string, int> class_counts;
    double mean_accuracy = 0.0;  // arithmetic mean over the attributes present
};

/// Cross-validated classification over the seven wine attributes.
/// Attributes no record carries are skipped; the mean covers those present.
EvalReport attribute_report(const Embedding2D& e, std::span<const WineRecord> records,
                            const ReportOptions& options = {});

}  // namespace feast
