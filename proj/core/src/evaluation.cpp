#include "feast/evaluation.hpp"

#include "feast/csv.hpp"
#include "feast/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace feast {

TarResult tar_score(const Embedding2D& e, std::span<const FlavorTriplet> triplets) {
    if (triplets.empty()) throw InputError("tar: empty triplet list");
    auto index = e.index_map();

    TarResult result;
    std::int64_t agreements = 0;
    for (const auto& t : triplets) {
        auto i = index.find(t.anchor);
        auto j = index.find(t.near);
        auto k = index.find(t.far);
        if (i == index.end() || j == index.end() || k == index.end()) {
            ++result.skipped;
            continue;
        }
        ++result.evaluated;
        double d_near = (e.points.row(i->second) - e.points.row(j->second)).norm();
        double d_far = (e.points.row(i->second) - e.points.row(k->second)).norm();
        if (d_near < d_far) ++agreements;  // a tie counts as disagreement
    }
    if (result.evaluated == 0) throw InputError("tar: no evaluable triplets");
    result.tar = static_cast<double>(agreements) / static_cast<double>(result.evaluated);
    return result;
}

namespace {

const Attribute kAttributes[] = {Attribute::Alcohol, Attribute::Country, Attribute::Grape,
                                 Attribute::Price,   Attribute::Rating,  Attribute::Region,
                                 Attribute::Year};

WineId record_wine_id(const WineRecord& r) {
    return r.experiment_id ? *r.experiment_id : r.vintage_id;
}

int default_target_classes(Attribute a) {
    switch (a) {
    case Attribute::Alcohol: return 6;
    case Attribute::Price: return 10;
    case Attribute::Rating: return 4;
    case Attribute::Year: return 12;
    default: return 0;  // categorical
    }
}

bool is_categorical(Attribute a) {
    return a == Attribute::Country || a == Attribute::Region || a == Attribute::Grape;
}

std::optional<std::string> categorical_value(const WineRecord& r, Attribute a) {
    switch (a) {
    case Attribute::Country: return r.country;
    case Attribute::Region: return r.region;
    case Attribute::Grape:
        if (r.grapes.empty()) return std::nullopt;
        return r.grapes.front();  // dominant variety
    default: return std::nullopt;
    }
}

std::optional<double> continuous_value(const WineRecord& r, Attribute a) {
    switch (a) {
    case Attribute::Alcohol: return r.alcohol;
    case Attribute::Price: return r.price;
    case Attribute::Rating: return r.rating;
    case Attribute::Year:
        if (!r.year) return std::nullopt;
        return static_cast<double>(*r.year);
    default: return std::nullopt;
    }
}

}  // namespace

Attribute attribute_from_name(const std::string& name) {
    for (Attribute a : kAttributes)
        if (attribute_name(a) == name) return a;
    throw ConfigError("unknown attribute '" + name + "'");
}

std::string attribute_name(Attribute a) {
    switch (a) {
    case Attribute::Alcohol: return "alcohol";
    case Attribute::Country: return "country";
    case Attribute::Grape: return "grape";
    case Attribute::Price: return "price";
    case Attribute::Rating: return "rating";
    case Attribute::Region: return "region";
    case Attribute::Year: return "year";
    }
    return "?";
}

std::span<const Attribute> all_attributes() { return kAttributes; }

BinResult bin_attribute(std::span<const WineRecord> records, Attribute attribute,
                        const BinningScheme& scheme) {
    BinResult result;

    if (is_categorical(attribute)) {
        std::map<WineId, std::string> values;
        std::set<WineId> missing;
        for (const auto& r : records) {
            WineId id = record_wine_id(r);
            if (values.count(id)) continue;
            if (auto v = categorical_value(r, attribute)) values[id] = *v;
            else missing.insert(id);
        }
        for (WineId id : missing)
            if (!values.count(id)) ++result.dropped;
        if (values.empty())
            throw InputError("no records carry attribute " + attribute_name(attribute));

        std::set<std::string> distinct;
        for (const auto& [id, v] : values) distinct.insert(v);
        std::map<std::string, int> class_of;
        for (const auto& v : distinct) {
            class_of[v] = static_cast<int>(result.labels.class_names.size());
            result.labels.class_names.push_back(v);
        }
        for (const auto& [id, v] : values) {
            result.labels.ids.push_back(id);
            result.labels.labels.push_back(class_of[v]);
        }
        return result;
    }

    std::map<WineId, double> values;
    std::set<WineId> missing;
    for (const auto& r : records) {
        WineId id = record_wine_id(r);
        if (values.count(id)) continue;
        if (auto v = continuous_value(r, attribute)) values[id] = *v;
        else missing.insert(id);
    }
    for (WineId id : missing)
        if (!values.count(id)) ++result.dropped;
    if (values.empty())
        throw InputError("no records carry attribute " + attribute_name(attribute));

    std::vector<double> sorted;
    sorted.reserve(values.size());
    for (const auto& [id, v] : values) sorted.push_back(v);
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> distinct = sorted;
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    int target = scheme.target_classes > 0 ? scheme.target_classes
                                           : default_target_classes(attribute);
    BinMode mode = scheme.mode;
    if (mode == BinMode::Auto)
        mode = (static_cast<int>(distinct.size()) <= target) ? BinMode::Distinct
                                                             : BinMode::Quantile;

    if (mode == BinMode::Distinct) {
        std::map<double, int> class_of;
        for (double v : distinct) {
            class_of[v] = static_cast<int>(result.labels.class_names.size());
            result.labels.class_names.push_back(format_double(v));
        }
        for (const auto& [id, v] : values) {
            result.labels.ids.push_back(id);
            result.labels.labels.push_back(class_of[v]);
        }
        return result;
    }

    // Equal-frequency bins; duplicate boundaries collapse empty bins away.
    if (target < 1) throw ConfigError("quantile binning needs a positive class count");
    std::vector<double> boundaries;
    const std::size_t n = sorted.size();
    for (int b = 1; b < target; ++b) {
        double q = sorted[std::min(n - 1, b * n / static_cast<std::size_t>(target))];
        if (boundaries.empty() || q > boundaries.back()) boundaries.push_back(q);
    }
    auto bin_of = [&](double v) {
        return static_cast<int>(std::upper_bound(boundaries.begin(), boundaries.end(), v) -
                                boundaries.begin());
    };
    std::vector<int> raw;
    raw.reserve(values.size());
    std::set<int> used;
    for (const auto& [id, v] : values) {
        raw.push_back(bin_of(v));
        used.insert(raw.back());
    }
    std::map<int, int> remap;
    for (int b : used) {
        remap[b] = static_cast<int>(result.labels.class_names.size());
        double lo = (b == 0) ? sorted.front() : boundaries[static_cast<std::size_t>(b - 1)];
        double hi = (b == static_cast<int>(boundaries.size()))
                        ? sorted.back()
                        : boundaries[static_cast<std::size_t>(b)];
        result.labels.class_names.push_back("[" + format_double(lo) + "," + format_double(hi) +
                                            (b == static_cast<int>(boundaries.size()) ? "]" : ")"));
    }
    std::size_t i = 0;
    for (const auto& [id, v] : values) {
        result.labels.ids.push_back(id);
        result.labels.labels.push_back(remap[raw[i++]]);
    }
    return result;
}

Oversampled oversample(const Eigen::MatrixXd& features, const LabelSet& labels,
                       std::uint64_t seed) {
    if (labels.ids.empty()) throw InputError("oversample: empty input");
    if (features.rows() != static_cast<Eigen::Index>(labels.labels.size()))
        throw InputError("oversample: features and labels disagree in length");

    std::map<int, std::vector<Eigen::Index>> by_class;
    for (std::size_t i = 0; i < labels.labels.size(); ++i)
        by_class[labels.labels[i]].push_back(static_cast<Eigen::Index>(i));
    std::size_t majority = 0;
    for (const auto& [c, members] : by_class) majority = std::max(majority, members.size());

    std::vector<Eigen::Index> keep(static_cast<std::size_t>(features.rows()));
    std::iota(keep.begin(), keep.end(), Eigen::Index{0});
    std::mt19937_64 rng(seed);
    for (const auto& [c, members] : by_class) {
        for (std::size_t add = members.size(); add < majority; ++add)
            keep.push_back(members[static_cast<std::size_t>(rng() % members.size())]);
    }

    Oversampled out;
    out.features.resize(static_cast<Eigen::Index>(keep.size()), features.cols());
    out.labels.class_names = labels.class_names;
    out.labels.ids.reserve(keep.size());
    out.labels.labels.reserve(keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) {
        out.features.row(static_cast<Eigen::Index>(i)) = features.row(keep[i]);
        out.labels.ids.push_back(labels.ids[static_cast<std::size_t>(keep[i])]);
        out.labels.labels.push_back(labels.labels[static_cast<std::size_t>(keep[i])]);
    }
    return out;
}

namespace {

struct JoinedData {
    Eigen::MatrixXd features;  // n x 2
    std::vector<int> labels;
    int num_classes = 0;
};

JoinedData join(const Embedding2D& e, const LabelSet& labels) {
    auto index = e.index_map();
    JoinedData d;
    d.num_classes = labels.num_classes();
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < labels.ids.size(); ++i) {
        auto it = index.find(labels.ids[i]);
        if (it == index.end()) continue;
        rows.push_back(it->second);
        d.labels.push_back(labels.labels[i]);
    }
    d.features.resize(static_cast<Eigen::Index>(rows.size()), 2);
    for (std::size_t i = 0; i < rows.size(); ++i)
        d.features.row(static_cast<Eigen::Index>(i)) = e.points.row(rows[i]);
    return d;
}

std::vector<std::vector<Eigen::Index>> kfold_indices(std::size_t n, int folds,
                                                     std::uint64_t seed) {
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::mt19937_64 rng(seed);
    for (std::size_t i = n - 1; i > 0; --i)
        std::swap(order[i], order[static_cast<std::size_t>(rng() % (i + 1))]);

    std::vector<std::vector<Eigen::Index>> out(static_cast<std::size_t>(folds));
    std::size_t base = n / static_cast<std::size_t>(folds);
    std::size_t rem = n % static_cast<std::size_t>(folds);
    std::size_t pos = 0;
    for (std::size_t f = 0; f < static_cast<std::size_t>(folds); ++f) {
        std::size_t size = base + (f < rem ? 1 : 0);
        out[f].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                      order.begin() + static_cast<std::ptrdiff_t>(pos + size));
        pos += size;
    }
    return out;
}

int knn_predict(const Eigen::MatrixXd& train, const std::vector<int>& train_labels,
                const Eigen::RowVector2d& query, int k, int num_classes) {
    std::vector<std::pair<double, Eigen::Index>> dist;
    dist.reserve(static_cast<std::size_t>(train.rows()));
    for (Eigen::Index i = 0; i < train.rows(); ++i)
        dist.push_back({(train.row(i) - query).norm(), i});
    std::sort(dist.begin(), dist.end());

    std::vector<int> votes(static_cast<std::size_t>(num_classes), 0);
    for (int m = 0; m < k; ++m)
        ++votes[static_cast<std::size_t>(train_labels[static_cast<std::size_t>(dist[static_cast<std::size_t>(m)].second)])];
    int best_votes = *std::max_element(votes.begin(), votes.end());
    // A vote tie goes to the tied class with the nearest representative.
    for (int m = 0; m < k; ++m) {
        int c = train_labels[static_cast<std::size_t>(dist[static_cast<std::size_t>(m)].second)];
        if (votes[static_cast<std::size_t>(c)] == best_votes) return c;
    }
    return 0;  // unreachable
}

using Evaluator = std::function<std::vector<int>(
    const Eigen::MatrixXd& train, const std::vector<int>& train_labels,
    const Eigen::MatrixXd& test, int num_classes, std::uint64_t fold_seed)>;

CvResult cross_validate(const Embedding2D& e, const LabelSet& labels, int folds,
                        std::uint64_t seed, const Evaluator& fit_predict,
                        int min_train_size) {
    if (folds < 2) throw ConfigError("cross-validation needs folds >= 2");
    JoinedData data = join(e, labels);
    const std::size_t n = data.labels.size();
    if (n == 0) throw InputError("cross-validation: no overlap between embedding and labels");
    if (static_cast<std::size_t>(folds) > n)
        throw ConfigError("cross-validation: more folds than samples");

    auto fold_sets = kfold_indices(n, folds, seed);
    CvResult result;
    for (std::size_t f = 0; f < fold_sets.size(); ++f) {
        std::unordered_set<Eigen::Index> in_test(fold_sets[f].begin(), fold_sets[f].end());
        std::vector<Eigen::Index> train_rows;
        for (std::size_t i = 0; i < n; ++i)
            if (!in_test.count(static_cast<Eigen::Index>(i)))
                train_rows.push_back(static_cast<Eigen::Index>(i));
        if (static_cast<int>(train_rows.size()) < min_train_size)
            throw ConfigError("cross-validation: training fold smaller than the model needs");

        Eigen::MatrixXd train(static_cast<Eigen::Index>(train_rows.size()), 2);
        LabelSet train_labels;
        train_labels.class_names = labels.class_names;
        for (std::size_t i = 0; i < train_rows.size(); ++i) {
            train.row(static_cast<Eigen::Index>(i)) = data.features.row(train_rows[i]);
            train_labels.ids.push_back(0);  // ids are irrelevant inside a fold
            train_labels.labels.push_back(data.labels[static_cast<std::size_t>(train_rows[i])]);
        }
        // Oversampling touches the training portion only.
        Oversampled balanced = oversample(train, train_labels, seed + 1000 * (f + 1));

        Eigen::MatrixXd test(static_cast<Eigen::Index>(fold_sets[f].size()), 2);
        for (std::size_t i = 0; i < fold_sets[f].size(); ++i)
            test.row(static_cast<Eigen::Index>(i)) = data.features.row(fold_sets[f][i]);

        std::vector<int> predicted = fit_predict(balanced.features, balanced.labels.labels,
                                                 test, data.num_classes, seed + 7919 * (f + 1));
        int correct = 0;
        for (std::size_t i = 0; i < fold_sets[f].size(); ++i)
            if (predicted[i] == data.labels[static_cast<std::size_t>(fold_sets[f][i])]) ++correct;
        result.fold_accuracies.push_back(static_cast<double>(correct) /
                                         static_cast<double>(fold_sets[f].size()));
    }
    result.mean_accuracy =
        std::accumulate(result.fold_accuracies.begin(), result.fold_accuracies.end(), 0.0) /
        static_cast<double>(result.fold_accuracies.size());
    return result;
}

}  // namespace

CvResult knn_cv(const Embedding2D& e, const LabelSet& labels, int k, int folds,
                std::uint64_t seed) {
    if (k < 1) throw ConfigError("knn: k must be >= 1");
    return cross_validate(
        e, labels, folds, seed,
        [k](const Eigen::MatrixXd& train, const std::vector<int>& train_labels,
            const Eigen::MatrixXd& test, int num_classes, std::uint64_t) {
            std::vector<int> out;
            out.reserve(static_cast<std::size_t>(test.rows()));
            for (Eigen::Index i = 0; i < test.rows(); ++i)
                out.push_back(knn_predict(train, train_labels, test.row(i), k, num_classes));
            return out;
        },
        k);  // k must not reach the training-fold size
}

std::vector<int> MlpModel::predict(const Eigen::MatrixXd& features) const {
    Eigen::MatrixXd hidden = ((features * w1).rowwise() + b1).cwiseMax(0.0);
    Eigen::MatrixXd logits = (hidden * w2).rowwise() + b2;
    std::vector<int> out(static_cast<std::size_t>(features.rows()));
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        Eigen::Index argmax = 0;
        logits.row(i).maxCoeff(&argmax);
        out[static_cast<std::size_t>(i)] = static_cast<int>(argmax);
    }
    return out;
}

MlpModel train_mlp(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                   int num_classes, int hidden, int epochs, double lr, std::uint64_t seed) {
    if (hidden < 1) throw ConfigError("mlp: hidden must be >= 1");
    if (epochs < 1 || lr <= 0.0) throw ConfigError("mlp: epochs must be >= 1, lr positive");
    const Eigen::Index n = features.rows();
    const Eigen::Index d = features.cols();

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    MlpModel m;
    m.w1.resize(d, hidden);
    m.w2.resize(hidden, num_classes);
    for (Eigen::Index i = 0; i < d; ++i)
        for (int j = 0; j < hidden; ++j)
            m.w1(i, j) = gauss(rng) * std::sqrt(2.0 / static_cast<double>(d));
    for (int i = 0; i < hidden; ++i)
        for (int j = 0; j < num_classes; ++j)
            m.w2(i, j) = gauss(rng) * std::sqrt(2.0 / static_cast<double>(hidden));
    m.b1 = Eigen::RowVectorXd::Zero(hidden);
    m.b2 = Eigen::RowVectorXd::Zero(num_classes);

    const Eigen::Index batch_size = 32;
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    for (int epoch = 0; epoch < epochs; ++epoch) {
        for (std::size_t i = order.size() - 1; i > 0; --i)
            std::swap(order[i], order[static_cast<std::size_t>(rng() % (i + 1))]);

        double epoch_loss = 0.0;
        for (Eigen::Index start = 0; start < n; start += batch_size) {
            const Eigen::Index bs = std::min(batch_size, n - start);
            Eigen::MatrixXd x(bs, d);
            std::vector<int> y(static_cast<std::size_t>(bs));
            for (Eigen::Index b = 0; b < bs; ++b) {
                x.row(b) = features.row(order[static_cast<std::size_t>(start + b)]);
                y[static_cast<std::size_t>(b)] =
                    labels[static_cast<std::size_t>(order[static_cast<std::size_t>(start + b)])];
            }

            Eigen::MatrixXd z1 = (x * m.w1).rowwise() + m.b1;
            Eigen::MatrixXd a1 = z1.cwiseMax(0.0);
            Eigen::MatrixXd logits = (a1 * m.w2).rowwise() + m.b2;
            Eigen::MatrixXd probs(bs, num_classes);
            for (Eigen::Index b = 0; b < bs; ++b) {
                Eigen::RowVectorXd row = logits.row(b);
                double mx = row.maxCoeff();
                Eigen::RowVectorXd ex = (row.array() - mx).exp();
                probs.row(b) = ex / ex.sum();
                epoch_loss -= std::log(
                    std::max(probs(b, y[static_cast<std::size_t>(b)]), 1e-300));
            }

            Eigen::MatrixXd dlogits = probs;
            for (Eigen::Index b = 0; b < bs; ++b) dlogits(b, y[static_cast<std::size_t>(b)]) -= 1.0;
            dlogits /= static_cast<double>(bs);

            Eigen::MatrixXd dw2 = a1.transpose() * dlogits;
            Eigen::RowVectorXd db2 = dlogits.colwise().sum();
            Eigen::MatrixXd da1 = dlogits * m.w2.transpose();
            Eigen::MatrixXd dz1 = (z1.array() > 0.0).select(da1, 0.0);
            Eigen::MatrixXd dw1 = x.transpose() * dz1;
            Eigen::RowVectorXd db1 = dz1.colwise().sum();

            m.w2 -= lr * dw2;
            m.b2 -= lr * db2;
            m.w1 -= lr * dw1;
            m.b1 -= lr * db1;
        }
        m.epoch_loss.push_back(epoch_loss / static_cast<double>(n));
    }
    return m;
}

CvResult mlp_cv(const Embedding2D& e, const LabelSet& labels, int hidden, int epochs,
                double lr, int folds, std::uint64_t seed) {
    if (hidden < 1) throw ConfigError("mlp: hidden must be >= 1");
    return cross_validate(
        e, labels, folds, seed,
        [&](const Eigen::MatrixXd& train, const std::vector<int>& train_labels,
            const Eigen::MatrixXd& test, int num_classes, std::uint64_t fold_seed) {
            MlpModel model =
                train_mlp(train, train_labels, num_classes, hidden, epochs, lr, fold_seed);
            return model.predict(test);
        },
        1);
}

double random_baseline(const LabelSet& labels) {
    if (labels.num_classes() < 1) throw InputError("random_baseline: no classes");
    return 1.0 / static_cast<double>(labels.num_classes());
}

EvalReport attribute_report(const Embedding2D& e, std::span<const WineRecord> records,
                            const ReportOptions& options) {
    std::set<WineId> embedded(e.ids.begin(), e.ids.end());
    std::set<WineId> shared;
    for (const auto& r : records) {
        WineId id = record_wine_id(r);
        if (embedded.count(id)) shared.insert(id);
    }
    if (shared.size() < 10)
        throw InputError("attribute_report: fewer than 10 ids shared between embedding and records");

    const auto attributes = all_attributes();
    struct Slot {
        bool present = false;
        double accuracy = 0.0;
        std::vector<double> folds;
        double baseline = 0.0;
        int classes = 0;
    };
    std::vector<Slot> slots(attributes.size());

    detail::parallel_for(static_cast<int>(attributes.size()), [&](int idx) {
        Attribute a = attributes[static_cast<std::size_t>(idx)];
        BinningScheme scheme;
        if (auto it = options.schemes.find(a); it != options.schemes.end()) scheme = it->second;

        BinResult bins;
        try {
            bins = bin_attribute(records, a, scheme);
        } catch (const InputError&) {
            return;  // attribute absent from the data
        }
        // Keep only wines the embedding knows.
        LabelSet filtered;
        filtered.class_names = bins.labels.class_names;
        for (std::size_t i = 0; i < bins.labels.ids.size(); ++i)
            if (embedded.count(bins.labels.ids[i])) {
                filtered.ids.push_back(bins.labels.ids[i]);
                filtered.labels.push_back(bins.labels.labels[i]);
            }
        if (static_cast<int>(filtered.ids.size()) < options.folds) return;

        std::uint64_t seed =
            options.seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(idx) + 1);
        CvResult cv = (options.classifier == Classifier::Knn)
                          ? knn_cv(e, filtered, options.knn_k, options.folds, seed)
                          : mlp_cv(e, filtered, options.mlp_hidden, options.mlp_epochs,
                                   options.mlp_lr, options.folds, seed);

        Slot& s = slots[static_cast<std::size_t>(idx)];
        s.present = true;
        s.accuracy = cv.mean_accuracy;
        s.folds = cv.fold_accuracies;
        s.baseline = random_baseline(filtered);
        s.classes = filtered.num_classes();
    });

    EvalReport report;
    double sum = 0.0;
    int present = 0;
    for (std::size_t i = 0; i < attributes.size(); ++i) {
        if (!slots[i].present) continue;
        std::string name = attribute_name(attributes[i]);
        report.per_attribute_accuracy[name] = slots[i].accuracy;
        report.per_attribute_folds[name] = slots[i].folds;
        report.baselines[name] = slots[i].baseline;
        report.class_counts[name] = slots[i].classes;
        sum += slots[i].accuracy;
        ++present;
    }
    if (present == 0) throw InputError("attribute_report: no attribute had usable data");
    report.mean_accuracy = sum / static_cast<double>(present);
    return report;
}

}  // namespace feast
