#include "feast/pipeline.hpp"

#include "feast/csv.hpp"
#include "feast/image.hpp"
#include "feast/svg.hpp"
#include "feast/version.hpp"
#include "feast/parallel.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <set>
#include <unordered_set>

namespace feast {

namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void bad_config(const std::string& message) { throw ConfigError(message); }

const Json* child(const Json& j, const char* key) {
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

void check_keys(const Json& j, const char* where, std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed)
            if (it.key() == a) ok = true;
        if (!ok) bad_config(std::string("config ") + where + ": unknown key '" + it.key() + "'");
    }
}

double num_or(const Json& j, const char* key, double fallback) {
    const Json* c = child(j, key);
    if (!c) return fallback;
    if (!c->is_number()) bad_config(std::string("config: '") + key + "' must be a number");
    return c->get<double>();
}

int int_or(const Json& j, const char* key, int fallback) {
    const Json* c = child(j, key);
    if (!c) return fallback;
    if (!c->is_number_integer()) bad_config(std::string("config: '") + key + "' must be an integer");
    return c->get<int>();
}

bool bool_or(const Json& j, const char* key, bool fallback) {
    const Json* c = child(j, key);
    if (!c) return fallback;
    if (!c->is_boolean()) bad_config(std::string("config: '") + key + "' must be a boolean");
    return c->get<bool>();
}

std::string string_or(const Json& j, const char* key, const std::string& fallback) {
    const Json* c = child(j, key);
    if (!c) return fallback;
    if (!c->is_string()) bad_config(std::string("config: '") + key + "' must be a string");
    return c->get<std::string>();
}

TsneParams tsne_params_from(const Json& j, TsneParams base) {
    check_keys(j, "tsne", {"perplexity", "learning_rate", "max_iters", "exaggeration",
                           "exaggeration_iters", "momentum_early", "momentum_late"});
    base.perplexity = num_or(j, "perplexity", base.perplexity);
    base.learning_rate = num_or(j, "learning_rate", base.learning_rate);
    base.max_iters = int_or(j, "max_iters", base.max_iters);
    base.exaggeration = num_or(j, "exaggeration", base.exaggeration);
    base.exaggeration_iters = int_or(j, "exaggeration_iters", base.exaggeration_iters);
    base.momentum_early = num_or(j, "momentum_early", base.momentum_early);
    base.momentum_late = num_or(j, "momentum_late", base.momentum_late);
    return base;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

}  // namespace

PipelineConfig parse_pipeline_config(const std::string& json_text,
                                     const std::filesystem::path& base_dir) {
    Json j;
    try {
        j = Json::parse(json_text);
    } catch (const Json::parse_error& e) {
        bad_config(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) bad_config("config root must be a JSON object");
    check_keys(j, "root",
               {"inputs", "digitizer", "distance", "human_kernel", "machine_kernel", "combiner",
                "evaluation", "seed", "output_dir"});

    PipelineConfig c;
    c.raw_text = json_text;
    c.base_dir = base_dir;
    c.seed = static_cast<std::uint64_t>(num_or(j, "seed", 0.0));
    c.output_dir = resolve(base_dir, string_or(j, "output_dir", "out"));

    if (const Json* inputs = child(j, "inputs")) {
        check_keys(*inputs, "inputs",
                   {"napping_csv", "attributes_csv", "embeddings", "photos", "palette"});
        if (const Json* p = child(*inputs, "napping_csv"))
            c.napping_csv = resolve(base_dir, p->get<std::string>());
        if (const Json* p = child(*inputs, "attributes_csv"))
            c.attributes_csv = resolve(base_dir, p->get<std::string>());
        if (const Json* arr = child(*inputs, "embeddings")) {
            if (!arr->is_array()) bad_config("config: inputs.embeddings must be an array");
            for (const auto& e : *arr) c.embedding_csvs.push_back(resolve(base_dir, e.get<std::string>()));
        }
        if (const Json* photos = child(*inputs, "photos")) {
            if (!photos->is_array()) bad_config("config: inputs.photos must be an array");
            for (const auto& p : *photos) {
                check_keys(p, "photo",
                           {"path", "event_name", "session_round_name", "experiment_no", "legend"});
                PipelineConfig::PhotoEntry entry;
                entry.path = resolve(base_dir, p.at("path").get<std::string>());
                entry.key.event_name = string_or(p, "event_name", "event");
                entry.key.session_round_name = string_or(p, "session_round_name", "r1");
                entry.key.experiment_no = int_or(p, "experiment_no", 0);
                if (const Json* legend = child(p, "legend"))
                    for (auto it = legend->begin(); it != legend->end(); ++it)
                        entry.legend[it.key()] = it.value().get<WineId>();
                if (entry.legend.empty()) bad_config("config: photo entries need a legend");
                c.photos.push_back(std::move(entry));
            }
        }
        if (const Json* palette = child(*inputs, "palette")) {
            for (auto it = palette->begin(); it != palette->end(); ++it) {
                const Json& v = it.value();
                check_keys(v, "palette entry", {"hue", "sat", "val"});
                PaletteEntry entry;
                entry.name = it.key();
                auto range = [&](const char* key, double lo, double hi, double& out_lo,
                                 double& out_hi) {
                    if (const Json* r = child(v, key)) {
                        if (!r->is_array() || r->size() != 2)
                            bad_config("config: palette ranges are [lo, hi] pairs");
                        out_lo = (*r)[0].get<double>();
                        out_hi = (*r)[1].get<double>();
                    } else {
                        out_lo = lo;
                        out_hi = hi;
                    }
                };
                range("hue", 0.0, 360.0, entry.hue_min, entry.hue_max);
                range("sat", 0.0, 1.0, entry.sat_min, entry.sat_max);
                range("val", 0.0, 1.0, entry.val_min, entry.val_max);
                c.palette.entries.push_back(std::move(entry));
            }
        }
    }

    if (const Json* d = child(j, "digitizer")) {
        check_keys(*d, "digitizer",
                   {"canonical_width", "canonical_height", "min_blob_area", "harris_window",
                    "harris_k", "harris_threshold"});
        c.digitizer.canonical_width = int_or(*d, "canonical_width", c.digitizer.canonical_width);
        c.digitizer.canonical_height = int_or(*d, "canonical_height", c.digitizer.canonical_height);
        c.digitizer.min_blob_area = int_or(*d, "min_blob_area", static_cast<int>(c.digitizer.min_blob_area));
        c.digitizer.harris_window = int_or(*d, "harris_window", c.digitizer.harris_window);
        c.digitizer.harris_k = num_or(*d, "harris_k", c.digitizer.harris_k);
        c.digitizer.harris_threshold = num_or(*d, "harris_threshold", c.digitizer.harris_threshold);
    }

    if (const Json* d = child(j, "distance")) {
        check_keys(*d, "distance", {"normalize", "aggregate"});
        c.distance.normalize = bool_or(*d, "normalize", false);
        std::string agg = string_or(*d, "aggregate", "mean");
        if (agg == "mean") c.distance.aggregate = PairAggregate::Mean;
        else if (agg == "median") c.distance.aggregate = PairAggregate::Median;
        else bad_config("config: distance.aggregate must be 'mean' or 'median'");
    }

    if (const Json* h = child(j, "human_kernel")) {
        check_keys(*h, "human_kernel", {"method", "nmds", "tste", "tsne"});
        c.human_method = string_or(*h, "method", "nmds");
        if (c.human_method != "nmds" && c.human_method != "tste" && c.human_method != "tsne")
            bad_config("config: human_kernel.method must be one of nmds, tste, tsne");
        if (const Json* n = child(*h, "nmds")) {
            check_keys(*n, "nmds", {"n_init", "max_iter", "eps"});
            c.nmds.n_init = int_or(*n, "n_init", c.nmds.n_init);
            c.nmds.max_iter = int_or(*n, "max_iter", c.nmds.max_iter);
            c.nmds.eps = num_or(*n, "eps", c.nmds.eps);
        }
        if (const Json* t = child(*h, "tste")) {
            check_keys(*t, "tste", {"alpha", "learning_rate", "max_iters"});
            c.tste.alpha = num_or(*t, "alpha", c.tste.alpha);
            c.tste.learning_rate = num_or(*t, "learning_rate", c.tste.learning_rate);
            c.tste.max_iters = int_or(*t, "max_iters", c.tste.max_iters);
        }
        if (const Json* t = child(*h, "tsne")) c.human_tsne = tsne_params_from(*t, c.human_tsne);
    }

    if (const Json* m = child(j, "machine_kernel")) {
        check_keys(*m, "machine_kernel", {"method", "pooling", "standardize", "tsne"});
        c.machine_method = string_or(*m, "method", "tsne");
        if (c.machine_method != "pca" && c.machine_method != "tsne")
            bad_config("config: machine_kernel.method must be 'pca' or 'tsne'");
        std::string pooling = string_or(*m, "pooling", "mean");
        if (pooling == "mean") c.pooling = PoolMode::Mean;
        else if (pooling == "first") c.pooling = PoolMode::First;
        else if (pooling == "concat_truncate") c.pooling = PoolMode::ConcatTruncate;
        else bad_config("config: machine_kernel.pooling must be mean, first or concat_truncate");
        c.standardize_machine = bool_or(*m, "standardize", false);
        if (const Json* t = child(*m, "tsne")) c.machine_tsne = tsne_params_from(*t, c.machine_tsne);
    }

    if (const Json* cm = child(j, "combiner")) {
        check_keys(*cm, "combiner", {"method", "icp", "snack"});
        c.combiner_method = string_or(*cm, "method", "cca");
        const std::set<std::string> methods = {"cca", "procrustes", "icp", "snack", "none"};
        if (!methods.count(c.combiner_method))
            bad_config("config: combiner.method must be one of cca, procrustes, icp, snack, none");
        if (const Json* icp = child(*cm, "icp")) {
            check_keys(*icp, "icp", {"max_iter", "tol"});
            c.icp_max_iter = int_or(*icp, "max_iter", c.icp_max_iter);
            c.icp_tol = num_or(*icp, "tol", c.icp_tol);
        }
        if (const Json* snack = child(*cm, "snack")) {
            check_keys(*snack, "snack", {"lambda", "tsne", "tste_alpha"});
            c.snack_lambda = num_or(*snack, "lambda", c.snack_lambda);
            if (!(c.snack_lambda >= 0.0 && c.snack_lambda <= 1.0))
                bad_config("config: combiner.snack.lambda must lie in [0, 1]");
            if (const Json* t = child(*snack, "tsne")) c.snack_tsne = tsne_params_from(*t, c.snack_tsne);
            c.snack_tste.alpha = num_or(*snack, "tste_alpha", c.snack_tste.alpha);
        }
    }

    if (const Json* e = child(j, "evaluation")) {
        check_keys(*e, "evaluation",
                   {"tar_test_fraction", "classifier", "folds", "knn_k", "mlp"});
        if (const Json* f = child(*e, "tar_test_fraction")) {
            double fraction = f->get<double>();
            if (!(fraction > 0.0 && fraction < 1.0))
                bad_config("config: evaluation.tar_test_fraction must lie in (0, 1)");
            c.tar_test_fraction = fraction;
        }
        std::string classifier = string_or(*e, "classifier", "knn");
        if (classifier == "knn") c.classifier = Classifier::Knn;
        else if (classifier == "mlp") c.classifier = Classifier::Mlp;
        else bad_config("config: evaluation.classifier must be 'knn' or 'mlp'");
        c.folds = int_or(*e, "folds", c.folds);
        c.knn_k = int_or(*e, "knn_k", c.knn_k);
        if (const Json* mlp = child(*e, "mlp")) {
            check_keys(*mlp, "mlp", {"hidden", "epochs", "lr"});
            c.mlp_hidden = int_or(*mlp, "hidden", c.mlp_hidden);
            c.mlp_epochs = int_or(*mlp, "epochs", c.mlp_epochs);
            c.mlp_lr = num_or(*mlp, "lr", c.mlp_lr);
        }
    }

    if (!c.napping_csv && c.photos.empty())
        bad_config("config: inputs must provide napping_csv and/or photos");
    if (c.embedding_csvs.empty())
        bad_config("config: inputs.embeddings must list at least one table");
    return c;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open config: " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_pipeline_config(text, path.parent_path());
}

void check_input_paths(const PipelineConfig& config) {
    auto require = [](const std::filesystem::path& p) {
        if (!std::filesystem::exists(p)) throw InputError("input path does not exist: " + p.string());
    };
    if (config.napping_csv) require(*config.napping_csv);
    if (config.attributes_csv) require(*config.attributes_csv);
    for (const auto& p : config.embedding_csvs) require(p);
    for (const auto& photo : config.photos) require(photo.path);
}

DigitizeBatch run_digitize(const PipelineConfig& config) {
    DigitizeBatch batch;
    std::vector<DigitizeResult> results(config.photos.size());
    detail::parallel_for(static_cast<int>(config.photos.size()), [&](int i) {
        const auto& photo = config.photos[static_cast<std::size_t>(i)];
        RasterImage image = load_image(photo.path);
        results[static_cast<std::size_t>(i)] =
            digitize_sheet(image, config.palette, photo.legend, photo.key, config.digitizer);
    });
    for (std::size_t i = 0; i < results.size(); ++i) {
        auto& r = results[i];
        batch.annotations.insert(batch.annotations.end(), r.annotations.begin(),
                                 r.annotations.end());
        if (!r.missing_colors.empty())
            batch.missing[config.photos[i].path.string()] = r.missing_colors;
    }
    return batch;
}

HumanKernelOutput build_human_kernel(const PipelineConfig& config, const DistanceMatrix& m,
                                     std::span<const FlavorTriplet> triplets) {
    HumanKernelOutput out;
    Json meta;
    meta["method"] = config.human_method;
    if (config.human_method == "nmds") {
        NmdsParams params = config.nmds;
        params.seed = config.seed + 1;
        NmdsResult res = nmds_smacof(m, params);
        out.embedding = std::move(res.embedding);
        meta["stress"] = res.stress;
        meta["iterations"] = res.iterations_used;
        meta["restart_index"] = res.restart_index;
    } else if (config.human_method == "tste") {
        TsteParams params = config.tste;
        params.seed = config.seed + 1;
        out.embedding = tste_embed(triplets, params);
        meta["triplets"] = triplets.size();
    } else {
        TsneParams params = config.human_tsne;
        params.seed = config.seed + 1;
        TsneResult res = tsne_from_distances(m, params);
        out.embedding = std::move(res.embedding);
        meta["kl"] = res.kl_final;
        meta["iterations"] = res.iterations;
    }
    out.meta_json = meta.dump();
    return out;
}

MachineKernelOutput build_machine_kernel(const PipelineConfig& config) {
    MachineKernelOutput out;

    std::vector<EmbeddingTable> tables;
    for (const auto& path : config.embedding_csvs)
        tables.push_back(pool_embeddings(load_embedding_rows(path), config.pooling));

    // Inner join on ids shared by every modality, columns concatenated.
    std::set<WineId> shared(tables[0].ids.begin(), tables[0].ids.end());
    for (std::size_t t = 1; t < tables.size(); ++t) {
        std::set<WineId> next;
        for (WineId id : tables[t].ids)
            if (shared.count(id)) next.insert(id);
        shared = std::move(next);
    }
    if (shared.empty()) throw InputError("machine kernel: embedding tables share no ids");

    Eigen::Index total_dims = 0;
    for (const auto& t : tables) total_dims += t.dims();
    EmbeddingTable joined;
    joined.ids.assign(shared.begin(), shared.end());
    joined.vectors.resize(static_cast<Eigen::Index>(shared.size()), total_dims);
    Eigen::Index col = 0;
    for (const auto& t : tables) {
        std::unordered_map<WineId, Eigen::Index> index;
        for (std::size_t i = 0; i < t.ids.size(); ++i)
            index[t.ids[i]] = static_cast<Eigen::Index>(i);
        for (std::size_t r = 0; r < joined.ids.size(); ++r)
            joined.vectors.block(static_cast<Eigen::Index>(r), col, 1, t.dims()) =
                t.vectors.row(index.at(joined.ids[r]));
        col += t.dims();
    }
    if (config.standardize_machine) joined = standardize(joined);

    Json meta;
    meta["method"] = config.machine_method;
    meta["tables"] = config.embedding_csvs.size();
    meta["wines"] = joined.ids.size();
    meta["dims"] = joined.dims();
    if (config.machine_method == "pca") {
        out.embedding = pca_reduce(joined);
    } else {
        TsneParams params = config.machine_tsne;
        params.seed = config.seed + 2;
        TsneResult res = tsne_reduce(joined, params);
        out.embedding = std::move(res.embedding);
        meta["kl"] = res.kl_final;
        meta["kl_after_exaggeration"] = res.kl_after_exaggeration;
        meta["iterations"] = res.iterations;
        meta["jitter_applied"] = res.jitter_applied;
    }
    out.table = std::move(joined);
    out.meta_json = meta.dump();
    return out;
}

CombineOutput combine_kernels(const PipelineConfig& config, const Embedding2D& machine,
                              const Embedding2D& human, const EmbeddingTable& machine_table,
                              std::span<const FlavorTriplet> triplets) {
    CombineOutput out;
    Json meta;
    meta["method"] = config.combiner_method;

    auto average_with_machine = [&](const Embedding2D& aligned_human) {
        auto h_index = aligned_human.index_map();
        Embedding2D combined;
        combined.ids = machine.ids;
        combined.points = machine.points;
        Eigen::Index overlap = 0;
        for (Eigen::Index i = 0; i < machine.size(); ++i) {
            auto it = h_index.find(machine.ids[static_cast<std::size_t>(i)]);
            if (it == h_index.end()) continue;
            combined.points.row(i) =
                0.5 * (machine.points.row(i) + aligned_human.points.row(it->second));
            ++overlap;
        }
        meta["overlap"] = overlap;
        return combined;
    };

    if (config.combiner_method == "none") {
        out.combined = machine;
    } else if (config.combiner_method == "cca") {
        CcaResult res = cca_align(machine, human);
        out.combined = std::move(res.combined);
        meta["correlations"] = {res.correlations[0], res.correlations[1]};
        meta["rank_deficient"] = res.rank_deficient;
        meta["overlap"] = std::count(res.overlap_supported.begin(), res.overlap_supported.end(), true);
    } else if (config.combiner_method == "procrustes") {
        ProcrustesResult res = procrustes_align(machine, human);
        meta["disparity"] = res.disparity;
        out.combined = average_with_machine(res.aligned);
    } else if (config.combiner_method == "icp") {
        IcpResult res = icp_align(machine, human, config.icp_max_iter, config.icp_tol);
        meta["iterations"] = res.iterations;
        meta["final_mse"] = res.mse_trace.empty() ? 0.0 : res.mse_trace.back();
        out.combined = average_with_machine(res.aligned);
    } else {  // snack
        std::unordered_set<WineId> table_ids(machine_table.ids.begin(), machine_table.ids.end());
        std::vector<FlavorTriplet> covered;
        for (const auto& t : triplets)
            if (table_ids.count(t.anchor) && table_ids.count(t.near) && table_ids.count(t.far))
                covered.push_back(t);
        if (covered.empty())
            throw InputError("snack: no triplets are covered by the machine table");
        TsneParams params = config.snack_tsne;
        params.seed = config.seed + 3;
        out.combined = snack_embed(machine_table, covered, config.snack_lambda, params,
                                   config.snack_tste);
        meta["lambda"] = config.snack_lambda;
        meta["triplets_used"] = covered.size();
        meta["triplets_dropped"] = triplets.size() - covered.size();
    }
    out.meta_json = meta.dump();
    return out;
}

namespace {

// Restrict a distance matrix to the given wines.
DistanceMatrix restrict_matrix(const DistanceMatrix& m, const std::set<WineId>& wines) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < m.size(); ++i)
        if (wines.count(m.ids[static_cast<std::size_t>(i)])) keep.push_back(i);
    DistanceMatrix out;
    out.ids.reserve(keep.size());
    for (Eigen::Index i : keep) out.ids.push_back(m.ids[static_cast<std::size_t>(i)]);
    out.d.resize(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t a = 0; a < keep.size(); ++a)
        for (std::size_t b = 0; b < keep.size(); ++b)
            out.d(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                m.d(keep[a], keep[b]);
    return out;
}

template <class F>
auto timed_stage(const char* name, std::map<std::string, double>& timings, F&& f) {
    auto start = std::chrono::steady_clock::now();
    auto rethrow = [&](const std::string& what) { return std::string(name) + ": " + what; };
    try {
        auto result = f();
        timings[name] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return result;
    } catch (const ConfigError& e) {
        throw ConfigError(rethrow(e.what()));
    } catch (const InputError& e) {
        throw InputError(rethrow(e.what()));
    } catch (const NumericError& e) {
        throw NumericError(rethrow(e.what()));
    }
}

}  // namespace

std::string run_pipeline(const PipelineConfig& config) {
    check_input_paths(config);
    std::filesystem::create_directories(config.output_dir);
    const auto partial_marker = config.output_dir / ".partial";
    {
        std::ofstream marker(partial_marker);
        marker << "running\n";
    }

    Json report;
    report["toolkit"] = "feast";
    report["version"] = FEAST_VERSION;
    report["config_echo"] = config.raw_text;
    report["seed"] = config.seed;
    Json stages = Json::object();
    std::map<std::string, double> timings;
    std::string current_stage = "setup";

    try {
        // Digitize (optional).
        std::vector<StickerAnnotation> annotations;
        if (!config.photos.empty()) {
            current_stage = "digitize";
            DigitizeBatch batch = timed_stage("digitize", timings,
                                              [&] { return run_digitize(config); });
            write_napping_csv(batch.annotations, config.output_dir / "digitized.csv");
            Json d;
            d["sheets"] = config.photos.size();
            d["stickers"] = batch.annotations.size();
            d["missing"] = batch.missing;
            stages["digitize"] = d;
            annotations = std::move(batch.annotations);
        }

        // Ingest.
        current_stage = "ingest";
        struct Ingested {
            DistanceBuildResult distances;
            std::vector<WineRecord> records;
            std::vector<FlavorTriplet> triplets;
        };
        Ingested in = timed_stage("ingest", timings, [&] {
            Ingested data;
            if (config.napping_csv) {
                auto parsed = parse_napping(*config.napping_csv);
                annotations.insert(annotations.end(), parsed.begin(), parsed.end());
            }
            if (annotations.empty()) throw InputError("no napping annotations available");
            data.distances = build_distance_matrix(annotations, config.distance);
            if (config.attributes_csv) data.records = parse_attributes(*config.attributes_csv);
            data.triplets = triplets_from_matrix(data.distances.matrix);
            return data;
        });
        {
            Json ing;
            ing["wines"] = in.distances.matrix.ids.size();
            ing["skipped_sheets"] = in.distances.skipped_sheets;
            Eigen::Index observed = 0;
            for (Eigen::Index i = 0; i < in.distances.matrix.size(); ++i)
                for (Eigen::Index k = i + 1; k < in.distances.matrix.size(); ++k)
                    if (in.distances.matrix.d(i, k) > 0.0) ++observed;
            ing["observed_pairs"] = observed;
            ing["triplets"] = in.triplets.size();
            ing["records"] = in.records.size();
            stages["ingest"] = ing;
        }

        // Wine-disjoint split for TAR.
        current_stage = "split";
        std::optional<TripletSplit> split;
        DistanceMatrix train_matrix = in.distances.matrix;
        std::span<const FlavorTriplet> train_triplets(in.triplets);
        if (config.tar_test_fraction) {
            split = timed_stage("split", timings, [&] {
                return split_triplets_by_wine(in.triplets, *config.tar_test_fraction,
                                              config.seed + 5);
            });
            train_matrix = restrict_matrix(in.distances.matrix, split->train_wines);
            train_triplets = split->train;
            Json s;
            s["test_fraction"] = *config.tar_test_fraction;
            s["train_wines"] = split->train_wines.size();
            s["test_wines"] = split->test_wines.size();
            s["train_triplets"] = split->train.size();
            s["test_triplets"] = split->test.size();
            s["discarded_triplets"] = split->discarded;
            stages["split"] = s;
        }

        // Human kernel.
        current_stage = "human";
        HumanKernelOutput human = timed_stage("human", timings, [&] {
            return build_human_kernel(config, train_matrix, train_triplets);
        });
        write_embedding2d_csv(human.embedding, config.output_dir / "human.csv");
        {
            std::ofstream sidecar(config.output_dir / "human_meta.json", std::ios::binary);
            sidecar << human.meta_json << "\n";
        }
        stages["human"] = Json::parse(human.meta_json);

        // Machine kernel.
        current_stage = "machine";
        MachineKernelOutput machine =
            timed_stage("machine", timings, [&] { return build_machine_kernel(config); });
        write_embedding2d_csv(machine.embedding, config.output_dir / "machine.csv");
        {
            std::ofstream sidecar(config.output_dir / "machine_meta.json", std::ios::binary);
            sidecar << machine.meta_json << "\n";
        }
        stages["machine"] = Json::parse(machine.meta_json);

        // Combine.
        current_stage = "combine";
        CombineOutput combined = timed_stage("combine", timings, [&] {
            return combine_kernels(config, machine.embedding, human.embedding, machine.table,
                                   train_triplets);
        });
        write_embedding2d_csv(combined.combined, config.output_dir / "combined.csv");
        stages["combine"] = Json::parse(combined.meta_json);

        // Evaluate.
        current_stage = "evaluate";
        Json evaluation = timed_stage("evaluate", timings, [&] {
            Json ev;
            if (split) {
                TarResult tar = tar_score(combined.combined, split->test);
                ev["tar"] = tar.tar;
                ev["tar_evaluated"] = tar.evaluated;
                ev["tar_skipped"] = tar.skipped;
                TarResult machine_tar = tar_score(machine.embedding, split->test);
                ev["tar_machine_only"] = machine_tar.tar;
            }
            if (!in.records.empty()) {
                ReportOptions opts;
                opts.classifier = config.classifier;
                opts.folds = config.folds;
                opts.knn_k = config.knn_k;
                opts.mlp_hidden = config.mlp_hidden;
                opts.mlp_epochs = config.mlp_epochs;
                opts.mlp_lr = config.mlp_lr;
                opts.seed = config.seed + 4;
                EvalReport rep = attribute_report(combined.combined, in.records, opts);
                ev["classifier"] = config.classifier == Classifier::Knn ? "knn" : "mlp";
                ev["per_attribute"] = rep.per_attribute_accuracy;
                ev["baselines"] = rep.baselines;
                ev["class_counts"] = rep.class_counts;
                ev["mean_accuracy"] = rep.mean_accuracy;
            }
            return ev;
        });
        report["stages"] = stages;
        report["evaluation"] = evaluation;

        // Figures.
        current_stage = "figures";
        emit_scatter(combined.combined, std::nullopt, config.output_dir / "scatter.svg");
        timings["figures"] = 0.0;
    } catch (...) {
        std::ofstream marker(partial_marker);
        marker << current_stage << "\n";
        throw;
    }

    Json wall;
    double total = 0.0;
    for (const auto& [name, seconds] : timings) {
        wall[name] = seconds;
        total += seconds;
    }
    wall["total"] = total;
    report["wall_clock_seconds"] = wall;

    std::string text = report.dump(2);
    {
        std::ofstream out(config.output_dir / "report.json", std::ios::binary);
        if (!out) throw InputError("cannot write report.json");
        out << text << "\n";
    }
    std::filesystem::remove(partial_marker);
    return text;
}

}  // namespace feast
