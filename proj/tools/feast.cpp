#include "feast/csv.hpp"
#include "feast/parallel.hpp"
#include "feast/pipeline.hpp"
#include "feast/svg.hpp"
#include "feast/version.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace feast;

namespace {

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "Pipeline config (JSON)")->required();
    cmd->add_option("--seed", args.seed, "Override the config seed");
    cmd->add_option("--out", args.out_dir, "Override the config output directory");
}

PipelineConfig load_config(const CommonArgs& args) {
    PipelineConfig config = load_pipeline_config(args.config_path);
    if (args.seed) config.seed = *args.seed;
    if (args.out_dir) config.output_dir = fs::path(*args.out_dir);
    fs::create_directories(config.output_dir);
    return config;
}

// Ingest shared by the stage subcommands: napping rows (file overridable),
// distance matrix, triplets and the optional wine-disjoint split.
struct FlavorData {
    DistanceBuildResult distances;
    std::vector<FlavorTriplet> triplets;
    std::optional<TripletSplit> split;
    DistanceMatrix train_matrix;
    std::vector<FlavorTriplet> train_triplets;
};

FlavorData ingest_flavor(const PipelineConfig& config,
                         const std::optional<std::string>& napping_override) {
    fs::path napping = napping_override ? fs::path(*napping_override)
                                        : config.napping_csv.value_or(fs::path());
    if (napping.empty()) throw ConfigError("no napping CSV configured; use --napping");
    FlavorData data;
    auto annotations = parse_napping(napping);
    data.distances = build_distance_matrix(annotations, config.distance);
    data.triplets = triplets_from_matrix(data.distances.matrix);
    data.train_matrix = data.distances.matrix;
    data.train_triplets = data.triplets;
    if (config.tar_test_fraction) {
        data.split =
            split_triplets_by_wine(data.triplets, *config.tar_test_fraction, config.seed + 5);
        std::vector<Eigen::Index> keep;
        const auto& m = data.distances.matrix;
        DistanceMatrix train;
        for (Eigen::Index i = 0; i < m.size(); ++i)
            if (data.split->train_wines.count(m.ids[static_cast<std::size_t>(i)]))
                keep.push_back(i);
        train.ids.reserve(keep.size());
        for (Eigen::Index i : keep) train.ids.push_back(m.ids[static_cast<std::size_t>(i)]);
        train.d.resize(static_cast<Eigen::Index>(keep.size()),
                       static_cast<Eigen::Index>(keep.size()));
        for (std::size_t a = 0; a < keep.size(); ++a)
            for (std::size_t b = 0; b < keep.size(); ++b)
                train.d(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                    m.d(keep[a], keep[b]);
        data.train_matrix = std::move(train);
        data.train_triplets = data.split->train;
    }
    return data;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write file: " + path.string());
    out << text;
}

int run(int argc, char** argv) {
    CLI::App app{"feast: flavor embeddings from annotated similarity and text-image kernels"};
    app.set_version_flag("--version", FEAST_VERSION);
    app.require_subcommand(1);
    app.footer("Environment: FEAST_THREADS caps worker threads.");

    CommonArgs args;
    std::optional<std::string> napping_override;
    std::string human_csv, machine_csv, embedding_csv;
    std::string svg_path;
    std::optional<std::string> color_by, histogram_of;

    CLI::App* digitize = app.add_subcommand("digitize", "Photos -> digitized.csv");
    add_common(digitize, args);

    CLI::App* embed_human = app.add_subcommand("embed-human", "Napping CSV -> human.csv");
    add_common(embed_human, args);
    embed_human->add_option("--napping", napping_override, "Napping CSV (defaults to config)");

    CLI::App* embed_machine =
        app.add_subcommand("embed-machine", "Embedding tables -> machine.csv");
    add_common(embed_machine, args);

    CLI::App* combine = app.add_subcommand("combine", "human.csv + machine.csv -> combined.csv");
    add_common(combine, args);
    combine->add_option("--napping", napping_override, "Napping CSV (defaults to config)");
    combine->add_option("--human", human_csv, "Human kernel CSV (default <out>/human.csv)");
    combine->add_option("--machine", machine_csv, "Machine kernel CSV (default <out>/machine.csv)");

    CLI::App* evaluate = app.add_subcommand("evaluate", "Score an embedding CSV");
    add_common(evaluate, args);
    evaluate->add_option("--napping", napping_override, "Napping CSV (defaults to config)");
    evaluate->add_option("--embedding", embedding_csv,
                         "Embedding to score (default <out>/combined.csv)");

    CLI::App* pipeline = app.add_subcommand("pipeline", "Full run: ingest through report");
    add_common(pipeline, args);

    std::vector<std::string> batch_configs;
    CLI::App* batch = app.add_subcommand("batch", "Run several configs in parallel");
    batch->add_option("--configs", batch_configs, "Pipeline configs (JSON)")
        ->required()
        ->expected(-1);

    CLI::App* plot = app.add_subcommand("plot", "Render scatter/histogram SVGs");
    add_common(plot, args);
    plot->add_option("--embedding", embedding_csv,
                     "Embedding to draw (default <out>/combined.csv)");
    plot->add_option("--svg", svg_path, "Output SVG path (default <out>/scatter.svg)");
    plot->add_option("--color-by", color_by, "Attribute for class colors (needs attributes_csv)");
    plot->add_option("--histogram", histogram_of,
                     "Draw an attribute histogram instead of a scatter");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (batch->parsed()) {
        // Independent runs, isolated outputs, parallel across configs.
        std::vector<PipelineConfig> configs;
        for (const auto& path : batch_configs) configs.push_back(load_pipeline_config(path));
        std::vector<std::exception_ptr> errors(configs.size());
        feast::detail::parallel_for(static_cast<int>(configs.size()), [&](int i) {
            try {
                run_pipeline(configs[static_cast<std::size_t>(i)]);
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        });
        for (std::size_t i = 0; i < configs.size(); ++i) {
            if (errors[i]) {
                std::cout << batch_configs[i] << ": FAILED\n";
                std::rethrow_exception(errors[i]);
            }
            std::cout << batch_configs[i] << ": ok -> "
                      << (configs[i].output_dir / "report.json").string() << "\n";
        }
        return 0;
    }

    PipelineConfig config = load_config(args);

    if (digitize->parsed()) {
        check_input_paths(config);
        DigitizeBatch batch = run_digitize(config);
        write_napping_csv(batch.annotations, config.output_dir / "digitized.csv");
        std::cout << "digitized " << config.photos.size() << " sheet(s), "
                  << batch.annotations.size() << " sticker(s) -> "
                  << (config.output_dir / "digitized.csv").string() << "\n";
        for (const auto& [photo, colors] : batch.missing) {
            std::cout << "  missing in " << photo << ":";
            for (const auto& c : colors) std::cout << " " << c;
            std::cout << "\n";
        }
        return 0;
    }

    if (embed_human->parsed()) {
        FlavorData data = ingest_flavor(config, napping_override);
        HumanKernelOutput human =
            build_human_kernel(config, data.train_matrix, data.train_triplets);
        write_embedding2d_csv(human.embedding, config.output_dir / "human.csv");
        write_text(config.output_dir / "human_meta.json", human.meta_json + "\n");
        std::cout << "human kernel (" << config.human_method << ") -> "
                  << (config.output_dir / "human.csv").string() << "\n"
                  << human.meta_json << "\n";
        return 0;
    }

    if (embed_machine->parsed()) {
        check_input_paths(config);
        MachineKernelOutput machine = build_machine_kernel(config);
        write_embedding2d_csv(machine.embedding, config.output_dir / "machine.csv");
        write_text(config.output_dir / "machine_meta.json", machine.meta_json + "\n");
        std::cout << "machine kernel (" << config.machine_method << ") -> "
                  << (config.output_dir / "machine.csv").string() << "\n"
                  << machine.meta_json << "\n";
        return 0;
    }

    if (combine->parsed()) {
        fs::path human_path =
            human_csv.empty() ? config.output_dir / "human.csv" : fs::path(human_csv);
        fs::path machine_path =
            machine_csv.empty() ? config.output_dir / "machine.csv" : fs::path(machine_csv);
        Embedding2D human = read_embedding2d_csv(human_path);
        Embedding2D machine = read_embedding2d_csv(machine_path);

        EmbeddingTable table;
        std::vector<FlavorTriplet> triplets;
        if (config.combiner_method == "snack") {
            MachineKernelOutput mk = build_machine_kernel(config);
            table = std::move(mk.table);
            triplets = ingest_flavor(config, napping_override).train_triplets;
        }
        CombineOutput combined =
            combine_kernels(config, machine, human, table, triplets);
        write_embedding2d_csv(combined.combined, config.output_dir / "combined.csv");
        write_text(config.output_dir / "combine_meta.json", combined.meta_json + "\n");
        std::cout << "combined (" << config.combiner_method << ") -> "
                  << (config.output_dir / "combined.csv").string() << "\n"
                  << combined.meta_json << "\n";
        return 0;
    }

    if (evaluate->parsed()) {
        fs::path embedding_path =
            embedding_csv.empty() ? config.output_dir / "combined.csv" : fs::path(embedding_csv);
        Embedding2D e = read_embedding2d_csv(embedding_path);

        std::string out = "{";
        bool first = true;
        auto field = [&](const std::string& key, const std::string& value) {
            if (!first) out += ",";
            out += "\"" + key + "\":" + value;
            first = false;
        };
        FlavorData data = ingest_flavor(config, napping_override);
        if (data.split) {
            // Wine-disjoint splits can leave an embedding (e.g. the
            // train-only human kernel) with nothing to score.
            auto known = e.index_map();
            std::int64_t evaluable = 0;
            for (const auto& t : data.split->test)
                if (known.count(t.anchor) && known.count(t.near) && known.count(t.far))
                    ++evaluable;
            if (evaluable > 0) {
                TarResult tar = tar_score(e, data.split->test);
                field("tar", format_double(tar.tar));
                field("tar_evaluated", std::to_string(tar.evaluated));
                field("tar_skipped", std::to_string(tar.skipped));
            } else {
                field("tar", "null");
            }
            field("discarded_triplets", std::to_string(data.split->discarded));
        }
        if (config.attributes_csv) {
            auto records = parse_attributes(*config.attributes_csv);
            ReportOptions opts;
            opts.classifier = config.classifier;
            opts.folds = config.folds;
            opts.knn_k = config.knn_k;
            opts.mlp_hidden = config.mlp_hidden;
            opts.mlp_epochs = config.mlp_epochs;
            opts.mlp_lr = config.mlp_lr;
            opts.seed = config.seed + 4;
            EvalReport rep = attribute_report(e, records, opts);
            field("mean_accuracy", format_double(rep.mean_accuracy));
            std::string per = "{";
            bool inner_first = true;
            for (const auto& [name, acc] : rep.per_attribute_accuracy) {
                if (!inner_first) per += ",";
                per += "\"" + name + "\":" + format_double(acc);
                inner_first = false;
            }
            per += "}";
            field("per_attribute", per);
        }
        out += "}";
        write_text(config.output_dir / "evaluation.json", out + "\n");
        std::cout << out << "\n";
        return 0;
    }

    if (pipeline->parsed()) {
        run_pipeline(config);
        std::cout << "report -> " << (config.output_dir / "report.json").string() << "\n";
        return 0;
    }

    if (plot->parsed()) {
        fs::path embedding_path =
            embedding_csv.empty() ? config.output_dir / "combined.csv" : fs::path(embedding_csv);
        fs::path svg = svg_path.empty() ? config.output_dir / "scatter.svg" : fs::path(svg_path);

        if (histogram_of) {
            if (!config.attributes_csv)
                throw ConfigError("plot --histogram needs inputs.attributes_csv");
            auto records = parse_attributes(*config.attributes_csv);
            Attribute attr = attribute_from_name(*histogram_of);
            auto bins = bin_attribute(records, attr);
            std::map<std::string, std::int64_t> counts;
            for (std::size_t i = 0; i < bins.labels.labels.size(); ++i)
                ++counts[bins.labels.class_names[static_cast<std::size_t>(
                    bins.labels.labels[i])]];
            emit_histogram(counts, svg);
            std::cout << "histogram(" << *histogram_of << ") -> " << svg.string() << "\n";
            return 0;
        }

        Embedding2D e = read_embedding2d_csv(embedding_path);
        std::optional<LabelSet> labels;
        if (color_by) {
            if (!config.attributes_csv)
                throw ConfigError("plot --color-by needs inputs.attributes_csv");
            auto records = parse_attributes(*config.attributes_csv);
            labels = bin_attribute(records, attribute_from_name(*color_by)).labels;
        }
        emit_scatter(e, labels, svg);
        std::cout << "scatter -> " << svg.string() << "\n";
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
