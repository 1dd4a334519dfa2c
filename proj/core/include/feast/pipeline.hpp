#pragma once

#include "feast/combiners.hpp"
#include "feast/data_model.hpp"
#include "feast/digitizer.hpp"
#include "feast/evaluation.hpp"
#include "feast/nmds.hpp"
#include "feast/pca.hpp"
#include "feast/tsne.hpp"
#include "feast/tste.hpp"
#include "feast/types.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace feast {

/// Declarative run description, parsed from a JSON config document.
/// The raw text is preserved so reports can echo it byte-identically.
struct PipelineConfig {
    std::string raw_text;
    std::filesystem::path base_dir;

    // Inputs
    std::optional<std::filesystem::path> napping_csv;
    std::optional<std::filesystem::path> attributes_csv;
    std::vector<std::filesystem::path> embedding_csvs;
    struct PhotoEntry {
        std::filesystem::path path;
        SheetKey key;
        std::map<std::string, WineId> legend;
    };
    std::vector<PhotoEntry> photos;
    ColorPalette palette;
    DigitizerParams digitizer;
    DistanceOptions distance;

    // Human kernel: nmds | tste | tsne (t-SNE over the distance matrix).
    std::string human_method = "nmds";
    NmdsParams nmds;
    TsteParams tste;
    TsneParams human_tsne;

    // Machine kernel: pca | tsne.
    std::string machine_method = "tsne";
    PoolMode pooling = PoolMode::Mean;
    bool standardize_machine = false;
    TsneParams machine_tsne;

    // Combiner: cca | procrustes | icp | snack | none.
    std::string combiner_method = "cca";
    int icp_max_iter = 50;
    double icp_tol = 1e-9;
    double snack_lambda = 0.5;
    TsneParams snack_tsne;
    TsteParams snack_tste;

    // Evaluation
    std::optional<double> tar_test_fraction;
    Classifier classifier = Classifier::Knn;
    int folds = 5;
    int knn_k = 5;
    int mlp_hidden = 100;
    int mlp_epochs = 200;
    double mlp_lr = 1e-3;

    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "out";
};

PipelineConfig parse_pipeline_config(const std::string& json_text,
                                     const std::filesystem::path& base_dir);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

/// Check that every referenced input path exists. Throws InputError.
void check_input_paths(const PipelineConfig& config);

struct DigitizeBatch {
    std::vector<StickerAnnotation> annotations;
    std::map<std::string, std::vector<std::string>> missing;  // photo -> colors
};

/// Digitize all configured photos (parallel across sheets) and write
/// digitized.csv under the output directory.
DigitizeBatch run_digitize(const PipelineConfig& config);

struct HumanKernelOutput {
    Embedding2D embedding;
    std::string meta_json;
};
/// Build the flavor-side 2D kernel from a dissimilarity matrix (or the
/// triplets derived from it when the method is t-STE).
HumanKernelOutput build_human_kernel(const PipelineConfig& config, const DistanceMatrix& m,
                                     std::span<const FlavorTriplet> triplets);

struct MachineKernelOutput {
    Embedding2D embedding;
    EmbeddingTable table;  // pooled, joined (and optionally standardized) input
    std::string meta_json;
};
/// Load, pool and join the configured embedding tables, then reduce to 2D.
MachineKernelOutput build_machine_kernel(const PipelineConfig& config);

struct CombineOutput {
    Embedding2D combined;
    std::string meta_json;
};
/// Align machine and human kernels per the configured combiner. SNaCK uses
/// the machine table and triplets instead of the 2D reductions.
CombineOutput combine_kernels(const PipelineConfig& config, const Embedding2D& machine,
                              const Embedding2D& human, const EmbeddingTable& machine_table,
                              std::span<const FlavorTriplet> triplets);

/// End-to-end run. Writes human.csv, machine.csv, combined.csv, report.json
/// and scatter.svg under output_dir; a ".partial" marker names the failed
/// stage when a run aborts. Returns the report JSON text.
std::string run_pipeline(const PipelineConfig& config);

}  // namespace feast
