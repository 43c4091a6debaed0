#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "poregrad/metrics.hpp"
#include "poregrad/preprocess.hpp"
#include "poregrad/segment.hpp"
#include "poregrad/synthgen.hpp"

// On-disk formats shared by the CLI subcommands and the pipeline.
namespace poregrad {

namespace fs = std::filesystem;

/// 16-bit level per unit of incident intensity in scene radiographs; leaves
/// headroom for noise above I0.
inline constexpr double kScenePngHeadroom = 1.25;

/// Keys whose values depend on wall-clock time.
const std::vector<std::string>& timing_keys();

/// Copy of `j` with every timing key removed at any depth.
nlohmann::json strip_timing(const nlohmann::json& j);

/// CSV text with the cells of timing columns (t_mean, wall_seconds,
/// per_particle) emptied. Lines starting with '#' are kept verbatim.
std::string strip_timing_csv(const std::string& csv);

std::string sha256_hex(const std::string& bytes);
std::string read_file(const fs::path& path);
void write_file(const fs::path& path, const std::string& bytes);
/// Parses a JSON file; throws DataError naming the file on failure.
nlohmann::json read_json(const fs::path& path);
void write_json(const fs::path& path, const nlohmann::json& j);

/// Orders "scene_2" before "scene_10".
bool natural_less(const std::string& a, const std::string& b);

/// Writes scene_<k>.png, scene_<k>_particles.png, scene_<k>_pores.png and
/// scene_<k>.json into `dir`.
void write_scene(const fs::path& dir, const std::string& id, const synth::SceneConfig& config,
                 const synth::GroundTruthScene& scene);

/// Reads a radiograph. The pixel pitch comes from `pixel_pitch` when given,
/// else from a sibling <stem>.json, else 1.
Radiograph load_radiograph(const fs::path& path, std::optional<double> pixel_pitch = std::nullopt);

/// Masks a radiograph, cuts out every particle and writes <id>_p<k>.png,
/// <id>_p<k>_mask.png, optional <id>_p<k>_truth.png and <id>_cutouts.json.
CutoutSet cutout_image(const fs::path& image_path, const std::optional<fs::path>& truth_path,
                       const fs::path& out_dir, std::optional<double> pixel_pitch = std::nullopt);

void write_cutouts(const fs::path& dir, const std::string& source_id, const CutoutSet& set);

/// Loads every cutout listed by the *_cutouts.json files in `dir`, in natural
/// id order. Truth masks are attached when present.
std::vector<ParticleCutout> load_cutouts(const fs::path& dir);

nlohmann::json fit_to_json(const AttenuationFit& fit);
nlohmann::json result_to_json(const ParticleCutout& cutout, const SegmentationResult& result,
                              double wall_seconds);

/// Writes <id>_pores.png and <id>_result.json.
void write_result(const fs::path& dir, const ParticleCutout& cutout,
                  const SegmentationResult& result, double wall_seconds);

struct EvalOutput {
    MetricsReport report;
    std::optional<RocCurve> roc;          // when probability maps were given
    std::vector<double> predicted_radii;  // source micrometers
    std::vector<double> truth_radii;
    std::size_t cutouts = 0;
};

/// Scores every <id>_pores.png (or <id>_prob.png) in `pred_dir` against the
/// <id>_truth.png and <id>_mask.png in `truth_dir`. Throws DataError
/// "eval requires truth" when a truth mask is missing.
EvalOutput evaluate_predictions(const fs::path& pred_dir, const fs::path& truth_dir);

nlohmann::json report_to_json(const MetricsReport& report, const RocCurve* roc = nullptr);
MetricsReport report_from_json(const nlohmann::json& j);
nlohmann::json roc_to_json(const RocCurve& roc);

/// Table rows in the order F1, TNR, FPR, FNR, TPR, t_mean.
std::string reports_to_csv(const std::vector<MetricsReport>& reports);

}  // namespace poregrad
