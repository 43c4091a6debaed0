#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "poregrad/kvconfig.hpp"
#include "poregrad/segment.hpp"
#include "poregrad/synthgen.hpp"

namespace poregrad {

/// End-to-end experiment on synthetic data:
/// synth -> cutout -> split -> calibrate -> segment -> eval.
struct PipelineConfig {
    std::filesystem::path out_dir;
    int scenes = 5;
    std::uint64_t seed = 1;
    std::vector<ModelKind> models{ModelKind::local_threshold, ModelKind::att_adjusted};
    std::vector<double> split{0.55, 0.18, 0.27};
    synth::SceneConfig scene;
    LocalThresholdParams local;
    AttAdjustParams attadj;
    bool calibrate = true;
    std::vector<double> sigma_grid{0.5, 1, 1.5, 2, 3, 4, 6, 8, 12};
    std::vector<double> offset_grid{0, 0.005, 0.01, 0.015, 0.02, 0.025, 0.03, 0.04, 0.05, 0.06};
    std::vector<double> threshold_grid{0.005, 0.01, 0.015, 0.02, 0.025, 0.03, 0.035, 0.04, 0.05, 0.06, 0.08, 0.1};
    bool write_truth = true;
    int jobs = 1;

    void validate() const;

    /// Keys: scenes, seed, models, split, scene_config, scene.<SceneConfig key>,
    /// local_params, attadj_params, calibrate, sigma_grid, offset_grid,
    /// threshold_grid, truth. Relative paths resolve against `base_dir`.
    static PipelineConfig from_kv(const KeyValueConfig& kv, const std::filesystem::path& base_dir);
};

/// A failed stage; `cause_exit_code` follows the CLI convention.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& cause, int cause_exit_code);
    const std::string& stage() const noexcept { return stage_; }
    int exit_code() const noexcept { return exit_code_; }

private:
    std::string stage_;
    int exit_code_;
};

using PipelineLog = std::function<void(const std::string&)>;

/// Runs every stage and writes manifest.json. A failing stage's output is
/// renamed with a ".partial" suffix and StageError is thrown; earlier stages'
/// outputs are left intact.
nlohmann::json run_pipeline(const PipelineConfig& config, const PipelineLog& log = {});

/// Manifest over every file under `root` (except the manifest itself). JSON
/// and CSV artifacts are hashed with their timing fields removed.
nlohmann::json build_manifest(const std::filesystem::path& root);

}  // namespace poregrad
