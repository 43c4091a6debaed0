#include "poregrad/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <sstream>

#include "poregrad/artifacts.hpp"
#include "poregrad/error.hpp"
#include "poregrad/parallel.hpp"
#include "poregrad/rng.hpp"

namespace poregrad {

namespace {

std::vector<ModelKind> parse_models(const std::string& text)
{
    std::vector<ModelKind> models;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b == std::string::npos)
            throw ParameterError("models: empty entry");
        const ModelKind m = parse_model(item.substr(b, e - b + 1));
        for (ModelKind seen : models)
            if (seen == m)
                throw ParameterError("models: duplicate entry " + item);
        models.push_back(m);
    }
    return models;
}

fs::path resolve(const fs::path& base, const std::string& p)
{
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

fs::path partial_name(const fs::path& p)
{
    return fs::path(p.string() + ".partial");
}

}  // namespace

void PipelineConfig::validate() const
{
    if (scenes < 1)
        throw ParameterError("pipeline: scenes must be >= 1");
    if (models.empty())
        throw ParameterError("pipeline: at least one model required");
    if (split.size() != 3)
        throw ParameterError("pipeline: split needs three fractions");
    double sum = 0;
    for (double f : split) {
        if (!(f >= 0))
            throw ParameterError("pipeline: split fractions must be non-negative");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw ParameterError("pipeline: split fractions must sum to 1");
    if (sigma_grid.empty() || offset_grid.empty() || threshold_grid.empty())
        throw ParameterError("pipeline: calibration grids must be non-empty");
    if (jobs < 1)
        throw ParameterError("pipeline: jobs must be >= 1");
    scene.validate();
    local.validate();
    attadj.validate();
}

PipelineConfig PipelineConfig::from_kv(const KeyValueConfig& kv, const fs::path& base_dir)
{
    PipelineConfig c;
    KeyValueConfig scene_kv;
    if (const auto p = kv.get("scene_config"))
        scene_kv = KeyValueConfig::load(resolve(base_dir, *p));
    for (const auto& [key, value] : kv.entries()) {
        if (key.rfind("scene.", 0) == 0)
            scene_kv.set(key.substr(6), value);
        else if (key != "scenes" && key != "seed" && key != "models" && key != "split" && key != "scene_config"
                 && key != "local_params" && key != "attadj_params" && key != "calibrate" && key != "sigma_grid"
                 && key != "offset_grid" && key != "threshold_grid" && key != "truth")
            throw ParameterError("pipeline config: unknown key '" + key + "'");
    }
    c.scene = synth::SceneConfig::from_kv(scene_kv);
    c.scenes = static_cast<int>(kv.get_int("scenes", c.scenes));
    const long seed = kv.get_int("seed", static_cast<long>(c.seed));
    if (seed < 0)
        throw ParameterError("pipeline config: seed must be non-negative");
    c.seed = static_cast<std::uint64_t>(seed);
    if (const auto m = kv.get("models"))
        c.models = parse_models(*m);
    c.split = kv.get_doubles("split", c.split);
    if (const auto p = kv.get("local_params"))
        c.local = LocalThresholdParams::from_kv(KeyValueConfig::load(resolve(base_dir, *p)));
    if (const auto p = kv.get("attadj_params"))
        c.attadj = AttAdjustParams::from_kv(KeyValueConfig::load(resolve(base_dir, *p)));
    c.calibrate = kv.get_bool("calibrate", c.calibrate);
    c.sigma_grid = kv.get_doubles("sigma_grid", c.sigma_grid);
    c.offset_grid = kv.get_doubles("offset_grid", c.offset_grid);
    c.threshold_grid = kv.get_doubles("threshold_grid", c.threshold_grid);
    c.write_truth = kv.get_bool("truth", c.write_truth);
    return c;
}

StageError::StageError(std::string stage, const std::string& cause, int cause_exit_code)
    : std::runtime_error("stage " + stage + " failed: " + cause), stage_(std::move(stage)),
      exit_code_(cause_exit_code)
{
}

nlohmann::json build_manifest(const fs::path& root)
{
    std::vector<std::pair<std::string, fs::path>> files;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file())
            continue;
        const std::string rel = fs::relative(entry.path(), root).generic_string();
        if (rel == "manifest.json")
            continue;
        files.emplace_back(rel, entry.path());
    }
    std::sort(files.begin(), files.end());
    nlohmann::json artifacts = nlohmann::json::array();
    for (const auto& [rel, path] : files) {
        std::string bytes = read_file(path);
        if (path.extension() == ".json")
            bytes = strip_timing(read_json(path)).dump(2) + "\n";
        else if (path.extension() == ".csv")
            bytes = strip_timing_csv(bytes);
        artifacts.push_back({{"path", rel}, {"bytes", bytes.size()}, {"sha256", sha256_hex(bytes)}});
    }
    return artifacts;
}

namespace {

struct Context {
    const PipelineConfig& config;
    const PipelineLog& log;
    fs::path scenes_dir, cutouts_dir, split_path, calibration_dir, predictions_dir, reports_dir;

    std::vector<ParticleCutout> cutouts{};
    SplitIndices split{};
    LocalThresholdParams local{};
    AttAdjustParams attadj{};
    std::map<ModelKind, std::vector<SegmentationResult>> results{};
    std::vector<std::vector<IterationRecord>> traces{};  // att-adjusted, per test cutout

    void say(const std::string& msg) const
    {
        if (log)
            log(msg);
    }
};

template <typename Fn>
void run_stage(const std::string& name, const fs::path& output, Context& ctx, Fn&& fn)
{
    ctx.say("stage " + name);
    try {
        fn();
    } catch (const std::exception& e) {
        std::error_code ec;
        if (fs::exists(output, ec)) {
            fs::remove_all(partial_name(output), ec);
            fs::rename(output, partial_name(output), ec);
        }
        throw StageError(name, e.what(), exit_code_for(e));
    }
}

std::vector<ParticleCutout> pick(const std::vector<ParticleCutout>& all, const std::vector<std::size_t>& idx)
{
    std::vector<ParticleCutout> out;
    out.reserve(idx.size());
    for (std::size_t i : idx)
        out.push_back(all[i]);
    return out;
}

bool all_have_truth(const std::vector<ParticleCutout>& set)
{
    for (const auto& c : set)
        if (!c.pore_truth)
            return false;
    return !set.empty();
}

nlohmann::json ids_of(const std::vector<ParticleCutout>& all, const std::vector<std::size_t>& idx)
{
    nlohmann::json out = nlohmann::json::array();
    for (std::size_t i : idx)
        out.push_back(all[i].id());
    return out;
}

void stage_synth(Context& ctx)
{
    const auto& cfg = ctx.config;
    fs::create_directories(ctx.scenes_dir);
    parallel_for(static_cast<std::size_t>(cfg.scenes), cfg.jobs, [&](std::size_t k) {
        synth::SceneConfig sc = cfg.scene;
        sc.rng_seed = derive_seed(cfg.seed, "scene", k);
        const auto scene = synth::project_scene(sc);
        write_scene(ctx.scenes_dir, "scene_" + std::to_string(k), sc, scene);
    });
}

void stage_cutout(Context& ctx)
{
    const auto& cfg = ctx.config;
    fs::create_directories(ctx.cutouts_dir);
    parallel_for(static_cast<std::size_t>(cfg.scenes), cfg.jobs, [&](std::size_t k) {
        const std::string id = "scene_" + std::to_string(k);
        std::optional<fs::path> truth;
        if (cfg.write_truth)
            truth = ctx.scenes_dir / (id + "_pores.png");
        cutout_image(ctx.scenes_dir / (id + ".png"), truth, ctx.cutouts_dir);
    });
    ctx.cutouts = load_cutouts(ctx.cutouts_dir);
    if (ctx.cutouts.empty())
        throw DataError("no particles were cut out");
}

void stage_split(Context& ctx)
{
    ctx.split = split_indices(ctx.cutouts.size(), ctx.config.split, ctx.config.seed);
    write_json(ctx.split_path, {{"kind", "split"},
                                {"fractions", ctx.config.split},
                                {"train", ids_of(ctx.cutouts, ctx.split.train)},
                                {"val", ids_of(ctx.cutouts, ctx.split.val)},
                                {"test", ids_of(ctx.cutouts, ctx.split.test)}});
}

bool has_model(const PipelineConfig& cfg, ModelKind m)
{
    return std::find(cfg.models.begin(), cfg.models.end(), m) != cfg.models.end();
}

void stage_calibrate(Context& ctx)
{
    const auto& cfg = ctx.config;
    fs::create_directories(ctx.calibration_dir);
    ctx.local = cfg.local;
    ctx.attadj = cfg.attadj;
    const auto val = pick(ctx.cutouts, ctx.split.val);
    if (!cfg.calibrate) {
        ctx.say("calibration disabled; using configured parameters");
    } else if (!all_have_truth(val)) {
        ctx.say("warning: validation set has no truth masks; calibration skipped");
    } else {
        if (has_model(cfg, ModelKind::local_threshold)) {
            const auto g = gridsearch_local(val, cfg.sigma_grid, cfg.offset_grid, cfg.local, cfg.jobs);
            nlohmann::json surface = nlohmann::json::array();
            for (const auto& cell : g.surface)
                surface.push_back({{"sigma", cell.sigma}, {"t_offset", cell.t_offset}, {"f1", cell.f1},
                                   {"degenerate", cell.degenerate}});
            write_json(ctx.calibration_dir / "local_gridsearch.json",
                       {{"kind", "local_gridsearch"},
                        {"best", {{"sigma", g.best.sigma}, {"t_offset", g.best.t_offset}, {"f1", g.best_cell.f1}}},
                        {"surface", surface}});
            ctx.local = g.best;
        }
        if (has_model(cfg, ModelKind::att_adjusted)) {
            const auto r = calibrate_residual_threshold(val, cfg.threshold_grid, cfg.attadj, cfg.jobs);
            nlohmann::json curve = nlohmann::json::array();
            for (const auto& cell : r.curve)
                curve.push_back({{"threshold", cell.threshold}, {"f1", cell.f1}, {"degenerate", cell.degenerate}});
            write_json(ctx.calibration_dir / "attadj_calibration.json",
                       {{"kind", "attadj_calibration"},
                        {"best", {{"residual_threshold", r.best_threshold}, {"f1", r.best_cell.f1}}},
                        {"curve", curve}});
            ctx.attadj.residual_threshold = r.best_threshold;
        }
    }
    if (has_model(cfg, ModelKind::local_threshold))
        write_file(ctx.calibration_dir / "local.params", ctx.local.to_kv().to_string());
    if (has_model(cfg, ModelKind::att_adjusted))
        write_file(ctx.calibration_dir / "attadj.params", ctx.attadj.to_kv().to_string());
}

void stage_segment(Context& ctx)
{
    const auto& cfg = ctx.config;
    const auto test = pick(ctx.cutouts, ctx.split.test);
    for (ModelKind model : cfg.models) {
        const fs::path dir = ctx.predictions_dir / model_name(model);
        fs::create_directories(dir);
        std::vector<SegmentationResult> results(test.size());
        if (model == ModelKind::att_adjusted)
            ctx.traces.assign(test.size(), {});
        parallel_for(test.size(), cfg.jobs, [&](std::size_t i) {
            const auto t0 = std::chrono::steady_clock::now();
            if (model == ModelKind::local_threshold)
                results[i] = local_threshold(test[i], ctx.local);
            else
                results[i] = att_adjusted_threshold(test[i], ctx.attadj, &ctx.traces[i]);
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            write_result(dir, test[i], results[i], secs);
        });
        ctx.results[model] = std::move(results);
    }
}

void stage_eval(Context& ctx)
{
    const auto& cfg = ctx.config;
    fs::create_directories(ctx.reports_dir);
    nlohmann::json reports = nlohmann::json::array();
    std::vector<MetricsReport> rows;
    nlohmann::json radii = nlohmann::json::object();
    nlohmann::json ks = nlohmann::json::object();
    std::vector<double> truth_radii;
    for (ModelKind model : cfg.models) {
        const auto out = evaluate_predictions(ctx.predictions_dir / model_name(model), ctx.cutouts_dir);
        reports.push_back(report_to_json(out.report));
        rows.push_back(out.report);
        radii[model_name(model)] = out.predicted_radii;
        truth_radii = out.truth_radii;
        ks[model_name(model)] = ks_distance(out.predicted_radii, out.truth_radii);
    }
    radii["truth"] = truth_radii;
    write_json(ctx.reports_dir / "metrics.json", {{"kind", "metrics_set"},
                                                  {"scope", "micro"},
                                                  {"eval_region", "particle_mask_union"},
                                                  {"test_cutouts", ctx.split.test.size()},
                                                  {"reports", reports}});
    write_file(ctx.reports_dir / "metrics.csv", reports_to_csv(rows));
    write_json(ctx.reports_dir / "pore_radii.json", {{"kind", "pore_radii"}, {"radii_um", radii}, {"ks_vs_truth", ks}});

    if (has_model(cfg, ModelKind::att_adjusted)) {
        const auto test = pick(ctx.cutouts, ctx.split.test);
        const auto& final_results = ctx.results.at(ModelKind::att_adjusted);
        nlohmann::json f1s = nlohmann::json::array();
        for (int it = 0; it < ctx.attadj.max_iterations; ++it) {
            ConfusionCounts total;
            for (std::size_t i = 0; i < test.size(); ++i) {
                const auto& trace = ctx.traces[i];
                // cutouts that stopped early keep their final mask
                const BinaryMask& mask = static_cast<std::size_t>(it) < trace.size()
                                             ? trace[static_cast<std::size_t>(it)].pore_mask
                                             : final_results[i].pore_mask;
                total += evaluate_cutout(test[i], mask);
            }
            f1s.push_back(f1(total).value);
        }
        write_json(ctx.reports_dir / "attadj_iterations.json", {{"kind", "iteration_trace"}, {"f1", f1s}});
    }
}

}  // namespace

nlohmann::json run_pipeline(const PipelineConfig& config, const PipelineLog& log)
{
    config.validate();
    Context ctx{config, log, config.out_dir / "scenes", config.out_dir / "cutouts",
                config.out_dir / "split.json", config.out_dir / "calibration",
                config.out_dir / "predictions", config.out_dir / "reports"};
    fs::create_directories(config.out_dir);
    for (const auto& p : {ctx.scenes_dir, ctx.cutouts_dir, ctx.split_path, ctx.calibration_dir,
                          ctx.predictions_dir, ctx.reports_dir, config.out_dir / "manifest.json"}) {
        fs::remove_all(p);
        fs::remove_all(partial_name(p));
    }

    run_stage("synth", ctx.scenes_dir, ctx, [&] { stage_synth(ctx); });
    run_stage("cutout", ctx.cutouts_dir, ctx, [&] { stage_cutout(ctx); });
    run_stage("split", ctx.split_path, ctx, [&] { stage_split(ctx); });
    run_stage("calibrate", ctx.calibration_dir, ctx, [&] { stage_calibrate(ctx); });
    run_stage("segment", ctx.predictions_dir, ctx, [&] { stage_segment(ctx); });
    run_stage("eval", ctx.reports_dir, ctx, [&] { stage_eval(ctx); });

    nlohmann::json models = nlohmann::json::array();
    for (ModelKind m : config.models)
        models.push_back(model_name(m));
    nlohmann::json manifest{{"kind", "manifest"},
                            {"seed", config.seed},
                            {"models", models},
                            {"counts",
                             {{"scenes", config.scenes},
                              {"cutouts", ctx.cutouts.size()},
                              {"train", ctx.split.train.size()},
                              {"val", ctx.split.val.size()},
                              {"test", ctx.split.test.size()},
                              {"metrics_reports", 1}}},
                            {"artifacts", build_manifest(config.out_dir)}};
    write_json(config.out_dir / "manifest.json", manifest);
    return manifest;
}

}  // namespace poregrad
