// poregrad: pore segmentation in single radiographs of powder particles.

#include <chrono>
#include <cmath>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "poregrad/artifacts.hpp"
#include "poregrad/attenuation.hpp"
#include "poregrad/bench.hpp"
#include "poregrad/distfield.hpp"
#include "poregrad/error.hpp"
#include "poregrad/image_io.hpp"
#include "poregrad/parallel.hpp"
#include "poregrad/pipeline.hpp"
#include "poregrad/plots.hpp"
#include "poregrad/rng.hpp"
#include "poregrad/segment.hpp"
#include "poregrad/synthgen.hpp"

using namespace poregrad;

namespace {

struct Globals {
    std::optional<std::uint64_t> seed;
    int jobs = 1;
    bool verbose = false;

    void log(const std::string& msg) const
    {
        if (verbose)
            std::cerr << "poregrad: " << msg << '\n';
    }
};

std::vector<int> parse_sizes(const std::string& text)
{
    std::vector<int> sizes;
    const auto dots = text.find("..");
    try {
        if (dots != std::string::npos) {
            const int lo = std::stoi(text.substr(0, dots));
            const int hi = std::stoi(text.substr(dots + 2));
            if (lo < 1 || hi < lo)
                throw ParameterError("--sizes: expected lo..hi with 1 <= lo <= hi");
            for (long n = lo; n <= hi; n *= 2)
                sizes.push_back(static_cast<int>(n));
            if (sizes.back() != hi)
                sizes.push_back(hi);
            return sizes;
        }
        for (double v : parse_double_list(text)) {
            if (v < 1 || v != std::floor(v))
                throw ParameterError("--sizes: batch sizes must be positive integers");
            sizes.push_back(static_cast<int>(v));
        }
    } catch (const std::logic_error&) {
        throw ParameterError("--sizes: cannot parse '" + text + "'");
    }
    if (sizes.empty())
        throw ParameterError("--sizes: no batch sizes given");
    return sizes;
}

LocalThresholdParams load_local(const std::string& path)
{
    return path.empty() ? LocalThresholdParams{} : LocalThresholdParams::from_kv(KeyValueConfig::load(path));
}

AttAdjustParams load_attadj(const std::string& path)
{
    return path.empty() ? AttAdjustParams{} : AttAdjustParams::from_kv(KeyValueConfig::load(path));
}

std::vector<ParticleCutout> load_nonempty(const std::string& dir)
{
    auto cutouts = load_cutouts(dir);
    if (cutouts.empty())
        throw DataError("no cutouts in " + dir);
    return cutouts;
}

int run_synth(const Globals& g, const std::string& config_path, const std::string& out, int count)
{
    synth::SceneConfig base;
    if (!config_path.empty())
        base = synth::SceneConfig::from_kv(KeyValueConfig::load(config_path));
    if (count < 1)
        throw ParameterError("--count must be >= 1");
    const std::uint64_t root = g.seed.value_or(base.rng_seed);
    parallel_for(static_cast<std::size_t>(count), g.jobs, [&](std::size_t k) {
        synth::SceneConfig sc = base;
        sc.rng_seed = derive_seed(root, "scene", k);
        const auto scene = synth::project_scene(sc);
        write_scene(out, "scene_" + std::to_string(k), sc, scene);
    });
    g.log("wrote " + std::to_string(count) + " scene(s) to " + out);
    return 0;
}

int run_cutout(const Globals& g, const std::vector<std::string>& inputs, const std::string& truth,
               const std::string& out, std::optional<double> pitch)
{
    if (!truth.empty() && inputs.size() != 1)
        throw ParameterError("--truth needs exactly one --in image");
    for (const auto& in : inputs) {
        std::optional<fs::path> t;
        if (!truth.empty())
            t = truth;
        const auto set = cutout_image(in, t, out, pitch);
        g.log(in + ": " + std::to_string(set.cutouts.size()) + " cutout(s), " + std::to_string(set.skipped.size())
              + " skipped");
    }
    return 0;
}

int run_fit(const Globals& g, const std::string& in, const std::string& mask_path, const std::string& out,
            const std::string& profile_csv, const std::string& ideal_png, const std::string& residual_png, int bins,
            double pct)
{
    const Radiograph img = read_radiograph(in);
    const BinaryMask mask = read_mask(mask_path);
    require_same_shape(img.pixels, mask, "fit mask");
    const DistanceField field = distance_transform(mask);
    const BinnedProfile profile = binned_percentile_profile(field, img.pixels, mask, bins, pct);
    const AttenuationFit fit = fit_attenuation(profile);
    auto j = fit_to_json(fit);
    j["kind"] = "attenuation_fit";
    j["bins"] = bins;
    j["percentile"] = pct;

    if (!profile_csv.empty()) {
        std::ostringstream csv;
        csv << "bin_mid,value,count\n" << std::setprecision(10);
        for (std::size_t i = 0; i < profile.counts.size(); ++i) {
            csv << profile.midpoint(i) << ',';
            if (std::isfinite(profile.values[i]))
                csv << profile.values[i];
            csv << ',' << profile.counts[i] << '\n';
        }
        write_file(profile_csv, csv.str());
    }
    const Image ideal = ideal_particle(fit, field, mask, img.pixels);
    if (!ideal_png.empty())
        write_png16(ideal_png, ideal);
    if (!residual_png.empty()) {
        const auto res = subtract(img.pixels, ideal, mask, fit);
        const double lo = min_value(res.residual), hi = max_value(res.residual);
        const double scale = hi > lo ? 65535.0 / (hi - lo) : 1.0;
        Image shifted = res.residual;
        for (double& v : shifted.values())
            v -= lo;
        write_png16(residual_png, shifted, scale);
        j["residual_png"] = {{"path", residual_png}, {"offset", lo}, {"scale", scale},
                             {"decode", "residual = level / scale + offset"}};
    }
    write_json(out, j);
    g.log("a=" + std::to_string(fit.a) + " b=" + std::to_string(fit.b) + " c=" + std::to_string(fit.c));
    return 0;
}

int run_segment(const Globals& g, const std::string& model_name_arg, const std::string& params, const std::string& in,
                const std::string& out)
{
    const ModelKind model = parse_model(model_name_arg);
    const auto local = model == ModelKind::local_threshold ? load_local(params) : LocalThresholdParams{};
    const auto attadj = model == ModelKind::att_adjusted ? load_attadj(params) : AttAdjustParams{};
    const auto cutouts = load_nonempty(in);
    parallel_for(cutouts.size(), g.jobs, [&](std::size_t i) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto result = model == ModelKind::local_threshold ? local_threshold(cutouts[i], local)
                                                                 : att_adjusted_threshold(cutouts[i], attadj);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        write_result(out, cutouts[i], result, secs);
    });
    g.log("segmented " + std::to_string(cutouts.size()) + " cutout(s)");
    return 0;
}

int run_gridsearch(const Globals& g, const std::string& in, const std::string& sigmas, const std::string& offsets,
                   const std::string& params, const std::string& out, const std::string& params_out)
{
    const auto cutouts = load_nonempty(in);
    const auto r = gridsearch_local(cutouts, parse_double_list(sigmas), parse_double_list(offsets), load_local(params),
                                    g.jobs);
    nlohmann::json surface = nlohmann::json::array();
    for (const auto& c : r.surface)
        surface.push_back({{"sigma", c.sigma}, {"t_offset", c.t_offset}, {"f1", c.f1}, {"degenerate", c.degenerate}});
    write_json(out, {{"kind", "local_gridsearch"},
                     {"best", {{"sigma", r.best.sigma}, {"t_offset", r.best.t_offset}, {"f1", r.best_cell.f1}}},
                     {"surface", surface}});
    if (!params_out.empty())
        write_file(params_out, r.best.to_kv().to_string());
    return 0;
}

int run_calibrate(const Globals& g, const std::string& in, const std::string& thresholds, const std::string& params,
                  const std::string& out, const std::string& params_out)
{
    const auto cutouts = load_nonempty(in);
    const auto base = load_attadj(params);
    const auto r = calibrate_residual_threshold(cutouts, parse_double_list(thresholds), base, g.jobs);
    nlohmann::json curve = nlohmann::json::array();
    for (const auto& c : r.curve)
        curve.push_back({{"threshold", c.threshold}, {"f1", c.f1}, {"degenerate", c.degenerate}});
    write_json(out, {{"kind", "attadj_calibration"},
                     {"best", {{"residual_threshold", r.best_threshold}, {"f1", r.best_cell.f1}}},
                     {"curve", curve}});
    if (!params_out.empty()) {
        auto best = base;
        best.residual_threshold = r.best_threshold;
        write_file(params_out, best.to_kv().to_string());
    }
    return 0;
}

int run_eval(const Globals& g, const std::string& pred, const std::string& truth, const std::string& report)
{
    const auto out = evaluate_predictions(pred, truth);
    if (fs::path(report).extension() == ".csv")
        write_file(report, reports_to_csv({out.report}));
    else
        write_json(report, report_to_json(out.report, out.roc ? &*out.roc : nullptr));
    g.log("F1 " + std::to_string(out.report.f1) + " over " + std::to_string(out.cutouts) + " cutout(s)");
    return 0;
}

int run_bench(const Globals& g, const std::string& model_arg, const std::string& params, const std::string& in,
              const std::string& sizes, int repetitions, const std::string& out)
{
    const ModelKind model = parse_model(model_arg);
    const auto local = model == ModelKind::local_threshold ? load_local(params) : LocalThresholdParams{};
    const auto attadj = model == ModelKind::att_adjusted ? load_attadj(params) : AttAdjustParams{};
    if (repetitions < 1)
        throw ParameterError("--repetitions must be >= 1");
    const auto rows = bench(model, local, attadj, load_nonempty(in), parse_sizes(sizes), {repetitions, g.jobs});
    std::ostringstream csv;
    csv << "n,wall_seconds,per_particle\n" << std::setprecision(9);
    for (const auto& r : rows)
        csv << r.n << ',' << r.wall_seconds << ',' << r.per_particle << '\n';
    write_file(out, csv.str());
    return 0;
}

int run_pipeline_cmd(const Globals& g, const std::string& config_path, const std::string& out)
{
    KeyValueConfig kv;
    fs::path base = fs::current_path();
    if (!config_path.empty()) {
        kv = KeyValueConfig::load(config_path);
        base = fs::absolute(config_path).parent_path();
    }
    auto config = PipelineConfig::from_kv(kv, base);
    config.out_dir = out;
    config.jobs = g.jobs;
    if (g.seed)
        config.seed = *g.seed;
    const auto manifest = run_pipeline(config, [&](const std::string& msg) { g.log(msg); });
    g.log("manifest lists " + std::to_string(manifest.at("artifacts").size()) + " artifacts");
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Pore segmentation in single radiographs of powder particles"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    std::uint64_t seed_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value, "Root random seed");
    app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--verbose", g.verbose, "Progress on standard error");

    std::string config, out, truth, mask, profile_csv, ideal_png, residual_png, params, model, pred, report, sizes,
        sigmas = "0.5,1,1.5,2,3,4,6,8,12", offsets = "0,0.005,0.01,0.015,0.02,0.025,0.03,0.04,0.05,0.06",
        thresholds = "0.005,0.01,0.015,0.02,0.025,0.03,0.035,0.04,0.05,0.06,0.08,0.1", params_out, in;
    std::vector<std::string> inputs;
    int count = 1, bins = kDefaultProfileBins, repetitions = 5;
    double pct = kDefaultProfilePercentile;
    std::optional<double> pitch;

    auto* synth = app.add_subcommand("synth", "Generate synthetic radiographs with ground truth");
    synth->add_option("--config", config, "Scene configuration (key = value)");
    synth->add_option("--out", out, "Output directory")->required();
    synth->add_option("--count", count, "Number of scenes");

    auto* cutout = app.add_subcommand("cutout", "Mask particles and write 256x256 cutouts");
    cutout->add_option("--in", inputs, "Radiograph(s)")->required();
    cutout->add_option("--truth", truth, "Pore truth mask of the radiograph");
    cutout->add_option("--out", out, "Output directory")->required();
    cutout->add_option("--pixel-pitch", pitch, "Micrometers per pixel");

    auto* fit = app.add_subcommand("fit", "Fit the attenuation model to one cutout");
    fit->add_option("--in", in, "Cutout image")->required();
    fit->add_option("--mask", mask, "Particle mask")->required();
    fit->add_option("--out", out, "Fit JSON")->required();
    fit->add_option("--dump-profile", profile_csv, "Profile CSV (bin_mid,value,count)");
    fit->add_option("--dump-ideal", ideal_png, "Ideal particle image");
    fit->add_option("--dump-residual", residual_png, "Residual image, rescaled to 16 bit");
    fit->add_option("--bins", bins, "Distance bins");
    fit->add_option("--percentile", pct, "Per-bin percentile");

    auto* segment = app.add_subcommand("segment", "Segment pores in a cutout directory");
    segment->add_option("--model", model, "local | attadj")->required();
    segment->add_option("--params", params, "Parameter file");
    segment->add_option("--in", in, "Cutout directory")->required();
    segment->add_option("--out", out, "Output directory")->required();

    auto* grid = app.add_subcommand("gridsearch", "Local-threshold (sigma, t_offset) grid search");
    grid->add_option("--in", in, "Validation cutout directory")->required();
    grid->add_option("--sigma", sigmas, "Comma-separated sigma grid");
    grid->add_option("--offset", offsets, "Comma-separated t_offset grid");
    grid->add_option("--params", params, "Base parameter file");
    grid->add_option("--out", out, "Surface JSON")->required();
    grid->add_option("--params-out", params_out, "Best parameter file");

    auto* calib = app.add_subcommand("calibrate", "Att-adjusted residual threshold calibration");
    calib->add_option("--in", in, "Validation cutout directory")->required();
    calib->add_option("--thresholds", thresholds, "Comma-separated threshold grid");
    calib->add_option("--params", params, "Base parameter file");
    calib->add_option("--out", out, "Calibration JSON")->required();
    calib->add_option("--params-out", params_out, "Best parameter file");

    auto* eval = app.add_subcommand("eval", "Score predictions against truth");
    eval->add_option("--pred", pred, "Prediction directory")->required();
    eval->add_option("--truth", truth, "Cutout directory with truth masks")->required();
    eval->add_option("--report", report, "Report path (.json or .csv)")->required();

    auto* bench_cmd = app.add_subcommand("bench", "Batch timing");
    bench_cmd->add_option("--model", model, "local | attadj")->required();
    bench_cmd->add_option("--params", params, "Parameter file");
    bench_cmd->add_option("--in", in, "Cutout directory")->required();
    bench_cmd->add_option("--sizes", sizes, "lo..hi (doubling) or a comma list")->default_val("1..64");
    bench_cmd->add_option("--repetitions", repetitions, "Timed repetitions per size");
    bench_cmd->add_option("--out", out, "Timing CSV")->required();

    auto* pipe = app.add_subcommand("pipeline", "End-to-end synthetic experiment");
    pipe->add_option("--config", config, "Pipeline configuration (key = value)");
    pipe->add_option("--out", out, "Output directory")->required();

    auto* plots = app.add_subcommand("plots", "CSV tables and SVG charts from reports");
    plots->add_option("--in", inputs, "Report files")->required();
    plots->add_option("--out", out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    if (seed_opt->count() > 0)
        g.seed = seed_value;

    const std::string name = app.get_subcommands().front()->get_name();
    try {
        if (*synth)
            return run_synth(g, config, out, count);
        if (*cutout)
            return run_cutout(g, inputs, truth, out, pitch);
        if (*fit)
            return run_fit(g, in, mask, out, profile_csv, ideal_png, residual_png, bins, pct);
        if (*segment)
            return run_segment(g, model, params, in, out);
        if (*grid)
            return run_gridsearch(g, in, sigmas, offsets, params, out, params_out);
        if (*calib)
            return run_calibrate(g, in, thresholds, params, out, params_out);
        if (*eval)
            return run_eval(g, pred, truth, report);
        if (*bench_cmd)
            return run_bench(g, model, params, in, sizes, repetitions, out);
        if (*pipe)
            return run_pipeline_cmd(g, config, out);
        if (*plots) {
            std::vector<fs::path> paths(inputs.begin(), inputs.end());
            for (const auto& p : emit_plots(paths, out))
                g.log("wrote " + p.string());
            return 0;
        }
    } catch (const StageError& e) {
        std::cerr << "poregrad pipeline: " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "poregrad " << name << ": " << e.what() << '\n';
        return exit_code_for(e);
    }
    return 4;
}
