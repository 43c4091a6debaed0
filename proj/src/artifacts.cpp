#include "poregrad/artifacts.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <sstream>

#include "poregrad/error.hpp"
#include "poregrad/image_io.hpp"
#include "poregrad/morphology.hpp"

namespace poregrad {

const std::vector<std::string>& timing_keys()
{
    static const std::vector<std::string> keys{"wall_time_seconds", "mean_time_per_particle"};
    return keys;
}

nlohmann::json strip_timing(const nlohmann::json& j)
{
    if (j.is_object()) {
        nlohmann::json out = nlohmann::json::object();
        const auto& keys = timing_keys();
        for (const auto& [k, v] : j.items())
            if (std::find(keys.begin(), keys.end(), k) == keys.end())
                out[k] = strip_timing(v);
        return out;
    }
    if (j.is_array()) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& v : j)
            out.push_back(strip_timing(v));
        return out;
    }
    return j;
}

std::string strip_timing_csv(const std::string& csv)
{
    static const std::vector<std::string> timing_columns{"t_mean", "wall_seconds", "per_particle"};
    std::istringstream in(csv);
    std::ostringstream out;
    std::vector<bool> drop;
    bool have_header = false;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') {
            out << line << '\n';
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            cells.push_back(cell);
        if (!line.empty() && line.back() == ',')
            cells.emplace_back();
        if (!have_header) {
            for (const auto& c : cells)
                drop.push_back(std::find(timing_columns.begin(), timing_columns.end(), c) != timing_columns.end());
            have_header = true;
        } else {
            for (std::size_t i = 0; i < cells.size() && i < drop.size(); ++i)
                if (drop[i])
                    cells[i].clear();
        }
        for (std::size_t i = 0; i < cells.size(); ++i)
            out << (i ? "," : "") << cells[i];
        out << '\n';
    }
    return out.str();
}

std::string sha256_hex(const std::string& bytes)
{
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1
        || EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1
        || EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
        throw std::runtime_error("sha256 failed");
    std::ostringstream out;
    for (unsigned int i = 0; i < len; ++i)
        out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    return out.str();
}

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& path, const std::string& bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << bytes;
    if (!out)
        throw IoError("write failed: " + path.string());
}

nlohmann::json read_json(const fs::path& path)
{
    const std::string text = read_file(path);
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

void write_json(const fs::path& path, const nlohmann::json& j)
{
    write_file(path, j.dump(2) + "\n");
}

bool natural_less(const std::string& a, const std::string& b)
{
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const bool da = std::isdigit(static_cast<unsigned char>(a[i])) != 0;
        const bool db = std::isdigit(static_cast<unsigned char>(b[j])) != 0;
        if (da && db) {
            std::size_t ie = i, je = j;
            while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie])))
                ++ie;
            while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je])))
                ++je;
            // compare by magnitude without overflow: strip leading zeros, then length
            auto trim = [](const std::string& s, std::size_t from, std::size_t to) {
                while (from + 1 < to && s[from] == '0')
                    ++from;
                return s.substr(from, to - from);
            };
            const std::string na = trim(a, i, ie), nb = trim(b, j, je);
            if (na.size() != nb.size())
                return na.size() < nb.size();
            if (na != nb)
                return na < nb;
            i = ie;
            j = je;
            continue;
        }
        if (a[i] != b[j])
            return a[i] < b[j];
        ++i;
        ++j;
    }
    return a.size() - i < b.size() - j;
}

void write_scene(const fs::path& dir, const std::string& id, const synth::SceneConfig& config,
                 const synth::GroundTruthScene& scene)
{
    fs::create_directories(dir);
    const double png_scale = 65535.0 / (kScenePngHeadroom * config.incident_intensity);
    write_png16(dir / (id + ".png"), scene.radiograph.pixels, png_scale);
    write_mask_png(dir / (id + "_particles.png"), scene.particle_mask);
    write_mask_png(dir / (id + "_pores.png"), scene.pore_mask);
    auto j = synth::scene_to_json(config, scene);
    j["kind"] = "scene";
    j["id"] = id;
    j["png_scale"] = png_scale;
    write_json(dir / (id + ".json"), j);
}

Radiograph load_radiograph(const fs::path& path, std::optional<double> pixel_pitch)
{
    double pitch = 1.0;
    if (pixel_pitch) {
        pitch = *pixel_pitch;
    } else {
        const auto sidecar = fs::path(path).replace_extension(".json");
        if (fs::exists(sidecar)) {
            const auto j = read_json(sidecar);
            if (j.contains("pixel_pitch_um"))
                pitch = j.at("pixel_pitch_um").get<double>();
        }
    }
    if (!(pitch > 0) || !std::isfinite(pitch))
        throw ParameterError("pixel pitch must be positive");
    return read_radiograph(path, pitch);
}

CutoutSet cutout_image(const fs::path& image_path, const std::optional<fs::path>& truth_path,
                       const fs::path& out_dir, std::optional<double> pixel_pitch)
{
    const Radiograph raw = load_radiograph(image_path, pixel_pitch);
    const Radiograph norm = normalize(raw);
    const BinaryMask mask = particle_masks(norm.pixels);
    std::optional<BinaryMask> truth;
    if (truth_path) {
        truth = read_mask(*truth_path);
        require_same_shape(*truth, mask, "truth mask");
    }
    CutoutSet set = make_cutouts(norm, mask, truth ? &*truth : nullptr);
    write_cutouts(out_dir, raw.id, set);
    return set;
}

void write_cutouts(const fs::path& dir, const std::string& source_id, const CutoutSet& set)
{
    fs::create_directories(dir);
    nlohmann::json list = nlohmann::json::array();
    for (const auto& c : set.cutouts) {
        const std::string id = c.id();
        write_png16(dir / (id + ".png"), c.image.pixels);
        write_mask_png(dir / (id + "_mask.png"), c.particle_mask);
        if (c.pore_truth)
            write_mask_png(dir / (id + "_truth.png"), *c.pore_truth);
        list.push_back(cutout_to_json(c));
    }
    nlohmann::json skipped = nlohmann::json::array();
    for (const auto& s : set.skipped)
        skipped.push_back({{"label", s.label},
                           {"bbox", {s.bbox.min_row, s.bbox.min_col, s.bbox.max_row, s.bbox.max_col}},
                           {"reason", s.reason}});
    write_json(dir / (source_id + "_cutouts.json"),
               {{"kind", "cutouts"}, {"source_id", source_id}, {"cutouts", list}, {"skipped", skipped}});
}

std::vector<ParticleCutout> load_cutouts(const fs::path& dir)
{
    if (!fs::is_directory(dir))
        throw IoError("not a directory: " + dir.string());
    std::vector<fs::path> lists;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        if (name.size() > 13 && name.ends_with("_cutouts.json"))
            lists.push_back(entry.path());
    }
    std::vector<ParticleCutout> out;
    for (const auto& list_path : lists) {
        const auto j = read_json(list_path);
        try {
            for (const auto& cj : j.at("cutouts")) {
                ParticleCutout c;
                c.source_id = cj.at("source_id").get<std::string>();
                c.index = cj.at("index").get<int>();
                const auto b = cj.at("source_bbox");
                c.source_bbox = {b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(), b.at(3).get<int>()};
                c.scale = cj.at("scale").get<double>();
                c.source_pixel_pitch = cj.at("source_pixel_pitch_um").get<double>();
                const std::string id = c.id();
                c.image = read_radiograph(dir / (id + ".png"), c.source_pixel_pitch * c.scale);
                c.image.id = id;
                c.particle_mask = read_mask(dir / (id + "_mask.png"));
                require_same_shape(c.image.pixels, c.particle_mask, "cutout mask");
                const auto truth = dir / (id + "_truth.png");
                if (fs::exists(truth)) {
                    c.pore_truth = read_mask(truth);
                    require_same_shape(*c.pore_truth, c.particle_mask, "cutout truth");
                }
                out.push_back(std::move(c));
            }
        } catch (const nlohmann::json::exception& e) {
            throw DataError("malformed cutout list " + list_path.string() + ": " + e.what());
        }
    }
    std::sort(out.begin(), out.end(),
              [](const ParticleCutout& a, const ParticleCutout& b) { return natural_less(a.id(), b.id()); });
    return out;
}

nlohmann::json fit_to_json(const AttenuationFit& fit)
{
    return {{"a", fit.a},
            {"b", fit.b},
            {"c", fit.c},
            {"rmse", fit.rmse},
            {"n_bins_used", fit.n_bins_used},
            {"converged", fit.converged},
            {"iterations", fit.iterations}};
}

nlohmann::json result_to_json(const ParticleCutout& cutout, const SegmentationResult& result,
                              double wall_seconds)
{
    nlohmann::json regions = nlohmann::json::array();
    for (const auto& r : result.pore_regions)
        regions.push_back({{"label", r.label},
                           {"area_px", r.area},
                           {"centroid", {r.centroid_row, r.centroid_col}},
                           {"bbox", {r.bbox.min_row, r.bbox.min_col, r.bbox.max_row, r.bbox.max_col}},
                           {"equivalent_radius_um", r.equivalent_radius}});
    return {{"kind", "segmentation_result"},
            {"id", cutout.id()},
            {"model", model_name(result.model)},
            {"iterations_run", result.iterations_run},
            {"converged", result.converged},
            {"profile_exhausted", result.profile_exhausted},
            {"scale", cutout.scale},
            {"source_pixel_pitch_um", cutout.source_pixel_pitch},
            {"fit", result.fit ? fit_to_json(*result.fit) : nlohmann::json()},
            {"regions", regions},
            {"wall_time_seconds", wall_seconds}};
}

void write_result(const fs::path& dir, const ParticleCutout& cutout, const SegmentationResult& result,
                  double wall_seconds)
{
    fs::create_directories(dir);
    write_mask_png(dir / (cutout.id() + "_pores.png"), result.pore_mask);
    write_json(dir / (cutout.id() + "_result.json"), result_to_json(cutout, result, wall_seconds));
}

namespace {

struct CutoutMeta {
    double scale = 1.0;
    double pitch = 1.0;
};

std::map<std::string, CutoutMeta> cutout_metadata(const fs::path& dir)
{
    std::map<std::string, CutoutMeta> meta;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        if (!name.ends_with("_cutouts.json"))
            continue;
        const auto j = read_json(entry.path());
        try {
            for (const auto& cj : j.at("cutouts"))
                meta[cj.at("id").get<std::string>()] = {cj.at("scale").get<double>(),
                                                        cj.at("source_pixel_pitch_um").get<double>()};
        } catch (const nlohmann::json::exception& e) {
            throw DataError("malformed cutout list " + entry.path().string() + ": " + e.what());
        }
    }
    return meta;
}

std::vector<double> radii_of(const BinaryMask& mask, double pitch)
{
    std::vector<double> out;
    for (const auto& r : region_props(connected_components(mask), pitch))
        out.push_back(r.equivalent_radius);
    return out;
}

}  // namespace

EvalOutput evaluate_predictions(const fs::path& pred_dir, const fs::path& truth_dir)
{
    if (!fs::is_directory(pred_dir))
        throw IoError("not a directory: " + pred_dir.string());
    if (!fs::is_directory(truth_dir))
        throw IoError("not a directory: " + truth_dir.string());

    // id -> has binary prediction, has probability map
    std::map<std::string, std::pair<bool, bool>> ids;
    for (const auto& entry : fs::directory_iterator(pred_dir)) {
        const auto name = entry.path().filename().string();
        if (name.ends_with("_pores.png"))
            ids[name.substr(0, name.size() - 10)].first = true;
        else if (name.ends_with("_prob.png"))
            ids[name.substr(0, name.size() - 9)].second = true;
    }
    if (ids.empty())
        throw DataError("no predictions in " + pred_dir.string());
    std::vector<std::string> order;
    for (const auto& [id, _] : ids)
        order.push_back(id);
    std::sort(order.begin(), order.end(), natural_less);

    const auto meta = cutout_metadata(truth_dir);
    EvalOutput out;
    ConfusionCounts total;
    std::string model;
    double time_sum = 0;
    std::size_t timed = 0;
    double smallest = 0;
    bool any_detected = false;
    std::vector<Image> probs;
    std::vector<BinaryMask> prob_truths, prob_regions;

    for (const auto& id : order) {
        const auto truth_path = truth_dir / (id + "_truth.png");
        if (!fs::exists(truth_path))
            throw DataError("eval requires truth: missing " + truth_path.string());
        const BinaryMask truth = read_mask(truth_path);
        const BinaryMask region = read_mask(truth_dir / (id + "_mask.png"));
        require_same_shape(truth, region, "truth vs particle mask");

        const auto [has_pred, has_prob] = ids.at(id);
        BinaryMask pred;
        if (has_pred) {
            pred = read_mask(pred_dir / (id + "_pores.png"));
        }
        if (has_prob) {
            int max_level = 1;
            Image p = read_gray_levels(pred_dir / (id + "_prob.png"), &max_level);
            for (double& v : p.values())
                v /= max_level;
            require_same_shape(p, truth, "probability map");
            if (!has_pred) {
                pred = BinaryMask(p.width(), p.height());
                for (std::size_t i = 0; i < p.values().size(); ++i)
                    pred.values()[i] = p.values()[i] >= 0.5 ? 1 : 0;
            }
            probs.push_back(std::move(p));
            prob_truths.push_back(truth);
            prob_regions.push_back(region);
        }
        require_same_shape(pred, truth, "prediction");
        total += confusion(pred, truth, &region);

        const auto result_path = pred_dir / (id + "_result.json");
        if (fs::exists(result_path)) {
            const auto rj = read_json(result_path);
            if (model.empty() && rj.contains("model"))
                model = rj.at("model").get<std::string>();
            if (rj.contains("wall_time_seconds")) {
                time_sum += rj.at("wall_time_seconds").get<double>();
                ++timed;
            }
        }

        const auto m = meta.find(id);
        const double pitch = m == meta.end() ? 1.0 : m->second.pitch * m->second.scale;
        const LabelMap labels = connected_components(intersect(pred, region));
        const auto props = region_props(labels, pitch);
        std::vector<std::uint8_t> hits(props.size() + 1, 0);
        for (std::size_t i = 0; i < truth.values().size(); ++i)
            if (truth.values()[i] && labels.values()[i] > 0)
                hits[static_cast<std::size_t>(labels.values()[i])] = 1;
        for (const auto& r : props) {
            out.predicted_radii.push_back(r.equivalent_radius);
            if (hits[static_cast<std::size_t>(r.label)]
                && (!any_detected || r.equivalent_radius < smallest)) {
                smallest = r.equivalent_radius;
                any_detected = true;
            }
        }
        for (double r : radii_of(intersect(truth, region), pitch))
            out.truth_radii.push_back(r);
    }

    out.report = MetricsReport::from_counts(total, model.empty() ? "unknown" : model);
    out.report.mean_time_per_particle = timed ? time_sum / static_cast<double>(timed) : 0.0;
    out.report.smallest_detected_pore = smallest;
    out.cutouts = order.size();
    if (!probs.empty()) {
        std::vector<const Image*> pp;
        std::vector<const BinaryMask*> tt, rr;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            pp.push_back(&probs[i]);
            tt.push_back(&prob_truths[i]);
            rr.push_back(&prob_regions[i]);
        }
        out.roc = roc(pp, tt, rr);
    }
    return out;
}

nlohmann::json roc_to_json(const RocCurve& curve)
{
    return {{"thresholds", curve.thresholds},
            {"fpr", curve.fpr_points},
            {"tpr", curve.tpr_points},
            {"auc", curve.auc},
            {"defined", curve.defined}};
}

nlohmann::json report_to_json(const MetricsReport& r, const RocCurve* curve)
{
    nlohmann::json j{{"kind", "metrics_report"},
                     {"model", r.model},
                     {"scope", r.scope},
                     {"eval_region", r.eval_region},
                     {"f1", r.f1},
                     {"f1_degenerate", r.f1_degenerate},
                     {"tnr", r.tnr},
                     {"fpr", r.fpr},
                     {"fnr", r.fnr},
                     {"tpr", r.tpr},
                     {"counts", {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"tn", r.counts.tn}, {"fn", r.counts.fn}}},
                     {"mean_time_per_particle", r.mean_time_per_particle},
                     {"smallest_detected_pore", r.smallest_detected_pore}};
    if (curve)
        j["roc"] = roc_to_json(*curve);
    return j;
}

MetricsReport report_from_json(const nlohmann::json& j)
{
    MetricsReport r;
    r.model = j.at("model").get<std::string>();
    r.scope = j.value("scope", r.scope);
    r.eval_region = j.value("eval_region", r.eval_region);
    const auto& c = j.at("counts");
    r.counts = {c.at("tp").get<std::int64_t>(), c.at("fp").get<std::int64_t>(), c.at("tn").get<std::int64_t>(),
                c.at("fn").get<std::int64_t>()};
    // rates are recomputed from the counts so a report cannot disagree with itself
    const auto recomputed = MetricsReport::from_counts(r.counts, r.model);
    r.f1 = recomputed.f1;
    r.f1_degenerate = recomputed.f1_degenerate;
    r.tpr = recomputed.tpr;
    r.fnr = recomputed.fnr;
    r.tnr = recomputed.tnr;
    r.fpr = recomputed.fpr;
    r.mean_time_per_particle = j.value("mean_time_per_particle", 0.0);
    r.smallest_detected_pore = j.value("smallest_detected_pore", 0.0);
    return r;
}

std::string reports_to_csv(const std::vector<MetricsReport>& reports)
{
    std::ostringstream out;
    out << "# scope=micro eval_region=particle_mask_union\n";
    out << "model,F1,TNR,FPR,FNR,TPR,t_mean\n";
    out << std::setprecision(6) << std::fixed;
    for (const auto& r : reports)
        out << r.model << ',' << r.f1 << ',' << r.tnr << ',' << r.fpr << ',' << r.fnr << ',' << r.tpr << ','
            << r.mean_time_per_particle << '\n';
    return out.str();
}

}  // namespace poregrad
