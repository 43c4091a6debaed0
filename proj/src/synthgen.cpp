#include "poregrad/synthgen.hpp"

#include <charconv>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "poregrad/filter.hpp"

namespace poregrad::synth {

namespace {

constexpr int kMaxPlacementRetries = 10000;

const std::vector<std::string> kConfigKeys = {
    "rng_seed",          "detector_width",    "detector_height",
    "pixel_pitch",       "particle_count",    "particle_diameter_min",
    "particle_diameter_max", "pore_mu",       "pore_sigma",
    "pore_theta",        "pores_min",         "pores_max",
    "attenuation_coefficient", "incident_intensity", "noise_photons",
    "elastic_alpha",     "elastic_sigma",     "placement_gap",
    "border_margin",
};

// shortest text that round-trips
std::string fmt(double v)
{
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

}  // namespace

void SceneConfig::validate() const
{
    auto fail = [](const std::string& msg) { throw ParameterError("scene config: " + msg); };
    if (detector_width <= 0 || detector_height <= 0)
        fail("detector dimensions must be positive");
    if (!(pixel_pitch > 0))
        fail("pixel_pitch must be positive");
    if (particle_count < 0)
        fail("particle_count must be non-negative");
    if (!(particle_diameter_min > 0) || particle_diameter_max < particle_diameter_min)
        fail("particle diameter range must satisfy 0 < min <= max");
    if (!(pore_diameter.sigma_shape > 0))
        fail("pore_sigma must be positive");
    if (!(pore_diameter.mu > 0))
        fail("pore_mu must be positive");
    if (pore_diameter.theta < 0)
        fail("pore_theta must be non-negative");
    if (pores_min < 0 || pores_max < pores_min)
        fail("pore count range must satisfy 0 <= min <= max");
    if (!(attenuation_coefficient > 0))
        fail("attenuation_coefficient must be positive");
    if (!(incident_intensity > 0))
        fail("incident_intensity must be positive");
    if (noise_photons < 0)
        fail("noise_photons must be non-negative");
    if (elastic_alpha < 0)
        fail("elastic_alpha must be non-negative");
    if (elastic_alpha > 0 && !(elastic_sigma > 0))
        fail("elastic_sigma must be positive");
    if (placement_gap < 0 || border_margin < 0)
        fail("placement_gap and border_margin must be non-negative");
}

SceneConfig SceneConfig::from_kv(const KeyValueConfig& kv)
{
    kv.require_known(kConfigKeys);
    SceneConfig c;
    c.rng_seed = static_cast<std::uint64_t>(kv.get_int("rng_seed", static_cast<long>(c.rng_seed)));
    c.detector_width = static_cast<int>(kv.get_int("detector_width", c.detector_width));
    c.detector_height = static_cast<int>(kv.get_int("detector_height", c.detector_height));
    c.pixel_pitch = kv.get_double("pixel_pitch", c.pixel_pitch);
    c.particle_count = static_cast<int>(kv.get_int("particle_count", c.particle_count));
    c.particle_diameter_min = kv.get_double("particle_diameter_min", c.particle_diameter_min);
    c.particle_diameter_max = kv.get_double("particle_diameter_max", c.particle_diameter_max);
    c.pore_diameter.mu = kv.get_double("pore_mu", c.pore_diameter.mu);
    c.pore_diameter.sigma_shape = kv.get_double("pore_sigma", c.pore_diameter.sigma_shape);
    c.pore_diameter.theta = kv.get_double("pore_theta", c.pore_diameter.theta);
    c.pores_min = static_cast<int>(kv.get_int("pores_min", c.pores_min));
    c.pores_max = static_cast<int>(kv.get_int("pores_max", c.pores_max));
    c.attenuation_coefficient = kv.get_double("attenuation_coefficient", c.attenuation_coefficient);
    c.incident_intensity = kv.get_double("incident_intensity", c.incident_intensity);
    c.noise_photons = kv.get_double("noise_photons", c.noise_photons);
    c.elastic_alpha = kv.get_double("elastic_alpha", c.elastic_alpha);
    c.elastic_sigma = kv.get_double("elastic_sigma", c.elastic_sigma);
    c.placement_gap = kv.get_double("placement_gap", c.placement_gap);
    c.border_margin = kv.get_double("border_margin", c.border_margin);
    c.validate();
    return c;
}

KeyValueConfig SceneConfig::to_kv() const
{
    KeyValueConfig kv;
    kv.set("rng_seed", std::to_string(rng_seed));
    kv.set("detector_width", std::to_string(detector_width));
    kv.set("detector_height", std::to_string(detector_height));
    kv.set("pixel_pitch", fmt(pixel_pitch));
    kv.set("particle_count", std::to_string(particle_count));
    kv.set("particle_diameter_min", fmt(particle_diameter_min));
    kv.set("particle_diameter_max", fmt(particle_diameter_max));
    kv.set("pore_mu", fmt(pore_diameter.mu));
    kv.set("pore_sigma", fmt(pore_diameter.sigma_shape));
    kv.set("pore_theta", fmt(pore_diameter.theta));
    kv.set("pores_min", std::to_string(pores_min));
    kv.set("pores_max", std::to_string(pores_max));
    kv.set("attenuation_coefficient", fmt(attenuation_coefficient));
    kv.set("incident_intensity", fmt(incident_intensity));
    kv.set("noise_photons", fmt(noise_photons));
    kv.set("elastic_alpha", fmt(elastic_alpha));
    kv.set("elastic_sigma", fmt(elastic_sigma));
    kv.set("placement_gap", fmt(placement_gap));
    kv.set("border_margin", fmt(border_margin));
    return kv;
}

double GroundTruthScene::pore_fraction() const
{
    const long particles = count(particle_mask);
    return particles == 0 ? 0.0 : static_cast<double>(count(pore_mask)) / particles;
}

double sample_pore_diameter(const LogNormal& dist, Rng& rng)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    return dist.theta + dist.mu * std::exp(dist.sigma_shape * normal(rng));
}

double chord_length(double radius, double r_offset) noexcept
{
    if (r_offset >= radius)
        return 0.0;
    return 2.0 * std::sqrt(radius * radius - r_offset * r_offset);
}

std::vector<Particle> sample_particles(const SceneConfig& config, Rng& rng)
{
    config.validate();
    const double width_um = config.detector_width * config.pixel_pitch;
    const double height_um = config.detector_height * config.pixel_pitch;
    const double margin_um = config.border_margin * config.pixel_pitch;
    const double gap_um = config.placement_gap * config.pixel_pitch;

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Particle> particles;
    for (int i = 0; i < config.particle_count; ++i) {
        bool placed = false;
        for (int attempt = 0; attempt < kMaxPlacementRetries && !placed; ++attempt) {
            const double diameter =
                config.particle_diameter_min +
                (config.particle_diameter_max - config.particle_diameter_min) * unit(rng);
            Particle p;
            p.radius = 0.5 * diameter;
            const double span_x = width_um - 2 * (margin_um + p.radius);
            const double span_y = height_um - 2 * (margin_um + p.radius);
            const double ux = unit(rng);
            const double uy = unit(rng);
            if (span_x < 0 || span_y < 0)
                continue;
            p.center_x = margin_um + p.radius + span_x * ux;
            p.center_y = margin_um + p.radius + span_y * uy;
            const bool overlaps = std::any_of(particles.begin(), particles.end(), [&](const Particle& q) {
                return std::hypot(p.center_x - q.center_x, p.center_y - q.center_y) <
                       p.radius + q.radius + gap_um;
            });
            if (overlaps)
                continue;
            particles.push_back(std::move(p));
            placed = true;
        }
        if (!placed)
            throw GenerationError("cannot place particle " + std::to_string(i) + " after " +
                                  std::to_string(kMaxPlacementRetries) + " attempts");
    }

    // Pores: center uniform in the sphere shrunk by the pore radius.
    std::uniform_int_distribution<int> pore_count(config.pores_min, config.pores_max);
    std::uniform_real_distribution<double> symmetric(-1.0, 1.0);
    for (auto& p : particles) {
        const int n = pore_count(rng);
        for (int k = 0; k < n; ++k) {
            Pore pore;
            pore.radius = std::min(0.5 * sample_pore_diameter(config.pore_diameter, rng),
                                   0.45 * p.radius);
            const double room = p.radius - pore.radius;
            double x, y, z;
            do {
                x = symmetric(rng);
                y = symmetric(rng);
                z = symmetric(rng);
            } while (x * x + y * y + z * z >= 1.0);
            pore.offset_x = room * x;
            pore.offset_y = room * y;
            pore.offset_z = room * z;
            p.pores.push_back(pore);
        }
    }
    return particles;
}

double path_length(const Particle& particle, double x, double y, double* pore_chord)
{
    const double dx = x - particle.center_x;
    const double dy = y - particle.center_y;
    const double outer = chord_length(particle.radius, std::hypot(dx, dy));
    if (pore_chord)
        *pore_chord = 0.0;
    if (outer <= 0.0)
        return 0.0;

    // Union of the pore intervals along the beam (pores may overlap).
    std::vector<std::pair<double, double>> spans;
    for (const auto& pore : particle.pores) {
        const double half = 0.5 * chord_length(pore.radius, std::hypot(dx - pore.offset_x, dy - pore.offset_y));
        if (half > 0.0)
            spans.emplace_back(pore.offset_z - half, pore.offset_z + half);
    }
    double hollow = 0.0;
    if (!spans.empty()) {
        std::sort(spans.begin(), spans.end());
        double lo = spans.front().first;
        double hi = spans.front().second;
        for (std::size_t i = 1; i < spans.size(); ++i) {
            if (spans[i].first > hi) {
                hollow += hi - lo;
                lo = spans[i].first;
                hi = spans[i].second;
            } else {
                hi = std::max(hi, spans[i].second);
            }
        }
        hollow += hi - lo;
    }
    if (pore_chord)
        *pore_chord = hollow;
    return std::max(0.0, outer - hollow);
}

GroundTruthScene render_particles(const SceneConfig& config, std::vector<Particle> particles)
{
    const int w = config.detector_width;
    const int h = config.detector_height;
    const double pitch = config.pixel_pitch;
    Image path(w, h, 0.0);
    GroundTruthScene scene;
    scene.particle_mask = BinaryMask(w, h);
    scene.pore_mask = BinaryMask(w, h);

    for (const auto& p : particles) {
        const int c0 = std::max(0, static_cast<int>(std::floor((p.center_x - p.radius) / pitch - 0.5)));
        const int c1 = std::min(w - 1, static_cast<int>(std::ceil((p.center_x + p.radius) / pitch - 0.5)));
        const int r0 = std::max(0, static_cast<int>(std::floor((p.center_y - p.radius) / pitch - 0.5)));
        const int r1 = std::min(h - 1, static_cast<int>(std::ceil((p.center_y + p.radius) / pitch - 0.5)));
        for (int r = r0; r <= r1; ++r)
            for (int c = c0; c <= c1; ++c) {
                const double x = (c + 0.5) * pitch;
                const double y = (r + 0.5) * pitch;
                if (std::hypot(x - p.center_x, y - p.center_y) >= p.radius)
                    continue;
                double hollow = 0.0;
                path(r, c) += path_length(p, x, y, &hollow);
                scene.particle_mask(r, c) = 1;
                if (hollow > 0.0)
                    scene.pore_mask(r, c) = 1;
            }
    }

    Image intensity(w, h);
    for (std::size_t i = 0; i < path.size(); ++i)
        intensity[i] = config.incident_intensity * std::exp(-config.attenuation_coefficient * path[i]);
    scene.noiseless = intensity;
    scene.radiograph.pixels = std::move(intensity);
    scene.radiograph.pixel_pitch = pitch;
    scene.particles = std::move(particles);
    return scene;
}

GroundTruthScene project_scene(const SceneConfig& config)
{
    config.validate();
    auto placement = make_rng(config.rng_seed, "placement");
    auto scene = render_particles(config, sample_particles(config, placement));

    if (config.elastic_alpha > 0) {
        auto elastic = make_rng(config.rng_seed, "elastic");
        const auto field = make_displacement_field(config.detector_width, config.detector_height,
                                                   config.elastic_alpha, config.elastic_sigma, elastic);
        scene.noiseless = warp_bilinear(scene.noiseless, field);
        scene.particle_mask = warp_nearest(scene.particle_mask, field);
        scene.pore_mask = warp_nearest(scene.pore_mask, field);
    }

    scene.radiograph.pixels = scene.noiseless;
    if (config.noise_photons > 0) {
        auto noise = make_rng(config.rng_seed, "noise");
        const double i0 = config.incident_intensity;
        for (double& v : scene.radiograph.pixels.values()) {
            std::poisson_distribution<long> photons(config.noise_photons * v / i0);
            v = static_cast<double>(photons(noise)) * i0 / config.noise_photons;
        }
    }
    return scene;
}

DisplacementField make_displacement_field(int width, int height, double alpha, double sigma, Rng& rng)
{
    std::uniform_real_distribution<double> symmetric(-1.0, 1.0);
    Image dx(width, height);
    Image dy(width, height);
    for (double& v : dx.values())
        v = symmetric(rng);
    for (double& v : dy.values())
        v = symmetric(rng);
    dx = gaussian_blur(dx, sigma);
    dy = gaussian_blur(dy, sigma);
    for (double& v : dx.values())
        v *= alpha;
    for (double& v : dy.values())
        v *= alpha;
    return {std::move(dx), std::move(dy)};
}

Image warp_bilinear(const Image& img, const DisplacementField& field)
{
    require_same_shape(img, field.dx, "warp_bilinear");
    const int w = img.width();
    const int h = img.height();
    Image out(w, h);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const double sr = std::clamp(r + field.dy(r, c), 0.0, h - 1.0);
            const double sc = std::clamp(c + field.dx(r, c), 0.0, w - 1.0);
            const int r0 = static_cast<int>(std::floor(sr));
            const int c0 = static_cast<int>(std::floor(sc));
            const int r1 = std::min(r0 + 1, h - 1);
            const int c1 = std::min(c0 + 1, w - 1);
            const double fr = sr - r0;
            const double fc = sc - c0;
            const double top = img(r0, c0) + fc * (img(r0, c1) - img(r0, c0));
            const double bottom = img(r1, c0) + fc * (img(r1, c1) - img(r1, c0));
            out(r, c) = top + fr * (bottom - top);
        }
    return out;
}

BinaryMask warp_nearest(const BinaryMask& mask, const DisplacementField& field)
{
    require_same_shape(mask, field.dx, "warp_nearest");
    const int w = mask.width();
    const int h = mask.height();
    BinaryMask out(w, h);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const int sr = std::clamp(static_cast<int>(std::lround(r + field.dy(r, c))), 0, h - 1);
            const int sc = std::clamp(static_cast<int>(std::lround(c + field.dx(r, c))), 0, w - 1);
            out(r, c) = mask(sr, sc);
        }
    return out;
}

Image elastic_deform(const Image& img, double alpha, double sigma, Rng& rng)
{
    if (alpha == 0.0)
        return img;
    return warp_bilinear(img, make_displacement_field(img.width(), img.height(), alpha, sigma, rng));
}

BinaryMask elastic_deform(const BinaryMask& mask, double alpha, double sigma, Rng& rng)
{
    if (alpha == 0.0)
        return mask;
    return warp_nearest(mask, make_displacement_field(mask.width(), mask.height(), alpha, sigma, rng));
}

nlohmann::json scene_to_json(const SceneConfig& config, const GroundTruthScene& scene)
{
    nlohmann::json j;
    nlohmann::json cfg = nlohmann::json::object();
    const KeyValueConfig kv = config.to_kv();
    for (const auto& [k, v] : kv.entries())
        cfg[k] = v;
    j["config"] = cfg;
    j["pixel_pitch_um"] = config.pixel_pitch;
    j["width"] = config.detector_width;
    j["height"] = config.detector_height;
    j["pore_pixel_fraction"] = scene.pore_fraction();
    nlohmann::json parts = nlohmann::json::array();
    for (const auto& p : scene.particles) {
        nlohmann::json pj;
        pj["center_um"] = {p.center_x, p.center_y};
        pj["radius_um"] = p.radius;
        nlohmann::json pores = nlohmann::json::array();
        for (const auto& q : p.pores)
            pores.push_back({{"offset_um", {q.offset_x, q.offset_y, q.offset_z}}, {"radius_um", q.radius}});
        pj["pores"] = std::move(pores);
        parts.push_back(std::move(pj));
    }
    j["particles"] = std::move(parts);
    return j;
}

}  // namespace poregrad::synth
