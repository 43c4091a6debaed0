#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "poregrad/kvconfig.hpp"
#include "poregrad/raster.hpp"
#include "poregrad/rng.hpp"

namespace poregrad::synth {

/// Shifted log-normal: x = theta + mu * exp(sigma_shape * Z), Z ~ N(0, 1).
struct LogNormal {
    double mu = 3.70;          // micrometers
    double sigma_shape = 0.41;
    double theta = 0.50;       // micrometers
};

struct SceneConfig {
    std::uint64_t rng_seed = 1;
    int detector_width = 768;
    int detector_height = 768;
    double pixel_pitch = 0.6;                  // micrometers / pixel
    int particle_count = 4;
    double particle_diameter_min = 100.0;      // micrometers
    double particle_diameter_max = 150.0;
    LogNormal pore_diameter;
    int pores_min = 2;
    int pores_max = 8;
    double attenuation_coefficient = 0.012;    // 1 / micrometer
    double incident_intensity = 1.0;
    double noise_photons = 20000.0;            // 0 disables noise
    double elastic_alpha = 15.0;               // pixels
    double elastic_sigma = 10.0;               // pixels
    double placement_gap = 8.0;                // pixels between particle outlines
    double border_margin = 12.0;               // pixels from detector edge

    /// Throws ParameterError on a violated invariant.
    void validate() const;

    static SceneConfig from_kv(const KeyValueConfig& kv);
    KeyValueConfig to_kv() const;
};

struct Pore {
    double offset_x = 0;  // micrometers, relative to particle center
    double offset_y = 0;
    double offset_z = 0;  // along the beam
    double radius = 0;
};

struct Particle {
    double center_x = 0;  // micrometers, detector frame
    double center_y = 0;
    double radius = 0;
    std::vector<Pore> pores;
};

struct GroundTruthScene {
    Radiograph radiograph;
    BinaryMask particle_mask;
    BinaryMask pore_mask;
    std::vector<Particle> particles;
    Image noiseless;  // before Poisson noise, after deformation

    /// Fraction of particle pixels that are pore pixels.
    double pore_fraction() const;
};

double sample_pore_diameter(const LogNormal& dist, Rng& rng);

/// Length of a ray at perpendicular distance r_offset through a sphere of
/// radius R; 0 when the ray misses.
double chord_length(double radius, double r_offset) noexcept;

/// Places particles (rejection sampling, non-overlapping in projection) and
/// samples their pores. Throws GenerationError naming the failing index.
std::vector<Particle> sample_particles(const SceneConfig& config, Rng& rng);

/// Material path length along the ray through detector point (x, y) in
/// micrometers: particle chord minus the union of pore intervals.
double path_length(const Particle& particle, double x, double y, double* pore_chord = nullptr);

/// Parallel-beam Beer-Lambert projection of the given particles without
/// deformation or noise.
GroundTruthScene render_particles(const SceneConfig& config, std::vector<Particle> particles);

/// Full generation: placement, projection, elastic deformation, noise.
GroundTruthScene project_scene(const SceneConfig& config);

/// Smoothed random displacement field (Simard-style).
struct DisplacementField {
    Image dx;  // pixels, along columns
    Image dy;  // pixels, along rows
};

DisplacementField make_displacement_field(int width, int height, double alpha, double sigma,
                                          Rng& rng);

/// Bilinear resampling at (row + dy, col + dx); samples outside the grid take
/// the nearest border value.
Image warp_bilinear(const Image& img, const DisplacementField& field);
BinaryMask warp_nearest(const BinaryMask& mask, const DisplacementField& field);

Image elastic_deform(const Image& img, double alpha, double sigma, Rng& rng);
BinaryMask elastic_deform(const BinaryMask& mask, double alpha, double sigma, Rng& rng);

nlohmann::json scene_to_json(const SceneConfig& config, const GroundTruthScene& scene);

}  // namespace poregrad::synth
