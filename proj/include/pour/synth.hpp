#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "pour/core.hpp"
#include "pour/physics.hpp"

namespace pour {

struct SynthConfig {
    int sample_rate = 16000;
    int n_harmonics = 4;            // odd partials: f, 3f, 5f, 7f
    double harmonic_rolloff = 0.5;  // amplitude ratio between successive partials
    bool include_radial = false;
    RadialParams radial{};
    double radial_level_db = -12.0;  // relative to the axial fundamental
    double noise_snr_db = std::numeric_limits<double>::infinity();  // +inf: no noise

    enum class Envelope { constant, attack_decay };
    Envelope envelope = Envelope::constant;

    // Zero flow renders a steady tone (constant air column) for this long.
    double hold_duration_s = 0.0;

    std::uint64_t seed = 0;
};

struct GroundTruth {
    FillProfile fill;
    Eigen::ArrayXd t;         // seconds
    Eigen::ArrayXd lambda_m;  // fundamental wavelength
    Eigen::ArrayXd f_hz;

    // Delimited text, columns: t_s, l_m, lambda_m, f_hz.
    void save(const std::string& path) const;
    static GroundTruth load(const std::string& path);
};

struct SynthResult {
    AudioBuffer audio;
    GroundTruth truth;
};

// Additive render of one pour: odd harmonics of the axial fundamental with
// phase-continuous instantaneous frequency, optional radial tone, seeded
// broadband noise at the configured SNR. Partials fade out as they approach
// Nyquist. The returned ground truth is the exact curve the oscillators
// followed.
SynthResult synthesize_pour(const ContainerSpec& c, double flow_m3s,
                            const SynthConfig& cfg, const PhysicsConstants& k);

struct SampleRanges {
    double height_min_m = 0.05;
    double height_max_m = 0.25;
    double radius_min_m = 0.01;
    double radius_max_m = 0.05;
    double duration_min_s = 5.0;
    double duration_max_s = 15.0;

    void validate() const;
};

struct DatasetEntry {
    int index = 0;
    std::string audio_path;
    std::string truth_path;
    double height_m = 0.0;
    double radius_m = 0.0;
    double duration_s = 0.0;
    double flow_m3s = 0.0;
    std::uint64_t seed = 0;
};

struct DatasetManifest {
    std::vector<DatasetEntry> entries;

    void save(const std::string& path) const;
    static DatasetManifest load(const std::string& path);
};

/// n independent (H, R, T) draws, each synthesized and written under out_dir
/// as pour_NNNN.wav / pour_NNNN_truth.tsv plus a manifest.tsv index.
DatasetManifest sample_dataset(int n, const SampleRanges& ranges, const SynthConfig& cfg,
                               const PhysicsConstants& k, std::uint64_t seed,
                               const std::string& out_dir);

}  // namespace pour
