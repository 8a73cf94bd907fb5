#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace pour {

/// Thrown when an input file is missing, unreadable or malformed.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown when analysis cannot proceed on otherwise valid input
/// (no pour detected, too few voiced frames, ...).
struct AnalysisError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Speed of sound defaults to dry air at 20 C. The end correction extends the
// effective air column by beta * R at the open rim of the container.
struct PhysicsConstants {
    double speed_of_sound = 343.0;  // m/s
    double end_correction = 0.62;   // beta, dimensionless

    void validate() const;
};

// lambda = c / f. Both directions reject non-positive arguments.
double wavelength_of_frequency(double f_hz, const PhysicsConstants& k);
double frequency_of_wavelength(double lambda_m, const PhysicsConstants& k);

enum class Shape { cylinder, frustum, bottleneck };

const char* to_string(Shape s);
Shape shape_from_string(const std::string& name);

struct NeckParams {
    double length_m = 0.0;
    double radius_m = 0.0;
};

// Parametric container geometry. The inner radius varies linearly from base
// to top for frustums; cylinders must have radius_top == radius_base.
// Bottlenecks are modelled as a cylindrical body of radius_base plus a neck.
struct ContainerSpec {
    Shape shape = Shape::cylinder;
    double height_m = 0.0;
    double radius_base_m = 0.0;
    double radius_top_m = 0.0;
    std::optional<NeckParams> neck;

    void validate() const;

    /// Inner radius at liquid height h above the base, h in [0, H].
    double radius_at_height(double h_m) const;

    /// Filled volume when the liquid stands at height h above the base.
    double volume_below(double h_m) const;

    /// Total capacity of the body.
    double volume_m3() const { return volume_below(height_m); }

    /// Neck geometry for bottlenecks; fills in proportional defaults when the
    /// spec file omitted them (length 0.15 H, radius 0.4 R).
    NeckParams effective_neck() const;

    static ContainerSpec make_cylinder(double height_m, double radius_m);
    static ContainerSpec make_frustum(double height_m, double radius_base_m, double radius_top_m);
    static ContainerSpec make_bottleneck(double height_m, double radius_m, NeckParams neck);

    // Key/value text file, keys: shape, height_m, radius_base_m, radius_top_m,
    // neck_length_m, neck_radius_m.
    static ContainerSpec load(const std::string& path);
    void save(const std::string& path) const;
};

// Air-column length over one pour: l is non-increasing, l(0) = H and
// l(T) = 0. Sample times ascend from 0 to duration_s.
struct FillProfile {
    double duration_s = 0.0;
    Eigen::ArrayXd t;  // seconds
    Eigen::ArrayXd l;  // meters

    /// Linear interpolation, clamped at the ends.
    double l_at(double time_s) const;

    void validate(double tolerance_m = 1e-9) const;
};

struct AudioBuffer {
    int sample_rate = 16000;
    Eigen::ArrayXd samples;  // amplitudes in [-1, 1]

    double duration_s() const {
        return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
    }
};

enum class TrackSource { argmax, yin, fitted };

const char* to_string(TrackSource s);

struct PitchFrame {
    double t = 0.0;
    double f_hz = 0.0;      // valid only when voiced
    double lambda_m = 0.0;  // c / f, valid only when voiced
    double confidence = 0.0;
    bool voiced = false;
};

struct PitchTrack {
    std::vector<PitchFrame> frames;  // time-sorted
    TrackSource source = TrackSource::argmax;

    int voiced_count() const;

    // Delimited text, columns: time_s, f_hz, lambda_m, confidence, voiced.
    static PitchTrack load(const std::string& path);
    void save(const std::string& path) const;
};

// Parameters of the wall-resonance law. f0 is the empty-container frequency,
// xi the liquid-loading strength; both depend on container material and are
// supplied by the user.
struct RadialParams {
    double f0_hz = 0.0;
    double xi = 0.0;

    void validate() const;
};

}  // namespace pour
