#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "pour/core.hpp"
#include "pour/pitch.hpp"

namespace pour {

/// Quarter-wave resonance of the air column above the liquid, with end
/// correction: f = c / (4 (l + beta R)). Strictly decreasing in l and R.
double axial_frequency(double l_m, double radius_m, const PhysicsConstants& k);

/// Wall resonance loaded by the liquid mass:
/// f = f0 / sqrt(1 + xi (1 - l/H)^3). Decreases as the container fills.
double radial_frequency(double l_m, double height_m, const RadialParams& p);

// Helmholtz-style law for bottlenecks: f = (c/2pi) sqrt(A_neck / (L_eff V_air))
// with V_air the body air volume plus the neck volume and L_eff the neck
// length plus 1.4 neck radii of end correction. Gives f proportional to
// 1/sqrt(l + l_offset), finite at l = 0.
double bottleneck_frequency(double l_m, const ContainerSpec& c, const PhysicsConstants& k);

/// Air column over a constant-flow pour, sampled at n_samples points of
/// [0, T] with T = capacity / flow. Cylinders fill linearly; frustums invert
/// the filled-volume cubic by monotone bisection. Bottleneck bodies fill as
/// cylinders of the base radius.
FillProfile fill_profile(const ContainerSpec& c, double flow_m3s, int n_samples);

struct WavelengthProfile {
    Eigen::ArrayXd t;         // seconds
    Eigen::ArrayXd lambda_m;  // fundamental wavelength
    Eigen::ArrayXd f_hz;      // c / lambda
};

/// Forward resonance curve for a fill profile. Axial law for cylinders and
/// frustums (the end correction uses the surface-level radius), Helmholtz law
/// for bottlenecks.
WavelengthProfile wavelength_profile(const ContainerSpec& c, const FillProfile& fill,
                                     const PhysicsConstants& k);

struct InversionDiagnostics {
    int clamped_samples = 0;  // frames where lambda(t) < lambda(T) forced l to 0
};

/// l(t) = (lambda(t) - lambda(T)) / 4 on a uniform grid; l(T) is exactly 0.
/// Negative lengths (non-physical, low-signal ends) clamp to 0 and are
/// counted in the diagnostics.
FillProfile invert_length(const FittedCurve& lambda, double duration_s,
                          int n_samples = 512, InversionDiagnostics* diag = nullptr);

struct Dimensions {
    double height_m = 0.0;
    double radius_m = 0.0;
};

/// H = (lambda(0) - lambda(T)) / 4, R = lambda(T) / (4 beta). Throws
/// std::domain_error when the boundary values are non-physical.
Dimensions invert_dimensions(const FittedCurve& lambda, double duration_s,
                             const PhysicsConstants& k);

struct FlowEstimate {
    Eigen::ArrayXd t;      // seconds
    Eigen::ArrayXd q_mls;  // ml/s
    double mean_mls = 0.0;
};

/// Q(t) = -(1/4) pi R^2 dlambda/dt, from the fitted model's analytic
/// derivative, reported in ml/s.
FlowEstimate invert_flow_rate(const FittedCurve& lambda, double radius_m, int n_samples = 256);

struct TimeToFillConfig {
    double early_window_s = 1.0;  // delta: slope is taken near the start of the pour

    enum class Derivative { ransac_slope, local_regression };
    Derivative method = Derivative::ransac_slope;
};

// Remaining seconds until the container is full, assuming constant flow.
// Uses the early-window slope of the fitted partial curve. With a radius
// estimate the dimensionally consistent form -(lambda - 4 beta R)/slope is
// used; without one, the end-correction-free approximation -lambda/slope
// (biased high by 4 beta R / |slope|). Throws AnalysisError("no pour
// detected") when the curve is not decreasing.
double time_to_fill(const FittedCurve& lambda_partial, double t_cut,
                    const TimeToFillConfig& cfg, const PhysicsConstants& k,
                    std::optional<double> radius_estimate_m = std::nullopt);

enum class ShapeClass { cylindrical, semiconical, bottleneck };

const char* to_string(ShapeClass s);

struct ShapeScores {
    ShapeClass label = ShapeClass::cylindrical;
    // Per-family residuals, trimmed RMS over voiced frames normalized by the
    // track's wavelength span; comparable across families.
    double residual_linear = 0.0;
    double residual_frustum = 0.0;
    double residual_sqrt = 0.0;
};

/// Fits the three wavelength-vs-time families and picks the smallest
/// normalized residual; near-ties go to the cylinder (simplest model).
ShapeScores classify_shape(const PitchTrack& track, double duration_s,
                           const RansacParams& ransac = {}, std::uint64_t seed = 0);

struct PropertyEstimate {
    double height_m = 0.0;
    double radius_m = 0.0;
    FillProfile air_column;
    FlowEstimate flow;
    std::vector<std::pair<double, double>> tau_at_cuts;  // (t_cut seconds, tau seconds)
    double fit_residual_rms_m = 0.0;
    double inlier_fraction = 0.0;
    int clamped_samples = 0;

    // Structured text report, lengths in cm, flow in ml/s, times in s.
    std::string report_text() const;
    std::string report_tsv() const;
};

/// Dimensions, air column and flow rate from one fitted wavelength curve.
/// Time-to-fill entries are left for the caller, which owns the partial fits.
PropertyEstimate estimate_properties(const FittedCurve& lambda, double duration_s,
                                     const PhysicsConstants& k, int n_samples = 512);

}  // namespace pour
