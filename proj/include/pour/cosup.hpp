#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Core>

#include "pour/core.hpp"
#include "pour/pitch.hpp"

namespace pour {

// Air-column length in pixels over time, as measured from video. radius_px
// is the container radius in the same pixel scale.
struct PixelTrack {
    Eigen::ArrayXd t;  // seconds
    Eigen::ArrayXd l_px;
    double radius_px = 0.0;
    double image_height_px = 0.0;

    // Delimited text (time_s, l_px) with a header carrying radius_px and
    // image_height_px.
    static PixelTrack load(const std::string& path);
    void save(const std::string& path) const;
};

// Per-recording factor mapping metric quarter-wavelengths to pixel lengths:
// alpha * lambda/4 = l_px + beta * radius_px. Encapsulates camera depth and
// intrinsics; plausible values for a casual recording are 30..80.
struct ScaleEstimate {
    double alpha = 0.0;
    Eigen::ArrayXd t;        // overlap frame times
    Eigen::ArrayXd ratios;   // per-frame alpha estimates
    Eigen::ArrayXd weights;  // RMS energy weights
    bool out_of_range = false;

    static constexpr double kPlausibleLo = 30.0;
    static constexpr double kPlausibleHi = 80.0;
};

/// RMS-weighted mean of per-frame ratios (l_px + beta R_px) / (lambda/4) over
/// the temporal overlap of the two tracks. rms must align with pixels.t.
/// Low-signal (low RMS) frames therefore barely influence the estimate.
ScaleEstimate estimate_scale(const FittedCurve& lambda, const PixelTrack& pixels,
                             const Eigen::Ref<const Eigen::ArrayXd>& rms,
                             const PhysicsConstants& k);

struct TemporalDifferenceMap {
    Eigen::MatrixXd values;      // frames x image rows, non-negative
    Eigen::ArrayXd frame_times;  // seconds

    // Delimited matrix plus a <prefix>_times.tsv sidecar.
    void save(const std::string& prefix) const;
    static TemporalDifferenceMap load(const std::string& prefix);
};

struct PseudoLabelConfig {
    double sigma_frames = 2.0;  // Gaussian smoothing of the map; 0 disables
    double sigma_rows = 2.0;
    int ransac_iterations = 300;
    double inlier_threshold_px = 2.0;
    int min_samples = 5;
    double radius_px = 0.0;  // carried into the result; 0 derives a placeholder
};

/// Per frame, the argmax row within [row_top, row_bottom]; a second-order
/// polynomial fitted to (t, row) with seeded RANSAC. The returned track has
/// l_px(t) = row_fit(t) - row_top, clamped to the container bounds.
PixelTrack fit_pseudo_labels(const TemporalDifferenceMap& tdm, int row_top, int row_bottom,
                             std::uint64_t seed, const PseudoLabelConfig& cfg = {});

struct CosupervisionResidual {
    Eigen::ArrayXd t;
    Eigen::ArrayXd residual_px;  // alpha lambda/4 - (l_px + beta R_px)
    double mse = 0.0;
};

/// Per-frame co-supervision residual and its MSE over the temporal overlap.
CosupervisionResidual cosupervision_residual(const FittedCurve& lambda, const PixelTrack& pixels,
                                             double alpha, const PhysicsConstants& k);

}  // namespace pour
