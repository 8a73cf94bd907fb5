#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pour/core.hpp"

namespace pour {

struct Spectrogram {
    Eigen::MatrixXd magnitudes;  // frames x bins, non-negative
    Eigen::ArrayXd frame_times;  // seconds, frame centers
    Eigen::ArrayXd bin_freqs;    // Hz, ascending up to Nyquist
    int window_size = 0;
    int hop_size = 0;
    int sample_rate = 0;

    // Matrix as delimited text plus an axis sidecar (<prefix>_axes.tsv with
    // one line of frame times and one of bin frequencies).
    void save(const std::string& prefix) const;
};

/// Magnitude STFT with a periodic Hann window. Frames are centered at
/// (start + window/2) / sample_rate; no padding, so the audio must hold at
/// least one full window.
Spectrogram spectrogram(const AudioBuffer& audio, int window_size = 1024, int hop_size = 256);

// Per frame, the maximal-magnitude bin inside [f_min, f_max] (inclusive),
// median-filtered over time. Confidence is peak magnitude over frame total.
// Frames whose RMS falls below 1% of the file's 95th-percentile frame RMS
// are unvoiced.
PitchTrack track_argmax(const Spectrogram& spec, double f_min, double f_max,
                        int median_width, const PhysicsConstants& k);

struct YinConfig {
    int frame_size = 2048;
    int hop_size = 256;
    double threshold = 0.1;
    double f_min = 80.0;
    double f_max = 6000.0;
};

// Difference function, cumulative-mean-normalized difference, first dip
// below threshold, parabolic lag interpolation. Frames with no dip below
// the threshold come back unvoiced.
PitchTrack track_yin(const AudioBuffer& audio, const YinConfig& cfg, const PhysicsConstants& k);

enum class CurveModel { linear, poly2, frustum, sqrt_law };

const char* to_string(CurveModel m);
CurveModel curve_model_from_string(const std::string& name);

struct RansacParams {
    int iterations = 500;
    double inlier_threshold_m = 0.02;
    int min_samples = 10;
};

// A fitted wavelength-vs-time model.
//
// Coefficients by model:
//   linear:   [a, b]          lambda = a + b t
//   poly2:    [a, b, c]       lambda = a + b t + c t^2
//   sqrt_law: [a, b, d]       lambda = a sqrt(b - t) + d
//   frustum:  [a, b, rho, T]  lambda = a (1 - u(t/T; rho)) + b, where u is
//             the normalized liquid height of a conical frustum with top/base
//             radius ratio rho filling at constant flow:
//             u(s) = (cbrt(1 + s (rho^3 - 1)) - 1) / (rho - 1).
struct FittedCurve {
    CurveModel model = CurveModel::linear;
    Eigen::VectorXd coeffs;
    std::vector<std::uint8_t> inlier_mask;  // aligned with the source track's frames
    double residual_rms_m = 0.0;
    double inlier_fraction = 0.0;
    double t_begin = 0.0;
    double t_end = 0.0;

    double value(double t) const;

    /// Analytic d(lambda)/dt of the fitted model.
    double derivative(double t) const;
};

/// Seeded RANSAC over the chosen model family on the voiced frames, then a
/// confidence-weighted least-squares refit on the consensus set.
/// duration_s pins the frustum family's pour duration; 0 means "use the last
/// frame time".
FittedCurve fit_wavelength(const PitchTrack& track, CurveModel model,
                           const RansacParams& ransac, std::uint64_t seed,
                           double duration_s = 0.0);

struct BinEncodingConfig {
    int n_bins = 64;
    double range_cm = 100.0;
    double blur_sigma_bins = 1.25;
};

/// Gaussian-blurred one-hot over wavelength bins, normalized to sum to 1.
/// Out-of-range wavelengths are clamped to the boundary bin; *clamped is set
/// when that happens.
Eigen::VectorXd encode_bins(double lambda_m, const BinEncodingConfig& cfg, bool* clamped = nullptr);

/// Expectation decoding: probability-weighted bin centers, in meters.
double decode_bins(const Eigen::VectorXd& probs, const BinEncodingConfig& cfg);

}  // namespace pour
