#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pour/core.hpp"
#include "pour/physics.hpp"
#include "pour/pitch.hpp"
#include "pour/synth.hpp"

namespace pour::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;     // unreadable/invalid input
inline constexpr int kExitAnalysis = 3;  // analysis failed (e.g. no pour detected)

/// Entry point behind the `pour` binary. Never throws; maps errors to the
/// exit-code contract above and prints diagnostics to stderr.
int run(int argc, const char* const* argv);

struct AnalyzeConfig {
    std::string tracker = "argmax";  // argmax | yin
    CurveModel model = CurveModel::linear;
    int window_size = 1024;
    int hop_size = 256;
    int median_width = 5;
    double f_min = 80.0;
    double f_max = 6000.0;
    double yin_threshold = 0.1;
    RansacParams ransac{};
    std::vector<double> cut_fractions;  // extra time-to-fill cuts, in (0, 1]
    std::uint64_t seed = 0;
    bool export_spectrogram = false;
};

struct AnalyzeResult {
    PitchTrack track;
    FittedCurve curve;
    PropertyEstimate properties;
};

/// tracker -> fit_wavelength -> inversions; the pipeline behind `pour analyze`
/// and the evaluation harness.
AnalyzeResult analyze_audio(const AudioBuffer& audio, const AnalyzeConfig& cfg,
                            const PhysicsConstants& k);

struct EvalConfig {
    int n = 100;
    SampleRanges ranges{};
    std::vector<double> snr_db = {std::numeric_limits<double>::infinity(), 20.0, 10.0};
    std::uint64_t seed = 1;
    AnalyzeConfig analyze{};
    SynthConfig synth{};
    // tau estimation is fed the true radius (the exact Eq. form needs one and
    // a partial curve cannot supply it); flow error uses the known true Q.
    std::vector<double> tau_cuts = {0.25, 0.5, 0.75};
};

struct EvalSample {
    int index = 0;
    double snr_db = 0.0;
    double height_true_m = 0.0, radius_true_m = 0.0;
    double duration_s = 0.0, flow_true_mls = 0.0;
    double height_est_m = 0.0, radius_est_m = 0.0, flow_est_mls = 0.0;
    double l_mae_m = 0.0;
    std::vector<double> tau_est_s;    // per cut
    std::vector<double> tau_true_s;   // remaining time per cut
};

struct EvalAggregate {
    double snr_db = 0.0;
    int n = 0;
    double l_mae_cm = 0.0;
    double height_mae_cm = 0.0;
    double radius_mae_cm = 0.0;
    double flow_mae_mls = 0.0;
    double flow_rel_err = 0.0;           // mean |Qhat - Q| / Q
    std::vector<double> tau_mae_s;       // per cut
    std::vector<double> tau_remaining_s; // mean remaining time per cut
};

struct EvalReport {
    EvalConfig config;
    std::vector<EvalSample> samples;
    std::vector<EvalAggregate> aggregates;  // one per SNR level

    std::string samples_tsv() const;
    std::string aggregate_tsv() const;
    std::string text() const;
};

/// Round-trip evaluation: sample containers, synthesize at each SNR, analyze,
/// aggregate mean absolute errors.
EvalReport run_eval(const EvalConfig& cfg, const PhysicsConstants& k);

/// Recomputes the aggregates from the per-sample records; used to validate
/// report consistency.
std::vector<EvalAggregate> aggregate_samples(const EvalReport& report);

}  // namespace pour::cli
