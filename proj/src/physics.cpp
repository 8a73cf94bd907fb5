#include "pour/physics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pour/textio.hpp"

namespace pour {

double axial_frequency(double l_m, double radius_m, const PhysicsConstants& k) {
    if (l_m < 0.0) throw std::domain_error("air-column length must be non-negative");
    if (!(radius_m > 0.0)) throw std::domain_error("radius must be positive");
    return k.speed_of_sound / (4.0 * (l_m + k.end_correction * radius_m));
}

double radial_frequency(double l_m, double height_m, const RadialParams& p) {
    p.validate();
    if (l_m < 0.0 || l_m > height_m)
        throw std::domain_error("air-column length outside [0, H]");
    const double fill = 1.0 - l_m / height_m;
    return p.f0_hz / std::sqrt(1.0 + p.xi * fill * fill * fill);
}

double bottleneck_frequency(double l_m, const ContainerSpec& c, const PhysicsConstants& k) {
    if (l_m < 0.0) throw std::domain_error("air-column length must be non-negative");
    const NeckParams neck = c.effective_neck();
    const double neck_area = M_PI * neck.radius_m * neck.radius_m;
    const double body_area = M_PI * c.radius_base_m * c.radius_base_m;
    const double neck_eff_len = neck.length_m + 1.4 * neck.radius_m;
    const double air_volume = body_area * l_m + neck_area * neck.length_m;
    return k.speed_of_sound / (2.0 * M_PI) *
           std::sqrt(neck_area / (neck_eff_len * air_volume));
}

FillProfile fill_profile(const ContainerSpec& c, double flow_m3s, int n_samples) {
    c.validate();
    if (!(flow_m3s > 0.0)) throw std::domain_error("flow rate must be positive");
    if (n_samples < 2) throw std::invalid_argument("need at least 2 profile samples");

    const double capacity = c.volume_m3();
    const double duration = capacity / flow_m3s;

    FillProfile fill;
    fill.duration_s = duration;
    fill.t.setLinSpaced(n_samples, 0.0, duration);
    fill.l.resize(n_samples);

    if (c.shape == Shape::frustum && c.radius_top_m != c.radius_base_m) {
        for (int i = 0; i < n_samples; ++i) {
            const double target = flow_m3s * fill.t(i);
            double lo = 0.0, hi = c.height_m;
            for (int it = 0; it < 80; ++it) {
                const double mid = 0.5 * (lo + hi);
                (c.volume_below(mid) < target ? lo : hi) = mid;
            }
            fill.l(i) = c.height_m - 0.5 * (lo + hi);
        }
    } else {
        // Constant cross-section: linear in time.
        for (int i = 0; i < n_samples; ++i)
            fill.l(i) = c.height_m * (1.0 - fill.t(i) / duration);
    }
    fill.l(0) = c.height_m;
    fill.l(n_samples - 1) = 0.0;
    return fill;
}

WavelengthProfile wavelength_profile(const ContainerSpec& c, const FillProfile& fill,
                                     const PhysicsConstants& k) {
    c.validate();
    WavelengthProfile wp;
    wp.t = fill.t;
    wp.lambda_m.resize(fill.t.size());
    wp.f_hz.resize(fill.t.size());
    for (Eigen::Index i = 0; i < fill.t.size(); ++i) {
        const double l = std::max(0.0, fill.l(i));
        double lambda;
        if (c.shape == Shape::bottleneck) {
            lambda = k.speed_of_sound / bottleneck_frequency(l, c, k);
        } else {
            // end correction uses the radius at the current liquid surface
            const double r_surface = c.radius_at_height(c.height_m - l);
            lambda = 4.0 * (l + k.end_correction * r_surface);
        }
        wp.lambda_m(i) = lambda;
        wp.f_hz(i) = k.speed_of_sound / lambda;
    }
    return wp;
}

FillProfile invert_length(const FittedCurve& lambda, double duration_s, int n_samples,
                          InversionDiagnostics* diag) {
    if (!(duration_s > 0.0)) throw std::invalid_argument("duration must be positive");
    if (n_samples < 2) throw std::invalid_argument("need at least 2 samples");
    const double lambda_end = lambda.value(duration_s);
    FillProfile fill;
    fill.duration_s = duration_s;
    fill.t.setLinSpaced(n_samples, 0.0, duration_s);
    fill.l.resize(n_samples);
    int clamped = 0;
    for (int i = 0; i < n_samples; ++i) {
        const double raw = 0.25 * (lambda.value(fill.t(i)) - lambda_end);
        if (raw < 0.0) ++clamped;
        fill.l(i) = std::max(0.0, raw);
    }
    fill.l(n_samples - 1) = 0.0;
    if (diag) diag->clamped_samples = clamped;
    return fill;
}

Dimensions invert_dimensions(const FittedCurve& lambda, double duration_s,
                             const PhysicsConstants& k) {
    const double lambda0 = lambda.value(0.0);
    const double lambdaT = lambda.value(duration_s);
    if (!(lambda0 > lambdaT))
        throw std::domain_error("non-physical wavelength curve: lambda(0) <= lambda(T)");
    if (!(lambdaT > 0.0))
        throw std::domain_error("non-physical wavelength curve: lambda(T) <= 0");
    Dimensions d;
    d.height_m = 0.25 * (lambda0 - lambdaT);
    d.radius_m = lambdaT / (4.0 * k.end_correction);
    return d;
}

FlowEstimate invert_flow_rate(const FittedCurve& lambda, double radius_m, int n_samples) {
    if (!(radius_m > 0.0)) throw std::domain_error("radius must be positive");
    if (n_samples < 2) throw std::invalid_argument("need at least 2 samples");
    FlowEstimate flow;
    flow.t.setLinSpaced(n_samples, lambda.t_begin, lambda.t_end);
    flow.q_mls.resize(n_samples);
    const double area = M_PI * radius_m * radius_m;
    for (int i = 0; i < n_samples; ++i)
        flow.q_mls(i) = -0.25 * area * lambda.derivative(flow.t(i)) * 1e6;
    flow.mean_mls = flow.q_mls.mean();
    return flow;
}

double time_to_fill(const FittedCurve& lambda_partial, double t_cut,
                    const TimeToFillConfig& cfg, const PhysicsConstants& k,
                    std::optional<double> radius_estimate_m) {
    if (!(cfg.early_window_s > 0.0)) throw std::invalid_argument("early window must be positive");
    if (!(lambda_partial.t_end + 1e-12 >= cfg.early_window_s))
        throw std::invalid_argument("partial curve shorter than the early window");

    const double delta = std::min(cfg.early_window_s, lambda_partial.t_end);
    const double t_prime = 0.5 * delta;

    double slope, lambda_tp;
    if (cfg.method == TimeToFillConfig::Derivative::ransac_slope) {
        slope = lambda_partial.derivative(t_prime);
        lambda_tp = lambda_partial.value(t_prime);
    } else {
        // local linearization of the fitted model over [0, delta]
        constexpr int kPts = 33;
        double st = 0, stt = 0, sy = 0, sty = 0;
        for (int i = 0; i < kPts; ++i) {
            const double t = delta * i / (kPts - 1);
            const double y = lambda_partial.value(t);
            st += t;
            stt += t * t;
            sy += y;
            sty += t * y;
        }
        const double det = kPts * stt - st * st;
        slope = (kPts * sty - st * sy) / det;
        lambda_tp = (sy - slope * st) / kPts + slope * t_prime;
    }

    if (!(slope < 0.0)) throw AnalysisError("no pour detected");

    double base = lambda_tp;
    if (radius_estimate_m)
        base -= 4.0 * k.end_correction * *radius_estimate_m;
    const double tau_tp = -base / slope;
    return tau_tp - (t_cut - t_prime);
}

const char* to_string(ShapeClass s) {
    switch (s) {
        case ShapeClass::cylindrical: return "cylindrical";
        case ShapeClass::semiconical: return "semiconical";
        case ShapeClass::bottleneck: return "bottleneck";
    }
    return "?";
}

namespace {

// Trimmed RMS of a family's residuals over all voiced frames; families pick
// different consensus sets, so comparing them on a common trimmed set keeps
// the scores commensurable.
double trimmed_residual_rms(const PitchTrack& track, const FittedCurve& curve,
                            double keep_fraction) {
    std::vector<double> sq;
    for (const auto& fr : track.frames) {
        if (!fr.voiced) continue;
        const double r = fr.lambda_m - curve.value(fr.t);
        sq.push_back(r * r);
    }
    std::sort(sq.begin(), sq.end());
    const size_t keep = std::max<size_t>(1, static_cast<size_t>(keep_fraction * sq.size()));
    double acc = 0.0;
    for (size_t i = 0; i < keep; ++i) acc += sq[i];
    return std::sqrt(acc / keep);
}

}  // namespace

ShapeScores classify_shape(const PitchTrack& track, double duration_s,
                           const RansacParams& ransac, std::uint64_t seed) {
    if (track.voiced_count() < 10)
        throw AnalysisError("too few voiced frames to classify shape");

    const FittedCurve lin = fit_wavelength(track, CurveModel::linear, ransac, seed, duration_s);
    const FittedCurve fru = fit_wavelength(track, CurveModel::frustum, ransac, seed, duration_s);
    const FittedCurve sqr = fit_wavelength(track, CurveModel::sqrt_law, ransac, seed, duration_s);

    double lambda_min = std::numeric_limits<double>::infinity();
    double lambda_max = -std::numeric_limits<double>::infinity();
    for (const auto& fr : track.frames) {
        if (!fr.voiced) continue;
        lambda_min = std::min(lambda_min, fr.lambda_m);
        lambda_max = std::max(lambda_max, fr.lambda_m);
    }
    const double span = std::max(lambda_max - lambda_min, 1e-6);

    constexpr double kKeep = 0.8;
    ShapeScores scores;
    scores.residual_linear = trimmed_residual_rms(track, lin, kKeep) / span;
    scores.residual_frustum = trimmed_residual_rms(track, fru, kKeep) / span;
    scores.residual_sqrt = trimmed_residual_rms(track, sqr, kKeep) / span;

    const double best = std::min({scores.residual_linear, scores.residual_frustum,
                                  scores.residual_sqrt});
    // The richer families nest (or closely shadow) the line, so "tie" means
    // the line is within a factor of the best.
    constexpr double kTieFactor = 1.15;
    if (scores.residual_linear <= kTieFactor * best) {
        scores.label = ShapeClass::cylindrical;
    } else if (scores.residual_frustum <= scores.residual_sqrt) {
        scores.label = ShapeClass::semiconical;
    } else {
        scores.label = ShapeClass::bottleneck;
    }
    return scores;
}

PropertyEstimate estimate_properties(const FittedCurve& lambda, double duration_s,
                                     const PhysicsConstants& k, int n_samples) {
    PropertyEstimate est;
    const Dimensions dims = invert_dimensions(lambda, duration_s, k);
    est.height_m = dims.height_m;
    est.radius_m = dims.radius_m;
    InversionDiagnostics diag;
    est.air_column = invert_length(lambda, duration_s, n_samples, &diag);
    est.clamped_samples = diag.clamped_samples;
    est.flow = invert_flow_rate(lambda, dims.radius_m, n_samples);
    est.fit_residual_rms_m = lambda.residual_rms_m;
    est.inlier_fraction = lambda.inlier_fraction;
    return est;
}

std::string PropertyEstimate::report_text() const {
    std::ostringstream os;
    os << "pour analysis report\n";
    os << "--------------------\n";
    os << "height_cm            " << fmt(height_m * 100.0, "%.3f") << "\n";
    os << "radius_cm            " << fmt(radius_m * 100.0, "%.3f") << "\n";
    os << "flow_mean_mls        " << fmt(flow.mean_mls, "%.3f") << "\n";
    for (const auto& [cut, tau] : tau_at_cuts)
        os << "tau_s_at_" << fmt(cut, "%.2f") << "s       " << fmt(tau, "%.3f") << "\n";
    os << "fit_residual_rms_cm  " << fmt(fit_residual_rms_m * 100.0, "%.4f") << "\n";
    os << "inlier_fraction      " << fmt(inlier_fraction, "%.4f") << "\n";
    os << "clamped_samples      " << clamped_samples << "\n";
    return os.str();
}

std::string PropertyEstimate::report_tsv() const {
    std::ostringstream os;
    os << "key\tvalue\n";
    os << "height_cm\t" << fmt(height_m * 100.0) << "\n";
    os << "radius_cm\t" << fmt(radius_m * 100.0) << "\n";
    os << "flow_mean_mls\t" << fmt(flow.mean_mls) << "\n";
    for (const auto& [cut, tau] : tau_at_cuts)
        os << "tau_s_at_" << fmt(cut) << "\t" << fmt(tau) << "\n";
    os << "fit_residual_rms_cm\t" << fmt(fit_residual_rms_m * 100.0) << "\n";
    os << "inlier_fraction\t" << fmt(inlier_fraction) << "\n";
    os << "clamped_samples\t" << clamped_samples << "\n";
    return os.str();
}

}  // namespace pour
