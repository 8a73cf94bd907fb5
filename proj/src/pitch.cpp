#include "pour/pitch.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <unsupported/Eigen/FFT>

#include "pour/rng.hpp"
#include "pour/textio.hpp"

namespace pour {

void Spectrogram::save(const std::string& prefix) const {
    write_matrix(prefix + ".tsv", magnitudes);
    std::ostringstream os;
    os << "frame_times_s";
    for (Eigen::Index i = 0; i < frame_times.size(); ++i) os << '\t' << fmt(frame_times(i));
    os << "\nbin_freqs_hz";
    for (Eigen::Index i = 0; i < bin_freqs.size(); ++i) os << '\t' << fmt(bin_freqs(i));
    os << '\n';
    write_text_atomic(prefix + "_axes.tsv", os.str());
}

Spectrogram spectrogram(const AudioBuffer& audio, int window_size, int hop_size) {
    if (window_size <= 0 || hop_size <= 0)
        throw std::invalid_argument("window and hop must be positive");
    const Eigen::Index n = audio.samples.size();
    if (n < window_size) throw std::invalid_argument("audio shorter than one analysis window");

    const Eigen::Index n_frames = 1 + (n - window_size) / hop_size;
    const Eigen::Index n_bins = window_size / 2 + 1;

    // periodic Hann
    Eigen::ArrayXd window(window_size);
    for (int i = 0; i < window_size; ++i)
        window(i) = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / window_size);

    Spectrogram spec;
    spec.magnitudes.resize(n_frames, n_bins);
    spec.frame_times.resize(n_frames);
    spec.bin_freqs.resize(n_bins);
    spec.window_size = window_size;
    spec.hop_size = hop_size;
    spec.sample_rate = audio.sample_rate;
    for (Eigen::Index b = 0; b < n_bins; ++b)
        spec.bin_freqs(b) = static_cast<double>(b) * audio.sample_rate / window_size;

    Eigen::FFT<double> fft;
    fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    std::vector<double> frame(static_cast<size_t>(window_size));
    std::vector<std::complex<double>> bins;

    for (Eigen::Index fi = 0; fi < n_frames; ++fi) {
        const Eigen::Index start = fi * hop_size;
        for (int i = 0; i < window_size; ++i)
            frame[static_cast<size_t>(i)] = audio.samples(start + i) * window(i);
        fft.fwd(bins, frame);
        for (Eigen::Index b = 0; b < n_bins; ++b)
            spec.magnitudes(fi, b) = std::abs(bins[static_cast<size_t>(b)]);
        spec.frame_times(fi) =
            (static_cast<double>(start) + window_size / 2.0) / audio.sample_rate;
    }
    return spec;
}

namespace {

// Windowed-frame RMS reconstructed from the spectrum (Parseval), up to the
// constant window-shape factor, which cancels in the relative voicing floor.
double frame_rms_from_spectrum(const Spectrogram& spec, Eigen::Index fi) {
    const Eigen::Index n_bins = spec.magnitudes.cols();
    double energy = spec.magnitudes(fi, 0) * spec.magnitudes(fi, 0);
    for (Eigen::Index b = 1; b < n_bins - 1; ++b)
        energy += 2.0 * spec.magnitudes(fi, b) * spec.magnitudes(fi, b);
    energy += spec.magnitudes(fi, n_bins - 1) * spec.magnitudes(fi, n_bins - 1);
    energy /= spec.window_size;
    return std::sqrt(energy / spec.window_size);
}

double median_of(std::vector<double>& v) {
    const size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    return v[mid];
}

}  // namespace

PitchTrack track_argmax(const Spectrogram& spec, double f_min, double f_max,
                        int median_width, const PhysicsConstants& k) {
    if (!(f_min >= 0.0) || !(f_max > f_min))
        throw std::invalid_argument("empty or invalid frequency band");
    const double nyquist = spec.sample_rate / 2.0;
    if (f_max > nyquist + 1e-9) throw std::invalid_argument("band exceeds Nyquist");

    Eigen::Index b_lo = 0, b_hi = spec.bin_freqs.size() - 1;
    while (b_lo < spec.bin_freqs.size() && spec.bin_freqs(b_lo) < f_min) ++b_lo;
    while (b_hi >= 0 && spec.bin_freqs(b_hi) > f_max) --b_hi;
    if (b_lo > b_hi) throw std::invalid_argument("band contains no spectrogram bins");

    const Eigen::Index n_frames = spec.magnitudes.rows();

    Eigen::ArrayXd rms(n_frames);
    for (Eigen::Index fi = 0; fi < n_frames; ++fi) rms(fi) = frame_rms_from_spectrum(spec, fi);
    std::vector<double> sorted(rms.data(), rms.data() + rms.size());
    std::sort(sorted.begin(), sorted.end());
    const double p95 = sorted[static_cast<size_t>(0.95 * (sorted.size() - 1))];
    const double floor_rms = std::max(0.01 * p95, 1e-9);

    std::vector<double> raw_f(static_cast<size_t>(n_frames), 0.0);
    std::vector<double> conf(static_cast<size_t>(n_frames), 0.0);
    std::vector<bool> voiced(static_cast<size_t>(n_frames), false);

    for (Eigen::Index fi = 0; fi < n_frames; ++fi) {
        if (rms(fi) < floor_rms) continue;
        Eigen::Index best = b_lo;
        for (Eigen::Index b = b_lo + 1; b <= b_hi; ++b)
            if (spec.magnitudes(fi, b) > spec.magnitudes(fi, best)) best = b;
        const double total = spec.magnitudes.row(fi).sum();
        if (total <= 0.0) continue;
        raw_f[static_cast<size_t>(fi)] = spec.bin_freqs(best);
        conf[static_cast<size_t>(fi)] = spec.magnitudes(fi, best) / total;
        voiced[static_cast<size_t>(fi)] = true;
    }

    PitchTrack track;
    track.source = TrackSource::argmax;
    track.frames.resize(static_cast<size_t>(n_frames));
    const int half = std::max(0, median_width / 2);
    for (Eigen::Index fi = 0; fi < n_frames; ++fi) {
        PitchFrame fr;
        fr.t = spec.frame_times(fi);
        if (voiced[static_cast<size_t>(fi)]) {
            std::vector<double> window_f;
            for (Eigen::Index j = std::max<Eigen::Index>(0, fi - half);
                 j <= std::min(n_frames - 1, fi + half); ++j)
                if (voiced[static_cast<size_t>(j)]) window_f.push_back(raw_f[static_cast<size_t>(j)]);
            fr.f_hz = median_of(window_f);
            fr.lambda_m = k.speed_of_sound / fr.f_hz;
            fr.confidence = conf[static_cast<size_t>(fi)];
            fr.voiced = true;
        }
        track.frames[static_cast<size_t>(fi)] = fr;
    }
    return track;
}

PitchTrack track_yin(const AudioBuffer& audio, const YinConfig& cfg, const PhysicsConstants& k) {
    const int w = cfg.frame_size;
    if (w <= 0 || cfg.hop_size <= 0) throw std::invalid_argument("bad YIN frame/hop");
    const Eigen::Index n = audio.samples.size();
    if (n < w) throw std::invalid_argument("audio shorter than one YIN frame");
    const double sr = audio.sample_rate;
    if (w < 2.0 * sr / cfg.f_min)
        throw std::invalid_argument("YIN frame too short for the requested f_min");

    const int half = w / 2;
    const int tau_min = std::max(2, static_cast<int>(std::ceil(sr / cfg.f_max)));
    const int tau_max = std::min(half - 1, static_cast<int>(std::floor(sr / cfg.f_min)));
    if (tau_min >= tau_max) throw std::invalid_argument("empty YIN lag range");

    PitchTrack track;
    track.source = TrackSource::yin;

    std::vector<double> d(static_cast<size_t>(tau_max) + 1, 0.0);
    std::vector<double> dn(static_cast<size_t>(tau_max) + 1, 1.0);

    for (Eigen::Index start = 0; start + w <= n; start += cfg.hop_size) {
        PitchFrame fr;
        fr.t = (static_cast<double>(start) + w / 2.0) / sr;
        const double* x = audio.samples.data() + start;

        for (int tau = 1; tau <= tau_max; ++tau) {
            double acc = 0.0;
            for (int j = 0; j < half; ++j) {
                const double diff = x[j] - x[j + tau];
                acc += diff * diff;
            }
            d[static_cast<size_t>(tau)] = acc;
        }
        // cumulative-mean normalization
        double running = 0.0;
        for (int tau = 1; tau <= tau_max; ++tau) {
            running += d[static_cast<size_t>(tau)];
            dn[static_cast<size_t>(tau)] =
                running > 0.0 ? d[static_cast<size_t>(tau)] * tau / running : 1.0;
        }

        int tau_est = -1;
        for (int tau = tau_min; tau <= tau_max; ++tau) {
            if (dn[static_cast<size_t>(tau)] < cfg.threshold) {
                while (tau + 1 <= tau_max &&
                       dn[static_cast<size_t>(tau + 1)] < dn[static_cast<size_t>(tau)])
                    ++tau;
                tau_est = tau;
                break;
            }
        }

        if (tau_est > 0) {
            double tau_refined = tau_est;
            if (tau_est > 1 && tau_est < tau_max) {
                const double a = dn[static_cast<size_t>(tau_est - 1)];
                const double b = dn[static_cast<size_t>(tau_est)];
                const double c = dn[static_cast<size_t>(tau_est + 1)];
                const double denom = a - 2.0 * b + c;
                if (std::abs(denom) > 1e-12)
                    tau_refined += std::clamp(0.5 * (a - c) / denom, -1.0, 1.0);
            }
            fr.f_hz = sr / tau_refined;
            fr.lambda_m = k.speed_of_sound / fr.f_hz;
            fr.confidence = std::clamp(1.0 - dn[static_cast<size_t>(tau_est)], 0.0, 1.0);
            fr.voiced = true;
        }
        track.frames.push_back(fr);
    }
    return track;
}

// ---------------------------------------------------------------------------
// Curve fitting

const char* to_string(CurveModel m) {
    switch (m) {
        case CurveModel::linear: return "linear";
        case CurveModel::poly2: return "poly2";
        case CurveModel::frustum: return "frustum";
        case CurveModel::sqrt_law: return "sqrt";
    }
    return "?";
}

CurveModel curve_model_from_string(const std::string& name) {
    if (name == "linear") return CurveModel::linear;
    if (name == "poly2") return CurveModel::poly2;
    if (name == "frustum") return CurveModel::frustum;
    if (name == "sqrt" || name == "sqrt_law") return CurveModel::sqrt_law;
    throw std::invalid_argument("unknown curve model: " + name);
}

namespace {

// Normalized liquid height of a conical frustum filling at constant flow;
// s is normalized time. Closed-form inverse of the filled-volume cubic.
double frustum_u(double s, double rho) {
    s = std::clamp(s, 0.0, 1.0);
    const double dr = rho - 1.0;
    if (std::abs(dr) < 1e-9) return s;
    const double w = std::cbrt(1.0 + s * (rho * rho * rho - 1.0));
    return (w - 1.0) / dr;
}

double frustum_du_ds(double s, double rho) {
    s = std::clamp(s, 0.0, 1.0);
    const double w = std::cbrt(1.0 + s * (rho * rho * rho - 1.0));
    return (rho * rho + rho + 1.0) / (3.0 * w * w);
}

// Basis value for the two profiled families: the nonlinear shape function
// whose scaled/shifted version is fit by linear least squares.
double profile_basis(CurveModel model, double t, double shape_param, double duration) {
    if (model == CurveModel::sqrt_law) return std::sqrt(std::max(0.0, shape_param - t));
    return 1.0 - frustum_u(t / duration, shape_param);
}

struct LinearFit2 {
    double scale = 0.0;   // coefficient on the basis
    double offset = 0.0;  // constant term
    double rss = 0.0;
    bool ok = false;
};

// Weighted LS of y ~ scale * phi + offset via 2x2 normal equations.
LinearFit2 fit_scaled_basis(const std::vector<double>& phi, const std::vector<double>& y,
                            const std::vector<double>& w) {
    double sw = 0, sp = 0, spp = 0, sy = 0, spy = 0;
    for (size_t i = 0; i < phi.size(); ++i) {
        sw += w[i];
        sp += w[i] * phi[i];
        spp += w[i] * phi[i] * phi[i];
        sy += w[i] * y[i];
        spy += w[i] * phi[i] * y[i];
    }
    LinearFit2 fit;
    const double det = sw * spp - sp * sp;
    if (!(sw > 0.0) || std::abs(det) < 1e-14 * std::max(1.0, sw * spp)) return fit;
    fit.scale = (sw * spy - sp * sy) / det;
    fit.offset = (spp * sy - sp * spy) / det;
    double rss = 0.0;
    for (size_t i = 0; i < phi.size(); ++i) {
        const double r = y[i] - (fit.scale * phi[i] + fit.offset);
        rss += w[i] * r * r;
    }
    fit.rss = rss;
    fit.ok = true;
    return fit;
}

struct SubsetView {
    std::vector<double> t, lambda, weight;
};

Eigen::VectorXd fit_polynomial(const SubsetView& s, int degree) {
    const auto n = static_cast<Eigen::Index>(s.t.size());
    Eigen::MatrixXd design(n, degree + 1);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double sqw = std::sqrt(s.weight[static_cast<size_t>(i)]);
        double p = 1.0;
        for (int d = 0; d <= degree; ++d) {
            design(i, d) = sqw * p;
            p *= s.t[static_cast<size_t>(i)];
        }
        rhs(i) = sqw * s.lambda[static_cast<size_t>(i)];
    }
    return design.colPivHouseholderQr().solve(rhs);
}

// Profile the nonlinear shape parameter on a coarse grid, then golden-section
// refine around the best cell. The linear part is solved in closed form.
Eigen::VectorXd fit_profiled(const SubsetView& s, CurveModel model, double duration,
                             double param_lo, double param_hi, bool log_scale) {
    std::vector<double> phi(s.t.size());
    auto rss_at = [&](double p) {
        const double param = log_scale ? std::exp(p) : p;
        for (size_t i = 0; i < s.t.size(); ++i)
            phi[i] = profile_basis(model, s.t[i], param, duration);
        const LinearFit2 fit = fit_scaled_basis(phi, s.lambda, s.weight);
        return fit.ok ? fit.rss : std::numeric_limits<double>::infinity();
    };

    const double lo = log_scale ? std::log(param_lo) : param_lo;
    const double hi = log_scale ? std::log(param_hi) : param_hi;
    constexpr int kGrid = 33;
    int best = 0;
    double best_rss = std::numeric_limits<double>::infinity();
    for (int g = 0; g < kGrid; ++g) {
        const double p = lo + (hi - lo) * g / (kGrid - 1);
        const double r = rss_at(p);
        if (r < best_rss) {
            best_rss = r;
            best = g;
        }
    }
    double a = lo + (hi - lo) * std::max(0, best - 1) / (kGrid - 1);
    double b = lo + (hi - lo) * std::min(kGrid - 1, best + 1) / (kGrid - 1);
    constexpr double kInvPhi = 0.6180339887498949;
    double x1 = b - kInvPhi * (b - a), x2 = a + kInvPhi * (b - a);
    double f1 = rss_at(x1), f2 = rss_at(x2);
    for (int it = 0; it < 60; ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kInvPhi * (b - a);
            f1 = rss_at(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kInvPhi * (b - a);
            f2 = rss_at(x2);
        }
    }
    const double p = 0.5 * (a + b);
    const double param = log_scale ? std::exp(p) : p;
    for (size_t i = 0; i < s.t.size(); ++i)
        phi[i] = profile_basis(model, s.t[i], param, duration);
    const LinearFit2 fit = fit_scaled_basis(phi, s.lambda, s.weight);

    Eigen::VectorXd coeffs;
    if (model == CurveModel::sqrt_law) {
        coeffs.resize(3);
        coeffs << fit.scale, param, fit.offset;  // a, b, d
    } else {
        coeffs.resize(4);
        coeffs << fit.scale, fit.offset, param, duration;  // a, b, rho, T
    }
    return coeffs;
}

Eigen::VectorXd fit_model(const SubsetView& s, CurveModel model, double duration) {
    switch (model) {
        case CurveModel::linear: return fit_polynomial(s, 1);
        case CurveModel::poly2: return fit_polynomial(s, 2);
        case CurveModel::sqrt_law: {
            const double t_max = *std::max_element(s.t.begin(), s.t.end());
            const double span = std::max(duration, t_max);
            return fit_profiled(s, CurveModel::sqrt_law, duration, t_max + 1e-6 * span,
                                t_max + 3.0 * span, false);
        }
        case CurveModel::frustum:
            return fit_profiled(s, CurveModel::frustum, duration, 0.2, 5.0, true);
    }
    throw std::logic_error("unreachable");
}

double eval_model(CurveModel model, const Eigen::VectorXd& c, double t) {
    switch (model) {
        case CurveModel::linear: return c(0) + c(1) * t;
        case CurveModel::poly2: return c(0) + c(1) * t + c(2) * t * t;
        case CurveModel::sqrt_law: return c(0) * std::sqrt(std::max(0.0, c(1) - t)) + c(2);
        case CurveModel::frustum: return c(0) * (1.0 - frustum_u(t / c(3), c(2))) + c(1);
    }
    throw std::logic_error("unreachable");
}

double eval_model_derivative(CurveModel model, const Eigen::VectorXd& c, double t) {
    switch (model) {
        case CurveModel::linear: return c(1);
        case CurveModel::poly2: return c(1) + 2.0 * c(2) * t;
        case CurveModel::sqrt_law: {
            const double u = std::max(1e-9, c(1) - t);
            return -0.5 * c(0) / std::sqrt(u);
        }
        case CurveModel::frustum:
            return -c(0) * frustum_du_ds(t / c(3), c(2)) / c(3);
    }
    throw std::logic_error("unreachable");
}

}  // namespace

double FittedCurve::value(double t) const { return eval_model(model, coeffs, t); }

double FittedCurve::derivative(double t) const { return eval_model_derivative(model, coeffs, t); }

FittedCurve fit_wavelength(const PitchTrack& track, CurveModel model,
                           const RansacParams& ransac, std::uint64_t seed, double duration_s) {
    std::vector<size_t> voiced_idx;
    for (size_t i = 0; i < track.frames.size(); ++i)
        if (track.frames[i].voiced) voiced_idx.push_back(i);
    const auto n_voiced = static_cast<int>(voiced_idx.size());
    if (n_voiced < ransac.min_samples)
        throw AnalysisError("too few voiced frames to fit a wavelength curve");

    SubsetView all;
    all.t.reserve(voiced_idx.size());
    for (size_t i : voiced_idx) {
        all.t.push_back(track.frames[i].t);
        all.lambda.push_back(track.frames[i].lambda_m);
        all.weight.push_back(1.0);
    }
    const double t_last = *std::max_element(all.t.begin(), all.t.end());
    const double duration = duration_s > 0.0 ? duration_s : t_last;

    Rng rng(mix64(seed));
    std::vector<size_t> order(voiced_idx.size());
    std::iota(order.begin(), order.end(), size_t{0});

    const auto subset_size = static_cast<size_t>(ransac.min_samples);
    std::vector<std::uint8_t> best_consensus;
    int best_count = -1;
    double best_rms = std::numeric_limits<double>::infinity();

    SubsetView subset;
    subset.t.resize(subset_size);
    subset.lambda.resize(subset_size);
    subset.weight.assign(subset_size, 1.0);

    for (int iter = 0; iter < ransac.iterations; ++iter) {
        // partial Fisher-Yates for a distinct random subset
        for (size_t j = 0; j < subset_size; ++j) {
            const size_t pick = j + static_cast<size_t>(rng.index(order.size() - j));
            std::swap(order[j], order[pick]);
            subset.t[j] = all.t[order[j]];
            subset.lambda[j] = all.lambda[order[j]];
        }
        Eigen::VectorXd coeffs;
        try {
            coeffs = fit_model(subset, model, duration);
        } catch (const std::exception&) {
            continue;
        }
        if (!coeffs.allFinite()) continue;

        int count = 0;
        double rss = 0.0;
        std::vector<std::uint8_t> consensus(voiced_idx.size(), 0);
        for (size_t i = 0; i < all.t.size(); ++i) {
            const double r = all.lambda[i] - eval_model(model, coeffs, all.t[i]);
            if (std::abs(r) <= ransac.inlier_threshold_m) {
                consensus[i] = 1;
                ++count;
                rss += r * r;
            }
        }
        const double rms = count > 0 ? std::sqrt(rss / count) : std::numeric_limits<double>::infinity();
        if (count > best_count || (count == best_count && rms < best_rms)) {
            best_count = count;
            best_rms = rms;
            best_consensus = std::move(consensus);
        }
    }
    if (best_count < ransac.min_samples)
        throw AnalysisError("RANSAC found no consensus set");

    // confidence-weighted refit on the consensus set
    SubsetView final_set;
    for (size_t i = 0; i < voiced_idx.size(); ++i) {
        if (!best_consensus[i]) continue;
        const auto& fr = track.frames[voiced_idx[i]];
        final_set.t.push_back(fr.t);
        final_set.lambda.push_back(fr.lambda_m);
        final_set.weight.push_back(std::max(fr.confidence, 1e-6));
    }
    Eigen::VectorXd coeffs = fit_model(final_set, model, duration);

    FittedCurve curve;
    curve.model = model;
    curve.coeffs = coeffs;
    curve.t_begin = 0.0;
    curve.t_end = duration;
    curve.inlier_mask.assign(track.frames.size(), 0);
    double rss = 0.0;
    int count = 0;
    for (size_t i = 0; i < voiced_idx.size(); ++i) {
        if (!best_consensus[i]) continue;
        curve.inlier_mask[voiced_idx[i]] = 1;
        const double r = all.lambda[i] - eval_model(model, coeffs, all.t[i]);
        rss += r * r;
        ++count;
    }
    curve.residual_rms_m = count > 0 ? std::sqrt(rss / count) : 0.0;
    curve.inlier_fraction = static_cast<double>(count) / n_voiced;
    return curve;
}

// ---------------------------------------------------------------------------
// Wavelength bin encoding

Eigen::VectorXd encode_bins(double lambda_m, const BinEncodingConfig& cfg, bool* clamped) {
    if (cfg.n_bins < 2 || !(cfg.range_cm > 0.0) || !(cfg.blur_sigma_bins > 0.0))
        throw std::invalid_argument("bad bin encoding config");
    const double width_cm = cfg.range_cm / cfg.n_bins;
    const double lambda_cm = lambda_m * 100.0;

    bool was_clamped = false;
    int bin;
    if (lambda_cm < 0.0) {
        bin = 0;
        was_clamped = true;
    } else if (lambda_cm > cfg.range_cm) {
        bin = cfg.n_bins - 1;
        was_clamped = true;
    } else {
        bin = std::min(static_cast<int>(std::floor(lambda_cm / width_cm)), cfg.n_bins - 1);
    }
    if (clamped) *clamped = was_clamped;

    Eigen::VectorXd probs(cfg.n_bins);
    const double inv2s2 = 1.0 / (2.0 * cfg.blur_sigma_bins * cfg.blur_sigma_bins);
    for (int i = 0; i < cfg.n_bins; ++i) {
        const double d = i - bin;
        probs(i) = std::exp(-d * d * inv2s2);
    }
    probs /= probs.sum();
    return probs;
}

double decode_bins(const Eigen::VectorXd& probs, const BinEncodingConfig& cfg) {
    const double width_cm = cfg.range_cm / cfg.n_bins;
    double acc = 0.0;
    for (int i = 0; i < probs.size(); ++i) acc += probs(i) * (i + 0.5) * width_cm;
    return acc / 100.0;
}

}  // namespace pour
