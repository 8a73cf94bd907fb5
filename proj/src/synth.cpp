#include "pour/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "pour/rng.hpp"
#include "pour/textio.hpp"
#include "pour/wav.hpp"

namespace pour {

void GroundTruth::save(const std::string& path) const {
    std::ostringstream os;
    os << "t_s\tl_m\tlambda_m\tf_hz\n";
    for (Eigen::Index i = 0; i < t.size(); ++i)
        os << fmt(t(i)) << '\t' << fmt(fill.l(i)) << '\t' << fmt(lambda_m(i)) << '\t'
           << fmt(f_hz(i)) << '\n';
    write_text_atomic(path, os.str());
}

GroundTruth GroundTruth::load(const std::string& path) {
    const auto lines = read_data_lines(path);
    std::vector<double> t, l, lam, f;
    for (const auto& line : lines) {
        auto fields = split_fields(line);
        if (fields[0] == "t_s") continue;
        if (fields.size() != 4) throw IoError("ground truth: expected 4 columns in " + path);
        t.push_back(parse_double(fields[0], "t_s"));
        l.push_back(parse_double(fields[1], "l_m"));
        lam.push_back(parse_double(fields[2], "lambda_m"));
        f.push_back(parse_double(fields[3], "f_hz"));
    }
    if (t.size() < 2) throw IoError("ground truth too short: " + path);
    GroundTruth gt;
    const auto n = static_cast<Eigen::Index>(t.size());
    gt.t.resize(n);
    gt.lambda_m.resize(n);
    gt.f_hz.resize(n);
    gt.fill.t.resize(n);
    gt.fill.l.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        gt.t(i) = t[static_cast<size_t>(i)];
        gt.fill.t(i) = t[static_cast<size_t>(i)];
        gt.fill.l(i) = l[static_cast<size_t>(i)];
        gt.lambda_m(i) = lam[static_cast<size_t>(i)];
        gt.f_hz(i) = f[static_cast<size_t>(i)];
    }
    gt.fill.duration_s = gt.t(n - 1);
    return gt;
}

namespace {

// Partials fade over the top of the band instead of switching off, so a
// rising pitch never produces a step in the waveform.
double nyquist_gate(double f_hz, double nyquist) {
    const double lo = 0.88 * nyquist;
    const double hi = 0.98 * nyquist;
    if (f_hz <= lo) return 1.0;
    if (f_hz >= hi) return 0.0;
    return 0.5 * (1.0 + std::cos(M_PI * (f_hz - lo) / (hi - lo)));
}

// Forward-walking linear interpolator over the fill grid.
class FillCursor {
public:
    explicit FillCursor(const FillProfile& fill) : fill_(fill) {}

    double l_at(double t) {
        const Eigen::Index n = fill_.t.size();
        while (seg_ + 2 < n && fill_.t(seg_ + 1) < t) ++seg_;
        const double t0 = fill_.t(seg_), t1 = fill_.t(seg_ + 1);
        const double w = std::clamp((t - t0) / (t1 - t0), 0.0, 1.0);
        return fill_.l(seg_) + w * (fill_.l(seg_ + 1) - fill_.l(seg_));
    }

private:
    const FillProfile& fill_;
    Eigen::Index seg_ = 0;
};

double instantaneous_frequency(const ContainerSpec& c, double l, const PhysicsConstants& k) {
    if (c.shape == Shape::bottleneck) return bottleneck_frequency(l, c, k);
    const double r_surface = c.radius_at_height(c.height_m - l);
    return k.speed_of_sound / (4.0 * (l + k.end_correction * r_surface));
}

}  // namespace

SynthResult synthesize_pour(const ContainerSpec& c, double flow_m3s,
                            const SynthConfig& cfg, const PhysicsConstants& k) {
    c.validate();
    k.validate();
    if (flow_m3s < 0.0) throw std::domain_error("flow rate must be non-negative");
    if (cfg.sample_rate <= 0) throw std::invalid_argument("sample rate must be positive");
    if (cfg.n_harmonics < 1) throw std::invalid_argument("need at least one harmonic");
    if (!(cfg.harmonic_rolloff > 0.0)) throw std::invalid_argument("rolloff must be positive");
    if (cfg.include_radial) cfg.radial.validate();

    const bool steady = flow_m3s == 0.0;
    const double duration = steady ? cfg.hold_duration_s : c.volume_m3() / flow_m3s;
    const auto n = static_cast<Eigen::Index>(std::llround(duration * cfg.sample_rate));
    if (n < 1) throw std::invalid_argument("empty render duration");

    FillProfile fill;
    if (steady) {
        fill.duration_s = duration;
        fill.t.setLinSpaced(2, 0.0, duration);
        fill.l.setConstant(2, c.height_m);
    } else {
        const int gt_samples = std::max(64, static_cast<int>(std::lround(duration / 0.005)) + 1);
        fill = fill_profile(c, flow_m3s, gt_samples);
    }

    GroundTruth truth;
    truth.fill = fill;
    truth.t = fill.t;
    truth.lambda_m.resize(fill.t.size());
    truth.f_hz.resize(fill.t.size());
    for (Eigen::Index i = 0; i < fill.t.size(); ++i) {
        const double f = instantaneous_frequency(c, std::max(0.0, fill.l(i)), k);
        truth.f_hz(i) = f;
        truth.lambda_m(i) = k.speed_of_sound / f;
    }

    const double sr = cfg.sample_rate;
    const double nyquist = sr / 2.0;
    constexpr double kBaseAmp = 0.35;
    const double radial_amp = kBaseAmp * std::pow(10.0, cfg.radial_level_db / 20.0);

    Eigen::ArrayXd tonal = Eigen::ArrayXd::Zero(n);
    FillCursor cursor(fill);
    double phase = 0.0;        // fundamental phase; partials run at odd multiples
    double radial_phase = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / sr;
        const double l = std::max(0.0, cursor.l_at(t));
        const double f = instantaneous_frequency(c, l, k);
        phase += 2.0 * M_PI * f / sr;

        double s = 0.0;
        double amp = kBaseAmp;
        for (int h = 0; h < cfg.n_harmonics; ++h) {
            const int mult = 2 * h + 1;
            const double gate = nyquist_gate(mult * f, nyquist);
            if (gate > 0.0) s += amp * gate * std::sin(mult * phase);
            amp *= cfg.harmonic_rolloff;
        }
        if (cfg.include_radial) {
            const double fr = radial_frequency(std::min(l, c.height_m), c.height_m, cfg.radial);
            radial_phase += 2.0 * M_PI * fr / sr;
            s += radial_amp * nyquist_gate(fr, nyquist) * std::sin(radial_phase);
        }
        tonal(i) = s;
    }

    Eigen::ArrayXd mix = tonal;
    if (std::isfinite(cfg.noise_snr_db)) {
        const double tonal_power = tonal.square().mean();
        const double sigma = std::sqrt(tonal_power / std::pow(10.0, cfg.noise_snr_db / 10.0));
        Rng noise_rng = Rng(cfg.seed).derive(1);
        for (Eigen::Index i = 0; i < n; ++i) mix(i) += sigma * noise_rng.normal();
    }

    if (cfg.envelope == SynthConfig::Envelope::attack_decay) {
        const double attack = std::min(0.5, 0.1 * duration);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) / sr;
            double env = 1.0;
            if (t < attack) env = 0.5 * (1.0 - std::cos(M_PI * t / attack));
            env *= 1.0 - 0.25 * t / duration;
            mix(i) *= env;
        }
    }

    const double peak = mix.abs().maxCoeff();
    if (peak > 0.99) mix *= 0.99 / peak;

    SynthResult result;
    result.audio.sample_rate = cfg.sample_rate;
    result.audio.samples = std::move(mix);
    result.truth = std::move(truth);
    return result;
}

void SampleRanges::validate() const {
    if (!(height_min_m > 0.0) || !(height_max_m >= height_min_m))
        throw std::invalid_argument("bad height range");
    if (!(radius_min_m > 0.0) || !(radius_max_m >= radius_min_m))
        throw std::invalid_argument("bad radius range");
    if (!(duration_min_s > 0.0) || !(duration_max_s >= duration_min_s))
        throw std::invalid_argument("bad duration range");
}

void DatasetManifest::save(const std::string& path) const {
    std::ostringstream os;
    os << "index\taudio\ttruth\theight_m\tradius_m\tduration_s\tflow_m3s\tseed\n";
    for (const auto& e : entries)
        os << e.index << '\t' << e.audio_path << '\t' << e.truth_path << '\t'
           << fmt(e.height_m) << '\t' << fmt(e.radius_m) << '\t' << fmt(e.duration_s) << '\t'
           << fmt(e.flow_m3s) << '\t' << e.seed << '\n';
    write_text_atomic(path, os.str());
}

DatasetManifest DatasetManifest::load(const std::string& path) {
    DatasetManifest manifest;
    for (const auto& line : read_data_lines(path)) {
        auto fields = split_fields(line);
        if (fields[0] == "index") continue;
        if (fields.size() != 8) throw IoError("manifest: expected 8 columns in " + path);
        DatasetEntry e;
        e.index = static_cast<int>(parse_double(fields[0], "index"));
        e.audio_path = fields[1];
        e.truth_path = fields[2];
        e.height_m = parse_double(fields[3], "height_m");
        e.radius_m = parse_double(fields[4], "radius_m");
        e.duration_s = parse_double(fields[5], "duration_s");
        e.flow_m3s = parse_double(fields[6], "flow_m3s");
        e.seed = static_cast<std::uint64_t>(std::stoull(fields[7]));
        manifest.entries.push_back(std::move(e));
    }
    return manifest;
}

DatasetManifest sample_dataset(int n, const SampleRanges& ranges, const SynthConfig& cfg,
                               const PhysicsConstants& k, std::uint64_t seed,
                               const std::string& out_dir) {
    if (n < 1) throw std::invalid_argument("dataset size must be at least 1");
    ranges.validate();
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    const Rng root(seed);
    DatasetManifest manifest;
    for (int i = 0; i < n; ++i) {
        Rng draw = root.derive(static_cast<std::uint64_t>(i));
        DatasetEntry e;
        e.index = i;
        e.height_m = draw.uniform(ranges.height_min_m, ranges.height_max_m);
        e.radius_m = draw.uniform(ranges.radius_min_m, ranges.radius_max_m);
        e.duration_s = draw.uniform(ranges.duration_min_s, ranges.duration_max_s);
        e.seed = mix64(seed ^ mix64(static_cast<std::uint64_t>(i) + 0x5a5a));

        const ContainerSpec container = ContainerSpec::make_cylinder(e.height_m, e.radius_m);
        e.flow_m3s = container.volume_m3() / e.duration_s;

        SynthConfig sample_cfg = cfg;
        sample_cfg.seed = e.seed;
        const SynthResult result = synthesize_pour(container, e.flow_m3s, sample_cfg, k);

        char stem[32];
        std::snprintf(stem, sizeof(stem), "pour_%04d", i);
        e.audio_path = std::string(stem) + ".wav";
        e.truth_path = std::string(stem) + "_truth.tsv";
        write_wav((fs::path(out_dir) / e.audio_path).string(), result.audio);
        result.truth.save((fs::path(out_dir) / e.truth_path).string());
        manifest.entries.push_back(std::move(e));
    }
    manifest.save((fs::path(out_dir) / "manifest.tsv").string());
    return manifest;
}

}  // namespace pour
