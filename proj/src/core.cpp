#include "pour/core.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "pour/textio.hpp"

namespace pour {

void PhysicsConstants::validate() const {
    if (!(speed_of_sound > 0.0))
        throw std::invalid_argument("speed of sound must be positive");
    if (!(end_correction > 0.0))
        throw std::invalid_argument("end correction must be positive");
}

double wavelength_of_frequency(double f_hz, const PhysicsConstants& k) {
    if (!(f_hz > 0.0)) throw std::domain_error("frequency must be positive");
    return k.speed_of_sound / f_hz;
}

double frequency_of_wavelength(double lambda_m, const PhysicsConstants& k) {
    if (!(lambda_m > 0.0)) throw std::domain_error("wavelength must be positive");
    return k.speed_of_sound / lambda_m;
}

const char* to_string(Shape s) {
    switch (s) {
        case Shape::cylinder: return "cylinder";
        case Shape::frustum: return "frustum";
        case Shape::bottleneck: return "bottleneck";
    }
    return "?";
}

Shape shape_from_string(const std::string& name) {
    if (name == "cylinder") return Shape::cylinder;
    if (name == "frustum") return Shape::frustum;
    if (name == "bottleneck") return Shape::bottleneck;
    throw std::invalid_argument("unknown shape: " + name);
}

void ContainerSpec::validate() const {
    if (!(height_m > 0.0)) throw std::invalid_argument("container height must be positive");
    if (!(radius_base_m > 0.0) || !(radius_top_m > 0.0))
        throw std::invalid_argument("container radii must be positive");
    if (shape == Shape::cylinder && radius_base_m != radius_top_m)
        throw std::invalid_argument("cylinder requires radius_top == radius_base");
    if (neck) {
        if (!(neck->length_m > 0.0) || !(neck->radius_m > 0.0))
            throw std::invalid_argument("neck dimensions must be positive");
    }
}

double ContainerSpec::radius_at_height(double h_m) const {
    const double u = std::clamp(h_m / height_m, 0.0, 1.0);
    return radius_base_m + (radius_top_m - radius_base_m) * u;
}

double ContainerSpec::volume_below(double h_m) const {
    const double h = std::clamp(h_m, 0.0, height_m);
    if (shape == Shape::frustum) {
        // Integral of pi r(y)^2 with r linear in y.
        const double slope = (radius_top_m - radius_base_m) / height_m;
        return M_PI * (radius_base_m * radius_base_m * h +
                       radius_base_m * slope * h * h +
                       slope * slope * h * h * h / 3.0);
    }
    // Cylinder; bottleneck bodies fill the same way.
    return M_PI * radius_base_m * radius_base_m * h;
}

NeckParams ContainerSpec::effective_neck() const {
    if (neck) return *neck;
    return NeckParams{0.15 * height_m, 0.4 * radius_base_m};
}

ContainerSpec ContainerSpec::make_cylinder(double height_m, double radius_m) {
    ContainerSpec c;
    c.shape = Shape::cylinder;
    c.height_m = height_m;
    c.radius_base_m = c.radius_top_m = radius_m;
    c.validate();
    return c;
}

ContainerSpec ContainerSpec::make_frustum(double height_m, double radius_base_m,
                                          double radius_top_m) {
    ContainerSpec c;
    c.shape = Shape::frustum;
    c.height_m = height_m;
    c.radius_base_m = radius_base_m;
    c.radius_top_m = radius_top_m;
    c.validate();
    return c;
}

ContainerSpec ContainerSpec::make_bottleneck(double height_m, double radius_m, NeckParams neck) {
    ContainerSpec c;
    c.shape = Shape::bottleneck;
    c.height_m = height_m;
    c.radius_base_m = c.radius_top_m = radius_m;
    c.neck = neck;
    c.validate();
    return c;
}

ContainerSpec ContainerSpec::load(const std::string& path) {
    std::map<std::string, std::string> kv;
    for (const auto& line : read_data_lines(path)) {
        auto fields = split_fields(line);
        if (fields.size() != 2)
            throw IoError("container spec: expected 'key value' lines in " + path);
        kv[fields[0]] = fields[1];
    }
    auto need = [&](const char* key) -> std::string {
        auto it = kv.find(key);
        if (it == kv.end())
            throw IoError(std::string("container spec: missing key '") + key + "' in " + path);
        return it->second;
    };
    ContainerSpec c;
    c.shape = shape_from_string(need("shape"));
    c.height_m = parse_double(need("height_m"), "height_m");
    c.radius_base_m = parse_double(need("radius_base_m"), "radius_base_m");
    c.radius_top_m = kv.count("radius_top_m")
                         ? parse_double(kv["radius_top_m"], "radius_top_m")
                         : c.radius_base_m;
    if (kv.count("neck_length_m") || kv.count("neck_radius_m")) {
        NeckParams n;
        n.length_m = parse_double(need("neck_length_m"), "neck_length_m");
        n.radius_m = parse_double(need("neck_radius_m"), "neck_radius_m");
        c.neck = n;
    }
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw IoError("container spec " + path + ": " + e.what());
    }
    return c;
}

void ContainerSpec::save(const std::string& path) const {
    std::ostringstream os;
    os << "# pour container spec\n";
    os << "shape\t" << to_string(shape) << "\n";
    os << "height_m\t" << fmt(height_m) << "\n";
    os << "radius_base_m\t" << fmt(radius_base_m) << "\n";
    os << "radius_top_m\t" << fmt(radius_top_m) << "\n";
    if (neck) {
        os << "neck_length_m\t" << fmt(neck->length_m) << "\n";
        os << "neck_radius_m\t" << fmt(neck->radius_m) << "\n";
    }
    write_text_atomic(path, os.str());
}

double FillProfile::l_at(double time_s) const {
    const Eigen::Index n = t.size();
    if (n == 0) throw std::logic_error("empty fill profile");
    if (time_s <= t(0)) return l(0);
    if (time_s >= t(n - 1)) return l(n - 1);
    // binary search for the bracketing segment
    Eigen::Index lo = 0, hi = n - 1;
    while (hi - lo > 1) {
        const Eigen::Index mid = (lo + hi) / 2;
        (t(mid) <= time_s ? lo : hi) = mid;
    }
    const double span = t(hi) - t(lo);
    if (span <= 0.0) return l(lo);
    const double w = (time_s - t(lo)) / span;
    return l(lo) + w * (l(hi) - l(lo));
}

void FillProfile::validate(double tolerance_m) const {
    if (t.size() != l.size() || t.size() < 2)
        throw std::invalid_argument("fill profile needs matching t/l arrays with >= 2 samples");
    for (Eigen::Index i = 1; i < t.size(); ++i) {
        if (!(t(i) > t(i - 1)))
            throw std::invalid_argument("fill profile times must be strictly increasing");
        if (l(i) > l(i - 1) + tolerance_m)
            throw std::invalid_argument("air-column length must be non-increasing");
    }
    if (std::abs(l(l.size() - 1)) > tolerance_m)
        throw std::invalid_argument("air column must reach 0 at the end of the pour");
}

const char* to_string(TrackSource s) {
    switch (s) {
        case TrackSource::argmax: return "argmax";
        case TrackSource::yin: return "yin";
        case TrackSource::fitted: return "fitted";
    }
    return "?";
}

int PitchTrack::voiced_count() const {
    int n = 0;
    for (const auto& fr : frames) n += fr.voiced ? 1 : 0;
    return n;
}

PitchTrack PitchTrack::load(const std::string& path) {
    PitchTrack track;
    for (const auto& line : read_data_lines(path)) {
        auto fields = split_fields(line);
        if (fields[0] == "time_s") continue;  // header
        if (fields.size() != 5) throw IoError("pitch track: expected 5 columns in " + path);
        PitchFrame fr;
        fr.t = parse_double(fields[0], "time_s");
        fr.f_hz = parse_double(fields[1], "f_hz");
        fr.lambda_m = parse_double(fields[2], "lambda_m");
        fr.confidence = parse_double(fields[3], "confidence");
        fr.voiced = fields[4] != "0";
        track.frames.push_back(fr);
    }
    return track;
}

void PitchTrack::save(const std::string& path) const {
    std::ostringstream os;
    os << "# source " << to_string(source) << "\n";
    os << "time_s\tf_hz\tlambda_m\tconfidence\tvoiced\n";
    for (const auto& fr : frames) {
        os << fmt(fr.t) << '\t' << fmt(fr.f_hz) << '\t' << fmt(fr.lambda_m) << '\t'
           << fmt(fr.confidence) << '\t' << (fr.voiced ? 1 : 0) << '\n';
    }
    write_text_atomic(path, os.str());
}

void RadialParams::validate() const {
    if (!(f0_hz > 0.0)) throw std::invalid_argument("radial f0 must be positive");
    if (xi < 0.0) throw std::invalid_argument("radial xi must be non-negative");
}

}  // namespace pour
