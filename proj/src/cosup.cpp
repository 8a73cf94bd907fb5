#include "pour/cosup.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "pour/rng.hpp"
#include "pour/textio.hpp"

namespace pour {

PixelTrack PixelTrack::load(const std::string& path) {
    PixelTrack track;
    std::vector<double> t, l;
    for (const auto& line : read_data_lines(path)) {
        auto fields = split_fields(line);
        if (fields[0] == "radius_px") {
            track.radius_px = parse_double(fields.at(1), "radius_px");
            continue;
        }
        if (fields[0] == "image_height_px") {
            track.image_height_px = parse_double(fields.at(1), "image_height_px");
            continue;
        }
        if (fields[0] == "time_s") continue;
        if (fields.size() != 2) throw IoError("pixel track: expected 2 columns in " + path);
        t.push_back(parse_double(fields[0], "time_s"));
        l.push_back(parse_double(fields[1], "l_px"));
    }
    if (t.empty()) throw IoError("pixel track has no frames: " + path);
    track.t = Eigen::Map<Eigen::ArrayXd>(t.data(), static_cast<Eigen::Index>(t.size()));
    track.l_px = Eigen::Map<Eigen::ArrayXd>(l.data(), static_cast<Eigen::Index>(l.size()));
    return track;
}

void PixelTrack::save(const std::string& path) const {
    std::ostringstream os;
    os << "radius_px\t" << fmt(radius_px) << "\n";
    os << "image_height_px\t" << fmt(image_height_px) << "\n";
    os << "time_s\tl_px\n";
    for (Eigen::Index i = 0; i < t.size(); ++i)
        os << fmt(t(i)) << '\t' << fmt(l_px(i)) << '\n';
    write_text_atomic(path, os.str());
}

ScaleEstimate estimate_scale(const FittedCurve& lambda, const PixelTrack& pixels,
                             const Eigen::Ref<const Eigen::ArrayXd>& rms,
                             const PhysicsConstants& k) {
    if (rms.size() != pixels.t.size())
        throw std::invalid_argument("rms weights must align with the pixel track frames");
    if ((rms < 0.0).any()) throw std::invalid_argument("rms weights must be non-negative");

    std::vector<Eigen::Index> overlap;
    for (Eigen::Index i = 0; i < pixels.t.size(); ++i)
        if (pixels.t(i) >= lambda.t_begin && pixels.t(i) <= lambda.t_end)
            overlap.push_back(i);
    if (overlap.empty())
        throw std::invalid_argument("no temporal overlap between wavelength and pixel tracks");

    ScaleEstimate est;
    const auto n = static_cast<Eigen::Index>(overlap.size());
    est.t.resize(n);
    est.ratios.resize(n);
    est.weights.resize(n);
    double num = 0.0, den = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        const Eigen::Index i = overlap[static_cast<size_t>(j)];
        const double quarter = lambda.value(pixels.t(i)) / 4.0;
        if (!(quarter > 0.0))
            throw std::domain_error("wavelength curve must be positive over the overlap");
        est.t(j) = pixels.t(i);
        est.ratios(j) = (pixels.l_px(i) + k.end_correction * pixels.radius_px) / quarter;
        est.weights(j) = rms(i);
        num += est.weights(j) * est.ratios(j);
        den += est.weights(j);
    }
    if (!(den > 0.0)) throw std::invalid_argument("all-zero rms weights over the overlap");
    est.alpha = num / den;
    est.out_of_range =
        est.alpha < ScaleEstimate::kPlausibleLo || est.alpha > ScaleEstimate::kPlausibleHi;
    return est;
}

void TemporalDifferenceMap::save(const std::string& prefix) const {
    write_matrix(prefix + ".tsv", values);
    std::ostringstream os;
    for (Eigen::Index i = 0; i < frame_times.size(); ++i) os << fmt(frame_times(i)) << '\n';
    write_text_atomic(prefix + "_times.tsv", os.str());
}

TemporalDifferenceMap TemporalDifferenceMap::load(const std::string& prefix) {
    TemporalDifferenceMap tdm;
    tdm.values = read_matrix(prefix + ".tsv");
    const auto lines = read_data_lines(prefix + "_times.tsv");
    tdm.frame_times.resize(static_cast<Eigen::Index>(lines.size()));
    for (size_t i = 0; i < lines.size(); ++i)
        tdm.frame_times(static_cast<Eigen::Index>(i)) = parse_double(lines[i], "frame time");
    if (tdm.frame_times.size() != tdm.values.rows())
        throw IoError("temporal difference map: times do not match matrix rows");
    return tdm;
}

namespace {

Eigen::VectorXd gaussian_kernel(double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    Eigen::VectorXd kern(2 * radius + 1);
    for (int i = -radius; i <= radius; ++i)
        kern(i + radius) = std::exp(-0.5 * i * i / (sigma * sigma));
    kern /= kern.sum();
    return kern;
}

Eigen::MatrixXd smooth_separable(const Eigen::MatrixXd& m, double sigma_rows_axis,
                                 double sigma_cols_axis) {
    Eigen::MatrixXd out = m;
    if (sigma_rows_axis > 0.0) {
        const Eigen::VectorXd kern = gaussian_kernel(sigma_rows_axis);
        const int radius = static_cast<int>(kern.size() / 2);
        Eigen::MatrixXd tmp = Eigen::MatrixXd::Zero(m.rows(), m.cols());
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (int j = -radius; j <= radius; ++j) {
                const Eigen::Index rr = std::clamp<Eigen::Index>(r + j, 0, m.rows() - 1);
                tmp.row(r) += kern(j + radius) * out.row(rr);
            }
        out = std::move(tmp);
    }
    if (sigma_cols_axis > 0.0) {
        const Eigen::VectorXd kern = gaussian_kernel(sigma_cols_axis);
        const int radius = static_cast<int>(kern.size() / 2);
        Eigen::MatrixXd tmp = Eigen::MatrixXd::Zero(out.rows(), out.cols());
        for (Eigen::Index c = 0; c < out.cols(); ++c)
            for (int j = -radius; j <= radius; ++j) {
                const Eigen::Index cc = std::clamp<Eigen::Index>(c + j, 0, out.cols() - 1);
                tmp.col(c) += kern(j + radius) * out.col(cc);
            }
        out = std::move(tmp);
    }
    return out;
}

struct Poly2 {
    double c0 = 0, c1 = 0, c2 = 0;
    double at(double t) const { return c0 + c1 * t + c2 * t * t; }
};

Poly2 fit_poly2(const std::vector<double>& t, const std::vector<double>& y,
                const std::vector<size_t>& idx) {
    Eigen::MatrixXd design(static_cast<Eigen::Index>(idx.size()), 3);
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(idx.size()));
    for (size_t i = 0; i < idx.size(); ++i) {
        const double ti = t[idx[i]];
        design(static_cast<Eigen::Index>(i), 0) = 1.0;
        design(static_cast<Eigen::Index>(i), 1) = ti;
        design(static_cast<Eigen::Index>(i), 2) = ti * ti;
        rhs(static_cast<Eigen::Index>(i)) = y[idx[i]];
    }
    const Eigen::VectorXd c = design.colPivHouseholderQr().solve(rhs);
    return Poly2{c(0), c(1), c(2)};
}

}  // namespace

PixelTrack fit_pseudo_labels(const TemporalDifferenceMap& tdm, int row_top, int row_bottom,
                             std::uint64_t seed, const PseudoLabelConfig& cfg) {
    const Eigen::Index n_frames = tdm.values.rows();
    const Eigen::Index n_rows = tdm.values.cols();
    if (n_frames < 10) throw std::invalid_argument("temporal difference map needs >= 10 frames");
    if (row_top < 0 || row_bottom >= n_rows || row_top >= row_bottom)
        throw std::invalid_argument("container rows outside the map");
    if ((tdm.values.array() < 0.0).any())
        throw std::invalid_argument("temporal difference map must be non-negative");
    if (tdm.values.maxCoeff() <= 0.0)
        throw AnalysisError("degenerate temporal difference map (all zeros)");

    const Eigen::MatrixXd smoothed =
        smooth_separable(tdm.values, cfg.sigma_frames, cfg.sigma_rows);

    std::vector<double> t(static_cast<size_t>(n_frames));
    std::vector<double> row(static_cast<size_t>(n_frames));
    for (Eigen::Index fi = 0; fi < n_frames; ++fi) {
        Eigen::Index best = row_top;
        for (Eigen::Index r = row_top + 1; r <= row_bottom; ++r)
            if (smoothed(fi, r) > smoothed(fi, best)) best = r;
        t[static_cast<size_t>(fi)] = tdm.frame_times(fi);
        row[static_cast<size_t>(fi)] = static_cast<double>(best);
    }

    // seeded RANSAC over a second-order polynomial
    Rng rng(mix64(seed));
    std::vector<size_t> order(t.size());
    std::iota(order.begin(), order.end(), size_t{0});
    const auto subset = static_cast<size_t>(std::max(3, cfg.min_samples));

    std::vector<size_t> best_inliers;
    for (int iter = 0; iter < cfg.ransac_iterations; ++iter) {
        for (size_t j = 0; j < subset; ++j)
            std::swap(order[j], order[j + static_cast<size_t>(rng.index(order.size() - j))]);
        const std::vector<size_t> sample(order.begin(),
                                         order.begin() + static_cast<std::ptrdiff_t>(subset));
        const Poly2 model = fit_poly2(t, row, sample);
        std::vector<size_t> inliers;
        for (size_t i = 0; i < t.size(); ++i)
            if (std::abs(row[i] - model.at(t[i])) <= cfg.inlier_threshold_px)
                inliers.push_back(i);
        if (inliers.size() > best_inliers.size()) best_inliers = std::move(inliers);
    }
    if (best_inliers.size() < subset) throw AnalysisError("pseudo-label RANSAC found no consensus");
    const Poly2 final_fit = fit_poly2(t, row, best_inliers);

    PixelTrack track;
    track.t.resize(n_frames);
    track.l_px.resize(n_frames);
    const double max_len = row_bottom - row_top;
    for (Eigen::Index fi = 0; fi < n_frames; ++fi) {
        track.t(fi) = tdm.frame_times(fi);
        track.l_px(fi) = std::clamp(final_fit.at(track.t(fi)) - row_top, 0.0, max_len);
    }
    track.image_height_px = static_cast<double>(n_rows);
    track.radius_px = cfg.radius_px > 0.0 ? cfg.radius_px : 0.2 * max_len;
    return track;
}

CosupervisionResidual cosupervision_residual(const FittedCurve& lambda, const PixelTrack& pixels,
                                             double alpha, const PhysicsConstants& k) {
    std::vector<Eigen::Index> overlap;
    for (Eigen::Index i = 0; i < pixels.t.size(); ++i)
        if (pixels.t(i) >= lambda.t_begin && pixels.t(i) <= lambda.t_end)
            overlap.push_back(i);
    if (overlap.empty())
        throw std::invalid_argument("no temporal overlap between wavelength and pixel tracks");

    CosupervisionResidual res;
    const auto n = static_cast<Eigen::Index>(overlap.size());
    res.t.resize(n);
    res.residual_px.resize(n);
    double acc = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        const Eigen::Index i = overlap[static_cast<size_t>(j)];
        const double quarter = lambda.value(pixels.t(i)) / 4.0;
        if (!(quarter > 0.0))
            throw std::domain_error("wavelength curve must be positive over the overlap");
        res.t(j) = pixels.t(i);
        res.residual_px(j) =
            alpha * quarter - (pixels.l_px(i) + k.end_correction * pixels.radius_px);
        acc += res.residual_px(j) * res.residual_px(j);
    }
    res.mse = acc / n;
    return res;
}

}  // namespace pour
