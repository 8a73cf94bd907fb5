#include "pour/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

namespace pour {

namespace {

void put_u32(std::string& s, std::uint32_t v) {
    s.push_back(static_cast<char>(v & 0xff));
    s.push_back(static_cast<char>((v >> 8) & 0xff));
    s.push_back(static_cast<char>((v >> 16) & 0xff));
    s.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_u16(std::string& s, std::uint16_t v) {
    s.push_back(static_cast<char>(v & 0xff));
    s.push_back(static_cast<char>((v >> 8) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t get_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace

void write_wav(const std::string& path, const AudioBuffer& audio) {
    if (audio.sample_rate <= 0) throw std::invalid_argument("sample rate must be positive");
    const Eigen::Index n = audio.samples.size();
    std::string pcm;
    pcm.reserve(static_cast<size_t>(n) * 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = std::clamp(audio.samples(i), -1.0, 1.0);
        const auto q = static_cast<std::int16_t>(
            std::clamp(std::lround(x * 32767.0), -32768L, 32767L));
        put_u16(pcm, static_cast<std::uint16_t>(q));
    }

    const std::uint32_t data_size = static_cast<std::uint32_t>(pcm.size());
    const std::uint32_t rate = static_cast<std::uint32_t>(audio.sample_rate);
    std::string out;
    out.reserve(44 + pcm.size());
    out += "RIFF";
    put_u32(out, 36 + data_size);
    out += "WAVEfmt ";
    put_u32(out, 16);
    put_u16(out, 1);  // PCM
    put_u16(out, 1);  // mono
    put_u32(out, rate);
    put_u32(out, rate * 2);  // byte rate
    put_u16(out, 2);         // block align
    put_u16(out, 16);        // bits per sample
    out += "data";
    put_u32(out, data_size);
    out += pcm;

    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw IoError("cannot write " + tmp.string());
        os.write(out.data(), static_cast<std::streamsize>(out.size()));
        if (!os) throw IoError("short write to " + tmp.string());
    }
    fs::rename(tmp, target);
}

AudioBuffer read_wav(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot read " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                     std::istreambuf_iterator<char>());
    if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw IoError("not a RIFF/WAVE file: " + path);

    int channels = 0, bits = 0, rate = 0;
    size_t data_off = 0, data_len = 0;
    size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::uint32_t chunk_len = get_u32(bytes.data() + pos + 4);
        const unsigned char* body = bytes.data() + pos + 8;
        if (std::memcmp(bytes.data() + pos, "fmt ", 4) == 0 && chunk_len >= 16) {
            const std::uint16_t format = get_u16(body);
            if (format != 1) throw IoError("unsupported WAV encoding (want 16-bit PCM): " + path);
            channels = get_u16(body + 2);
            rate = static_cast<int>(get_u32(body + 4));
            bits = get_u16(body + 14);
        } else if (std::memcmp(bytes.data() + pos, "data", 4) == 0) {
            data_off = pos + 8;
            data_len = std::min<size_t>(chunk_len, bytes.size() - data_off);
        }
        pos += 8 + chunk_len + (chunk_len & 1);
    }
    if (rate <= 0 || channels <= 0 || bits != 16 || data_off == 0)
        throw IoError("corrupt or unsupported WAV file: " + path);

    const size_t frame_bytes = static_cast<size_t>(channels) * 2;
    const size_t n_frames = data_len / frame_bytes;
    AudioBuffer audio;
    audio.sample_rate = rate;
    audio.samples.resize(static_cast<Eigen::Index>(n_frames));
    for (size_t i = 0; i < n_frames; ++i) {
        double acc = 0.0;
        for (int c = 0; c < channels; ++c) {
            const auto raw = static_cast<std::int16_t>(
                get_u16(bytes.data() + data_off + i * frame_bytes + static_cast<size_t>(c) * 2));
            acc += raw / 32768.0;
        }
        audio.samples(static_cast<Eigen::Index>(i)) = acc / channels;
    }
    return audio;
}

AudioBuffer resample(const AudioBuffer& audio, int target_rate) {
    if (target_rate <= 0) throw std::invalid_argument("target rate must be positive");
    if (audio.sample_rate == target_rate) return audio;

    const double ratio = static_cast<double>(target_rate) / audio.sample_rate;
    const Eigen::Index n_in = audio.samples.size();
    const auto n_out = static_cast<Eigen::Index>(std::floor(n_in * ratio));
    AudioBuffer out;
    out.sample_rate = target_rate;
    out.samples.setZero(n_out);

    // Kaiser-windowed sinc, cutoff at 95% of the narrower Nyquist.
    constexpr int kTaps = 32;
    constexpr double kBetaKaiser = 8.0;
    const double cutoff = 0.95 * std::min(1.0, ratio);
    auto bessel_i0 = [](double x) {
        double sum = 1.0, term = 1.0;
        for (int k = 1; k < 32; ++k) {
            term *= (x / (2.0 * k)) * (x / (2.0 * k));
            sum += term;
            if (term < 1e-18 * sum) break;
        }
        return sum;
    };
    const double i0_beta = bessel_i0(kBetaKaiser);

    for (Eigen::Index i = 0; i < n_out; ++i) {
        const double center = i / ratio;
        const auto k0 = static_cast<Eigen::Index>(std::ceil(center)) - kTaps;
        double acc = 0.0;
        for (Eigen::Index k = k0; k < k0 + 2 * kTaps; ++k) {
            if (k < 0 || k >= n_in) continue;
            const double x = (k - center) / kTaps;  // [-1, 1)
            if (x <= -1.0 || x >= 1.0) continue;
            const double arg = M_PI * (k - center) * cutoff;
            const double sinc = std::abs(arg) < 1e-12 ? 1.0 : std::sin(arg) / arg;
            const double win = bessel_i0(kBetaKaiser * std::sqrt(1.0 - x * x)) / i0_beta;
            acc += audio.samples(k) * sinc * win * cutoff;
        }
        out.samples(i) = std::clamp(acc, -1.0, 1.0);
    }
    return out;
}

}  // namespace pour
