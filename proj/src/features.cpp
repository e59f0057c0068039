#include "emt/features.hpp"

#include <cmath>
#include <numbers>

namespace emt::features {

namespace {

// Slaney mel scale: linear below 1 kHz, logarithmic above.
double hz_to_mel(double hz) {
    constexpr double f_sp = 200.0 / 3.0;
    constexpr double min_log_hz = 1000.0;
    const double min_log_mel = min_log_hz / f_sp;
    const double logstep = std::log(6.4) / 27.0;
    if (hz < min_log_hz) return hz / f_sp;
    return min_log_mel + std::log(hz / min_log_hz) / logstep;
}

double mel_to_hz(double mel) {
    constexpr double f_sp = 200.0 / 3.0;
    constexpr double min_log_hz = 1000.0;
    const double min_log_mel = min_log_hz / f_sp;
    const double logstep = std::log(6.4) / 27.0;
    if (mel < min_log_mel) return mel * f_sp;
    return min_log_hz * std::exp(logstep * (mel - min_log_mel));
}

}  // namespace

std::string feature_mode_name(FeatureMode mode) {
    return mode == FeatureMode::MelPower ? "mel" : "mfcc";
}

FeatureMode feature_mode_from_name(const std::string& name) {
    if (name == "mel") return FeatureMode::MelPower;
    if (name == "mfcc") return FeatureMode::Mfcc;
    throw ConfigInvalid("unknown feature mode: " + name);
}

std::vector<float> flatten(const FeatureMatrix& features) {
    return features.values;
}

FeatureMatrix unflatten(const std::vector<float>& v, int n_time, int n_bands,
                        FeatureMode mode) {
    if (v.size() != static_cast<size_t>(n_time) * n_bands)
        throw ConfigInvalid("unflatten: size mismatch");
    FeatureMatrix m;
    m.values = v;
    m.n_time = n_time;
    m.n_bands = n_bands;
    m.mode = mode;
    return m;
}

FeatureExtractor::FeatureExtractor(StftConfig stft, MelConfig mel, int sample_rate)
    : stft_(stft),
      mel_(mel),
      sample_rate_(sample_rate),
      plan_(static_cast<size_t>(stft.fft_size)),
      window_(dsp::hann_window(static_cast<size_t>(stft.frame_length))) {
    if (stft_.frame_length <= 0 || stft_.frame_length > sample_rate_)
        throw ConfigInvalid("frame_length must be in (0, sample_rate]");
    if (stft_.hop_length <= 0) throw ConfigInvalid("hop_length must be positive");
    if (stft_.fft_size < stft_.frame_length)
        throw ConfigInvalid("fft_size smaller than frame_length");
    if (mel_.f_max > sample_rate_ / 2.0)
        throw ConfigInvalid("f_max above Nyquist");
    if (mel_.n_mels <= 0) throw ConfigInvalid("n_mels must be positive");

    // Triangular filterbank with Slaney area normalization.
    int n_bins = stft_.fft_size / 2 + 1;
    double mel_lo = hz_to_mel(mel_.f_min);
    double mel_hi = hz_to_mel(mel_.f_max);
    std::vector<double> edges_hz(mel_.n_mels + 2);
    for (int i = 0; i < mel_.n_mels + 2; ++i)
        edges_hz[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (mel_.n_mels + 1));

    double bin_hz = static_cast<double>(sample_rate_) / stft_.fft_size;
    filters_.resize(mel_.n_mels);
    band_centers_hz_.resize(mel_.n_mels);
    for (int m = 0; m < mel_.n_mels; ++m) {
        double lo = edges_hz[m], center = edges_hz[m + 1], hi = edges_hz[m + 2];
        band_centers_hz_[m] = center;
        double norm = 2.0 / (hi - lo);
        int first = -1;
        std::vector<float> w;
        for (int k = 0; k < n_bins; ++k) {
            double f = k * bin_hz;
            double v = 0.0;
            if (f > lo && f < hi)
                v = (f <= center) ? (f - lo) / (center - lo) : (hi - f) / (hi - center);
            if (v > 0.0) {
                if (first < 0) first = k;
                w.push_back(static_cast<float>(v * norm));
            } else if (first >= 0) {
                break;
            }
        }
        filters_[m].first_bin = first < 0 ? 0 : first;
        filters_[m].weights = std::move(w);
    }

    // Orthonormal DCT-II over the mel bands.
    int n = mel_.n_mels;
    dct_.resize(static_cast<size_t>(n) * n);
    for (int k = 0; k < n; ++k) {
        double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / n);
        for (int j = 0; j < n; ++j)
            dct_[static_cast<size_t>(k) * n + j] = static_cast<float>(
                scale * std::cos(std::numbers::pi * (j + 0.5) * k / n));
    }
}

double FeatureExtractor::band_center_hz(int b) const { return band_centers_hz_[b]; }

FeatureMatrix FeatureExtractor::mel_spectrogram(const audio::SecondSegment& segment) const {
    int n_samples = static_cast<int>(segment.samples.size());
    int n_frames = (n_samples - stft_.frame_length) / stft_.hop_length + 1;
    int n_bins = stft_.fft_size / 2 + 1;

    FeatureMatrix out;
    out.n_time = n_frames;
    out.n_bands = mel_.n_mels;
    out.mode = FeatureMode::MelPower;
    out.values.resize(static_cast<size_t>(n_frames) * mel_.n_mels);

    std::vector<float> frame(static_cast<size_t>(stft_.frame_length));
    std::vector<float> power(static_cast<size_t>(n_bins));
    std::vector<std::complex<float>> scratch(static_cast<size_t>(stft_.fft_size));

    for (int f = 0; f < n_frames; ++f) {
        const float* src = segment.samples.data() + static_cast<size_t>(f) * stft_.hop_length;
        for (int i = 0; i < stft_.frame_length; ++i) frame[i] = src[i] * window_[i];
        plan_.real_power_spectrum(frame.data(), frame.size(), power.data(), scratch.data());
        for (int m = 0; m < mel_.n_mels; ++m) {
            const auto& filt = filters_[m];
            float acc = 0.0f;
            for (size_t j = 0; j < filt.weights.size(); ++j)
                acc += filt.weights[j] * power[filt.first_bin + j];
            out.at(f, m) = acc;
        }
    }
    return out;
}

FeatureMatrix FeatureExtractor::mfcc(const FeatureMatrix& melmat) const {
    if (melmat.mode != FeatureMode::MelPower)
        throw WrongMode("mfcc expects a MelPower matrix");
    int n = melmat.n_bands;
    FeatureMatrix out;
    out.n_time = melmat.n_time;
    out.n_bands = n;
    out.mode = FeatureMode::Mfcc;
    out.values.resize(melmat.values.size());

    std::vector<float> logband(static_cast<size_t>(n));
    for (int t = 0; t < melmat.n_time; ++t) {
        for (int b = 0; b < n; ++b)
            logband[b] = std::log(melmat.at(t, b) + static_cast<float>(mel_.floor));
        for (int k = 0; k < n; ++k) {
            float acc = 0.0f;
            const float* row = dct_.data() + static_cast<size_t>(k) * n;
            for (int j = 0; j < n; ++j) acc += row[j] * logband[j];
            out.at(t, k) = acc;
        }
    }
    return out;
}

FeatureMatrix FeatureExtractor::extract(const audio::SecondSegment& segment,
                                        FeatureMode mode) const {
    FeatureMatrix mel = mel_spectrogram(segment);
    if (mode == FeatureMode::MelPower) return mel;
    return mfcc(mel);
}

}  // namespace emt::features
