#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "emt/audio.hpp"
#include "emt/fft.hpp"

namespace emt::features {

struct StftConfig {
    int frame_length = 1000;  // 125 ms at 8 kHz
    int hop_length = 250;     // 31.25 ms at 8 kHz
    int fft_size = 1024;      // frames zero-padded

    int frames_per_second(int sample_rate = audio::kPipelineRate) const {
        return (sample_rate - frame_length) / hop_length + 1;
    }
};

struct MelConfig {
    int n_mels = 24;
    double f_min = 0.0;
    double f_max = 4000.0;
    double floor = 1e-10;  // power floor before log (MFCC path only)
};

enum class FeatureMode : uint8_t { MelPower = 0, Mfcc = 1 };

std::string feature_mode_name(FeatureMode mode);
FeatureMode feature_mode_from_name(const std::string& name);

struct ConfigInvalid : std::runtime_error {
    explicit ConfigInvalid(const std::string& what) : std::runtime_error(what) {}
};
struct WrongMode : std::runtime_error {
    explicit WrongMode(const std::string& what) : std::runtime_error(what) {}
};

// 29 time-steps x 24 bands, row-major (time-major): entry (t, b) at t*24+b.
struct FeatureMatrix {
    std::vector<float> values;
    int n_time = 0;
    int n_bands = 0;
    FeatureMode mode = FeatureMode::MelPower;

    float at(int t, int b) const { return values[static_cast<size_t>(t) * n_bands + b]; }
    float& at(int t, int b) { return values[static_cast<size_t>(t) * n_bands + b]; }
};

constexpr int kFeatureCount = 696;  // 29 * 24

// Row-major flattening; inverse of unflatten.
std::vector<float> flatten(const FeatureMatrix& features);
FeatureMatrix unflatten(const std::vector<float>& v, int n_time, int n_bands, FeatureMode mode);

// Precomputes window, FFT plan and mel filterbank once; extraction itself is
// pure and safe to call concurrently.
class FeatureExtractor {
public:
    explicit FeatureExtractor(StftConfig stft = {}, MelConfig mel = {},
                              int sample_rate = audio::kPipelineRate);

    FeatureMatrix mel_spectrogram(const audio::SecondSegment& segment) const;
    FeatureMatrix mfcc(const FeatureMatrix& melmat) const;

    // mel_spectrogram, optionally followed by the MFCC transform.
    FeatureMatrix extract(const audio::SecondSegment& segment, FeatureMode mode) const;

    const StftConfig& stft() const { return stft_; }
    const MelConfig& mel() const { return mel_; }
    int sample_rate() const { return sample_rate_; }

    // Center frequency (Hz) of mel band b; used by tests.
    double band_center_hz(int b) const;

private:
    StftConfig stft_;
    MelConfig mel_;
    int sample_rate_;
    dsp::FftPlan plan_;
    std::vector<float> window_;
    // Sparse triangular filters: per band, first FFT bin index + weights.
    struct MelFilter {
        int first_bin;
        std::vector<float> weights;
    };
    std::vector<MelFilter> filters_;
    std::vector<double> band_centers_hz_;
    std::vector<float> dct_;  // orthonormal DCT-II matrix, n_mels x n_mels
};

}  // namespace emt::features
