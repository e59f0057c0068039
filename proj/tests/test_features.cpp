#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <vector>

#include "emt/features.hpp"
#include "emt/synth.hpp"

using namespace emt::features;
using emt::audio::SecondSegment;

namespace {

SecondSegment segment_of(const emt::audio::AudioBuffer& buf, size_t second = 0) {
    SecondSegment seg;
    seg.samples.assign(buf.samples.begin() + static_cast<ptrdiff_t>(second * 8000),
                       buf.samples.begin() + static_cast<ptrdiff_t>((second + 1) * 8000));
    seg.index = second;
    return seg;
}

// Independent oracle: naive DFT power spectrum and a from-scratch Slaney mel
// filterbank, all in double precision.
struct MelOracle {
    int n_mels = 24;
    int fft_size = 1024;
    int frame_length = 1000;
    int hop = 250;
    double sr = 8000.0;
    double f_min = 0.0;
    double f_max = 4000.0;

    static double hz2mel(double f) {
        return f < 1000.0 ? f / (200.0 / 3.0)
                          : 15.0 + std::log(f / 1000.0) / (std::log(6.4) / 27.0);
    }
    static double mel2hz(double m) {
        return m < 15.0 ? m * (200.0 / 3.0)
                        : 1000.0 * std::exp((std::log(6.4) / 27.0) * (m - 15.0));
    }

    std::vector<std::vector<double>> mel_matrix(const std::vector<float>& samples) const {
        int n_frames = (static_cast<int>(samples.size()) - frame_length) / hop + 1;
        int n_bins = fft_size / 2 + 1;
        std::vector<double> window(static_cast<size_t>(frame_length));
        for (int i = 0; i < frame_length; ++i)
            window[static_cast<size_t>(i)] =
                0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (frame_length - 1));

        std::vector<double> edges(static_cast<size_t>(n_mels) + 2);
        double mlo = hz2mel(f_min), mhi = hz2mel(f_max);
        for (int i = 0; i < n_mels + 2; ++i)
            edges[static_cast<size_t>(i)] = mel2hz(mlo + (mhi - mlo) * i / (n_mels + 1));

        std::vector<std::vector<double>> out(static_cast<size_t>(n_frames),
                                             std::vector<double>(static_cast<size_t>(n_mels)));
        std::vector<double> power(static_cast<size_t>(n_bins));
        for (int f = 0; f < n_frames; ++f) {
            for (int k = 0; k < n_bins; ++k) {
                double re = 0.0, im = 0.0;
                for (int i = 0; i < frame_length; ++i) {
                    double x = samples[static_cast<size_t>(f * hop + i)] *
                               window[static_cast<size_t>(i)];
                    double ang = -2.0 * std::numbers::pi * k * i / fft_size;
                    re += x * std::cos(ang);
                    im += x * std::sin(ang);
                }
                power[static_cast<size_t>(k)] = re * re + im * im;
            }
            for (int m = 0; m < n_mels; ++m) {
                double lo = edges[static_cast<size_t>(m)];
                double center = edges[static_cast<size_t>(m) + 1];
                double hi = edges[static_cast<size_t>(m) + 2];
                double acc = 0.0;
                for (int k = 0; k < n_bins; ++k) {
                    double fr = k * sr / fft_size;
                    double w = 0.0;
                    if (fr > lo && fr < hi)
                        w = fr <= center ? (fr - lo) / (center - lo) : (hi - fr) / (hi - center);
                    acc += w * (2.0 / (hi - lo)) * power[static_cast<size_t>(k)];
                }
                out[static_cast<size_t>(f)][static_cast<size_t>(m)] = acc;
            }
        }
        return out;
    }
};

}  // namespace

TEST_CASE("default STFT config yields 29 frames per second") {
    StftConfig stft;
    CHECK(stft.frames_per_second(8000) == 29);
}

TEST_CASE("feature shape is 29x24 = 696 in both modes") {
    FeatureExtractor ex;
    auto seg = segment_of(emt::synth::white_noise(1.0, 0.5, 17));
    for (auto mode : {FeatureMode::MelPower, FeatureMode::Mfcc}) {
        auto feat = ex.extract(seg, mode);
        CHECK(feat.n_time == 29);
        CHECK(feat.n_bands == 24);
        CHECK(feat.values.size() == 696);
    }
}

TEST_CASE("all-zero segment gives all-zero mel power") {
    FeatureExtractor ex;
    SecondSegment seg;
    seg.samples.assign(8000, 0.0f);
    auto feat = ex.mel_spectrogram(seg);
    for (float v : feat.values) CHECK(v == 0.0f);
}

TEST_CASE("mel matrix matches the naive DFT + filterbank oracle") {
    FeatureExtractor ex;
    auto buf = emt::synth::sine(1000.0, 1.0, 1.0);
    auto seg = segment_of(buf);
    auto feat = ex.mel_spectrogram(seg);

    MelOracle oracle;
    auto expect = oracle.mel_matrix(seg.samples);
    int nearest = 0;
    for (int b = 1; b < 24; ++b)
        if (std::abs(ex.band_center_hz(b) - 1000.0) < std::abs(ex.band_center_hz(nearest) - 1000.0))
            nearest = b;

    for (int t = 0; t < feat.n_time; ++t) {
        int argmax_impl = 0, argmax_oracle = 0;
        for (int b = 1; b < 24; ++b) {
            if (feat.at(t, b) > feat.at(t, argmax_impl)) argmax_impl = b;
            if (expect[static_cast<size_t>(t)][static_cast<size_t>(b)] >
                expect[static_cast<size_t>(t)][static_cast<size_t>(argmax_oracle)])
                argmax_oracle = b;
        }
        CHECK(argmax_impl == argmax_oracle);
        CHECK(argmax_impl == nearest);
        for (int b = 0; b < 24; ++b) {
            double e = expect[static_cast<size_t>(t)][static_cast<size_t>(b)];
            CHECK(feat.at(t, b) == doctest::Approx(e).epsilon(1e-3).scale(1e-6));
        }
    }
}

TEST_CASE("mfcc equals a naive double-precision DCT-II") {
    FeatureExtractor ex;
    auto seg = segment_of(emt::synth::class_signal(emt::distill::ClassLabel::Music, 1.0, 3));
    auto mel = ex.mel_spectrogram(seg);
    auto cc = ex.mfcc(mel);
    CHECK(cc.mode == FeatureMode::Mfcc);
    CHECK(cc.values.size() == 696);
    for (int t = 0; t < mel.n_time; ++t) {
        for (int k = 0; k < 24; ++k) {
            double acc = 0.0;
            for (int j = 0; j < 24; ++j) {
                double lv = std::log(static_cast<double>(mel.at(t, j)) + 1e-10);
                acc += lv * std::sqrt((k == 0 ? 1.0 : 2.0) / 24.0) *
                       std::cos(std::numbers::pi * (j + 0.5) * k / 24.0);
            }
            CHECK(cc.at(t, k) == doctest::Approx(acc).epsilon(1e-4).scale(1e-4));
        }
    }
}

TEST_CASE("DCT of a constant band vector concentrates in coefficient 0") {
    FeatureExtractor ex;
    FeatureMatrix mel;
    mel.n_time = 29;
    mel.n_bands = 24;
    mel.mode = FeatureMode::MelPower;
    mel.values.assign(696, 2.5f);
    auto cc = ex.mfcc(mel);
    double expect0 = std::log(2.5 + 1e-10) * std::sqrt(24.0);
    for (int t = 0; t < 29; ++t) {
        CHECK(cc.at(t, 0) == doctest::Approx(expect0).epsilon(1e-5));
        for (int k = 1; k < 24; ++k) CHECK(std::abs(cc.at(t, k)) < 1e-4);
    }
}

TEST_CASE("mfcc rejects non-mel input") {
    FeatureExtractor ex;
    FeatureMatrix m;
    m.n_time = 29;
    m.n_bands = 24;
    m.mode = FeatureMode::Mfcc;
    m.values.assign(696, 0.0f);
    CHECK_THROWS_AS(ex.mfcc(m), WrongMode);
}

TEST_CASE("mfcc of silence is finite") {
    FeatureExtractor ex;
    SecondSegment seg;
    seg.samples.assign(8000, 0.0f);
    auto cc = ex.extract(seg, FeatureMode::Mfcc);
    for (float v : cc.values) CHECK(std::isfinite(v));
}

TEST_CASE("flatten is row-major and inverts unflatten") {
    FeatureMatrix m;
    m.n_time = 29;
    m.n_bands = 24;
    m.values.resize(696);
    for (size_t i = 0; i < 696; ++i) m.values[i] = static_cast<float>(i);
    auto v = flatten(m);
    CHECK(v.size() == 696);
    CHECK(v[24] == m.at(1, 0));  // (t=1, b=0) lands at index 24
    auto back = unflatten(v, 29, 24, FeatureMode::MelPower);
    CHECK(flatten(back) == v);
}

TEST_CASE("total mel power scales quadratically with amplitude") {
    FeatureExtractor ex;
    auto buf = emt::synth::class_signal(emt::distill::ClassLabel::Announcement, 1.0, 5);
    auto seg = segment_of(buf);
    SecondSegment seg2 = seg;
    for (auto& s : seg2.samples) s *= 0.5f;
    auto a = ex.mel_spectrogram(seg);
    auto b = ex.mel_spectrogram(seg2);
    double total_a = 0.0, total_b = 0.0;
    for (float v : a.values) total_a += v;
    for (float v : b.values) total_b += v;
    CHECK(total_b == doctest::Approx(0.25 * total_a).epsilon(1e-4));
}

TEST_CASE("delaying input by one hop shifts frames by one") {
    FeatureExtractor ex;
    auto buf = emt::synth::class_signal(emt::distill::ClassLabel::Music, 2.0, 11);
    SecondSegment seg0 = segment_of(buf, 0);
    SecondSegment shifted;
    shifted.samples.assign(buf.samples.begin() + 250, buf.samples.begin() + 250 + 8000);
    auto f0 = ex.mel_spectrogram(seg0);
    auto f1 = ex.mel_spectrogram(shifted);
    // Frame t of the shifted signal covers the same samples as frame t+1 of
    // the original, for frames fully inside both signals.
    for (int t = 0; t < 28; ++t)
        for (int b = 0; b < 24; ++b)
            CHECK(f1.at(t, b) == doctest::Approx(f0.at(t + 1, b)).epsilon(1e-6));
}

TEST_CASE("feature extraction is bit-deterministic") {
    FeatureExtractor ex1, ex2;
    auto seg = segment_of(emt::synth::class_signal(emt::distill::ClassLabel::Ringback, 1.0, 21));
    auto a = ex1.extract(seg, FeatureMode::Mfcc);
    auto b = ex2.extract(seg, FeatureMode::Mfcc);
    CHECK(a.values == b.values);
}

TEST_CASE("invalid configs are rejected") {
    StftConfig bad_frame;
    bad_frame.frame_length = 9000;
    CHECK_THROWS_AS(FeatureExtractor(bad_frame, MelConfig{}), ConfigInvalid);
    MelConfig bad_mel;
    bad_mel.f_max = 5000.0;
    CHECK_THROWS_AS(FeatureExtractor(StftConfig{}, bad_mel), ConfigInvalid);
}
