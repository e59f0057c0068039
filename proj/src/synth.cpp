#include "emt/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace emt::synth {

using std::numbers::pi;

audio::AudioBuffer sine(double freq_hz, double seconds, double amplitude, int sample_rate) {
    audio::AudioBuffer out;
    out.sample_rate = sample_rate;
    size_t n = static_cast<size_t>(seconds * sample_rate);
    out.samples.resize(n);
    for (size_t i = 0; i < n; ++i)
        out.samples[i] =
            static_cast<float>(amplitude * std::sin(2.0 * pi * freq_hz * i / sample_rate));
    return out;
}

audio::AudioBuffer white_noise(double seconds, double amplitude, uint64_t seed,
                               int sample_rate) {
    audio::AudioBuffer out;
    out.sample_rate = sample_rate;
    size_t n = static_cast<size_t>(seconds * sample_rate);
    out.samples.resize(n);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
    for (auto& s : out.samples) s = static_cast<float>(amplitude) * dist(rng);
    return out;
}

void append(audio::AudioBuffer& dst, const audio::AudioBuffer& src) {
    dst.samples.insert(dst.samples.end(), src.samples.begin(), src.samples.end());
}

namespace {

audio::AudioBuffer ringback_signal(double seconds, uint64_t seed) {
    auto out = sine(425.0, seconds, 0.45);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ripple_hz(0.8, 1.4);
    double rf = ripple_hz(rng);
    for (size_t i = 0; i < out.samples.size(); ++i) {
        double env = 0.85 + 0.15 * std::sin(2.0 * pi * rf * i / out.sample_rate);
        out.samples[i] = static_cast<float>(out.samples[i] * env);
    }
    return out;
}

audio::AudioBuffer music_signal(double seconds, uint64_t seed) {
    audio::AudioBuffer out;
    out.sample_rate = audio::kPipelineRate;
    size_t n = static_cast<size_t>(seconds * out.sample_rate);
    out.samples.resize(n, 0.0f);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> base_note(160.0, 520.0);
    size_t half_second = static_cast<size_t>(out.sample_rate) / 2;
    for (size_t start = 0; start < n; start += half_second) {
        double f0 = base_note(rng);
        size_t end = std::min(n, start + half_second);
        for (size_t i = start; i < end; ++i) {
            double t = static_cast<double>(i) / out.sample_rate;
            double v = 0.30 * std::sin(2.0 * pi * f0 * t) +
                       0.18 * std::sin(2.0 * pi * 2.0 * f0 * t) +
                       0.10 * std::sin(2.0 * pi * 3.0 * f0 * t);
            out.samples[i] = static_cast<float>(v);
        }
    }
    return out;
}

audio::AudioBuffer announcement_signal(double seconds, uint64_t seed) {
    // Speech-like: noise carrier, syllabic AM, wandering resonant tone.
    auto out = white_noise(seconds, 0.25, seed ^ 0xA5A5A5A5ULL);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> syllable_hz(3.0, 5.0);
    std::uniform_real_distribution<double> formant_hz(500.0, 2200.0);
    double syl = syllable_hz(rng);
    // One-pole lowpass shapes the noise toward a speech-ish spectrum.
    float prev = 0.0f;
    size_t quarter = static_cast<size_t>(out.sample_rate) / 4;
    double formant = formant_hz(rng);
    for (size_t i = 0; i < out.samples.size(); ++i) {
        if (i % quarter == 0) formant = formant_hz(rng);
        double t = static_cast<double>(i) / out.sample_rate;
        double env = std::max(0.0, std::sin(2.0 * pi * syl * t));
        prev = 0.6f * prev + 0.4f * out.samples[i];
        double v = env * (prev + 0.35 * std::sin(2.0 * pi * formant * t));
        out.samples[i] = static_cast<float>(std::clamp(v, -1.0, 1.0));
    }
    return out;
}

}  // namespace

audio::AudioBuffer class_signal(distill::ClassLabel label, double seconds, uint64_t seed) {
    switch (label) {
        case distill::ClassLabel::Ringback: return ringback_signal(seconds, seed);
        case distill::ClassLabel::Music: return music_signal(seconds, seed);
        case distill::ClassLabel::Silence: return white_noise(seconds, 0.001, seed);
        case distill::ClassLabel::Announcement: return announcement_signal(seconds, seed);
    }
    return white_noise(seconds, 0.001, seed);
}

audio::AudioBuffer add_noise_snr(const audio::AudioBuffer& clean, double snr_db,
                                 uint64_t seed) {
    double power = 0.0;
    for (float s : clean.samples) power += static_cast<double>(s) * s;
    power /= std::max<size_t>(clean.samples.size(), 1);
    double noise_power = power / std::pow(10.0, snr_db / 10.0);
    double amp = std::sqrt(3.0 * noise_power);  // uniform noise variance a^2/3
    auto noise = white_noise(static_cast<double>(clean.samples.size()) / clean.sample_rate,
                             amp, seed, clean.sample_rate);
    audio::AudioBuffer out = clean;
    for (size_t i = 0; i < out.samples.size() && i < noise.samples.size(); ++i)
        out.samples[i] = std::clamp(out.samples[i] + noise.samples[i], -1.0f, 1.0f);
    return out;
}

SyntheticRecording make_recording(const std::string& id, int n_seconds, uint64_t seed) {
    SyntheticRecording rec;
    rec.recording_id = id;
    rec.audio.sample_rate = audio::kPipelineRate;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> run_len(3, 8);
    std::uniform_int_distribution<int> cls(0, distill::kNumClasses - 1);
    int remaining = n_seconds;
    while (remaining > 0) {
        int len = std::min(run_len(rng), remaining);
        auto label = static_cast<distill::ClassLabel>(cls(rng));
        auto sig = class_signal(label, len, rng());
        append(rec.audio, sig);
        for (int s = 0; s < len; ++s) rec.second_classes.push_back(label);
        remaining -= len;
    }
    return rec;
}

distill::TeacherLabelSequence teacher_labels(const SyntheticRecording& rec,
                                             double flip_rate, uint64_t seed,
                                             int n_teacher_classes) {
    distill::TeacherLabelSequence seq;
    seq.recording_id = rec.recording_id;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> any_id(0, n_teacher_classes - 1);
    int ids_per_class = n_teacher_classes / distill::kNumClasses;
    for (auto label : rec.second_classes) {
        // Pick one teacher id from the class's pool for this second.
        std::uniform_int_distribution<int> member(0, ids_per_class - 1);
        int id = static_cast<int>(label) + distill::kNumClasses * member(rng);
        for (int f = 0; f < distill::kFramesPerSecond; ++f) {
            if (unit(rng) < flip_rate)
                seq.frame_labels.push_back(any_id(rng));
            else
                seq.frame_labels.push_back(id);
        }
    }
    return seq;
}

distill::ClassAggregationMap teacher_aggregation_map(int n_teacher_classes) {
    distill::ClassAggregationMap map;
    for (int id = 0; id < n_teacher_classes; ++id)
        map.insert(id, static_cast<distill::ClassLabel>(id % distill::kNumClasses));
    return map;
}

}  // namespace emt::synth
