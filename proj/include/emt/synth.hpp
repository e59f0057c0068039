#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "emt/audio.hpp"
#include "emt/distill.hpp"

namespace emt::synth {

// Deterministic signal generators for fixtures and benchmarks. Each of the
// four early-media classes gets a distinct, recognizable spectral texture:
//   ringback      - 425 Hz tone with slow amplitude ripple
//   music         - harmonic stack with a pitch change every half second
//   silence       - near-zero noise floor
//   announcement  - speech-like: band-passed noise with syllabic 4 Hz
//                   amplitude modulation and wandering resonance

audio::AudioBuffer sine(double freq_hz, double seconds, double amplitude = 0.5,
                        int sample_rate = audio::kPipelineRate);

audio::AudioBuffer white_noise(double seconds, double amplitude, uint64_t seed,
                               int sample_rate = audio::kPipelineRate);

audio::AudioBuffer class_signal(distill::ClassLabel label, double seconds, uint64_t seed);

// Concatenation helper.
void append(audio::AudioBuffer& dst, const audio::AudioBuffer& src);

// Adds white noise scaled for the given SNR (dB) relative to the signal power.
audio::AudioBuffer add_noise_snr(const audio::AudioBuffer& clean, double snr_db,
                                 uint64_t seed);

// A synthetic recording: per-second ground-truth classes plus audio.
struct SyntheticRecording {
    std::string recording_id;
    audio::AudioBuffer audio;
    std::vector<distill::ClassLabel> second_classes;  // one per second
};

// Random multi-run recording (runs of 3..8 seconds, random classes).
SyntheticRecording make_recording(const std::string& id, int n_seconds, uint64_t seed);

// Emulates the teacher: 100 frame labels per second drawn from the class's
// teacher-id pool, with a small rate of random flips that smoothing removes.
// Teacher ids: class c owns ids {c, c+4, c+8, ...} below n_teacher_classes.
distill::TeacherLabelSequence teacher_labels(const SyntheticRecording& rec,
                                             double flip_rate, uint64_t seed,
                                             int n_teacher_classes = 527);

// Aggregation map consistent with teacher_labels, total over all teacher ids.
distill::ClassAggregationMap teacher_aggregation_map(int n_teacher_classes = 527);

}  // namespace emt::synth
