#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace emt::audio {

constexpr int kPipelineRate = 8000;
constexpr int kSamplesPerSecond = 8000;

struct AudioBuffer {
    std::vector<float> samples;  // normalized to [-1, 1]
    int sample_rate = kPipelineRate;

    double duration_seconds() const {
        return static_cast<double>(samples.size()) / sample_rate;
    }
    size_t whole_seconds() const { return samples.size() / static_cast<size_t>(sample_rate); }
};

// Exactly one second of 8 kHz audio.
struct SecondSegment {
    std::vector<float> samples;  // length 8000
    std::string source_id;
    size_t index = 0;  // zero-based second offset within the recording
};

struct UnsupportedFormat : std::runtime_error {
    explicit UnsupportedFormat(const std::string& what) : std::runtime_error(what) {}
};
struct CorruptContainer : std::runtime_error {
    explicit CorruptContainer(const std::string& what) : std::runtime_error(what) {}
};
struct UnsupportedRate : std::runtime_error {
    explicit UnsupportedRate(int rate)
        : std::runtime_error("unsupported sample rate: " + std::to_string(rate)) {}
};

// RIFF/WAVE, mono, PCM16 or 8-bit G.711 mu-law.
AudioBuffer decode_wav(std::span<const uint8_t> bytes);
AudioBuffer load_wav(const std::string& path);

// PCM16 mono writer; used for fixtures and the raw CLI path.
std::vector<uint8_t> encode_wav_pcm16(const AudioBuffer& buffer);
void save_wav(const std::string& path, const AudioBuffer& buffer);

// Headerless PCM16LE at 8 kHz (the `--raw-pcm8k` CLI input path).
AudioBuffer decode_raw_pcm16_8k(std::span<const uint8_t> bytes);

float mulaw_expand(uint8_t byte);

// Linear-interpolation resampler. Accepts 8000/16000/44100/48000 Hz input;
// 8000 Hz input is returned unchanged.
AudioBuffer resample_to_8k(const AudioBuffer& buffer);

// Cuts into consecutive non-overlapping 8000-sample windows; a trailing
// remainder shorter than one second is dropped.
std::vector<SecondSegment> segment_seconds(const AudioBuffer& buffer,
                                           const std::string& source_id = "");

}  // namespace emt::audio
