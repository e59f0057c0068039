#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "emt/distill.hpp"
#include "emt/features.hpp"

namespace emt::dataset {

struct Record {
    distill::ClassLabel label;
    std::vector<float> features;  // length 696
};

struct Dataset {
    features::FeatureMode mode = features::FeatureMode::MelPower;
    int n_time = 29;
    int n_bands = 24;
    std::vector<Record> records;

    std::array<size_t, distill::kNumClasses> class_counts() const;
};

// Binary container: magic EMDS, version u16, mode u8, shape, record count,
// then records of (label byte + 696 LE float32), CRC32 trailer.
std::vector<uint8_t> serialize(const Dataset& ds);
Dataset deserialize(std::span<const uint8_t> bytes);
void save(const std::string& path, const Dataset& ds);
Dataset load(const std::string& path);

struct BuildConfig {
    distill::SmoothingConfig smoothing;
    features::FeatureMode mode = features::FeatureMode::MelPower;
    double test_fraction = 0.2;
    uint64_t seed = 42;
};

struct MissingAudio : std::runtime_error {
    explicit MissingAudio(const std::string& id)
        : std::runtime_error("no audio file for recording: " + id) {}
};

struct BuildResult {
    Dataset train;
    Dataset test;
    // Per-class second counts over the full corpus, train and test.
    std::array<size_t, distill::kNumClasses> total_seconds{};
    std::array<size_t, distill::kNumClasses> train_seconds{};
    std::array<size_t, distill::kNumClasses> test_seconds{};
    size_t n_recordings = 0;
    std::vector<std::string> warnings;
    uint64_t seed = 0;
};

// One recording already decoded and labeled; build_dataset input.
struct RecordingInput {
    distill::TeacherLabelSequence labels;
    audio::AudioBuffer audio;
};

// Aggregates, smooths, extracts segments for every recording, then splits
// 80/20 stratified by class at the recording level (a recording's stratum is
// its majority segment class; all its segments land on one side).
BuildResult build_dataset(std::vector<RecordingInput> recordings,
                          const distill::ClassAggregationMap& map,
                          const BuildConfig& cfg);

// File-based front end: JSONL teacher label files + a directory of
// `<recording_id>.wav` audio.
BuildResult build_dataset_from_files(const std::vector<std::string>& label_files,
                                     const std::string& audio_dir,
                                     const distill::ClassAggregationMap& map,
                                     const BuildConfig& cfg);

// JSON Lines: {"recording_id": str, "frame_labels": [int, ...]} per line.
std::vector<distill::TeacherLabelSequence> load_teacher_labels_jsonl(const std::string& path);

std::string manifest_json(const BuildResult& result, const BuildConfig& cfg);

}  // namespace emt::dataset
