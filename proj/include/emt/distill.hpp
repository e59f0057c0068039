#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "emt/audio.hpp"
#include "emt/features.hpp"

namespace emt::distill {

// The four aggregated early-media classes. Integer encoding is persisted in
// models and dataset files and must stay stable.
enum class ClassLabel : uint8_t {
    Announcement = 0,
    Ringback = 1,
    Music = 2,
    Silence = 3,
};
constexpr int kNumClasses = 4;

std::string class_name(ClassLabel label);
std::optional<ClassLabel> class_from_name(const std::string& name);

struct TeacherLabelSequence {
    std::string recording_id;
    std::vector<int> frame_labels;  // one teacher class id per 10 ms frame
};

struct UnmappedTeacherClass : std::runtime_error {
    UnmappedTeacherClass(int id, size_t frame)
        : std::runtime_error("teacher class " + std::to_string(id) +
                             " at frame " + std::to_string(frame) +
                             " has no aggregation entry"),
          teacher_id(id),
          frame_index(frame) {}
    int teacher_id;
    size_t frame_index;
};

class ClassAggregationMap {
public:
    void insert(int teacher_id, ClassLabel label) { entries_[teacher_id] = label; }
    std::optional<ClassLabel> lookup(int teacher_id) const;
    size_t size() const { return entries_.size(); }

    // CSV `teacher_class_id,class_label_name` with header row.
    static ClassAggregationMap load_csv(const std::string& path);
    static ClassAggregationMap parse_csv(const std::string& content);

private:
    std::unordered_map<int, ClassLabel> entries_;
};

std::vector<ClassLabel> aggregate_labels(const TeacherLabelSequence& seq,
                                         const ClassAggregationMap& map);

struct SmoothingConfig {
    int window_size = 301;  // 2K+1
    int half_width() const { return (window_size - 1) / 2; }
};

struct OutOfWindow : std::runtime_error {
    explicit OutOfWindow(int k) : std::runtime_error("|k| exceeds window half-width: " +
                                                     std::to_string(k)) {}
};

// Hann weight of offset k from the window center, K the half-width:
// 0.5 - 0.5*cos(2*pi*(K+k)/(2K)). W_0 = 1, W_{+/-K} = 0.
double hann_weight(int k, int half_width = 150);

// Weighted-majority replacement of each label by the dominant class in its
// 301-frame neighborhood. Windows are clipped at sequence edges; all
// positions are evaluated against the original labels; ties resolve to the
// lowest class id.
std::vector<ClassLabel> smooth_labels(const std::vector<ClassLabel>& labels,
                                      const SmoothingConfig& cfg = {});

struct LabeledSegment {
    features::FeatureMatrix features;
    ClassLabel label;
    std::string recording_id;
    size_t start_frame;  // 10 ms frames from recording start
};

struct AlignmentError : std::runtime_error {
    explicit AlignmentError(const std::string& what) : std::runtime_error(what) {}
};

constexpr int kFramesPerSecond = 100;  // 10 ms teacher frames
constexpr int kSamplesPerFrame = 80;   // at 8 kHz

// Scans for maximal runs of identical labels; each run of >= 100 frames
// yields floor(run/100) non-overlapping segments tiled from the run start.
std::vector<LabeledSegment> extract_segments(const std::vector<ClassLabel>& labels,
                                             const audio::AudioBuffer& buffer,
                                             const features::FeatureExtractor& extractor,
                                             features::FeatureMode mode,
                                             const std::string& recording_id = "");

}  // namespace emt::distill
