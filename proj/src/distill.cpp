#include "emt/distill.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace emt::distill {

std::string class_name(ClassLabel label) {
    switch (label) {
        case ClassLabel::Announcement: return "announcement";
        case ClassLabel::Ringback: return "ringback";
        case ClassLabel::Music: return "music";
        case ClassLabel::Silence: return "silence";
    }
    return "?";
}

std::optional<ClassLabel> class_from_name(const std::string& name) {
    if (name == "announcement") return ClassLabel::Announcement;
    if (name == "ringback") return ClassLabel::Ringback;
    if (name == "music") return ClassLabel::Music;
    if (name == "silence") return ClassLabel::Silence;
    return std::nullopt;
}

std::optional<ClassLabel> ClassAggregationMap::lookup(int teacher_id) const {
    auto it = entries_.find(teacher_id);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

ClassAggregationMap ClassAggregationMap::parse_csv(const std::string& content) {
    ClassAggregationMap map;
    std::istringstream in(content);
    std::string line;
    bool header = true;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (header) {
            if (line != "teacher_class_id,class_label_name")
                throw std::runtime_error("aggregation map CSV missing expected header row");
            header = false;
            continue;
        }
        auto c = line.find(',');
        if (c == std::string::npos)
            throw std::runtime_error("aggregation map line " + std::to_string(line_no) +
                                     ": expected 2 fields");
        int id = std::stoi(line.substr(0, c));
        std::string name = line.substr(c + 1);
        auto label = class_from_name(name);
        if (!label)
            throw std::runtime_error("aggregation map line " + std::to_string(line_no) +
                                     ": unknown class name '" + name + "'");
        map.insert(id, *label);
    }
    if (header) throw std::runtime_error("aggregation map CSV is empty");
    return map;
}

ClassAggregationMap ClassAggregationMap::load_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open aggregation map: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_csv(ss.str());
}

std::vector<ClassLabel> aggregate_labels(const TeacherLabelSequence& seq,
                                         const ClassAggregationMap& map) {
    std::vector<ClassLabel> out;
    out.reserve(seq.frame_labels.size());
    for (size_t i = 0; i < seq.frame_labels.size(); ++i) {
        auto label = map.lookup(seq.frame_labels[i]);
        if (!label) throw UnmappedTeacherClass(seq.frame_labels[i], i);
        out.push_back(*label);
    }
    return out;
}

double hann_weight(int k, int half_width) {
    if (k < -half_width || k > half_width) throw OutOfWindow(k);
    double n = 2.0 * half_width;
    return 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (half_width + k) / n);
}

std::vector<ClassLabel> smooth_labels(const std::vector<ClassLabel>& labels,
                                      const SmoothingConfig& cfg) {
    const int K = cfg.half_width();
    const int n = static_cast<int>(labels.size());
    std::vector<double> weights(static_cast<size_t>(2 * K + 1));
    for (int k = -K; k <= K; ++k) weights[static_cast<size_t>(k + K)] = hann_weight(k, K);

    std::vector<ClassLabel> out(labels.size());
    for (int i = 0; i < n; ++i) {
        std::array<double, kNumClasses> score{};
        int lo = std::max(0, i - K);
        int hi = std::min(n - 1, i + K);
        for (int j = lo; j <= hi; ++j)
            score[static_cast<size_t>(labels[j])] += weights[static_cast<size_t>(j - i + K)];
        int best = 0;
        for (int c = 1; c < kNumClasses; ++c)
            if (score[c] > score[best]) best = c;
        out[static_cast<size_t>(i)] = static_cast<ClassLabel>(best);
    }
    return out;
}

std::vector<LabeledSegment> extract_segments(const std::vector<ClassLabel>& labels,
                                             const audio::AudioBuffer& buffer,
                                             const features::FeatureExtractor& extractor,
                                             features::FeatureMode mode,
                                             const std::string& recording_id) {
    size_t audio_seconds = buffer.whole_seconds();
    if (labels.size() < audio_seconds * kFramesPerSecond)
        throw AlignmentError("label sequence shorter than audio: " +
                             std::to_string(labels.size()) + " frames for " +
                             std::to_string(audio_seconds) + " s");
    // Labels beyond the last whole second of audio are ignored.
    size_t usable_frames = audio_seconds * kFramesPerSecond;

    std::vector<LabeledSegment> out;
    size_t run_start = 0;
    for (size_t i = 1; i <= usable_frames; ++i) {
        if (i == usable_frames || labels[i] != labels[run_start]) {
            size_t run_len = i - run_start;
            size_t n_segments = run_len / kFramesPerSecond;
            for (size_t s = 0; s < n_segments; ++s) {
                size_t start_frame = run_start + s * kFramesPerSecond;
                size_t start_sample = start_frame * kSamplesPerFrame;
                audio::SecondSegment seg;
                seg.samples.assign(
                    buffer.samples.begin() + static_cast<ptrdiff_t>(start_sample),
                    buffer.samples.begin() +
                        static_cast<ptrdiff_t>(start_sample + audio::kSamplesPerSecond));
                seg.source_id = recording_id;
                seg.index = start_frame / kFramesPerSecond;
                LabeledSegment labeled;
                labeled.features = extractor.extract(seg, mode);
                labeled.label = labels[run_start];
                labeled.recording_id = recording_id;
                labeled.start_frame = start_frame;
                out.push_back(std::move(labeled));
            }
            run_start = i;
        }
    }
    return out;
}

}  // namespace emt::distill
