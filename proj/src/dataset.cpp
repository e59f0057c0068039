#include "emt/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include "emt/binio.hpp"
#include "json.hpp"

namespace emt::dataset {

namespace fs = std::filesystem;
using nlohmann::json;

std::array<size_t, distill::kNumClasses> Dataset::class_counts() const {
    std::array<size_t, distill::kNumClasses> counts{};
    for (const auto& r : records) counts[static_cast<size_t>(r.label)]++;
    return counts;
}

namespace {
constexpr char kMagic[4] = {'E', 'M', 'D', 'S'};
constexpr uint16_t kVersion = 1;
}  // namespace

std::vector<uint8_t> serialize(const Dataset& ds) {
    ByteWriter w;
    w.bytes(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(kMagic), 4));
    w.u16(kVersion);
    w.u8(static_cast<uint8_t>(ds.mode));
    w.u16(static_cast<uint16_t>(ds.n_time));
    w.u16(static_cast<uint16_t>(ds.n_bands));
    w.u64(ds.records.size());
    for (const auto& r : ds.records) {
        w.u8(static_cast<uint8_t>(r.label));
        for (float v : r.features) w.f32(v);
    }
    w.finish_with_crc();
    return w.take();
}

Dataset deserialize(std::span<const uint8_t> bytes) {
    ByteReader r(bytes);
    r.check_crc();
    char magic[4];
    for (auto& c : magic) c = static_cast<char>(r.u8());
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("not a dataset file (bad magic)");
    uint16_t version = r.u16();
    if (version != kVersion) throw VersionMismatch(version, kVersion);
    Dataset ds;
    ds.mode = static_cast<features::FeatureMode>(r.u8());
    ds.n_time = r.u16();
    ds.n_bands = r.u16();
    uint64_t n = r.u64();
    size_t feat = static_cast<size_t>(ds.n_time) * ds.n_bands;
    ds.records.resize(n);
    for (auto& rec : ds.records) {
        rec.label = static_cast<distill::ClassLabel>(r.u8());
        rec.features.resize(feat);
        for (auto& v : rec.features) v = r.f32();
    }
    return ds;
}

void save(const std::string& path, const Dataset& ds) {
    auto bytes = serialize(ds);
    write_file(path, bytes);
}

Dataset load(const std::string& path) {
    auto bytes = read_file(path);
    return deserialize(bytes);
}

std::vector<distill::TeacherLabelSequence> load_teacher_labels_jsonl(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open label file: " + path);
    std::vector<distill::TeacherLabelSequence> out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        distill::TeacherLabelSequence seq;
        seq.recording_id = j.at("recording_id").get<std::string>();
        seq.frame_labels = j.at("frame_labels").get<std::vector<int>>();
        out.push_back(std::move(seq));
    }
    return out;
}

BuildResult build_dataset(std::vector<RecordingInput> recordings,
                          const distill::ClassAggregationMap& map,
                          const BuildConfig& cfg) {
    // Scheduling-order independence: process in sorted recording_id order.
    std::sort(recordings.begin(), recordings.end(),
              [](const RecordingInput& a, const RecordingInput& b) {
                  return a.labels.recording_id < b.labels.recording_id;
              });

    features::FeatureExtractor extractor;

    struct PerRecording {
        std::string id;
        std::vector<distill::LabeledSegment> segments;
        distill::ClassLabel stratum;
    };
    std::vector<PerRecording> processed;
    processed.reserve(recordings.size());

    BuildResult result;
    result.seed = cfg.seed;
    result.n_recordings = recordings.size();

    for (auto& rec : recordings) {
        auto aggregated = aggregate_labels(rec.labels, map);
        auto smoothed = smooth_labels(aggregated, cfg.smoothing);
        auto segments = extract_segments(smoothed, rec.audio, extractor, cfg.mode,
                                         rec.labels.recording_id);
        if (segments.empty()) continue;
        std::array<size_t, distill::kNumClasses> counts{};
        for (const auto& s : segments) counts[static_cast<size_t>(s.label)]++;
        for (size_t c = 0; c < distill::kNumClasses; ++c) result.total_seconds[c] += counts[c];
        int stratum = 0;
        for (int c = 1; c < distill::kNumClasses; ++c)
            if (counts[static_cast<size_t>(c)] > counts[static_cast<size_t>(stratum)])
                stratum = c;
        processed.push_back({rec.labels.recording_id, std::move(segments),
                             static_cast<distill::ClassLabel>(stratum)});
    }

    // Recording-level stratified split: within each stratum, shuffle with the
    // seeded RNG and send test_fraction of recordings to the test side.
    result.train.mode = result.test.mode = cfg.mode;
    std::vector<bool> goes_to_test(processed.size(), false);
    for (int c = 0; c < distill::kNumClasses; ++c) {
        std::vector<size_t> members;
        for (size_t i = 0; i < processed.size(); ++i)
            if (processed[i].stratum == static_cast<distill::ClassLabel>(c))
                members.push_back(i);
        if (members.empty()) continue;
        std::mt19937_64 rng(cfg.seed ^ (0x9E3779B97F4A7C15ULL * (c + 1)));
        std::shuffle(members.begin(), members.end(), rng);
        size_t n_test = static_cast<size_t>(members.size() * cfg.test_fraction);
        if (members.size() == 1) {
            result.warnings.push_back("stratum " +
                                      distill::class_name(static_cast<distill::ClassLabel>(c)) +
                                      " has a single recording; placed entirely in train");
            n_test = 0;
        }
        for (size_t i = 0; i < n_test; ++i) goes_to_test[members[i]] = true;
    }

    for (size_t i = 0; i < processed.size(); ++i) {
        Dataset& side = goes_to_test[i] ? result.test : result.train;
        auto& side_seconds = goes_to_test[i] ? result.test_seconds : result.train_seconds;
        for (auto& seg : processed[i].segments) {
            side_seconds[static_cast<size_t>(seg.label)]++;
            side.records.push_back({seg.label, features::flatten(seg.features)});
        }
    }
    return result;
}

BuildResult build_dataset_from_files(const std::vector<std::string>& label_files,
                                     const std::string& audio_dir,
                                     const distill::ClassAggregationMap& map,
                                     const BuildConfig& cfg) {
    std::vector<RecordingInput> inputs;
    for (const auto& lf : label_files) {
        for (auto& seq : load_teacher_labels_jsonl(lf)) {
            fs::path wav = fs::path(audio_dir) / (seq.recording_id + ".wav");
            if (!fs::exists(wav)) throw MissingAudio(seq.recording_id);
            RecordingInput in;
            in.audio = audio::resample_to_8k(audio::load_wav(wav.string()));
            in.labels = std::move(seq);
            inputs.push_back(std::move(in));
        }
    }
    return build_dataset(std::move(inputs), map, cfg);
}

std::string manifest_json(const BuildResult& result, const BuildConfig& cfg) {
    json j;
    j["version"] = 1;
    j["feature_mode"] = features::feature_mode_name(cfg.mode);
    j["shape"] = {29, 24};
    j["seed"] = result.seed;
    j["n_recordings"] = result.n_recordings;
    j["warnings"] = result.warnings;
    for (int c = 0; c < distill::kNumClasses; ++c) {
        auto name = distill::class_name(static_cast<distill::ClassLabel>(c));
        j["seconds_per_class"][name] = result.total_seconds[static_cast<size_t>(c)];
        j["train_seconds_per_class"][name] = result.train_seconds[static_cast<size_t>(c)];
        j["test_seconds_per_class"][name] = result.test_seconds[static_cast<size_t>(c)];
    }
    return j.dump(2);
}

}  // namespace emt::dataset
