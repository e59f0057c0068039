#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "emt/audio.hpp"
#include "emt/features.hpp"
#include "emt/sip.hpp"

namespace emt::fingerprint {

struct PeakConfig {
    int neighborhood_frames = 5;   // local-max window (frames x bins)
    int neighborhood_bins = 5;
    double threshold_sigma = 2.0;  // per-frame mean + 2*sigma
    int max_peaks_per_second = 30;
};

struct LandmarkConfig {
    int max_dframe = 63;   // target zone depth, frames
    int max_dband = 31;    // |band delta| within target zone
    int fanout = 5;        // pairs per anchor
};

struct Peak {
    int frame;
    int band;
    float magnitude;  // log power
};

struct Landmark {
    Peak anchor;
    Peak target;
};

// 32-bit packed hash: anchor_band(9) | target_band(9) | dframe(8) | reserved(6).
uint32_t pack_hash(int anchor_band, int target_band, int dframe);
struct UnpackedHash {
    int anchor_band;
    int target_band;
    int dframe;
};
UnpackedHash unpack_hash(uint32_t hash);

struct TooShort : std::runtime_error {
    TooShort() : std::runtime_error("audio shorter than one second") {}
};
struct UnknownAnnouncementId : std::runtime_error {
    explicit UnknownAnnouncementId(const std::string& id)
        : std::runtime_error("announcement id not in SIP registry: " + id) {}
};

struct MatchResult {
    std::string announcement_id;
    std::optional<sip::SipCode> sip_code;
    double offset_seconds = 0.0;
    int vote_count = 0;
    bool matched = false;
};

// Spectral peak constellation over the same STFT configuration the feature
// path uses (250-sample hop).
std::vector<Peak> extract_peaks(const audio::AudioBuffer& buffer,
                                const features::StftConfig& stft = {},
                                const PeakConfig& cfg = {});

std::vector<Landmark> make_landmarks(const std::vector<Peak>& peaks,
                                     const LandmarkConfig& cfg = {});

class FingerprintIndex {
public:
    explicit FingerprintIndex(sip::AnnouncementRegistry registry,
                              features::StftConfig stft = {}, PeakConfig peaks = {},
                              LandmarkConfig landmarks = {}, int min_votes = 5);

    // Inserts all landmark hashes of the clip. Re-adding an id replaces its
    // previous entries.
    void add(const audio::AudioBuffer& buffer, const std::string& announcement_id);

    MatchResult query(const audio::AudioBuffer& buffer) const;

    size_t hash_count() const;
    size_t announcement_count() const { return clips_.size(); }
    int min_votes() const { return min_votes_; }
    void set_min_votes(int v) { min_votes_ = v; }
    const sip::AnnouncementRegistry& registry() const { return registry_; }

    // Total queries served; used by the triage engine's gating check.
    uint64_t query_count() const;

    // Binary snapshot (*.fpidx): magic EMFP, version, config, postings, CRC32.
    std::vector<uint8_t> serialize() const;
    static FingerprintIndex deserialize(std::span<const uint8_t> bytes,
                                        sip::AnnouncementRegistry registry);
    void save(const std::string& path) const;
    static FingerprintIndex load(const std::string& path, sip::AnnouncementRegistry registry);

private:
    void rebuild_inverted();

    sip::AnnouncementRegistry registry_;
    features::StftConfig stft_;
    PeakConfig peak_cfg_;
    LandmarkConfig landmark_cfg_;
    int min_votes_;

    struct ClipHashes {
        std::string id;
        std::vector<std::pair<uint32_t, uint32_t>> entries;  // (hash, anchor_frame)
    };
    std::vector<ClipHashes> clips_;  // kept sorted by id

    struct Posting {
        uint32_t clip;   // index into clips_
        uint32_t frame;  // anchor frame in the indexed clip
    };
    std::unordered_map<uint32_t, std::vector<Posting>> inverted_;
    std::shared_ptr<std::atomic<uint64_t>> query_count_ =
        std::make_shared<std::atomic<uint64_t>>(0);
};

}  // namespace emt::fingerprint
