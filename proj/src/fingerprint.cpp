#include "emt/fingerprint.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "emt/binio.hpp"
#include "emt/fft.hpp"

namespace emt::fingerprint {

uint32_t pack_hash(int anchor_band, int target_band, int dframe) {
    return (static_cast<uint32_t>(anchor_band & 0x1FF) << 23) |
           (static_cast<uint32_t>(target_band & 0x1FF) << 14) |
           (static_cast<uint32_t>(dframe & 0xFF) << 6);
}

UnpackedHash unpack_hash(uint32_t hash) {
    return {static_cast<int>((hash >> 23) & 0x1FF), static_cast<int>((hash >> 14) & 0x1FF),
            static_cast<int>((hash >> 6) & 0xFF)};
}

std::vector<Peak> extract_peaks(const audio::AudioBuffer& buffer,
                                const features::StftConfig& stft, const PeakConfig& cfg) {
    if (buffer.samples.size() < static_cast<size_t>(buffer.sample_rate)) throw TooShort{};

    int n_frames = static_cast<int>(
        (buffer.samples.size() - static_cast<size_t>(stft.frame_length)) / stft.hop_length + 1);
    // Band field is 9 bits; stay within bins 0..511 (the Nyquist bin is dropped).
    int n_bands = std::min(stft.fft_size / 2, 512);

    dsp::FftPlan plan(static_cast<size_t>(stft.fft_size));
    auto window = dsp::hann_window(static_cast<size_t>(stft.frame_length));

    std::vector<float> logmag(static_cast<size_t>(n_frames) * n_bands);
    std::vector<float> frame(static_cast<size_t>(stft.frame_length));
    std::vector<float> power(static_cast<size_t>(stft.fft_size / 2 + 1));
    std::vector<std::complex<float>> scratch(static_cast<size_t>(stft.fft_size));
    std::vector<float> frame_threshold(static_cast<size_t>(n_frames));

    for (int f = 0; f < n_frames; ++f) {
        const float* src = buffer.samples.data() + static_cast<size_t>(f) * stft.hop_length;
        for (int i = 0; i < stft.frame_length; ++i) frame[i] = src[i] * window[i];
        plan.real_power_spectrum(frame.data(), frame.size(), power.data(), scratch.data());
        float* row = logmag.data() + static_cast<size_t>(f) * n_bands;
        double sum = 0.0, sum2 = 0.0;
        for (int b = 0; b < n_bands; ++b) {
            row[b] = std::log(power[b] + 1e-10f);
            sum += row[b];
            sum2 += static_cast<double>(row[b]) * row[b];
        }
        double mean = sum / n_bands;
        double var = std::max(sum2 / n_bands - mean * mean, 0.0);
        frame_threshold[f] = static_cast<float>(mean + cfg.threshold_sigma * std::sqrt(var));
    }

    const int hf = cfg.neighborhood_frames / 2;
    const int hb = cfg.neighborhood_bins / 2;
    std::vector<Peak> candidates;
    for (int f = 0; f < n_frames; ++f) {
        const float* row = logmag.data() + static_cast<size_t>(f) * n_bands;
        for (int b = 0; b < n_bands; ++b) {
            float v = row[b];
            if (v <= frame_threshold[f]) continue;
            bool is_max = true;
            for (int df = -hf; df <= hf && is_max; ++df) {
                int nf = f + df;
                if (nf < 0 || nf >= n_frames) continue;
                const float* nrow = logmag.data() + static_cast<size_t>(nf) * n_bands;
                for (int db = -hb; db <= hb; ++db) {
                    int nb = b + db;
                    if (nb < 0 || nb >= n_bands || (df == 0 && db == 0)) continue;
                    if (nrow[nb] >= v) {
                        is_max = false;
                        break;
                    }
                }
            }
            if (is_max) candidates.push_back({f, b, v});
        }
    }

    // Density cap: keep the strongest peaks per second of audio.
    const double frames_per_second =
        static_cast<double>(buffer.sample_rate) / stft.hop_length;
    std::vector<Peak> out;
    size_t n_seconds = buffer.samples.size() / static_cast<size_t>(buffer.sample_rate);
    for (size_t s = 0; s <= n_seconds; ++s) {
        int lo = static_cast<int>(s * frames_per_second);
        int hi = static_cast<int>((s + 1) * frames_per_second);
        std::vector<Peak> in_second;
        for (const auto& p : candidates)
            if (p.frame >= lo && p.frame < hi) in_second.push_back(p);
        std::sort(in_second.begin(), in_second.end(), [](const Peak& a, const Peak& b) {
            if (a.magnitude != b.magnitude) return a.magnitude > b.magnitude;
            if (a.frame != b.frame) return a.frame < b.frame;
            return a.band < b.band;
        });
        if (static_cast<int>(in_second.size()) > cfg.max_peaks_per_second)
            in_second.resize(static_cast<size_t>(cfg.max_peaks_per_second));
        out.insert(out.end(), in_second.begin(), in_second.end());
    }
    std::sort(out.begin(), out.end(), [](const Peak& a, const Peak& b) {
        if (a.frame != b.frame) return a.frame < b.frame;
        return a.band < b.band;
    });
    return out;
}

std::vector<Landmark> make_landmarks(const std::vector<Peak>& peaks,
                                     const LandmarkConfig& cfg) {
    std::vector<Landmark> out;
    for (size_t i = 0; i < peaks.size(); ++i) {
        int paired = 0;
        for (size_t j = i + 1; j < peaks.size() && paired < cfg.fanout; ++j) {
            int dframe = peaks[j].frame - peaks[i].frame;
            if (dframe <= 0) continue;
            if (dframe > cfg.max_dframe) break;  // peaks sorted by frame
            if (std::abs(peaks[j].band - peaks[i].band) > cfg.max_dband) continue;
            out.push_back({peaks[i], peaks[j]});
            ++paired;
        }
    }
    return out;
}

FingerprintIndex::FingerprintIndex(sip::AnnouncementRegistry registry,
                                   features::StftConfig stft, PeakConfig peaks,
                                   LandmarkConfig landmarks, int min_votes)
    : registry_(std::move(registry)),
      stft_(stft),
      peak_cfg_(peaks),
      landmark_cfg_(landmarks),
      min_votes_(min_votes) {}

void FingerprintIndex::add(const audio::AudioBuffer& buffer,
                           const std::string& announcement_id) {
    if (!registry_.contains(announcement_id)) throw UnknownAnnouncementId(announcement_id);
    auto peaks = extract_peaks(buffer, stft_, peak_cfg_);
    auto landmarks = make_landmarks(peaks, landmark_cfg_);

    ClipHashes clip;
    clip.id = announcement_id;
    clip.entries.reserve(landmarks.size());
    for (const auto& lm : landmarks)
        clip.entries.emplace_back(
            pack_hash(lm.anchor.band, lm.target.band, lm.target.frame - lm.anchor.frame),
            static_cast<uint32_t>(lm.anchor.frame));

    auto it = std::lower_bound(clips_.begin(), clips_.end(), announcement_id,
                               [](const ClipHashes& c, const std::string& id) {
                                   return c.id < id;
                               });
    if (it == clips_.end()) {
        // Appending keeps existing clip indices valid: extend the inverted
        // map in place instead of rebuilding (ids often arrive sorted).
        clips_.push_back(std::move(clip));
        uint32_t idx = static_cast<uint32_t>(clips_.size() - 1);
        for (const auto& [hash, frame] : clips_.back().entries)
            inverted_[hash].push_back({idx, frame});
        return;
    }
    if (it->id == announcement_id)
        *it = std::move(clip);  // re-add replaces
    else
        clips_.insert(it, std::move(clip));
    rebuild_inverted();
}

void FingerprintIndex::rebuild_inverted() {
    inverted_.clear();
    for (size_t c = 0; c < clips_.size(); ++c)
        for (const auto& [hash, frame] : clips_[c].entries)
            inverted_[hash].push_back({static_cast<uint32_t>(c), frame});
}

size_t FingerprintIndex::hash_count() const {
    size_t n = 0;
    for (const auto& c : clips_) n += c.entries.size();
    return n;
}

uint64_t FingerprintIndex::query_count() const { return query_count_->load(); }

MatchResult FingerprintIndex::query(const audio::AudioBuffer& buffer) const {
    if (buffer.samples.size() < static_cast<size_t>(buffer.sample_rate)) throw TooShort{};
    query_count_->fetch_add(1, std::memory_order_relaxed);

    auto peaks = extract_peaks(buffer, stft_, peak_cfg_);
    auto landmarks = make_landmarks(peaks, landmark_cfg_);

    // Collect raw (clip, offset) votes, offset in frames.
    std::unordered_map<uint32_t, std::vector<int32_t>> votes_by_clip;
    for (const auto& lm : landmarks) {
        uint32_t h =
            pack_hash(lm.anchor.band, lm.target.band, lm.target.frame - lm.anchor.frame);
        auto it = inverted_.find(h);
        if (it == inverted_.end()) continue;
        for (const auto& p : it->second)
            votes_by_clip[p.clip].push_back(static_cast<int32_t>(p.frame) - lm.anchor.frame);
    }

    // Per clip: best offset bucket, offsets within +/-2 frames voting together.
    MatchResult best;
    best.vote_count = 0;
    for (auto& [clip_idx, offsets] : votes_by_clip) {
        std::sort(offsets.begin(), offsets.end());
        int best_votes = 0;
        int32_t best_offset = 0;
        size_t lo = 0;
        for (size_t hi = 0; hi < offsets.size(); ++hi) {
            while (offsets[hi] - offsets[lo] > 4) ++lo;
            int count = static_cast<int>(hi - lo + 1);
            if (count > best_votes) {
                best_votes = count;
                best_offset = offsets[(lo + hi) / 2];
            }
        }
        const std::string& id = clips_[clip_idx].id;
        bool better = best_votes > best.vote_count ||
                      (best_votes == best.vote_count && !best.announcement_id.empty() &&
                       id < best.announcement_id);
        if (better) {
            best.vote_count = best_votes;
            best.announcement_id = id;
            best.offset_seconds =
                static_cast<double>(best_offset) * stft_.hop_length / buffer.sample_rate;
        }
    }

    best.matched = best.vote_count >= min_votes_;
    if (best.matched)
        best.sip_code = registry_.lookup(best.announcement_id);
    else
        best.announcement_id.clear();
    return best;
}

namespace {
constexpr char kMagic[4] = {'E', 'M', 'F', 'P'};
constexpr uint16_t kIndexVersion = 1;
}  // namespace

std::vector<uint8_t> FingerprintIndex::serialize() const {
    ByteWriter w;
    w.bytes(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(kMagic), 4));
    w.u16(kIndexVersion);
    w.i32(stft_.frame_length);
    w.i32(stft_.hop_length);
    w.i32(stft_.fft_size);
    w.i32(peak_cfg_.neighborhood_frames);
    w.i32(peak_cfg_.neighborhood_bins);
    w.f64(peak_cfg_.threshold_sigma);
    w.i32(peak_cfg_.max_peaks_per_second);
    w.i32(landmark_cfg_.max_dframe);
    w.i32(landmark_cfg_.max_dband);
    w.i32(landmark_cfg_.fanout);
    w.i32(min_votes_);
    w.u32(static_cast<uint32_t>(clips_.size()));
    for (const auto& clip : clips_) {
        w.str(clip.id);
        w.u32(static_cast<uint32_t>(clip.entries.size()));
        for (const auto& [hash, frame] : clip.entries) {
            w.u32(hash);
            w.u32(frame);
        }
    }
    w.finish_with_crc();
    return w.take();
}

FingerprintIndex FingerprintIndex::deserialize(std::span<const uint8_t> bytes,
                                               sip::AnnouncementRegistry registry) {
    ByteReader r(bytes);
    r.check_crc();
    char magic[4];
    for (auto& c : magic) c = static_cast<char>(r.u8());
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("not a fingerprint index file (bad magic)");
    uint16_t version = r.u16();
    if (version != kIndexVersion) throw VersionMismatch(version, kIndexVersion);

    features::StftConfig stft;
    stft.frame_length = r.i32();
    stft.hop_length = r.i32();
    stft.fft_size = r.i32();
    PeakConfig pc;
    pc.neighborhood_frames = r.i32();
    pc.neighborhood_bins = r.i32();
    pc.threshold_sigma = r.f64();
    pc.max_peaks_per_second = r.i32();
    LandmarkConfig lc;
    lc.max_dframe = r.i32();
    lc.max_dband = r.i32();
    lc.fanout = r.i32();
    int min_votes = r.i32();

    FingerprintIndex index(std::move(registry), stft, pc, lc, min_votes);
    uint32_t n_clips = r.u32();
    index.clips_.resize(n_clips);
    for (auto& clip : index.clips_) {
        clip.id = r.str();
        if (!index.registry_.contains(clip.id)) throw UnknownAnnouncementId(clip.id);
        clip.entries.resize(r.u32());
        for (auto& [hash, frame] : clip.entries) {
            hash = r.u32();
            frame = r.u32();
        }
    }
    index.rebuild_inverted();
    return index;
}

void FingerprintIndex::save(const std::string& path) const {
    auto bytes = serialize();
    write_file(path, bytes);
}

FingerprintIndex FingerprintIndex::load(const std::string& path,
                                        sip::AnnouncementRegistry registry) {
    auto bytes = read_file(path);
    return deserialize(bytes, std::move(registry));
}

}  // namespace emt::fingerprint
