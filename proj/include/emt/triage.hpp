#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "emt/audio.hpp"
#include "emt/distill.hpp"
#include "emt/fingerprint.hpp"
#include "emt/gbdt.hpp"
#include "emt/sip.hpp"

namespace emt::triage {

struct CallEarlyMedia {
    std::string call_id;
    audio::AudioBuffer audio;
    double arrival_time = 0.0;
};

enum class DecisionKind : uint8_t {
    SipMapped,
    AnnouncementUnknown,
    NoAnnouncement,
    Skipped,
};

struct TriageDecision {
    DecisionKind kind;
    std::string call_id;
    std::optional<sip::SipCode> sip_code;           // SipMapped only
    std::string announcement_id;                    // SipMapped only
    std::optional<distill::ClassLabel> dominant;    // NoAnnouncement only
    std::string skip_reason;                        // Skipped only
};

std::string decision_kind_name(DecisionKind kind);

// Fixed-bucket latency histogram (ms).
struct TimingHistogram {
    // bucket i covers [i, i+1) ms; last bucket is overflow.
    static constexpr int kBuckets = 64;
    std::array<uint64_t, kBuckets> counts{};
    void record(double ms);
};

struct CostReport {
    size_t n_calls = 0;
    size_t n_segments = 0;
    double announcement_fraction = 0.0;
    double avg_ms_triaged = 0.0;
    double avg_ms_always_fingerprint = 0.0;
    double speedup_factor = 0.0;
    size_t n_fingerprint_queries = 0;  // gated queries during triage
    size_t n_announcement_dominant = 0;
    TimingHistogram classify_hist;
    TimingHistogram fingerprint_hist;

    std::string to_json() const;
};

struct ClassifyOutcome {
    std::vector<distill::ClassLabel> per_second;
    distill::ClassLabel dominant = distill::ClassLabel::Announcement;
    bool skipped = false;
    std::string skip_reason;
};

// Classifies each whole second; dominant class is the majority, any tie
// resolving to Announcement.
ClassifyOutcome classify_call(const CallEarlyMedia& media, const gbdt::GbtModel& model,
                              const features::FeatureExtractor& extractor);

// Fingerprint lookup runs only when the dominant class is Announcement.
TriageDecision triage(const CallEarlyMedia& media, const gbdt::GbtModel& model,
                      const fingerprint::FingerprintIndex& index,
                      const features::FeatureExtractor& extractor);

struct StreamResult {
    std::vector<TriageDecision> decisions;  // sorted by call_id
    CostReport report;
};

struct StreamOptions {
    int parallelism = 1;
    // When true, a second pass times a fingerprint query on every call to
    // measure the always-fingerprint baseline.
    bool measure_baseline = true;
};

StreamResult run_stream(const std::vector<CallEarlyMedia>& calls,
                        const gbdt::GbtModel& model,
                        const fingerprint::FingerprintIndex& index,
                        const StreamOptions& options = {});

struct InvalidFraction : std::runtime_error {
    explicit InvalidFraction(double p)
        : std::runtime_error("announcement fraction out of [0,1]: " + std::to_string(p)) {}
};

// Analytic cost model: triaged = C + p*F, baseline = F, speedup = F/(C+p*F).
double bench_cost_model(double classify_ms_per_4s, double fingerprint_ms_per_4s,
                        double announcement_fraction);

}  // namespace emt::triage
