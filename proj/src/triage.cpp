#include "emt/triage.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <thread>

#include "json.hpp"

namespace emt::triage {

using Clock = std::chrono::steady_clock;

namespace {
double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}
}  // namespace

std::string decision_kind_name(DecisionKind kind) {
    switch (kind) {
        case DecisionKind::SipMapped: return "sip_mapped";
        case DecisionKind::AnnouncementUnknown: return "announcement_unknown";
        case DecisionKind::NoAnnouncement: return "no_announcement";
        case DecisionKind::Skipped: return "skipped";
    }
    return "?";
}

void TimingHistogram::record(double ms) {
    int bucket = std::clamp(static_cast<int>(ms), 0, kBuckets - 1);
    counts[static_cast<size_t>(bucket)]++;
}

std::string CostReport::to_json() const {
    nlohmann::json j;
    j["version"] = 1;
    j["n_calls"] = n_calls;
    j["n_segments"] = n_segments;
    j["announcement_fraction"] = announcement_fraction;
    j["avg_ms_triaged"] = avg_ms_triaged;
    j["avg_ms_always_fingerprint"] = avg_ms_always_fingerprint;
    j["speedup_factor"] = speedup_factor;
    j["n_fingerprint_queries"] = n_fingerprint_queries;
    j["n_announcement_dominant"] = n_announcement_dominant;
    j["classify_hist_ms"] = classify_hist.counts;
    j["fingerprint_hist_ms"] = fingerprint_hist.counts;
    return j.dump(2);
}

ClassifyOutcome classify_call(const CallEarlyMedia& media, const gbdt::GbtModel& model,
                              const features::FeatureExtractor& extractor) {
    ClassifyOutcome out;
    if (media.audio.samples.size() < static_cast<size_t>(audio::kSamplesPerSecond)) {
        out.skipped = true;
        out.skip_reason = "too_short";
        return out;
    }
    try {
        auto segments = audio::segment_seconds(media.audio, media.call_id);
        std::array<int, distill::kNumClasses> votes{};
        for (const auto& seg : segments) {
            auto feat = extractor.extract(seg, model.feature_mode);
            auto label = model.predict_class(features::flatten(feat));
            out.per_second.push_back(label);
            votes[static_cast<size_t>(label)]++;
        }
        int best = 0;
        bool tie = false;
        for (int c = 1; c < distill::kNumClasses; ++c) {
            if (votes[static_cast<size_t>(c)] > votes[static_cast<size_t>(best)]) {
                best = c;
                tie = false;
            } else if (votes[static_cast<size_t>(c)] == votes[static_cast<size_t>(best)]) {
                tie = true;
            }
        }
        // Ties resolve to Announcement: a spurious fingerprint query is cheap,
        // a missed announcement loses the failure diagnosis.
        out.dominant = tie ? distill::ClassLabel::Announcement
                           : static_cast<distill::ClassLabel>(best);
    } catch (const std::exception& e) {
        out.skipped = true;
        out.skip_reason = e.what();
    }
    return out;
}

TriageDecision triage(const CallEarlyMedia& media, const gbdt::GbtModel& model,
                      const fingerprint::FingerprintIndex& index,
                      const features::FeatureExtractor& extractor) {
    auto outcome = classify_call(media, model, extractor);
    TriageDecision d;
    d.call_id = media.call_id;
    if (outcome.skipped) {
        d.kind = DecisionKind::Skipped;
        d.skip_reason = outcome.skip_reason;
        return d;
    }
    if (outcome.dominant != distill::ClassLabel::Announcement) {
        d.kind = DecisionKind::NoAnnouncement;
        d.dominant = outcome.dominant;
        return d;
    }
    auto match = index.query(media.audio);
    if (match.matched) {
        d.kind = DecisionKind::SipMapped;
        d.sip_code = match.sip_code;
        d.announcement_id = match.announcement_id;
    } else {
        d.kind = DecisionKind::AnnouncementUnknown;
    }
    return d;
}

StreamResult run_stream(const std::vector<CallEarlyMedia>& calls,
                        const gbdt::GbtModel& model,
                        const fingerprint::FingerprintIndex& index,
                        const StreamOptions& options) {
    const int workers = std::max(1, options.parallelism);
    features::FeatureExtractor extractor;

    struct PerCall {
        TriageDecision decision;
        double classify_ms = 0.0;
        double fingerprint_ms = 0.0;
        double baseline_fp_ms = 0.0;
        bool announcement_dominant = false;
        size_t n_segments = 0;
    };
    std::vector<PerCall> per_call(calls.size());

    uint64_t queries_before = index.query_count();

    auto run_parallel = [&](auto&& fn) {
        std::atomic<size_t> next{0};
        auto worker = [&] {
            for (;;) {
                size_t i = next.fetch_add(1);
                if (i >= calls.size()) break;
                fn(i);
            }
        };
        std::vector<std::thread> pool;
        for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
        worker();
        for (auto& t : pool) t.join();
    };

    // Triage pass: classify every call, fingerprint only announcements.
    run_parallel([&](size_t i) {
        const auto& call = calls[i];
        PerCall& pc = per_call[i];

        auto t0 = Clock::now();
        auto outcome = classify_call(call, model, extractor);
        pc.classify_ms = ms_since(t0);
        pc.n_segments = outcome.per_second.size();

        TriageDecision d;
        d.call_id = call.call_id;
        if (outcome.skipped) {
            d.kind = DecisionKind::Skipped;
            d.skip_reason = outcome.skip_reason;
        } else if (outcome.dominant != distill::ClassLabel::Announcement) {
            d.kind = DecisionKind::NoAnnouncement;
            d.dominant = outcome.dominant;
        } else {
            pc.announcement_dominant = true;
            auto t1 = Clock::now();
            auto match = index.query(call.audio);
            pc.fingerprint_ms = ms_since(t1);
            if (match.matched) {
                d.kind = DecisionKind::SipMapped;
                d.sip_code = match.sip_code;
                d.announcement_id = match.announcement_id;
            } else {
                d.kind = DecisionKind::AnnouncementUnknown;
            }
        }
        pc.decision = std::move(d);
    });

    uint64_t gated_queries = index.query_count() - queries_before;

    // Baseline pass: what an always-fingerprint deployment would pay.
    if (options.measure_baseline) {
        run_parallel([&](size_t i) {
            if (calls[i].audio.samples.size() < static_cast<size_t>(audio::kSamplesPerSecond))
                return;
            auto t0 = Clock::now();
            (void)index.query(calls[i].audio);
            per_call[i].baseline_fp_ms = ms_since(t0);
        });
    }

    StreamResult result;
    CostReport& rep = result.report;
    rep.n_calls = calls.size();
    double triaged_total = 0.0, baseline_total = 0.0;
    for (const auto& pc : per_call) {
        rep.n_segments += pc.n_segments;
        if (pc.announcement_dominant) rep.n_announcement_dominant++;
        triaged_total += pc.classify_ms + pc.fingerprint_ms;
        baseline_total += pc.baseline_fp_ms;
        rep.classify_hist.record(pc.classify_ms);
        if (pc.announcement_dominant) rep.fingerprint_hist.record(pc.fingerprint_ms);
    }
    rep.n_fingerprint_queries = static_cast<size_t>(gated_queries);
    if (!calls.empty()) {
        rep.announcement_fraction =
            static_cast<double>(rep.n_announcement_dominant) / calls.size();
        rep.avg_ms_triaged = triaged_total / static_cast<double>(calls.size());
        rep.avg_ms_always_fingerprint = baseline_total / static_cast<double>(calls.size());
        if (rep.avg_ms_triaged > 0.0)
            rep.speedup_factor = rep.avg_ms_always_fingerprint / rep.avg_ms_triaged;
    }

    result.decisions.reserve(per_call.size());
    for (auto& pc : per_call) result.decisions.push_back(std::move(pc.decision));
    std::sort(result.decisions.begin(), result.decisions.end(),
              [](const TriageDecision& a, const TriageDecision& b) {
                  return a.call_id < b.call_id;
              });
    return result;
}

double bench_cost_model(double classify_ms_per_4s, double fingerprint_ms_per_4s,
                        double announcement_fraction) {
    if (announcement_fraction < 0.0 || announcement_fraction > 1.0)
        throw InvalidFraction(announcement_fraction);
    if (classify_ms_per_4s <= 0.0 || fingerprint_ms_per_4s <= 0.0)
        throw std::invalid_argument("stage costs must be positive");
    double triaged = classify_ms_per_4s + announcement_fraction * fingerprint_ms_per_4s;
    return fingerprint_ms_per_4s / triaged;
}

}  // namespace emt::triage
