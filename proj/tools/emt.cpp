// emt: early-media triage pipeline CLI.
//
// Subcommands: build-dataset, train, eval, fingerprint add|query|snapshot,
// triage run, bench, features dump. Set EMT_LOG=debug|info|error for log
// verbosity. All machine-readable output goes through --json.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "emt/audio.hpp"
#include "emt/binio.hpp"
#include "emt/dataset.hpp"
#include "emt/distill.hpp"
#include "emt/features.hpp"
#include "emt/fingerprint.hpp"
#include "emt/gbdt.hpp"
#include "emt/sip.hpp"
#include "emt/synth.hpp"
#include "emt/triage.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

LogLevel log_level() {
    const char* env = std::getenv("EMT_LOG");
    if (!env) return LogLevel::Info;
    std::string v(env);
    if (v == "debug") return LogLevel::Debug;
    if (v == "error") return LogLevel::Error;
    return LogLevel::Info;
}

void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::Info) std::cerr << "[emt] " << msg << "\n";
}

void require_exists(const std::string& path) {
    if (!fs::exists(path)) throw std::runtime_error("input path does not exist: " + path);
}

emt::audio::AudioBuffer load_call_audio(const std::string& path, bool raw_pcm8k) {
    auto bytes = emt::read_file(path);
    if (raw_pcm8k) return emt::audio::decode_raw_pcm16_8k(bytes);
    return emt::audio::resample_to_8k(emt::audio::decode_wav(bytes));
}

int cmd_build_dataset(const std::vector<std::string>& labels, const std::string& audio_dir,
                      const std::string& map_path, const std::string& out_prefix,
                      const std::string& mode_name, uint64_t seed, int window_size) {
    for (const auto& l : labels) require_exists(l);
    require_exists(audio_dir);
    require_exists(map_path);

    emt::dataset::BuildConfig cfg;
    cfg.mode = emt::features::feature_mode_from_name(mode_name);
    cfg.seed = seed;
    cfg.smoothing.window_size = window_size;

    auto map = emt::distill::ClassAggregationMap::load_csv(map_path);
    auto result = emt::dataset::build_dataset_from_files(labels, audio_dir, map, cfg);

    emt::dataset::save(out_prefix + ".train.emds", result.train);
    emt::dataset::save(out_prefix + ".test.emds", result.test);
    std::ofstream manifest(out_prefix + ".manifest.json");
    manifest << emt::dataset::manifest_json(result, cfg) << "\n";
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
    log_info("wrote " + std::to_string(result.train.records.size()) + " train / " +
             std::to_string(result.test.records.size()) + " test segments");
    return 0;
}

int cmd_train(const std::string& dataset_path, const std::string& out_path,
              const emt::gbdt::GbtParams& params, bool emit_json) {
    require_exists(dataset_path);
    auto data = emt::dataset::load(dataset_path);
    emt::gbdt::TrainLog log;
    auto model = emt::gbdt::train(data, params, &log);
    if (log.single_class_dataset)
        std::cerr << "warning: dataset contains a single class; model is constant\n";
    emt::gbdt::save(out_path, model);
    if (emit_json) {
        json j;
        j["model"] = out_path;
        j["n_trees"] = model.trees.size();
        j["final_train_loss"] = log.train_loss.empty() ? 0.0 : log.train_loss.back();
        std::cout << j.dump(2) << "\n";
    } else {
        log_info("trained " + std::to_string(model.trees.size()) + " trees; final loss " +
                 std::to_string(log.train_loss.empty() ? 0.0 : log.train_loss.back()));
    }
    return 0;
}

int cmd_eval(const std::string& model_path, const std::string& dataset_path, bool emit_json) {
    require_exists(model_path);
    require_exists(dataset_path);
    auto model = emt::gbdt::load(model_path);
    auto data = emt::dataset::load(dataset_path);
    if (data.mode != model.feature_mode)
        throw std::runtime_error("feature mode mismatch: model is " +
                                 emt::features::feature_mode_name(model.feature_mode) +
                                 ", dataset is " +
                                 emt::features::feature_mode_name(data.mode));
    auto cm = emt::gbdt::confusion_matrix(model, data);

    json j;
    j["agreement"] = cm.agreement();
    for (int c = 0; c < emt::distill::kNumClasses; ++c) {
        auto name = emt::distill::class_name(static_cast<emt::distill::ClassLabel>(c));
        j["precision"][name] = cm.precision(c);
        j["recall"][name] = cm.recall(c);
        for (int r = 0; r < emt::distill::kNumClasses; ++r)
            j["confusion"][name].push_back(cm.counts[static_cast<size_t>(c)][static_cast<size_t>(r)]);
    }
    if (emit_json) {
        std::cout << j.dump(2) << "\n";
        return 0;
    }
    std::cout << "agreement: " << cm.agreement() * 100.0 << "%\n";
    std::cout << "rows = model prediction, cols = reference label\n";
    std::cout << "                ";
    for (int c = 0; c < emt::distill::kNumClasses; ++c)
        printf("%14s", emt::distill::class_name(static_cast<emt::distill::ClassLabel>(c)).c_str());
    std::cout << "\n";
    for (int p = 0; p < emt::distill::kNumClasses; ++p) {
        printf("%-16s", emt::distill::class_name(static_cast<emt::distill::ClassLabel>(p)).c_str());
        for (int r = 0; r < emt::distill::kNumClasses; ++r)
            printf("%14zu", cm.counts[static_cast<size_t>(p)][static_cast<size_t>(r)]);
        printf("   precision %.4f\n", cm.precision(p));
    }
    std::cout << "recall:         ";
    for (int c = 0; c < emt::distill::kNumClasses; ++c) printf("%14.4f", cm.recall(c));
    std::cout << "\n";
    return 0;
}

int cmd_features_dump(const std::string& wav_path, const std::string& mode_name,
                      int second, bool raw_pcm8k) {
    require_exists(wav_path);
    auto mode = emt::features::feature_mode_from_name(mode_name);
    auto buffer = load_call_audio(wav_path, raw_pcm8k);
    auto segments = emt::audio::segment_seconds(buffer, wav_path);
    if (second < 0 || static_cast<size_t>(second) >= segments.size())
        throw std::runtime_error("second index out of range; audio has " +
                                 std::to_string(segments.size()) + " whole seconds");
    emt::features::FeatureExtractor extractor;
    auto feat = extractor.extract(segments[static_cast<size_t>(second)], mode);
    for (int t = 0; t < feat.n_time; ++t) {
        for (int b = 0; b < feat.n_bands; ++b) {
            if (b) std::cout << ",";
            printf("%.9g", feat.at(t, b));
        }
        std::cout << "\n";
    }
    return 0;
}

int cmd_fingerprint_add(const std::string& registry_path, const std::string& index_path,
                        const std::string& id, const std::string& wav_path, int min_votes) {
    require_exists(registry_path);
    require_exists(wav_path);
    auto registry = emt::sip::AnnouncementRegistry::load_csv(registry_path);
    emt::fingerprint::FingerprintIndex index =
        fs::exists(index_path)
            ? emt::fingerprint::FingerprintIndex::load(index_path, std::move(registry))
            : emt::fingerprint::FingerprintIndex(std::move(registry), {}, {}, {}, min_votes);
    auto buffer = load_call_audio(wav_path, false);
    index.add(buffer, id);
    index.save(index_path);
    log_info("indexed " + id + "; " + std::to_string(index.hash_count()) + " hashes total");
    return 0;
}

int cmd_fingerprint_query(const std::string& registry_path, const std::string& index_path,
                          const std::string& wav_path, int min_votes, bool emit_json) {
    require_exists(registry_path);
    require_exists(index_path);
    require_exists(wav_path);
    auto registry = emt::sip::AnnouncementRegistry::load_csv(registry_path);
    auto index = emt::fingerprint::FingerprintIndex::load(index_path, std::move(registry));
    if (min_votes > 0) index.set_min_votes(min_votes);
    auto buffer = load_call_audio(wav_path, false);
    auto match = index.query(buffer);
    json j;
    j["matched"] = match.matched;
    j["vote_count"] = match.vote_count;
    if (match.matched) {
        j["announcement_id"] = match.announcement_id;
        j["offset_seconds"] = match.offset_seconds;
        if (match.sip_code) j["sip_code"] = match.sip_code->code();
    }
    if (emit_json)
        std::cout << j.dump(2) << "\n";
    else if (match.matched)
        std::cout << "match: " << match.announcement_id << " (sip "
                  << (match.sip_code ? match.sip_code->code() : 0) << ", offset "
                  << match.offset_seconds << " s, " << match.vote_count << " votes)\n";
    else
        std::cout << "no match (" << match.vote_count << " votes, need "
                  << index.min_votes() << ")\n";
    return 0;
}

int cmd_fingerprint_snapshot(const std::string& registry_path, const std::string& index_path,
                             const std::string& out_path) {
    require_exists(registry_path);
    require_exists(index_path);
    auto registry = emt::sip::AnnouncementRegistry::load_csv(registry_path);
    auto index = emt::fingerprint::FingerprintIndex::load(index_path, std::move(registry));
    index.save(out_path);
    log_info("snapshot: " + std::to_string(index.announcement_count()) + " announcements, " +
             std::to_string(index.hash_count()) + " hashes");
    return 0;
}

int cmd_triage_run(const std::string& model_path, const std::string& index_path,
                   const std::string& registry_path, const std::string& calls_dir,
                   int parallelism, const std::string& report_path, bool raw_pcm8k,
                   bool emit_json) {
    require_exists(model_path);
    require_exists(index_path);
    require_exists(registry_path);
    require_exists(calls_dir);

    auto model = emt::gbdt::load(model_path);
    auto registry = emt::sip::AnnouncementRegistry::load_csv(registry_path);
    auto index = emt::fingerprint::FingerprintIndex::load(index_path, std::move(registry));

    std::vector<emt::triage::CallEarlyMedia> calls;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(calls_dir))
        if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& p : files) {
        emt::triage::CallEarlyMedia call;
        call.call_id = p.stem().string();
        call.audio = load_call_audio(p.string(), raw_pcm8k);
        calls.push_back(std::move(call));
    }

    emt::triage::StreamOptions opts;
    opts.parallelism = parallelism;
    auto result = emt::triage::run_stream(calls, model, index, opts);

    if (!report_path.empty()) {
        std::ofstream rf(report_path);
        rf << result.report.to_json() << "\n";
    }
    json decisions = json::array();
    for (const auto& d : result.decisions) {
        json jd;
        jd["call_id"] = d.call_id;
        jd["decision"] = emt::triage::decision_kind_name(d.kind);
        if (d.sip_code) jd["sip_code"] = d.sip_code->code();
        if (!d.announcement_id.empty()) jd["announcement_id"] = d.announcement_id;
        if (d.dominant) jd["dominant_class"] = emt::distill::class_name(*d.dominant);
        if (!d.skip_reason.empty()) jd["skip_reason"] = d.skip_reason;
        decisions.push_back(jd);
    }
    if (emit_json) {
        json out;
        out["decisions"] = decisions;
        out["report"] = json::parse(result.report.to_json());
        std::cout << out.dump(2) << "\n";
    } else {
        for (const auto& d : decisions) std::cout << d.dump() << "\n";
        std::cout << "speedup_factor: " << result.report.speedup_factor << "\n";
    }
    return 0;
}

int cmd_bench(const std::string& model_path, int n_calls, double announcement_fraction,
              int index_clips, int clip_seconds, uint64_t seed, bool emit_json) {
    // Synthetic workload: registry + fingerprint DB + 4-second calls.
    log_info("building synthetic registry and fingerprint index (" +
             std::to_string(index_clips) + " clips x " + std::to_string(clip_seconds) + " s)");
    emt::sip::AnnouncementRegistry registry;
    std::vector<emt::audio::AudioBuffer> clips;
    for (int i = 0; i < index_clips; ++i) {
        std::string id = "ann-" + std::to_string(i);
        registry.insert({id, emt::sip::SipCode{480 + i % 20, ""}, "synthetic announcement"});
        clips.push_back(emt::synth::class_signal(emt::distill::ClassLabel::Announcement,
                                                 clip_seconds, seed * 1000003ULL + i));
    }
    emt::fingerprint::FingerprintIndex index(std::move(registry));
    for (int i = 0; i < index_clips; ++i) index.add(clips[static_cast<size_t>(i)], "ann-" + std::to_string(i));

    emt::gbdt::GbtModel model;
    if (!model_path.empty()) {
        require_exists(model_path);
        model = emt::gbdt::load(model_path);
    } else {
        log_info("no --model given; training a small synthetic model");
        emt::dataset::Dataset ds;
        emt::features::FeatureExtractor extractor;
        std::mt19937_64 rng(seed);
        for (int i = 0; i < 160; ++i) {
            auto label = static_cast<emt::distill::ClassLabel>(i % emt::distill::kNumClasses);
            auto sig = emt::synth::class_signal(label, 2.0, rng());
            for (auto& seg : emt::audio::segment_seconds(sig))
                ds.records.push_back(
                    {label, emt::features::flatten(
                                extractor.extract(seg, emt::features::FeatureMode::MelPower))});
        }
        emt::gbdt::GbtParams params;
        params.n_iterations = 20;
        params.min_samples_per_leaf = 5;
        model = emt::gbdt::train(ds, params);
    }

    log_info("generating " + std::to_string(n_calls) + " synthetic 4 s calls");
    std::vector<emt::triage::CallEarlyMedia> calls;
    std::mt19937_64 rng(seed ^ 0xBADC0FFEULL);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> clip_pick(0, std::max(0, index_clips - 1));
    std::uniform_int_distribution<int> other(1, emt::distill::kNumClasses - 1);
    for (int i = 0; i < n_calls; ++i) {
        emt::triage::CallEarlyMedia call;
        call.call_id = "call-" + std::to_string(i);
        if (unit(rng) < announcement_fraction && index_clips > 0) {
            // 4 s excerpt of an indexed announcement.
            const auto& clip = clips[static_cast<size_t>(clip_pick(rng))];
            size_t max_start = clip.samples.size() - 4 * emt::audio::kSamplesPerSecond;
            size_t start =
                (std::uniform_int_distribution<size_t>(0, max_start / 80)(rng)) * 80;
            call.audio.sample_rate = emt::audio::kPipelineRate;
            call.audio.samples.assign(
                clip.samples.begin() + static_cast<ptrdiff_t>(start),
                clip.samples.begin() +
                    static_cast<ptrdiff_t>(start + 4 * emt::audio::kSamplesPerSecond));
        } else {
            auto label = static_cast<emt::distill::ClassLabel>(other(rng));
            call.audio = emt::synth::class_signal(label, 4.0, rng());
        }
        calls.push_back(std::move(call));
    }

    emt::triage::StreamOptions opts;
    auto result = emt::triage::run_stream(calls, model, index, opts);
    const auto& rep = result.report;

    double measured_c = rep.avg_ms_triaged -
                        rep.announcement_fraction * rep.avg_ms_always_fingerprint;
    double predicted = emt::triage::bench_cost_model(
        std::max(measured_c, 1e-9), rep.avg_ms_always_fingerprint, rep.announcement_fraction);

    json j;
    j["n_calls"] = rep.n_calls;
    j["announcement_fraction"] = rep.announcement_fraction;
    j["measured_classify_ms_per_call"] = measured_c;
    j["measured_fingerprint_ms_per_call"] = rep.avg_ms_always_fingerprint;
    j["avg_ms_triaged"] = rep.avg_ms_triaged;
    j["avg_ms_always_fingerprint"] = rep.avg_ms_always_fingerprint;
    j["measured_speedup"] = rep.speedup_factor;
    j["predicted_speedup"] = predicted;
    if (emit_json) {
        std::cout << j.dump(2) << "\n";
    } else {
        printf("calls: %zu, announcement fraction p = %.3f\n", rep.n_calls,
               rep.announcement_fraction);
        printf("measured C (classify, ms/call):    %8.3f\n", measured_c);
        printf("measured F (fingerprint, ms/call): %8.3f\n", rep.avg_ms_always_fingerprint);
        printf("avg triaged:  %8.3f ms/call\n", rep.avg_ms_triaged);
        printf("avg baseline: %8.3f ms/call\n", rep.avg_ms_always_fingerprint);
        printf("measured speedup:  %6.3f\n", rep.speedup_factor);
        printf("predicted speedup: %6.3f   (analytic F / (C + p*F))\n", predicted);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"early-media triage: classify pre-answer call audio and map "
                 "announcements to SIP codes"};
    app.require_subcommand(1);

    // build-dataset
    auto* build = app.add_subcommand("build-dataset", "aggregate, smooth and segment teacher labels");
    std::vector<std::string> label_files;
    std::string audio_dir, map_path, out_prefix = "dataset", mode_name = "mel";
    uint64_t bd_seed = 42;
    int window_size = 301;
    build->add_option("--labels", label_files, "teacher label JSONL files")->required();
    build->add_option("--audio-dir", audio_dir, "directory of <recording_id>.wav")->required();
    build->add_option("--map", map_path, "teacher-class aggregation CSV")->required();
    build->add_option("--out-prefix", out_prefix, "output prefix for .train/.test/.manifest");
    build->add_option("--mode", mode_name, "feature mode: mel|mfcc");
    build->add_option("--seed", bd_seed, "split RNG seed");
    build->add_option("--window", window_size, "smoothing window size (odd)");

    // train
    auto* train = app.add_subcommand("train", "train the GBT classifier");
    std::string train_dataset, model_out = "model.emgb";
    emt::gbdt::GbtParams params;
    bool train_json = false;
    train->add_option("--dataset", train_dataset, "training dataset (.emds)")->required();
    train->add_option("--out", model_out, "output model path");
    train->add_option("--iterations", params.n_iterations, "boosting iterations");
    train->add_option("--learning-rate", params.learning_rate, "shrinkage");
    train->add_option("--max-leaves", params.max_leaves, "max leaves per tree");
    train->add_option("--min-samples-leaf", params.min_samples_per_leaf, "min samples per leaf");
    train->add_option("--bins", params.n_histogram_bins, "histogram bins");
    train->add_option("--seed", params.rng_seed, "RNG seed");
    train->add_flag("--json", train_json, "JSON output");

    // eval
    auto* eval = app.add_subcommand("eval", "confusion matrix and agreement on a dataset");
    std::string eval_model, eval_dataset;
    bool eval_json = false;
    eval->add_option("--model", eval_model, "model path")->required();
    eval->add_option("--dataset", eval_dataset, "dataset path")->required();
    eval->add_flag("--json", eval_json, "JSON output");

    // features dump
    auto* feats = app.add_subcommand("features", "feature utilities");
    auto* dump = feats->add_subcommand("dump", "emit the 29x24 feature matrix as CSV");
    std::string dump_wav, dump_mode = "mel";
    int dump_second = 0;
    bool dump_raw = false;
    dump->add_option("wav", dump_wav, "input audio")->required();
    dump->add_option("--mode", dump_mode, "mel|mfcc");
    dump->add_option("--second", dump_second, "which whole second to dump");
    dump->add_flag("--raw-pcm8k", dump_raw, "input is headerless PCM16LE at 8 kHz");

    // fingerprint
    auto* fp = app.add_subcommand("fingerprint", "announcement fingerprint index");
    std::string fp_registry, fp_index = "index.fpidx", fp_id, fp_wav, fp_out;
    int fp_min_votes = 5;
    bool fp_json = false;
    auto* fp_add = fp->add_subcommand("add", "index an announcement clip");
    fp_add->add_option("--registry", fp_registry, "announcement registry CSV")->required();
    fp_add->add_option("--index", fp_index, "index snapshot path (*.fpidx)");
    fp_add->add_option("--id", fp_id, "announcement id (must be in registry)")->required();
    fp_add->add_option("wav", fp_wav, "announcement audio")->required();
    auto* fp_query = fp->add_subcommand("query", "look up audio in the index");
    fp_query->add_option("--registry", fp_registry, "announcement registry CSV")->required();
    fp_query->add_option("--index", fp_index, "index snapshot path")->required();
    fp_query->add_option("--min-votes", fp_min_votes, "match threshold");
    fp_query->add_option("wav", fp_wav, "query audio")->required();
    fp_query->add_flag("--json", fp_json, "JSON output");
    auto* fp_snap = fp->add_subcommand("snapshot", "re-serialize an index snapshot");
    fp_snap->add_option("--registry", fp_registry, "announcement registry CSV")->required();
    fp_snap->add_option("--index", fp_index, "index snapshot path")->required();
    fp_snap->add_option("--out", fp_out, "output snapshot path")->required();

    // triage run
    auto* triage_cmd = app.add_subcommand("triage", "real-time triage pipeline");
    auto* triage_run = triage_cmd->add_subcommand("run", "triage a directory of calls");
    std::string tr_model, tr_index, tr_registry, tr_calls, tr_report;
    int tr_parallelism = 1;
    bool tr_raw = false, tr_json = false;
    triage_run->add_option("--model", tr_model, "GBT model")->required();
    triage_run->add_option("--index", tr_index, "fingerprint index")->required();
    triage_run->add_option("--registry", tr_registry, "announcement registry CSV")->required();
    triage_run->add_option("--calls", tr_calls, "directory of call audio files")->required();
    triage_run->add_option("--parallelism", tr_parallelism, "worker threads");
    triage_run->add_option("--report", tr_report, "write CostReport JSON here");
    triage_run->add_flag("--raw-pcm8k", tr_raw, "calls are headerless PCM16LE at 8 kHz");
    triage_run->add_flag("--json", tr_json, "JSON output");

    // bench
    auto* bench = app.add_subcommand("bench", "synthetic workload cost benchmark");
    std::string bench_model;
    int bench_calls = 1000, bench_clips = 100, bench_clip_seconds = 20;
    double bench_fraction = 0.25;
    uint64_t bench_seed = 42;
    bool bench_json = false;
    bench->add_option("--model", bench_model, "GBT model (trains a small one if omitted)");
    bench->add_option("--calls", bench_calls, "number of synthetic calls");
    bench->add_option("--announcement-fraction", bench_fraction, "fraction of announcement calls");
    bench->add_option("--index-clips", bench_clips, "announcements in the synthetic index");
    bench->add_option("--clip-seconds", bench_clip_seconds, "length of each indexed clip");
    bench->add_option("--seed", bench_seed, "workload RNG seed");
    bench->add_flag("--json", bench_json, "JSON output");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*build)
            return cmd_build_dataset(label_files, audio_dir, map_path, out_prefix, mode_name,
                                     bd_seed, window_size);
        if (*train) return cmd_train(train_dataset, model_out, params, train_json);
        if (*eval) return cmd_eval(eval_model, eval_dataset, eval_json);
        if (*dump) return cmd_features_dump(dump_wav, dump_mode, dump_second, dump_raw);
        if (*fp_add) return cmd_fingerprint_add(fp_registry, fp_index, fp_id, fp_wav, fp_min_votes);
        if (*fp_query)
            return cmd_fingerprint_query(fp_registry, fp_index, fp_wav, fp_min_votes, fp_json);
        if (*fp_snap) return cmd_fingerprint_snapshot(fp_registry, fp_index, fp_out);
        if (*triage_run)
            return cmd_triage_run(tr_model, tr_index, tr_registry, tr_calls, tr_parallelism,
                                  tr_report, tr_raw, tr_json);
        if (*bench)
            return cmd_bench(bench_model, bench_calls, bench_fraction, bench_clips,
                             bench_clip_seconds, bench_seed, bench_json);
        std::cerr << "no subcommand selected\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
