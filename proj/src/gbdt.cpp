#include "emt/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <queue>

#include "emt/binio.hpp"

namespace emt::gbdt {

void GbtParams::validate() const {
    if (n_iterations < 1) throw std::invalid_argument("n_iterations must be >= 1");
    if (max_leaves < 2 || max_leaves > 4096)
        throw std::invalid_argument("max_leaves must be in [2, 4096]");
    if (n_histogram_bins < 2 || n_histogram_bins > 256)
        throw std::invalid_argument("n_histogram_bins must be in [2, 256]");
    if (learning_rate <= 0.0) throw std::invalid_argument("learning_rate must be positive");
    if (min_samples_per_leaf < 1)
        throw std::invalid_argument("min_samples_per_leaf must be >= 1");
}

namespace {

void softmax_row(const double* scores, double* probs, int k) {
    double m = scores[0];
    for (int c = 1; c < k; ++c) m = std::max(m, scores[c]);
    double sum = 0.0;
    for (int c = 0; c < k; ++c) {
        probs[c] = std::exp(scores[c] - m);
        sum += probs[c];
    }
    for (int c = 0; c < k; ++c) probs[c] /= sum;
}

// Quantile bin boundaries for one feature column. Values <= boundary[b] fall
// in bin b; n_bins = boundaries.size() + 1.
std::vector<float> quantile_boundaries(std::vector<float> values, int max_bins) {
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    std::vector<float> bounds;
    if (values.size() <= 1) return bounds;
    if (static_cast<int>(values.size()) <= max_bins) {
        bounds.reserve(values.size() - 1);
        for (size_t i = 0; i + 1 < values.size(); ++i)
            bounds.push_back((values[i] + values[i + 1]) * 0.5f);
        return bounds;
    }
    // More distinct values than bins: cut at evenly spaced distinct-value
    // quantiles, deduplicated.
    for (int b = 1; b < max_bins; ++b) {
        size_t idx = values.size() * static_cast<size_t>(b) / static_cast<size_t>(max_bins);
        float cut = (values[idx - 1] + values[idx]) * 0.5f;
        if (bounds.empty() || cut > bounds.back()) bounds.push_back(cut);
    }
    return bounds;
}

uint8_t bin_of(const std::vector<float>& bounds, float v) {
    auto it = std::lower_bound(bounds.begin(), bounds.end(), v);
    return static_cast<uint8_t>(it - bounds.begin());
}

struct HistBin {
    double g = 0.0;
    double h = 0.0;
    uint32_t n = 0;
};

struct SplitInfo {
    double gain = 0.0;
    int feature = -1;
    int bin = -1;  // bins <= bin go left
    bool valid() const { return feature >= 0; }
};

struct NodeStats {
    double g = 0.0;
    double h = 0.0;
    size_t n = 0;
};

class TreeBuilder {
public:
    TreeBuilder(const std::vector<uint8_t>& binned, size_t n_features,
                const std::vector<std::vector<float>>& bounds, const GbtParams& params)
        : binned_(binned), n_features_(n_features), bounds_(bounds), params_(params) {}

    // Builds one regression tree on (grad, hess); leaf values carry the
    // learning rate.
    DecisionTree build(const std::vector<double>& grad, const std::vector<double>& hess) {
        size_t n = grad.size();
        indices_.resize(n);
        for (size_t i = 0; i < n; ++i) indices_[i] = static_cast<uint32_t>(i);

        DecisionTree tree;
        tree.nodes.reserve(static_cast<size_t>(2 * params_.max_leaves));

        struct Candidate {
            SplitInfo split;
            int node;        // index in tree.nodes
            size_t begin, end;  // index range in indices_
            NodeStats stats;
            bool operator<(const Candidate& o) const {
                if (split.gain != o.split.gain) return split.gain < o.split.gain;
                return node > o.node;  // deterministic order on equal gains
            }
        };

        NodeStats root_stats;
        for (size_t i = 0; i < n; ++i) {
            root_stats.g += grad[i];
            root_stats.h += hess[i];
        }
        root_stats.n = n;

        tree.nodes.push_back(make_leaf(root_stats));
        std::priority_queue<Candidate> queue;
        SplitInfo root_split = find_best_split(0, n, root_stats, grad, hess);
        if (root_split.valid()) queue.push({root_split, 0, 0, n, root_stats});

        int n_leaves = 1;
        while (!queue.empty() && n_leaves < params_.max_leaves) {
            Candidate cand = queue.top();
            queue.pop();

            size_t mid = partition(cand.begin, cand.end, cand.split);
            NodeStats left_stats{}, right_stats{};
            for (size_t i = cand.begin; i < mid; ++i) {
                left_stats.g += grad[indices_[i]];
                left_stats.h += hess[indices_[i]];
            }
            left_stats.n = mid - cand.begin;
            right_stats.g = cand.stats.g - left_stats.g;
            right_stats.h = cand.stats.h - left_stats.h;
            right_stats.n = cand.stats.n - left_stats.n;

            int left_idx = static_cast<int>(tree.nodes.size());
            tree.nodes.push_back(make_leaf(left_stats));
            int right_idx = static_cast<int>(tree.nodes.size());
            tree.nodes.push_back(make_leaf(right_stats));

            TreeNode& parent = tree.nodes[static_cast<size_t>(cand.node)];
            parent.is_leaf = false;
            parent.feature = static_cast<uint32_t>(cand.split.feature);
            parent.threshold = bounds_[static_cast<size_t>(cand.split.feature)]
                                      [static_cast<size_t>(cand.split.bin)];
            parent.left = left_idx;
            parent.right = right_idx;
            parent.value = 0.0;
            ++n_leaves;

            SplitInfo ls = find_best_split(cand.begin, mid, left_stats, grad, hess);
            if (ls.valid()) queue.push({ls, left_idx, cand.begin, mid, left_stats});
            SplitInfo rs = find_best_split(mid, cand.end, right_stats, grad, hess);
            if (rs.valid()) queue.push({rs, right_idx, mid, cand.end, right_stats});
        }
        return tree;
    }

private:
    TreeNode make_leaf(const NodeStats& s) const {
        TreeNode leaf;
        leaf.is_leaf = true;
        leaf.value = params_.learning_rate * (-s.g / (s.h + params_.lambda_l2));
        return leaf;
    }

    // Histogram over the node's samples, then the best gain over all
    // (feature, bin) cuts honoring min_samples_per_leaf.
    SplitInfo find_best_split(size_t begin, size_t end, const NodeStats& stats,
                              const std::vector<double>& grad,
                              const std::vector<double>& hess) {
        SplitInfo best;
        if (stats.n < 2 * static_cast<size_t>(params_.min_samples_per_leaf)) return best;

        size_t bins = static_cast<size_t>(params_.n_histogram_bins);
        hist_.assign(n_features_ * bins, HistBin{});
        for (size_t i = begin; i < end; ++i) {
            uint32_t idx = indices_[i];
            const uint8_t* row = binned_.data() + static_cast<size_t>(idx) * n_features_;
            double g = grad[idx], h = hess[idx];
            for (size_t f = 0; f < n_features_; ++f) {
                HistBin& hb = hist_[f * bins + row[f]];
                hb.g += g;
                hb.h += h;
                hb.n += 1;
            }
        }

        const double lambda = params_.lambda_l2;
        const double parent_obj = stats.g * stats.g / (stats.h + lambda);
        for (size_t f = 0; f < n_features_; ++f) {
            size_t n_cuts = bounds_[f].size();
            if (n_cuts == 0) continue;
            double gl = 0.0, hl = 0.0;
            size_t nl = 0;
            const HistBin* hb = hist_.data() + f * bins;
            for (size_t b = 0; b < n_cuts; ++b) {
                gl += hb[b].g;
                hl += hb[b].h;
                nl += hb[b].n;
                size_t nr = stats.n - nl;
                if (nl < static_cast<size_t>(params_.min_samples_per_leaf)) continue;
                if (nr < static_cast<size_t>(params_.min_samples_per_leaf)) break;
                double gr = stats.g - gl, hr = stats.h - hl;
                double gain =
                    gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent_obj;
                if (gain > best.gain + 1e-12) {
                    best.gain = gain;
                    best.feature = static_cast<int>(f);
                    best.bin = static_cast<int>(b);
                }
            }
        }
        return best;
    }

    // Stable partition of indices_[begin,end): samples with bin <= split.bin
    // move to the front. Returns the boundary.
    size_t partition(size_t begin, size_t end, const SplitInfo& split) {
        scratch_.clear();
        size_t write = begin;
        for (size_t i = begin; i < end; ++i) {
            uint32_t idx = indices_[i];
            uint8_t b = binned_[static_cast<size_t>(idx) * n_features_ +
                                static_cast<size_t>(split.feature)];
            if (b <= split.bin)
                indices_[write++] = idx;
            else
                scratch_.push_back(idx);
        }
        std::copy(scratch_.begin(), scratch_.end(), indices_.begin() + static_cast<ptrdiff_t>(write));
        return write;
    }

    const std::vector<uint8_t>& binned_;
    size_t n_features_;
    const std::vector<std::vector<float>>& bounds_;
    const GbtParams& params_;
    std::vector<uint32_t> indices_;
    std::vector<uint32_t> scratch_;
    std::vector<HistBin> hist_;
};

}  // namespace

GbtModel train(const dataset::Dataset& data, const GbtParams& params, TrainLog* log) {
    params.validate();
    if (data.records.empty()) throw EmptyDataset{};
    const size_t n = data.records.size();
    const size_t n_features = data.records[0].features.size();
    const int k = params.n_classes;

    for (size_t i = 0; i < n; ++i) {
        if (data.records[i].features.size() != n_features)
            throw WrongFeatureCount(data.records[i].features.size(), n_features);
        for (size_t f = 0; f < n_features; ++f)
            if (!std::isfinite(data.records[i].features[f])) throw NonFiniteFeature(i, f);
    }

    GbtModel model;
    model.params = params;
    model.feature_mode = data.mode;
    model.feature_count = static_cast<int>(n_features);

    // Class priors as base scores.
    std::vector<size_t> class_n(static_cast<size_t>(k), 0);
    for (const auto& r : data.records) class_n[static_cast<size_t>(r.label)]++;
    size_t present = 0;
    for (size_t c = 0; c < static_cast<size_t>(k); ++c)
        if (class_n[c] > 0) ++present;
    if (present == 1 && log) log->single_class_dataset = true;
    model.base_score.resize(static_cast<size_t>(k));
    for (size_t c = 0; c < static_cast<size_t>(k); ++c) {
        double prior = std::max(static_cast<double>(class_n[c]) / static_cast<double>(n), 1e-6);
        model.base_score[c] = std::log(prior);
    }

    // Quantile binning.
    model.bin_boundaries.resize(n_features);
    {
        std::vector<float> column(n);
        for (size_t f = 0; f < n_features; ++f) {
            for (size_t i = 0; i < n; ++i) column[i] = data.records[i].features[f];
            model.bin_boundaries[f] = quantile_boundaries(column, params.n_histogram_bins);
        }
    }
    std::vector<uint8_t> binned(n * n_features);
    for (size_t i = 0; i < n; ++i)
        for (size_t f = 0; f < n_features; ++f)
            binned[i * n_features + f] = bin_of(model.bin_boundaries[f],
                                                data.records[i].features[f]);

    std::vector<double> scores(n * static_cast<size_t>(k));
    for (size_t i = 0; i < n; ++i)
        for (size_t c = 0; c < static_cast<size_t>(k); ++c)
            scores[i * k + c] = model.base_score[c];

    std::vector<double> probs(static_cast<size_t>(k));
    std::vector<double> grad(n), hess(n);
    std::vector<std::vector<double>> all_probs(n, std::vector<double>(static_cast<size_t>(k)));

    TreeBuilder builder(binned, n_features, model.bin_boundaries, params);
    model.trees.reserve(static_cast<size_t>(params.n_iterations) * static_cast<size_t>(k));

    for (int iter = 0; iter < params.n_iterations; ++iter) {
        for (size_t i = 0; i < n; ++i)
            softmax_row(scores.data() + i * k, all_probs[i].data(), k);

        for (int c = 0; c < k; ++c) {
            for (size_t i = 0; i < n; ++i) {
                double p = all_probs[i][static_cast<size_t>(c)];
                double y = data.records[i].label == static_cast<distill::ClassLabel>(c) ? 1.0 : 0.0;
                grad[i] = p - y;
                hess[i] = std::max(p * (1.0 - p), 1e-16);
            }
            DecisionTree tree = builder.build(grad, hess);
            for (size_t i = 0; i < n; ++i)
                scores[i * k + c] += tree.eval(data.records[i].features.data());
            model.trees.push_back(std::move(tree));
        }

        if (log) {
            double loss = 0.0;
            for (size_t i = 0; i < n; ++i) {
                softmax_row(scores.data() + i * k, probs.data(), k);
                double p = probs[static_cast<size_t>(data.records[i].label)];
                loss -= std::log(std::max(p, 1e-300));
            }
            log->train_loss.push_back(loss / static_cast<double>(n));
        }
    }
    return model;
}

std::array<double, distill::kNumClasses> GbtModel::predict_proba(
    std::span<const float> x) const {
    if (static_cast<int>(x.size()) != feature_count)
        throw WrongFeatureCount(x.size(), static_cast<size_t>(feature_count));
    for (float v : x)
        if (!std::isfinite(v)) throw NonFiniteFeature(0, 0);
    const int k = params.n_classes;
    std::array<double, distill::kNumClasses> scores{};
    for (int c = 0; c < k; ++c) scores[static_cast<size_t>(c)] = base_score[static_cast<size_t>(c)];
    for (size_t t = 0; t < trees.size(); ++t)
        scores[t % static_cast<size_t>(k)] += trees[t].eval(x.data());
    std::array<double, distill::kNumClasses> probs{};
    softmax_row(scores.data(), probs.data(), k);
    return probs;
}

distill::ClassLabel GbtModel::predict_class(std::span<const float> x) const {
    auto probs = predict_proba(x);
    int best = 0;
    for (int c = 1; c < params.n_classes; ++c)
        if (probs[static_cast<size_t>(c)] > probs[static_cast<size_t>(best)]) best = c;
    return static_cast<distill::ClassLabel>(best);
}

namespace {
constexpr char kMagic[4] = {'E', 'M', 'G', 'B'};
constexpr uint16_t kModelVersion = 1;
}  // namespace

std::vector<uint8_t> serialize(const GbtModel& model) {
    ByteWriter w;
    w.bytes(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(kMagic), 4));
    w.u16(kModelVersion);
    w.i32(model.params.n_iterations);
    w.f64(model.params.learning_rate);
    w.i32(model.params.max_leaves);
    w.i32(model.params.min_samples_per_leaf);
    w.i32(model.params.n_histogram_bins);
    w.i32(model.params.n_classes);
    w.u64(model.params.rng_seed);
    w.f64(model.params.lambda_l2);
    w.u8(static_cast<uint8_t>(model.feature_mode));
    w.i32(model.feature_count);
    // Class encoding table.
    for (int c = 0; c < model.params.n_classes; ++c)
        w.str(distill::class_name(static_cast<distill::ClassLabel>(c)));
    for (double b : model.base_score) w.f64(b);
    w.u32(static_cast<uint32_t>(model.bin_boundaries.size()));
    for (const auto& bounds : model.bin_boundaries) {
        w.u32(static_cast<uint32_t>(bounds.size()));
        for (float v : bounds) w.f32(v);
    }
    w.u32(static_cast<uint32_t>(model.trees.size()));
    for (const auto& tree : model.trees) {
        w.u32(static_cast<uint32_t>(tree.nodes.size()));
        for (const auto& n : tree.nodes) {
            w.u8(n.is_leaf ? 1 : 0);
            w.i32(n.left);
            w.i32(n.right);
            w.u32(n.feature);
            w.f32(n.threshold);
            w.f64(n.value);
        }
    }
    w.finish_with_crc();
    return w.take();
}

GbtModel deserialize(std::span<const uint8_t> bytes) {
    ByteReader r(bytes);
    r.check_crc();
    char magic[4];
    for (auto& c : magic) c = static_cast<char>(r.u8());
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("not a model file (bad magic)");
    uint16_t version = r.u16();
    if (version != kModelVersion) throw VersionMismatch(version, kModelVersion);

    GbtModel m;
    m.format_version = version;
    m.params.n_iterations = r.i32();
    m.params.learning_rate = r.f64();
    m.params.max_leaves = r.i32();
    m.params.min_samples_per_leaf = r.i32();
    m.params.n_histogram_bins = r.i32();
    m.params.n_classes = r.i32();
    m.params.rng_seed = r.u64();
    m.params.lambda_l2 = r.f64();
    m.feature_mode = static_cast<features::FeatureMode>(r.u8());
    m.feature_count = r.i32();
    for (int c = 0; c < m.params.n_classes; ++c) {
        std::string name = r.str();
        auto expect = distill::class_name(static_cast<distill::ClassLabel>(c));
        if (name != expect)
            throw std::runtime_error("unexpected class encoding: " + name);
    }
    m.base_score.resize(static_cast<size_t>(m.params.n_classes));
    for (auto& b : m.base_score) b = r.f64();
    m.bin_boundaries.resize(r.u32());
    for (auto& bounds : m.bin_boundaries) {
        bounds.resize(r.u32());
        for (auto& v : bounds) v = r.f32();
    }
    m.trees.resize(r.u32());
    for (auto& tree : m.trees) {
        tree.nodes.resize(r.u32());
        for (auto& n : tree.nodes) {
            n.is_leaf = r.u8() != 0;
            n.left = r.i32();
            n.right = r.i32();
            n.feature = r.u32();
            n.threshold = r.f32();
            n.value = r.f64();
        }
    }
    return m;
}

void save(const std::string& path, const GbtModel& model) {
    auto bytes = serialize(model);
    write_file(path, bytes);
}

GbtModel load(const std::string& path) {
    auto bytes = read_file(path);
    return deserialize(bytes);
}

double ConfusionMatrix::agreement() const {
    if (total == 0) return 0.0;
    size_t diag = 0;
    for (int c = 0; c < distill::kNumClasses; ++c)
        diag += counts[static_cast<size_t>(c)][static_cast<size_t>(c)];
    return static_cast<double>(diag) / static_cast<double>(total);
}

double ConfusionMatrix::precision(int cls) const {
    size_t row = 0;
    for (int c = 0; c < distill::kNumClasses; ++c)
        row += counts[static_cast<size_t>(cls)][static_cast<size_t>(c)];
    if (row == 0) return 0.0;
    return static_cast<double>(counts[static_cast<size_t>(cls)][static_cast<size_t>(cls)]) /
           static_cast<double>(row);
}

double ConfusionMatrix::recall(int cls) const {
    size_t col = 0;
    for (int c = 0; c < distill::kNumClasses; ++c)
        col += counts[static_cast<size_t>(c)][static_cast<size_t>(cls)];
    if (col == 0) return 0.0;
    return static_cast<double>(counts[static_cast<size_t>(cls)][static_cast<size_t>(cls)]) /
           static_cast<double>(col);
}

ConfusionMatrix confusion_matrix(const GbtModel& model, const dataset::Dataset& data) {
    ConfusionMatrix cm;
    for (const auto& rec : data.records) {
        auto pred = model.predict_class(rec.features);
        cm.counts[static_cast<size_t>(pred)][static_cast<size_t>(rec.label)]++;
        cm.total++;
    }
    return cm;
}

}  // namespace emt::gbdt
