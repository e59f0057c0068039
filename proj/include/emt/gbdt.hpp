#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "emt/dataset.hpp"
#include "emt/distill.hpp"
#include "emt/features.hpp"

namespace emt::gbdt {

struct GbtParams {
    int n_iterations = 100;
    double learning_rate = 0.1;
    int max_leaves = 31;
    int min_samples_per_leaf = 20;
    int n_histogram_bins = 256;
    int n_classes = distill::kNumClasses;
    uint64_t rng_seed = 42;
    double lambda_l2 = 1.0;

    void validate() const;
};

// Flat node array, root at index 0. Internal nodes route x[feature] <=
// threshold to left. Leaf values carry the learning rate already applied.
struct TreeNode {
    int32_t left = -1;
    int32_t right = -1;
    uint32_t feature = 0;
    float threshold = 0.0f;
    double value = 0.0;
    bool is_leaf = true;
};

struct DecisionTree {
    std::vector<TreeNode> nodes;

    double eval(const float* x) const {
        int32_t i = 0;
        while (!nodes[static_cast<size_t>(i)].is_leaf) {
            const TreeNode& n = nodes[static_cast<size_t>(i)];
            i = x[n.feature] <= n.threshold ? n.left : n.right;
        }
        return nodes[static_cast<size_t>(i)].value;
    }
};

struct GbtModel {
    GbtParams params;
    features::FeatureMode feature_mode = features::FeatureMode::MelPower;
    int feature_count = features::kFeatureCount;
    std::vector<double> base_score;          // one per class
    std::vector<DecisionTree> trees;         // iteration-major, class-minor
    std::vector<std::vector<float>> bin_boundaries;  // per feature, ascending
    uint16_t format_version = 1;

    std::array<double, distill::kNumClasses> predict_proba(std::span<const float> x) const;
    distill::ClassLabel predict_class(std::span<const float> x) const;
};

struct EmptyDataset : std::runtime_error {
    EmptyDataset() : std::runtime_error("training dataset is empty") {}
};
struct NonFiniteFeature : std::runtime_error {
    explicit NonFiniteFeature(size_t row, size_t col)
        : std::runtime_error("non-finite feature at record " + std::to_string(row) +
                             ", feature " + std::to_string(col)) {}
};
struct WrongFeatureCount : std::runtime_error {
    explicit WrongFeatureCount(size_t got, size_t want)
        : std::runtime_error("expected " + std::to_string(want) + " features, got " +
                             std::to_string(got)) {}
};

struct TrainLog {
    std::vector<double> train_loss;  // multiclass log-loss after each iteration
    bool single_class_dataset = false;
};

// One-vs-rest softmax boosting with histogram split search and leaf-wise
// growth. Deterministic for fixed inputs and params.
GbtModel train(const dataset::Dataset& data, const GbtParams& params,
               TrainLog* log = nullptr);

// Versioned binary container: magic EMGB, version u16, params block,
// per-tree node arrays, CRC32 trailer.
std::vector<uint8_t> serialize(const GbtModel& model);
GbtModel deserialize(std::span<const uint8_t> bytes);
void save(const std::string& path, const GbtModel& model);
GbtModel load(const std::string& path);

struct ConfusionMatrix {
    // counts[pred][ref], predictions in rows, reference labels in columns.
    std::array<std::array<size_t, distill::kNumClasses>, distill::kNumClasses> counts{};
    size_t total = 0;

    double agreement() const;
    double precision(int cls) const;  // diag / row sum
    double recall(int cls) const;     // diag / column sum
};

ConfusionMatrix confusion_matrix(const GbtModel& model, const dataset::Dataset& data);

}  // namespace emt::gbdt
