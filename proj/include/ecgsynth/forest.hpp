#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <vector>

#include "ecgsynth/features.hpp"

namespace ecgsynth {

struct ForestConfig {
  std::size_t trees{100};
  std::size_t features_per_split{3};  // floor(sqrt(10))
  std::size_t min_leaf{5};
  std::size_t max_depth{0};  // 0: unlimited
  std::uint64_t seed{42};
  // Off: every tree sees the full training set once (no out-of-bag estimate).
  bool bootstrap{true};
};

// Throws InvalidConfig.
void validate_forest_config(const ForestConfig& config, std::size_t feature_count);

struct TreeNode {
  std::int32_t feature{-1};  // -1 marks a leaf
  double threshold{0.0};     // go left when x[feature] <= threshold
  std::int32_t left{-1};
  std::int32_t right{-1};
  double value{0.0};  // mean response of the node's samples
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> x) const;
};

struct Forest {
  ForestConfig config;
  std::size_t feature_count{0};
  std::vector<RegressionTree> trees;
  std::vector<double> importance;  // normalised SSE reduction per feature
  std::size_t samples{0};
  double oob_rmse{0.0};  // NaN when no sample was ever out of bag
  double response_min{0.0};
  double response_max{0.0};

  double predict(std::span<const double> x) const;
};

// Rows of `x` all have the same width. Throws InsufficientData when there are
// fewer than 10 rows.
Forest train_random_forest(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                           const ForestConfig& config, std::size_t min_rows = kMinTrainingBeats);

struct LagModel {
  LeadId missing{LeadId::II};
  LeadId current{LeadId::I};
  Forest forest;
};

LagModel train_forest(const TrainingSet& data, const ForestConfig& config);
double predict(const LagModel& model, const BeatFeatures& x);
std::vector<double> feature_importance(const LagModel& model);

void save_model(const LagModel& model, std::ostream& out);
// Throws ModelFormat.
LagModel load_model(std::istream& in);

}  // namespace ecgsynth
