#include "ecgsynth/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include "ecgsynth/error.hpp"
#include "ecgsynth/record_io.hpp"

namespace ecgsynth {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// xoshiro256** seeded through splitmix64; one instance per tree.
class TreeRng {
 public:
  explicit TreeRng(std::uint64_t seed) {
    for (auto& s : state_) {
      seed = splitmix64(seed);
      s = seed;
    }
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, n) by rejection.
  std::size_t below(std::size_t n) {
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t v = next();
    while (v >= limit) v = next();
    return static_cast<std::size_t>(v % bound);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t state_[4]{};
};

struct Builder {
  const std::vector<std::vector<double>>& x;
  const std::vector<double>& y;
  const ForestConfig& config;
  std::size_t feature_count;
  TreeRng& rng;
  RegressionTree& tree;
  std::vector<double>& gains;

  std::int32_t grow(std::vector<std::size_t>& rows, std::size_t depth) {
    const auto id = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    double sum = 0.0;
    for (std::size_t r : rows) sum += y[r];
    const double count = static_cast<double>(rows.size());
    const double mean = sum / count;
    tree.nodes[static_cast<std::size_t>(id)].value = mean;
    double sse = 0.0;
    for (std::size_t r : rows) sse += (y[r] - mean) * (y[r] - mean);

    const bool depth_left = config.max_depth == 0 || depth < config.max_depth;
    if (!depth_left || rows.size() < 2 * config.min_leaf || sse <= 0.0) return id;

    // Partial Fisher-Yates draw of m distinct features, then ascending order.
    std::vector<std::size_t> order(feature_count);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t k = 0; k < config.features_per_split; ++k) {
      std::swap(order[k], order[k + rng.below(feature_count - k)]);
    }
    std::vector<std::size_t> chosen(order.begin(),
                                    order.begin() + static_cast<std::ptrdiff_t>(config.features_per_split));
    std::sort(chosen.begin(), chosen.end());

    const double tie = 1e-12 * std::max(1.0, sse);
    double best_gain = 0.0;
    std::int32_t best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::size_t> sorted = rows;
    for (std::size_t f : chosen) {
      std::stable_sort(sorted.begin(), sorted.end(),
                       [&](std::size_t a, std::size_t b) { return x[a][f] < x[b][f]; });
      double left_sum = 0.0;
      double left_sq = 0.0;
      double total_sq = 0.0;
      for (std::size_t r : sorted) total_sq += y[r] * y[r];
      for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
        const double v = y[sorted[k]];
        left_sum += v;
        left_sq += v * v;
        const std::size_t nl = k + 1;
        const std::size_t nr = sorted.size() - nl;
        const double a = x[sorted[k]][f];
        const double b = x[sorted[k + 1]][f];
        if (!(a < b) || nl < config.min_leaf || nr < config.min_leaf) continue;
        const double right_sum = sum - left_sum;
        const double sse_left = left_sq - left_sum * left_sum / static_cast<double>(nl);
        const double sse_right = (total_sq - left_sq) - right_sum * right_sum / static_cast<double>(nr);
        const double gain = sse - sse_left - sse_right;
        if (gain > best_gain + tie) {
          best_gain = gain;
          best_feature = static_cast<std::int32_t>(f);
          best_threshold = a + (b - a) / 2.0;
        }
      }
    }
    if (best_feature < 0) return id;

    const auto bf = static_cast<std::size_t>(best_feature);
    std::vector<std::size_t> left_rows;
    std::vector<std::size_t> right_rows;
    for (std::size_t r : rows) (x[r][bf] <= best_threshold ? left_rows : right_rows).push_back(r);
    gains[bf] += best_gain;
    rows.clear();
    rows.shrink_to_fit();
    const std::int32_t left = grow(left_rows, depth + 1);
    const std::int32_t right = grow(right_rows, depth + 1);
    auto& node = tree.nodes[static_cast<std::size_t>(id)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = left;
    node.right = right;
    return id;
  }
};

[[noreturn]] void bad_model(const std::string& what) {
  throw Error(ErrorCode::ModelFormat, "model file: " + what);
}

}  // namespace

void validate_forest_config(const ForestConfig& config, std::size_t feature_count) {
  if (config.trees < 1) throw Error(ErrorCode::InvalidConfig, "forest needs at least one tree");
  if (config.features_per_split < 1 || config.features_per_split > feature_count) {
    throw Error(ErrorCode::InvalidConfig, "features per split must be in [1, feature count]");
  }
  if (config.min_leaf < 1) throw Error(ErrorCode::InvalidConfig, "min leaf must be >= 1");
}

double RegressionTree::predict(std::span<const double> x) const {
  std::size_t k = 0;
  while (nodes[k].feature >= 0) {
    const auto& n = nodes[k];
    k = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes[k].value;
}

double Forest::predict(std::span<const double> x) const {
  double sum = 0.0;
  for (const auto& t : trees) sum += t.predict(x);
  return sum / static_cast<double>(trees.size());
}

Forest train_random_forest(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                           const ForestConfig& config, std::size_t min_rows) {
  if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "feature rows and responses differ");
  if (x.size() < std::max<std::size_t>(min_rows, 1)) {
    throw Error(ErrorCode::InsufficientData,
                "need at least " + std::to_string(min_rows) + " training rows, got " +
                    std::to_string(x.size()));
  }
  const std::size_t width = x.front().size();
  for (const auto& row : x) {
    if (row.size() != width) throw Error(ErrorCode::LengthMismatch, "ragged feature rows");
    for (double v : row) {
      if (!std::isfinite(v)) throw Error(ErrorCode::InsufficientData, "non-finite feature");
    }
  }
  for (double v : y) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InsufficientData, "non-finite response");
  }
  validate_forest_config(config, width);

  Forest forest;
  forest.config = config;
  forest.feature_count = width;
  forest.samples = x.size();
  forest.response_min = *std::min_element(y.begin(), y.end());
  forest.response_max = *std::max_element(y.begin(), y.end());
  std::vector<double> gains(width, 0.0);
  std::vector<double> oob_sum(x.size(), 0.0);
  std::vector<std::size_t> oob_count(x.size(), 0);

  const std::size_t n = x.size();
  for (std::size_t t = 0; t < config.trees; ++t) {
    TreeRng rng(splitmix64(config.seed + 0x632BE59BD9B4E019ULL * (t + 1)));
    std::vector<std::size_t> rows(n);
    std::vector<bool> in_bag(n, !config.bootstrap);
    if (config.bootstrap) {
      for (auto& r : rows) {
        r = rng.below(n);
        in_bag[r] = true;
      }
      std::sort(rows.begin(), rows.end());
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    RegressionTree tree;
    Builder{x, y, config, width, rng, tree, gains}.grow(rows, 0);
    for (std::size_t r = 0; r < n; ++r) {
      if (in_bag[r]) continue;
      oob_sum[r] += tree.predict(x[r]);
      ++oob_count[r];
    }
    forest.trees.push_back(std::move(tree));
  }

  double se = 0.0;
  std::size_t used = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (oob_count[r] == 0) continue;
    const double e = oob_sum[r] / static_cast<double>(oob_count[r]) - y[r];
    se += e * e;
    ++used;
  }
  forest.oob_rmse = used > 0 ? std::sqrt(se / static_cast<double>(used))
                             : std::numeric_limits<double>::quiet_NaN();
  const double total = std::accumulate(gains.begin(), gains.end(), 0.0);
  forest.importance.assign(width, 0.0);
  if (total > 0.0) {
    for (std::size_t f = 0; f < width; ++f) forest.importance[f] = gains[f] / total;
  }
  return forest;
}

LagModel train_forest(const TrainingSet& data, const ForestConfig& config) {
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (const auto& s : data.samples) {
    x.emplace_back(s.features.values.begin(), s.features.values.end());
    y.push_back(s.lag_ms);
  }
  LagModel model;
  model.missing = data.missing;
  model.current = data.current;
  model.forest = train_random_forest(x, y, config);
  return model;
}

double predict(const LagModel& model, const BeatFeatures& x) {
  return model.forest.predict(x.values);
}

std::vector<double> feature_importance(const LagModel& model) { return model.forest.importance; }

void save_model(const LagModel& model, std::ostream& out) {
  const auto& f = model.forest;
  out << "ecgsynth-lagmodel 1\n";
  out << "missing " << lead_name(model.missing) << '\n';
  out << "current " << lead_name(model.current) << '\n';
  out << "trees " << f.config.trees << '\n';
  out << "features_per_split " << f.config.features_per_split << '\n';
  out << "min_leaf " << f.config.min_leaf << '\n';
  out << "max_depth " << f.config.max_depth << '\n';
  out << "seed " << f.config.seed << '\n';
  out << "bootstrap " << (f.config.bootstrap ? 1 : 0) << '\n';
  out << "features " << f.feature_count;
  for (std::size_t k = 0; k < f.feature_count; ++k) {
    out << ' ' << (f.feature_count == kFeatureCount ? std::string(feature_name(static_cast<Feature>(k)))
                                                    : "f" + std::to_string(k));
  }
  out << '\n';
  out << "samples " << f.samples << '\n';
  out << "oob_rmse " << (std::isnan(f.oob_rmse) ? std::string("nan") : format_double(f.oob_rmse)) << '\n';
  out << "response_range " << format_double(f.response_min) << ' ' << format_double(f.response_max) << '\n';
  out << "importance";
  for (double v : f.importance) out << ' ' << format_double(v);
  out << '\n';
  for (const auto& tree : f.trees) {
    out << "tree " << tree.nodes.size() << '\n';
    for (const auto& n : tree.nodes) {
      out << n.feature << ' ' << format_double(n.threshold) << ' ' << n.left << ' ' << n.right << ' '
          << format_double(n.value) << '\n';
    }
  }
  out << "end\n";
  if (!out) throw Error(ErrorCode::IoFailure, "failed writing model");
}

LagModel load_model(std::istream& in) {
  std::string line;
  auto next_line = [&]() {
    if (!std::getline(in, line)) bad_model("unexpected end of file");
    return std::istringstream(line);
  };
  auto parse_double = [](const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      bad_model("bad number '" + s + "'");
    }
    if (used != s.size()) bad_model("bad number '" + s + "'");
    return v;
  };
  auto keyed = [&](const char* key) {
    auto ss = next_line();
    std::string k;
    ss >> k;
    if (k != key) bad_model(std::string("expected '") + key + "'");
    return ss;
  };
  auto keyed_size = [&](const char* key) {
    auto ss = keyed(key);
    long long v = -1;
    if (!(ss >> v) || v < 0) bad_model(std::string("bad value for ") + key);
    return static_cast<std::size_t>(v);
  };
  auto keyed_lead = [&](const char* key) {
    auto ss = keyed(key);
    std::string name;
    ss >> name;
    const auto lead = parse_lead(name);
    if (!lead) bad_model("unknown lead '" + name + "'");
    return *lead;
  };

  if (!std::getline(in, line) || line != "ecgsynth-lagmodel 1") bad_model("missing version line");
  LagModel model;
  model.missing = keyed_lead("missing");
  model.current = keyed_lead("current");
  auto& f = model.forest;
  f.config.trees = keyed_size("trees");
  f.config.features_per_split = keyed_size("features_per_split");
  f.config.min_leaf = keyed_size("min_leaf");
  f.config.max_depth = keyed_size("max_depth");
  {
    auto ss = keyed("seed");
    if (!(ss >> f.config.seed)) bad_model("bad seed");
  }
  f.config.bootstrap = keyed_size("bootstrap") != 0;
  {
    auto ss = keyed("features");
    if (!(ss >> f.feature_count) || f.feature_count == 0 || f.feature_count > 4096) {
      bad_model("bad feature count");
    }
  }
  f.samples = keyed_size("samples");
  {
    auto ss = keyed("oob_rmse");
    std::string v;
    ss >> v;
    f.oob_rmse = parse_double(v);
  }
  {
    auto ss = keyed("response_range");
    std::string a, b;
    ss >> a >> b;
    f.response_min = parse_double(a);
    f.response_max = parse_double(b);
  }
  {
    auto ss = keyed("importance");
    std::string v;
    while (ss >> v) f.importance.push_back(parse_double(v));
    if (f.importance.size() != f.feature_count) bad_model("importance width mismatch");
  }
  if (f.config.trees == 0 || f.config.trees > 1000000) bad_model("bad tree count");
  for (std::size_t t = 0; t < f.config.trees; ++t) {
    const std::size_t count = keyed_size("tree");
    if (count == 0) bad_model("empty tree");
    RegressionTree tree;
    for (std::size_t k = 0; k < count; ++k) {
      auto ss = next_line();
      TreeNode node;
      std::string threshold, value;
      if (!(ss >> node.feature >> threshold >> node.left >> node.right >> value)) bad_model("bad node");
      node.threshold = parse_double(threshold);
      node.value = parse_double(value);
      tree.nodes.push_back(node);
    }
    // Children must point forward so prediction always terminates.
    for (std::size_t k = 0; k < count; ++k) {
      const auto& n = tree.nodes[k];
      if (n.feature < 0) continue;
      if (static_cast<std::size_t>(n.feature) >= f.feature_count || n.left <= static_cast<std::int32_t>(k) ||
          n.right <= static_cast<std::int32_t>(k) || static_cast<std::size_t>(n.left) >= count ||
          static_cast<std::size_t>(n.right) >= count) {
        bad_model("inconsistent tree structure");
      }
    }
    f.trees.push_back(std::move(tree));
  }
  if (!std::getline(in, line) || line != "end") bad_model("missing end marker");
  return model;
}

}  // namespace ecgsynth
