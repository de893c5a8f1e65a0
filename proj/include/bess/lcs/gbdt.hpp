#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace bess::lcs {

/// Boosting hyperparameters; the first six are the tuned ones.
struct GbdtParams {
  double learning_rate = 0.1;
  double min_split_loss = 0.0;  // gamma
  double subsample = 1.0;       // row share per tree
  double colsample = 1.0;       // column share per tree
  int max_depth = 3;
  int trees = 200;              // boosting rounds
  double lambda = 1.0;          // L2 penalty on leaf weights
  double min_child_weight = 1.0;
  int bins = 32;

  friend bool operator==(const GbdtParams&, const GbdtParams&) = default;
};

void to_json(nlohmann::ordered_json& j, const GbdtParams& p);
void from_json(const nlohmann::ordered_json& j, GbdtParams& p);

/// One regression tree; a node is a leaf when `feature < 0`.
struct Tree {
  struct Node {
    int feature = -1;
    double threshold = 0.0;  // go left when x <= threshold
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf output, learning rate included
    double gain = 0.0;
  };
  std::vector<Node> nodes;

  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
};

/// Multiclass gradient-boosted trees with softmax cross-entropy, histogram split search and
/// second-order leaf weights. Every round grows one tree per class.
class Gbdt {
 public:
  Gbdt() = default;

  /// `labels` hold class indices in [0, classes). Deterministic given `seed`.
  void fit(const Eigen::MatrixXd& x, const std::vector<int>& labels, int classes, const GbdtParams& params,
           std::uint64_t seed);

  int classes() const noexcept { return classes_; }
  int features() const noexcept { return features_; }
  Eigen::VectorXd margins(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  Eigen::VectorXd predict_proba(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  /// Most probable class; ties go to the lowest index.
  int predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  /// Sum of split gains per feature.
  Eigen::VectorXd split_gains() const;

  nlohmann::ordered_json to_json() const;
  static Gbdt from_json(const nlohmann::ordered_json& j);

 private:
  int classes_ = 0;
  int features_ = 0;
  std::vector<std::vector<Tree>> rounds_;  // rounds_[r][class]
};

}  // namespace bess::lcs
