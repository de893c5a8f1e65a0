#include "bess/lcs/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bess/core/error.hpp"
#include "bess/core/random.hpp"

namespace bess::lcs {
namespace {

/// Split candidates of one feature: going left means bin <= b, i.e. x <= cuts[b].
std::vector<double> bin_cuts(std::vector<double> v, int bins) {
  std::sort(v.begin(), v.end());
  std::vector<double> uniq = v;
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  std::vector<double> cuts;
  if (static_cast<int>(uniq.size()) <= bins) {
    cuts.assign(uniq.begin(), uniq.empty() ? uniq.end() : uniq.end() - 1);
    return cuts;
  }
  const std::size_t n = v.size();
  for (int b = 1; b < bins; ++b) {
    const double c = v[static_cast<std::size_t>(b) * n / static_cast<std::size_t>(bins)];
    if (c < uniq.back() && (cuts.empty() || c > cuts.back())) cuts.push_back(c);
  }
  return cuts;
}

class Grower {
 public:
  Grower(Eigen::Index rows, const std::vector<std::uint8_t>& bins, const std::vector<std::vector<double>>& cuts,
         const GbdtParams& p)
      : bins_(bins), cuts_(cuts), p_(p), n_(rows) {}

  Tree grow(const std::vector<int>& rows, const std::vector<int>& columns, const Eigen::VectorXd& g,
            const Eigen::VectorXd& h) {
    g_ = &g;
    h_ = &h;
    columns_ = &columns;
    Tree t;
    t.nodes.reserve(64);
    std::vector<int> r = rows;
    split(t, r, 0);
    return t;
  }

 private:
  int split(Tree& t, std::vector<int>& rows, int depth) {
    double G = 0.0;
    double H = 0.0;
    for (const int i : rows) {
      G += (*g_)(i);
      H += (*h_)(i);
    }
    const int id = static_cast<int>(t.nodes.size());
    t.nodes.push_back({});
    t.nodes[static_cast<std::size_t>(id)].value = -G / (H + p_.lambda) * p_.learning_rate;
    if (depth >= p_.max_depth || rows.size() < 2) return id;

    const double parent = G * G / (H + p_.lambda);
    double best_gain = 0.0;
    int best_feature = -1;
    int best_bin = -1;
    std::vector<double> hg;
    std::vector<double> hh;
    for (const int f : *columns_) {
      const auto& cut = cuts_[static_cast<std::size_t>(f)];
      if (cut.empty()) continue;
      const std::size_t nb = cut.size() + 1;
      hg.assign(nb, 0.0);
      hh.assign(nb, 0.0);
      const std::uint8_t* col = bins_.data() + static_cast<std::size_t>(f) * static_cast<std::size_t>(n_);
      for (const int i : rows) {
        hg[col[i]] += (*g_)(i);
        hh[col[i]] += (*h_)(i);
      }
      double gl = 0.0;
      double hl = 0.0;
      for (std::size_t b = 0; b + 1 < nb; ++b) {
        gl += hg[b];
        hl += hh[b];
        const double gr = G - gl;
        const double hr = H - hl;
        if (hl < p_.min_child_weight || hr < p_.min_child_weight) continue;
        const double gain = 0.5 * (gl * gl / (hl + p_.lambda) + gr * gr / (hr + p_.lambda) - parent) - p_.min_split_loss;
        if (gain > best_gain + 1e-12) {
          best_gain = gain;
          best_feature = f;
          best_bin = static_cast<int>(b);
        }
      }
    }
    if (best_feature < 0) return id;

    const std::uint8_t* col = bins_.data() + static_cast<std::size_t>(best_feature) * static_cast<std::size_t>(n_);
    std::vector<int> left;
    std::vector<int> right;
    for (const int i : rows) (col[i] <= best_bin ? left : right).push_back(i);
    rows.clear();
    rows.shrink_to_fit();
    const int l = split(t, left, depth + 1);
    const int r = split(t, right, depth + 1);
    auto& node = t.nodes[static_cast<std::size_t>(id)];
    node.feature = best_feature;
    node.threshold = cuts_[static_cast<std::size_t>(best_feature)][static_cast<std::size_t>(best_bin)];
    node.left = l;
    node.right = r;
    node.gain = best_gain;
    return id;
  }

  const std::vector<std::uint8_t>& bins_;
  const std::vector<std::vector<double>>& cuts_;
  const GbdtParams& p_;
  Eigen::Index n_;
  const Eigen::VectorXd* g_ = nullptr;
  const Eigen::VectorXd* h_ = nullptr;
  const std::vector<int>* columns_ = nullptr;
};

/// ceil(share * n) distinct indices out of [0, n), ascending; all of them when share >= 1.
std::vector<int> sample(Rng& rng, int n, double share) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  if (share >= 1.0) return idx;
  const auto count = std::min(idx.size(), static_cast<std::size_t>(std::max(1.0, std::ceil(share * n))));
  rng.shuffle(idx);
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

void softmax_in_place(Eigen::Ref<Eigen::VectorXd> v) {
  v.array() -= v.maxCoeff();
  v = v.array().exp();
  v /= v.sum();
}

}  // namespace

void to_json(nlohmann::ordered_json& j, const GbdtParams& p) {
  j = nlohmann::ordered_json{{"learning_rate", p.learning_rate}, {"min_split_loss", p.min_split_loss},
                             {"subsample", p.subsample},         {"colsample", p.colsample},
                             {"max_depth", p.max_depth},         {"trees", p.trees},
                             {"lambda", p.lambda},               {"min_child_weight", p.min_child_weight},
                             {"bins", p.bins}};
}

void from_json(const nlohmann::ordered_json& j, GbdtParams& p) {
  p.learning_rate = j.at("learning_rate").get<double>();
  p.min_split_loss = j.at("min_split_loss").get<double>();
  p.subsample = j.at("subsample").get<double>();
  p.colsample = j.at("colsample").get<double>();
  p.max_depth = j.at("max_depth").get<int>();
  p.trees = j.at("trees").get<int>();
  p.lambda = j.at("lambda").get<double>();
  p.min_child_weight = j.at("min_child_weight").get<double>();
  p.bins = j.at("bins").get<int>();
}

double Tree::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0)
    i = static_cast<std::size_t>(x(nodes[i].feature) <= nodes[i].threshold ? nodes[i].left : nodes[i].right);
  return nodes[i].value;
}

void Gbdt::fit(const Eigen::MatrixXd& x, const std::vector<int>& labels, int classes, const GbdtParams& p,
               std::uint64_t seed) {
  const Eigen::Index n = x.rows();
  if (n < 1) throw DomainError("cannot fit on an empty training set");
  if (static_cast<Eigen::Index>(labels.size()) != n) throw DomainError("one label per row required");
  if (classes < 1) throw DomainError("at least one class required");
  for (const int y : labels)
    if (y < 0 || y >= classes) throw DomainError("label outside the class range");
  if (p.bins < 2 || p.bins > 256) throw DomainError("bins must lie in [2, 256]");
  if (p.max_depth < 0 || p.trees < 0 || !(p.learning_rate > 0) || p.lambda < 0 || !(p.subsample > 0) ||
      !(p.colsample > 0))
    throw DomainError("invalid boosting parameters");
  if (!x.allFinite()) throw DomainError("training features must be finite");

  classes_ = classes;
  features_ = static_cast<int>(x.cols());
  rounds_.clear();

  std::vector<std::vector<double>> cuts(static_cast<std::size_t>(features_));
  std::vector<std::uint8_t> bins(static_cast<std::size_t>(features_) * static_cast<std::size_t>(n));
  for (int f = 0; f < features_; ++f) {
    std::vector<double> col(x.col(f).data(), x.col(f).data() + n);
    auto& cut = cuts[static_cast<std::size_t>(f)] = bin_cuts(col, p.bins);
    for (Eigen::Index i = 0; i < n; ++i)
      bins[static_cast<std::size_t>(f) * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] =
          static_cast<std::uint8_t>(std::lower_bound(cut.begin(), cut.end(), x(i, f)) - cut.begin());
  }

  Grower grower(n, bins, cuts, p);
  Eigen::MatrixXd margin = Eigen::MatrixXd::Zero(n, classes);
  Eigen::MatrixXd prob(n, classes);
  Eigen::VectorXd g(n);
  Eigen::VectorXd h(n);
  rounds_.reserve(static_cast<std::size_t>(p.trees));
  for (int r = 0; r < p.trees; ++r) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(r)}));
    const auto rows = sample(rng, static_cast<int>(n), p.subsample);
    const auto columns = sample(rng, features_, p.colsample);
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::VectorXd v = margin.row(i).transpose();
      softmax_in_place(v);
      prob.row(i) = v.transpose();
    }
    auto& round = rounds_.emplace_back();
    for (int c = 0; c < classes; ++c) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double pc = prob(i, c);
        g(i) = pc - (labels[static_cast<std::size_t>(i)] == c ? 1.0 : 0.0);
        h(i) = std::max(pc * (1.0 - pc), 1e-16);
      }
      round.push_back(grower.grow(rows, columns, g, h));
    }
    for (Eigen::Index i = 0; i < n; ++i)
      for (int c = 0; c < classes; ++c) margin(i, c) += round[static_cast<std::size_t>(c)].predict(x.row(i));
  }
}

Eigen::VectorXd Gbdt::margins(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  if (x.size() != features_) throw DomainError("feature count differs from training");
  Eigen::VectorXd m = Eigen::VectorXd::Zero(classes_);
  for (const auto& round : rounds_)
    for (int c = 0; c < classes_; ++c) m(c) += round[static_cast<std::size_t>(c)].predict(x);
  return m;
}

Eigen::VectorXd Gbdt::predict_proba(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  Eigen::VectorXd m = margins(x);
  softmax_in_place(m);
  return m;
}

int Gbdt::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  const Eigen::VectorXd m = margins(x);
  int best = 0;
  for (int c = 1; c < classes_; ++c)
    if (m(c) > m(best)) best = c;
  return best;
}

Eigen::VectorXd Gbdt::split_gains() const {
  Eigen::VectorXd gains = Eigen::VectorXd::Zero(features_);
  for (const auto& round : rounds_)
    for (const auto& tree : round)
      for (const auto& node : tree.nodes)
        if (node.feature >= 0) gains(node.feature) += node.gain;
  return gains;
}

nlohmann::ordered_json Gbdt::to_json() const {
  nlohmann::ordered_json j;
  j["classes"] = classes_;
  j["features"] = features_;
  auto& rounds = j["rounds"] = nlohmann::ordered_json::array();
  for (const auto& round : rounds_) {
    auto& jr = rounds.emplace_back(nlohmann::ordered_json::array());
    for (const auto& tree : round) {
      auto& jt = jr.emplace_back(nlohmann::ordered_json::array());
      for (const auto& nd : tree.nodes)
        jt.push_back(nlohmann::ordered_json::array({nd.feature, nd.threshold, nd.left, nd.right, nd.value, nd.gain}));
    }
  }
  return j;
}

Gbdt Gbdt::from_json(const nlohmann::ordered_json& j) {
  Gbdt m;
  m.classes_ = j.at("classes").get<int>();
  m.features_ = j.at("features").get<int>();
  for (const auto& jr : j.at("rounds")) {
    auto& round = m.rounds_.emplace_back();
    for (const auto& jt : jr) {
      Tree t;
      for (const auto& nd : jt) {
        Tree::Node node;
        node.feature = nd.at(0).get<int>();
        node.threshold = nd.at(1).get<double>();
        node.left = nd.at(2).get<int>();
        node.right = nd.at(3).get<int>();
        node.value = nd.at(4).get<double>();
        node.gain = nd.at(5).get<double>();
        // Children follow their parent, which also rules out cycles.
        const int self = static_cast<int>(t.nodes.size());
        const int size = static_cast<int>(jt.size());
        if (node.feature >= m.features_ || (node.feature >= 0 && (node.left <= self || node.left >= size ||
                                                                   node.right <= self || node.right >= size)))
          throw DomainError("malformed tree in model file");
        t.nodes.push_back(node);
      }
      if (t.nodes.empty()) throw DomainError("empty tree in model file");
      round.push_back(std::move(t));
    }
    if (static_cast<int>(round.size()) != m.classes_) throw DomainError("tree count per round differs from classes");
  }
  return m;
}

}  // namespace bess::lcs
