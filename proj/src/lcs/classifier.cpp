#include "bess/lcs/classifier.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bess/core/error.hpp"
#include "bess/core/random.hpp"
#include "bess/pool/pool.hpp"

namespace bess::lcs {
namespace {

Eigen::MatrixXd columns_of(const Eigen::MatrixXd& x, const std::vector<int>& cols, Eigen::Index first, Eigen::Index count) {
  Eigen::MatrixXd out(count, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = x.col(cols[j]).segment(first, count);
  return out;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex(const std::string& s) {
  std::size_t used = 0;
  const auto v = std::stoull(s, &used, 16);
  if (used != s.size()) throw DomainError("malformed hexadecimal field '" + s + "'");
  return v;
}

}  // namespace

std::vector<GbdtParams> hyperparameter_grid() {
  std::vector<GbdtParams> grid;
  for (const double lr : {0.01, 0.05, 0.1})
    for (const double gamma : {0.0, 0.5, 1.0, 2.0})
      for (const double sub : {0.8, 1.0})
        for (const double col : {0.8, 1.0})
          for (const int depth : {3, 4, 5})
            for (const int trees : {200, 400}) {
              GbdtParams p;
              p.learning_rate = lr;
              p.min_split_loss = gamma;
              p.subsample = sub;
              p.colsample = col;
              p.max_depth = depth;
              p.trees = trees;
              grid.push_back(p);
            }
  return grid;
}

std::vector<Fold> anchored_folds(int days, int folds, int validation_days) {
  if (folds < 1 || validation_days < 1) throw ConfigurationError("folds and validation days must be positive");
  if (days <= folds * validation_days)
    throw ConfigurationError("training window of " + std::to_string(days) + " days is too short for " +
                             std::to_string(folds) + " folds of " + std::to_string(validation_days) +
                             " validation days");
  std::vector<Fold> out;
  for (int k = 0; k < folds; ++k) {
    const int train_end = days - (folds - k) * validation_days;
    out.push_back({train_end, train_end + validation_days});
  }
  return out;
}

TrainedModel tune_and_train(const FeatureTable& window, const std::vector<int>& y, const Eigen::MatrixXd& profits,
                            const std::vector<fcr::FcrStrategy>& labels, std::uint64_t seed,
                            const std::optional<GbdtParams>& incumbent, const TuningOptions& o) {
  const Eigen::Index n = window.values.rows();
  const int classes = static_cast<int>(labels.size());
  if (classes < 1) throw DomainError("label set is empty");
  if (static_cast<Eigen::Index>(window.days.size()) != n || static_cast<Eigen::Index>(y.size()) != n ||
      profits.rows() != n || profits.cols() != classes)
    throw DomainError("features, labels and profits must cover the same days and labels");
  if (!profits.allFinite()) throw ValidationError("profits must be finite");
  for (const int c : y)
    if (c < 0 || c >= classes) throw DomainError("label index outside the label set");
  const auto folds = anchored_folds(static_cast<int>(n), o.folds, o.validation_days);

  // Candidates: the incumbent first so that ties keep it, then random grid draws.
  std::vector<GbdtParams> candidates;
  if (incumbent) candidates.push_back(*incumbent);
  {
    auto grid = hyperparameter_grid();
    Rng rng(derive_seed(seed, {0x6772696400ULL}));
    rng.shuffle(grid);
    const auto draws = std::min<std::size_t>(grid.size(), static_cast<std::size_t>(std::max(0, o.candidates)));
    for (std::size_t i = 0; i < draws; ++i)
      if (!incumbent || !(grid[i] == *incumbent)) candidates.push_back(grid[i]);
  }
  if (candidates.empty()) throw ConfigurationError("no hyperparameter candidates to evaluate");

  // Column filters depend on the training rows only.
  struct FoldData {
    Eigen::MatrixXd train;
    Eigen::MatrixXd valid;
    std::vector<int> y;
  };
  std::vector<FoldData> data;
  for (const auto& f : folds) {
    const Eigen::MatrixXd head = window.values.topRows(f.train_end);
    const auto cols = f.train_end >= 2 ? filter_features(head, o.correlation_threshold) : std::vector<int>{};
    FoldData fd;
    fd.train = columns_of(window.values, cols, 0, f.train_end);
    fd.valid = columns_of(window.values, cols, f.train_end, f.valid_end - f.train_end);
    fd.y.assign(y.begin(), y.begin() + f.train_end);
    data.push_back(std::move(fd));
  }

  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    double score = 0.0;
    for (std::size_t k = 0; k < folds.size(); ++k) {
      Gbdt model;
      model.fit(data[k].train, data[k].y, classes, candidates[c], derive_seed(seed, {1, c, k}));
      for (Eigen::Index i = 0; i < data[k].valid.rows(); ++i)
        score += profits(folds[k].train_end + i, model.predict(data[k].valid.row(i)));
    }
    if (score > best_score + 1e-9) {
      best_score = score;
      best = c;
    }
  }

  TrainedModel m;
  m.labels = labels;
  m.params = candidates[best];
  m.schema_hash = window.schema_hash();
  m.column_index = filter_features(window.values, o.correlation_threshold);
  for (const int j : m.column_index) m.columns.push_back(window.names[static_cast<std::size_t>(j)]);
  m.booster.fit(columns_of(window.values, m.column_index, 0, n), y, classes, m.params, derive_seed(seed, {2}));
  m.train_first = window.days.front();
  m.train_last = window.days.back();
  m.seed = seed;
  m.validation_profit = best_score;
  m.candidates_evaluated = static_cast<int>(candidates.size());
  return m;
}

int predict_class(const TrainedModel& m, const FeatureTable& table, Eigen::Index row) {
  if (table.schema_hash() != m.schema_hash)
    throw SchemaMismatchError("feature schema " + hex(table.schema_hash()) + " differs from the model's " +
                              hex(m.schema_hash));
  if (row < 0 || row >= table.values.rows()) throw DomainError("feature row out of range");
  Eigen::RowVectorXd x(static_cast<Eigen::Index>(m.column_index.size()));
  for (std::size_t j = 0; j < m.column_index.size(); ++j) x(static_cast<Eigen::Index>(j)) = table.values(row, m.column_index[j]);
  return m.booster.predict(x);
}

fcr::FcrStrategy predict(const TrainedModel& m, const FeatureTable& table, Date day) {
  return m.labels[static_cast<std::size_t>(predict_class(m, table, table.row_of(day)))];
}

std::string to_json(const TrainedModel& m) {
  nlohmann::ordered_json j;
  j["format"] = "bess-lcs-model";
  j["version"] = kModelVersion;
  j["schema_hash"] = hex(m.schema_hash);
  auto& labels = j["labels"] = nlohmann::ordered_json::array();
  for (const auto& s : m.labels) labels.push_back(pool::strategy_id(s));
  j["params"] = m.params;
  j["columns"] = m.columns;
  j["column_index"] = m.column_index;
  j["train_first"] = format_date(m.train_first);
  j["train_last"] = format_date(m.train_last);
  j["seed"] = hex(m.seed);
  j["validation_profit"] = m.validation_profit;
  j["candidates_evaluated"] = m.candidates_evaluated;
  j["booster"] = m.booster.to_json();
  return j.dump(1);
}

TrainedModel model_from_json(const std::string& text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format") != "bess-lcs-model") throw IngestionError("not a model file");
    if (j.at("version").get<int>() != kModelVersion)
      throw IngestionError("unsupported model version " + j.at("version").dump());
    TrainedModel m;
    m.schema_hash = parse_hex(j.at("schema_hash").get<std::string>());
    for (const auto& id : j.at("labels")) m.labels.push_back(pool::parse_strategy_id(id.get<std::string>()));
    m.params = j.at("params").get<GbdtParams>();
    m.columns = j.at("columns").get<std::vector<std::string>>();
    m.column_index = j.at("column_index").get<std::vector<int>>();
    m.train_first = parse_date(j.at("train_first").get<std::string>());
    m.train_last = parse_date(j.at("train_last").get<std::string>());
    m.seed = parse_hex(j.at("seed").get<std::string>());
    m.validation_profit = j.at("validation_profit").get<double>();
    m.candidates_evaluated = j.at("candidates_evaluated").get<int>();
    m.booster = Gbdt::from_json(j.at("booster"));
    if (m.columns.size() != m.column_index.size() || m.booster.features() != static_cast<int>(m.columns.size()) ||
        m.booster.classes() != static_cast<int>(m.labels.size()))
      throw IngestionError("model file is inconsistent");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const TrainedModel& m) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << to_json(m) << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace bess::lcs
