#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bess/core/time.hpp"
#include "bess/fcr/physics.hpp"
#include "bess/lcs/features.hpp"
#include "bess/lcs/gbdt.hpp"

namespace bess::lcs {

inline constexpr int kModelVersion = 1;

struct TuningOptions {
  int folds = 5;
  int validation_days = 15;
  int candidates = 20;  // random draws from the grid, the incumbent comes on top
  double correlation_threshold = kCorrelationThreshold;
};

/// The full search grid in a fixed enumeration order (288 combinations).
std::vector<GbdtParams> hyperparameter_grid();

/// Anchored walk-forward split: training rows [0, train_end), validation [train_end, valid_end).
struct Fold {
  int train_end = 0;
  int valid_end = 0;
};
/// Folds over a window of `days` rows, each validating on its last `validation_days` rows and
/// the last fold ending with the window. Throws ConfigurationError when the window leaves the
/// first fold without training rows.
std::vector<Fold> anchored_folds(int days, int folds, int validation_days);

struct TrainedModel {
  std::vector<fcr::FcrStrategy> labels;  // class index -> strategy, the pool
  GbdtParams params;
  std::uint64_t schema_hash = 0;         // of the feature table the model was trained on
  std::vector<std::string> columns;      // selected feature names
  std::vector<int> column_index;         // their positions in that table
  Gbdt booster;
  Date train_first;
  Date train_last;
  std::uint64_t seed = 0;
  double validation_profit = 0.0;        // of the winning combination
  int candidates_evaluated = 0;
};

/// Tunes on anchored folds of the window by summed validation profit, then refits on the whole
/// window. `profits(d, k)` is day d's profit of labels[k] and `y[d]` the best label index of
/// day d. Pure function of its inputs.
TrainedModel tune_and_train(const FeatureTable& window, const std::vector<int>& y, const Eigen::MatrixXd& profits,
                            const std::vector<fcr::FcrStrategy>& labels, std::uint64_t seed,
                            const std::optional<GbdtParams>& incumbent = std::nullopt,
                            const TuningOptions& options = {});

/// Class index for one feature row of a table with the training schema. Throws
/// SchemaMismatchError otherwise.
int predict_class(const TrainedModel& model, const FeatureTable& table, Eigen::Index row);
fcr::FcrStrategy predict(const TrainedModel& model, const FeatureTable& table, Date day);

/// Versioned JSON artifact.
std::string to_json(const TrainedModel& model);
TrainedModel model_from_json(const std::string& text);
void save_model(const std::filesystem::path& path, const TrainedModel& model);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace bess::lcs
