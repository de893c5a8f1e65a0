#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "bess/core/error.hpp"
#include "bess/core/random.hpp"
#include "bess/lcs/classifier.hpp"
#include "bess/lcs/features.hpp"
#include "bess/lcs/gbdt.hpp"
#include "bess/market/synthetic.hpp"

using namespace bess;
using namespace bess::lcs;

namespace {

constexpr Date kFirst = Date{std::chrono::year{2024} / 1 / 1};

/// Hourly exogenous data for `days` days from kFirst, with FCR clearing from the day before.
market::ExogenousSeries flat_exogenous(int days, double daa = 50.0) {
  market::ExogenousSeries e;
  const auto hours = static_cast<std::size_t>(24 * days);
  for (const auto& z : market::kDefaultZones)
    e.daa_prices[z] = market::UniformSeries{start_of(kFirst), Seconds{3600}, std::vector<double>(hours, daa)};
  for (const auto& k : market::kForecastKinds)
    e.forecasts[k] = market::UniformSeries{start_of(kFirst), Seconds{3600}, std::vector<double>(hours, 1000.0)};
  for (int d = -1; d < days; ++d) e.fcr_clearing[kFirst + std::chrono::days{d}] = {10, 20, 30, 40, 50, 60};
  return e;
}

std::size_t index_of(const std::vector<std::string>& names, const std::string& n) {
  const auto it = std::find(names.begin(), names.end(), n);
  EXPECT_NE(it, names.end()) << n;
  return static_cast<std::size_t>(it - names.begin());
}

/// A table of `days` rows and `cols` standard normal columns named f0, f1, ...
FeatureTable random_table(Rng& rng, int days, int cols) {
  FeatureTable t;
  for (int d = 0; d < days; ++d) t.days.push_back(kFirst + std::chrono::days{d});
  for (int j = 0; j < cols; ++j) t.names.push_back("f" + std::to_string(j));
  t.values.resize(days, cols);
  for (int d = 0; d < days; ++d)
    for (int j = 0; j < cols; ++j) t.values(d, j) = rng.normal();
  return t;
}

}  // namespace

TEST(Features, LayoutHasBaseAndInteractionGroups) {
  const FeatureOptions o;
  const auto base = base_feature_names(o);
  const auto extra = interaction_names(o);
  EXPECT_EQ(base.size(), 110u);
  EXPECT_EQ(extra.size(), 288u);
  std::set<std::string> all(base.begin(), base.end());
  all.insert(extra.begin(), extra.end());
  EXPECT_EQ(all.size(), 398u);
  EXPECT_EQ(base.front(), "daa_DE-LU_b1_mean");
  EXPECT_EQ(base[96], "fcr_lag_b1");
  EXPECT_EQ(base.back(), "weekly_cos");
}

TEST(Features, ConstantDayAheadPriceGivesFlatBlocks) {
  const auto e = flat_exogenous(3);
  const FeatureOptions o;
  const auto names = base_feature_names(o);
  const auto f = build_features(e, kFirst + std::chrono::days{1}, o);
  for (const auto& z : market::kDefaultZones)
    for (int k = 1; k <= 6; ++k) {
      const std::string stem = "daa_" + z + "_b" + std::to_string(k);
      EXPECT_DOUBLE_EQ(f(static_cast<Eigen::Index>(index_of(names, stem + "_mean"))), 50.0);
      EXPECT_DOUBLE_EQ(f(static_cast<Eigen::Index>(index_of(names, stem + "_std"))), 0.0);
    }
  EXPECT_DOUBLE_EQ(f(static_cast<Eigen::Index>(index_of(names, "fcr_lag_b4"))), 40.0);
}

TEST(Features, BlockStatisticsUseTheHoursOfEachBlock) {
  auto e = flat_exogenous(2);
  auto& v = e.daa_prices["SE4"].values;
  for (int h = 0; h < 48; ++h) v[static_cast<std::size_t>(h)] = h % 24;  // hour of day
  const FeatureOptions o;
  const auto names = base_feature_names(o);
  const auto f = build_features(e, kFirst + std::chrono::days{1}, o);
  EXPECT_DOUBLE_EQ(f(static_cast<Eigen::Index>(index_of(names, "daa_SE4_b2_mean"))), 5.5);
  EXPECT_NEAR(f(static_cast<Eigen::Index>(index_of(names, "daa_SE4_b2_std"))), std::sqrt(1.25), 1e-12);
}

TEST(Features, CalendarEncodings) {
  const int days = 100;
  const auto e = flat_exogenous(days);
  FeatureOptions o;
  o.origin = kFirst;
  const auto names = base_feature_names(o);
  auto at = [&](const Eigen::VectorXd& f, const char* n) { return f(static_cast<Eigen::Index>(index_of(names, n))); };

  const Date sunday = parse_date("2024-01-07");
  const auto f = build_features(e, sunday, o);
  EXPECT_EQ(at(f, "weekday"), 0.0);
  EXPECT_EQ(at(f, "weekend"), 1.0);
  EXPECT_EQ(at(f, "trend"), 6.0);
  EXPECT_DOUBLE_EQ(at(f, "weekly_sin"), 0.0);
  EXPECT_DOUBLE_EQ(at(f, "weekly_cos"), 1.0);
  EXPECT_EQ(at(build_features(e, parse_date("2024-01-10"), o), "weekend"), 0.0);
  EXPECT_EQ(at(build_features(e, parse_date("2024-01-06"), o), "weekend"), 1.0);

  const Date d91 = parse_date("2024-03-31");
  const auto g = build_features(e, d91, o);
  EXPECT_EQ(at(g, "day_of_year"), 91.0);
  EXPECT_DOUBLE_EQ(at(g, "annual_sin"), std::sin(2.0 * std::numbers::pi * 91.0 / 365.0));
  EXPECT_DOUBLE_EQ(at(g, "annual_cos"), std::cos(2.0 * std::numbers::pi * 91.0 / 365.0));
}

TEST(Features, MissingInputsNameTheSeries) {
  const Date day = kFirst + std::chrono::days{1};
  auto e = flat_exogenous(3);
  e.daa_prices.erase("NO2");
  try {
    build_features(e, day, FeatureOptions{});
    FAIL() << "expected DataError";
  } catch (const DataError& err) {
    EXPECT_NE(std::string(err.what()).find("NO2"), std::string::npos);
  }
  e = flat_exogenous(3);
  e.fcr_clearing.erase(kFirst);
  try {
    build_features(e, day, FeatureOptions{});
    FAIL() << "expected DataError";
  } catch (const DataError& err) {
    EXPECT_NE(std::string(err.what()).find("FCR clearing"), std::string::npos);
  }
  e = flat_exogenous(1);
  try {
    build_features(e, day, FeatureOptions{});
    FAIL() << "expected DataError";
  } catch (const DataError& err) {
    EXPECT_NE(std::string(err.what()).find("DE-LU"), std::string::npos);
  }
}

TEST(Features, IgnoreEverythingPublishedAfterTheBiddingContext) {
  const auto clean = market::synthesize_market(4, 10, market::Regime::mixed, {}).exogenous;
  const FeatureOptions o;
  const Date day = kFirst + std::chrono::days{5};
  auto poisoned = clean;
  const Timestamp after = start_of(day + std::chrono::days{1});
  for (auto* group : {&poisoned.daa_prices, &poisoned.forecasts})
    for (auto& [key, s] : *group)
      for (std::size_t i = 0; i < s.values.size(); ++i)
        if (s.start + s.step * static_cast<long long>(i) >= after) s.values[i] = 1e6;
  for (auto& [d, prices] : poisoned.fcr_clearing)
    if (d >= day) prices.fill(-1e6);
  poisoned.frequency.values.assign(poisoned.frequency.values.size(), 0.5);
  EXPECT_EQ(build_features(clean, day, o), build_features(poisoned, day, o));
}

TEST(Interactions, NoLagVariationLeavesOnlyBaseFeatures) {
  auto e = flat_exogenous(20);
  Rng rng(2);
  for (auto& [z, s] : e.daa_prices)
    for (auto& v : s.values) v = 50.0 + rng.normal(0.0, 10.0);
  FeatureOptions o;
  std::vector<Date> days;
  for (int d = 0; d < 20; ++d) days.push_back(kFirst + std::chrono::days{d});
  const auto table = build_interactions(build_feature_table(e, days, o), o);
  ASSERT_EQ(table.values.cols(), 398);
  const auto kept = filter_features(table.values);
  ASSERT_FALSE(kept.empty());
  for (const int j : kept) {
    EXPECT_LT(j, 110) << table.names[static_cast<std::size_t>(j)];
    EXPECT_EQ(table.names[static_cast<std::size_t>(j)].find("fcr_lag"), std::string::npos);
  }
  // Every day-ahead block mean survives; its interactions are proportional to it.
  EXPECT_NE(std::find(kept.begin(), kept.end(), static_cast<int>(index_of(table.names, "daa_DE-LU_b3_mean"))),
            kept.end());
}

TEST(Interactions, ProductsOfMeansAndLags) {
  const auto data = market::synthesize_market(3, 4, market::Regime::mixed, {});
  FeatureOptions o;
  std::vector<Date> days{kFirst, kFirst + std::chrono::days{1}};
  const auto t = build_interactions(build_feature_table(data.exogenous, days, o), o);
  const auto a = index_of(t.names, "ppf_wind-on_b2_mean");
  const auto b = index_of(t.names, "fcr_lag_b5");
  const auto ab = index_of(t.names, "ppf_wind-on_b2_mean*fcr_lag_b5");
  for (Eigen::Index d = 0; d < 2; ++d)
    EXPECT_DOUBLE_EQ(t.values(d, static_cast<Eigen::Index>(ab)),
                     t.values(d, static_cast<Eigen::Index>(a)) * t.values(d, static_cast<Eigen::Index>(b)));
}

TEST(Filter, IdenticalAndProportionalColumnsCollapse) {
  Rng rng(1);
  Eigen::MatrixXd x(30, 5);
  for (Eigen::Index i = 0; i < 30; ++i) {
    x(i, 0) = rng.normal();
    x(i, 1) = rng.normal();
    x(i, 2) = x(i, 0);
    x(i, 3) = 7.0;
    x(i, 4) = -2.0 * x(i, 1) + 3.0;
  }
  EXPECT_EQ(filter_features(x), (std::vector<int>{0, 1}));
  EXPECT_THROW(filter_features(x.topRows(1)), DomainError);
}

TEST(Filter, KeptColumnsArePairwiseBelowThreshold) {
  Rng rng(9);
  Eigen::MatrixXd x(50, 40);
  for (Eigen::Index i = 0; i < 50; ++i) {
    const double common = rng.normal();
    for (Eigen::Index j = 0; j < 40; ++j) x(i, j) = common * (j % 4) + 0.2 * rng.normal();
  }
  const auto kept = filter_features(x);
  for (std::size_t a = 0; a < kept.size(); ++a)
    for (std::size_t b = a + 1; b < kept.size(); ++b) {
      const Eigen::VectorXd u = x.col(kept[a]).array() - x.col(kept[a]).mean();
      const Eigen::VectorXd v = x.col(kept[b]).array() - x.col(kept[b]).mean();
      EXPECT_LE(std::abs(u.dot(v) / (u.norm() * v.norm())), kCorrelationThreshold + 1e-12);
    }
  // Every dropped column correlates with an earlier kept one.
  EXPECT_LT(kept.size(), 40u);
}

TEST(Filter, DeskScaleSyntheticYearStaysUnder300) {
  const auto data = market::synthesize_market(11, 240, market::Regime::mixed, {});
  FeatureOptions o;
  std::vector<Date> days;
  for (int d = 0; d < 240; ++d) days.push_back(kFirst + std::chrono::days{d});
  const auto t = build_interactions(build_feature_table(data.exogenous, days, o), o);
  EXPECT_EQ(t.values.cols(), 398);
  const auto kept = filter_features(t.values);
  EXPECT_LT(kept.size(), 300u);
  EXPECT_GT(kept.size(), 10u);
}

TEST(Gbdt, LearnsAThresholdOnOneFeature) {
  Rng rng(5);
  const auto train = random_table(rng, 200, 8);
  const auto test = random_table(rng, 200, 8);
  std::vector<int> y;
  for (Eigen::Index i = 0; i < 200; ++i) y.push_back(train.values(i, 3) > 0.2 ? 1 : 0);
  Gbdt m;
  GbdtParams p;
  p.trees = 50;
  m.fit(train.values, y, 2, p, 1);
  int correct = 0;
  for (Eigen::Index i = 0; i < 200; ++i) correct += m.predict(test.values.row(i)) == (test.values(i, 3) > 0.2 ? 1 : 0);
  EXPECT_GE(correct, 190);
  const auto gains = m.split_gains();
  Eigen::Index top;
  gains.maxCoeff(&top);
  EXPECT_EQ(top, 3);
  const Eigen::VectorXd pr = m.predict_proba(test.values.row(0));
  EXPECT_NEAR(pr.sum(), 1.0, 1e-12);
}

TEST(Gbdt, ConstantInputPredictsTheMajorityClass) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Constant(12, 3, 4.0);
  const std::vector<int> y{2, 0, 2, 1, 2, 0, 2, 1, 2, 0, 2, 2};
  Gbdt m;
  m.fit(x, y, 3, GbdtParams{}, 3);
  EXPECT_EQ(m.predict(x.row(0)), 2);
  EXPECT_EQ(m.predict(Eigen::RowVector3d(-100, 0, 100)), 2);
  // Equal counts go to the lowest class.
  Gbdt tie;
  tie.fit(x.topRows(2), {1, 0}, 2, GbdtParams{}, 3);
  EXPECT_EQ(tie.predict(x.row(0)), 0);
}

TEST(Gbdt, SerializationAndSeedDeterminism) {
  Rng rng(8);
  const auto t = random_table(rng, 80, 6);
  std::vector<int> y;
  for (Eigen::Index i = 0; i < 80; ++i) y.push_back(static_cast<int>(rng.uniform_int(0, 2)));
  GbdtParams p;
  p.subsample = 0.8;
  p.colsample = 0.8;
  p.trees = 30;
  p.max_depth = 4;
  Gbdt a;
  Gbdt b;
  Gbdt c;
  a.fit(t.values, y, 3, p, 42);
  b.fit(t.values, y, 3, p, 42);
  c.fit(t.values, y, 3, p, 43);
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
  EXPECT_NE(a.to_json().dump(), c.to_json().dump());
  const auto back = Gbdt::from_json(nlohmann::ordered_json::parse(a.to_json().dump()));
  for (Eigen::Index i = 0; i < 80; ++i) EXPECT_EQ(back.margins(t.values.row(i)), a.margins(t.values.row(i)));
  EXPECT_THROW(a.fit(t.values, std::vector<int>(80, 3), 3, p, 1), DomainError);
}

TEST(Tuning, GridAndAnchoredFolds) {
  const auto grid = hyperparameter_grid();
  EXPECT_EQ(grid.size(), 288u);
  for (std::size_t i = 0; i < grid.size(); ++i)
    for (std::size_t j = i + 1; j < grid.size(); ++j) ASSERT_FALSE(grid[i] == grid[j]);

  const auto folds = anchored_folds(240, 5, 15);
  ASSERT_EQ(folds.size(), 5u);
  EXPECT_EQ(folds.front().train_end, 165);
  EXPECT_EQ(folds.back().valid_end, 240);
  for (std::size_t k = 0; k < folds.size(); ++k) {
    EXPECT_EQ(folds[k].valid_end - folds[k].train_end, 15);
    if (k > 0) EXPECT_GT(folds[k].train_end, folds[k - 1].train_end);  // nested training sets
  }
  EXPECT_THROW(anchored_folds(75, 5, 15), ConfigurationError);
  EXPECT_THROW(anchored_folds(60, 5, 15), ConfigurationError);
  EXPECT_NO_THROW(anchored_folds(76, 5, 15));
}

TEST(Tuning, SingleLabelWindowPredictsThatLabel) {
  Rng rng(4);
  const auto t = random_table(rng, 90, 6);
  Eigen::MatrixXd profits(90, 2);
  for (Eigen::Index i = 0; i < 90; ++i) profits.row(i) << 100.0 + i, 50.0;
  const std::vector<fcr::FcrStrategy> labels{{{8, 8, 8, 0, 0, 0}}, {{8, 8, 8, 8, 8, 8}}};
  TuningOptions o;
  o.candidates = 3;
  const auto m = tune_and_train(t, std::vector<int>(90, 0), profits, labels, 1, std::nullopt, o);
  const auto other = random_table(rng, 20, 6);
  auto probe = t;
  probe.values = other.values;
  probe.days.resize(20);
  for (Eigen::Index i = 0; i < 20; ++i) EXPECT_EQ(predict_class(m, probe, i), 0);
  EXPECT_DOUBLE_EQ(m.validation_profit, profits.col(0).tail(75).sum());
  EXPECT_EQ(m.candidates_evaluated, 3);
}

TEST(Tuning, SeparableDataIsLearnedAndRunsAreReproducible) {
  Rng rng(12);
  const int n = 120;
  const auto all = random_table(rng, n + 60, 10);
  auto best = [&](Eigen::Index i) { return all.values(i, 7) > 0.0 ? 1 : 0; };
  FeatureTable window = all;
  window.days.resize(n);
  window.values = all.values.topRows(n);
  Eigen::MatrixXd profits(n, 2);
  std::vector<int> y;
  for (Eigen::Index i = 0; i < n; ++i) {
    profits(i, best(i)) = 1000.0 + 50.0 * rng.uniform();
    profits(i, 1 - best(i)) = 800.0 + 50.0 * rng.uniform();
    y.push_back(best(i));
  }
  const std::vector<fcr::FcrStrategy> labels{{{8, 8, 8, 0, 0, 0}}, {{8, 8, 8, 8, 8, 8}}};
  TuningOptions o;
  o.candidates = 4;
  const auto m = tune_and_train(window, y, profits, labels, 99, std::nullopt, o);
  int correct = 0;
  for (Eigen::Index i = n; i < n + 60; ++i) correct += predict_class(m, all, i) == best(i);
  EXPECT_GE(correct, 57);
  const auto again = tune_and_train(window, y, profits, labels, 99, std::nullopt, o);
  EXPECT_EQ(to_json(m), to_json(again));

  // The incumbent is evaluated first and kept on ties.
  const auto with_incumbent = tune_and_train(window, y, profits, labels, 99, m.params, o);
  EXPECT_GE(with_incumbent.validation_profit, m.validation_profit - 1e-9);
}

TEST(Model, RoundTripAndSchemaGuard) {
  Rng rng(21);
  const auto t = random_table(rng, 80, 5);
  std::vector<int> y;
  Eigen::MatrixXd profits(80, 3);
  for (Eigen::Index i = 0; i < 80; ++i) {
    for (Eigen::Index k = 0; k < 3; ++k) profits(i, k) = rng.uniform(0.0, 10.0);
    Eigen::Index a;
    profits.row(i).maxCoeff(&a);
    y.push_back(static_cast<int>(a));
  }
  const std::vector<fcr::FcrStrategy> labels{{{5, 5, 5, 8, 8, 8}}, {{8, 8, 8, 0, 0, 5}}, {{8, 8, 8, 8, 8, 8}}};
  TuningOptions o;
  o.candidates = 2;
  const auto m = tune_and_train(t, y, profits, labels, 5, std::nullopt, o);
  const auto back = model_from_json(to_json(m));
  EXPECT_EQ(to_json(back), to_json(m));
  for (Eigen::Index i = 0; i < 80; ++i) {
    EXPECT_EQ(predict_class(back, t, i), predict_class(m, t, i));
    const auto s = predict(m, t, t.days[static_cast<std::size_t>(i)]);
    EXPECT_NE(std::find(labels.begin(), labels.end(), s), labels.end());
  }

  auto renamed = t;
  renamed.names[2] = "other";
  EXPECT_THROW(predict_class(m, renamed, 0), SchemaMismatchError);
  auto text = to_json(m);
  text.replace(text.find("\"version\": 1"), 12, "\"version\": 9");
  EXPECT_THROW(model_from_json(text), IngestionError);
  EXPECT_THROW(model_from_json("{not json"), IngestionError);
}
