#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <vector>

#include "bess/market/types.hpp"

namespace bess::market {

/// Ingestion parameters for the snapshot CSV.
struct SnapshotSchema {
  int depth = kDefaultDepth;  // ladders deeper than this are truncated on load
  Minutes gate_closure = kDefaultGateClosure;
};

/// Snapshot CSV, one row per resting order:
///   timestamp,product_start,duration_h,side,price,quantity,order_id[,qualifier]
/// A new snapshot starts whenever the timestamp changes; timestamps must strictly increase.
/// The optional qualifier column (IOC, FOK, iceberg, ...) is accepted and ignored.
std::vector<OrderBookSnapshot> read_snapshots(std::istream& in, const SnapshotSchema& schema = {});
std::vector<OrderBookSnapshot> load_snapshots(const std::filesystem::path& path, const SnapshotSchema& schema = {});
/// Snapshots without any resting order have no rows and are therefore not written.
void write_snapshots(std::ostream& out, const std::vector<OrderBookSnapshot>& snapshots);

/// `timestamp,key,value`, one uniform series per key.
std::map<std::string, UniformSeries> read_keyed_series(std::istream& in);
void write_keyed_series(std::ostream& out, const std::map<std::string, UniformSeries>& series);

/// `timestamp,delta_f_hz`.
UniformSeries read_frequency(std::istream& in);
void write_frequency(std::ostream& out, const UniformSeries& frequency);

/// `date,efa_block,price_eur_mw` with efa_block in 1..6; every listed day needs all six blocks.
std::map<Date, std::array<double, 6>> read_fcr_clearing(std::istream& in);
void write_fcr_clearing(std::ostream& out, const std::map<Date, std::array<double, 6>>& clearing);

/// Directory layout: snapshots.csv, daa.csv, forecasts.csv, fcr_clearing.csv, frequency.csv.
struct MarketDataset {
  std::vector<OrderBookSnapshot> snapshots;
  ExogenousSeries exogenous;
};
MarketDataset load_dataset(const std::filesystem::path& dir, const SnapshotSchema& schema = {});
void write_dataset(const std::filesystem::path& dir, const MarketDataset& data);

}  // namespace bess::market
