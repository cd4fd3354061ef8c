#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "flowbench/container.hpp"

namespace flowbench {

// Space x time array of real field samples; the universal data carrier.
// In memory each column is one snapshot, ordered channel-major then row-major
// over the space axes. On disk the "data" array is shaped
// [n_snapshots, n_channels, space_dims...] (snapshot-major, row-major), which
// matches the in-memory column ordering.
struct SnapshotMatrix {
  std::vector<std::int64_t> space_dims;
  std::int64_t n_channels = 1;
  double dt = 1.0;
  Eigen::MatrixXd data;  // (n_channels * prod(space_dims)) x n_snapshots

  std::int64_t space_size() const;
  std::int64_t flat_dim() const { return space_size() * n_channels; }
  std::int64_t n_snapshots() const { return data.cols(); }

  // Checks the shape/finiteness/dt invariants; throws on violation.
  void validate() const;
};

enum class ChallengeTag { compression, forecasting, sensing };

const char* challenge_tag_name(ChallengeTag tag);
ChallengeTag challenge_tag_from_name(const std::string& name);

// Output of a fitted method, exchanged between the driver and the evaluator.
struct ResultsFile {
  ChallengeTag tag = ChallengeTag::compression;
  std::string method_name;
  std::string provenance;  // config echo
  ArrayMap arrays;
};

// Metric bundle written by the evaluator.
struct MetricsFile {
  ChallengeTag tag = ChallengeTag::compression;
  ArrayMap values;  // metric name -> scalar ([1]) or curve ([k])
};

void write_results(const std::string& path, const ResultsFile& results);
ResultsFile read_results(const std::string& path);

void write_metrics(const std::string& path, const MetricsFile& metrics);
MetricsFile read_metrics(const std::string& path);

// Optional cross-checks against dimensions known only to the caller.
struct SchemaExpectations {
  std::optional<std::int64_t> space;       // flattened space*channels
  std::optional<std::int64_t> sequences;   // forecasting
  std::optional<std::int64_t> horizon;     // forecasting
  std::optional<std::int64_t> n_targets;   // sensing
  std::optional<std::int64_t> n_times;     // sensing / compression latent
};

// Frozen per-challenge schemas:
//   compression: "modes" f64 [D,N], "energies" f64 [N], "latent" f64 [N,T],
//                optional "mean" f64 [D]
//   forecasting: "forecasts" f64 [S,H,D]
//   sensing:     "estimates" f64 [Z,T], "warmup" i64 [1]
// Returns human-readable violations; empty means conforming.
std::vector<std::string> validate_results(const ResultsFile& results,
                                          ChallengeTag schema_tag,
                                          const SchemaExpectations* expect = nullptr);

// Snapshot container serialization ("data" + "dt" arrays, extra arrays kept).
ArrayMap snapshot_to_arrays(const SnapshotMatrix& snaps, const std::string& name = "data");
SnapshotMatrix snapshot_from_arrays(const ArrayMap& arrays, const std::string& name = "data");

// Ensembles of equally-shaped sequences serialize as one
// [sequences, snapshots, channels, space...] array.
TypedArray ensemble_to_array(const std::vector<SnapshotMatrix>& sequences);
std::vector<SnapshotMatrix> ensemble_from_array(const TypedArray& array, double dt);

// Eigen <-> TypedArray helpers (row-major serialization of column-major data).
TypedArray matrix_to_array(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_array(const TypedArray& a);
TypedArray cmatrix_to_array(const Eigen::MatrixXcd& m);
Eigen::MatrixXcd cmatrix_from_array(const TypedArray& a);
TypedArray vector_to_array(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_array(const TypedArray& a);

}  // namespace flowbench
