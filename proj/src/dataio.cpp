#include "flowbench/dataio.hpp"

#include <cmath>
#include <sstream>

#include "flowbench/errors.hpp"

namespace flowbench {

namespace {

std::string shape_text(const std::vector<std::int64_t>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? ", " : "") << shape[i];
  os << "]";
  return os.str();
}

// One schema row: required array with a dtype and rank.
struct FieldSpec {
  const char* name;
  Dtype dtype;
  int rank;
  bool required;
};

void check_field(const ResultsFile& results, const FieldSpec& field,
                 std::vector<std::string>& violations) {
  auto it = results.arrays.find(field.name);
  if (it == results.arrays.end()) {
    if (field.required)
      violations.push_back("missing required array '" + std::string(field.name) + "'");
    return;
  }
  const TypedArray& a = it->second;
  if (a.dtype() != field.dtype)
    violations.push_back("array '" + std::string(field.name) + "' has dtype " +
                         dtype_name(a.dtype()) + ", expected " + dtype_name(field.dtype));
  if (static_cast<int>(a.shape().size()) != field.rank)
    violations.push_back("array '" + std::string(field.name) + "' has rank " +
                         std::to_string(a.shape().size()) + ", expected " +
                         std::to_string(field.rank));
}

void check_dim(const char* array, const char* what, std::int64_t got,
               std::optional<std::int64_t> want, std::vector<std::string>& violations) {
  if (want && got != *want)
    violations.push_back("array '" + std::string(array) + "' " + what + " is " +
                         std::to_string(got) + ", expected " + std::to_string(*want));
}

}  // namespace

std::int64_t SnapshotMatrix::space_size() const {
  std::int64_t n = 1;
  for (std::int64_t d : space_dims) n *= d;
  return n;
}

void SnapshotMatrix::validate() const {
  if (space_dims.empty()) fail(errk::shape, "snapshot matrix: empty space_dims");
  for (std::int64_t d : space_dims)
    if (d < 1) fail(errk::shape, "snapshot matrix: nonpositive space dimension");
  if (n_channels < 1) fail(errk::shape, "snapshot matrix: nonpositive channel count");
  if (!(dt > 0.0)) fail(errk::input, "snapshot matrix: dt must be positive");
  if (data.rows() != flat_dim())
    fail(errk::shape, "snapshot matrix: data rows " + std::to_string(data.rows()) +
                          " do not match channels*space " + std::to_string(flat_dim()));
  if (!data.allFinite()) fail(errk::input, "snapshot matrix: non-finite values");
}

const char* challenge_tag_name(ChallengeTag tag) {
  switch (tag) {
    case ChallengeTag::compression: return "compression";
    case ChallengeTag::forecasting: return "forecasting";
    case ChallengeTag::sensing: return "sensing";
  }
  return "?";
}

ChallengeTag challenge_tag_from_name(const std::string& name) {
  if (name == "compression") return ChallengeTag::compression;
  if (name == "forecasting") return ChallengeTag::forecasting;
  if (name == "sensing") return ChallengeTag::sensing;
  fail(errk::format, "unknown challenge tag '" + name + "'");
}

void write_results(const std::string& path, const ResultsFile& results) {
  MetaMap meta;
  meta["kind"] = "results";
  meta["challenge_tag"] = challenge_tag_name(results.tag);
  meta["method_name"] = results.method_name;
  meta["provenance"] = results.provenance;
  write_container(path, results.arrays, meta);
}

ResultsFile read_results(const std::string& path) {
  Container c = read_container(path);
  auto tag_it = c.meta.find("challenge_tag");
  if (tag_it == c.meta.end())
    fail(errk::format, "results file '" + path + "' has no challenge_tag");
  ResultsFile out;
  out.tag = challenge_tag_from_name(tag_it->second);
  if (auto it = c.meta.find("method_name"); it != c.meta.end()) out.method_name = it->second;
  if (auto it = c.meta.find("provenance"); it != c.meta.end()) out.provenance = it->second;
  out.arrays = std::move(c.arrays);
  return out;
}

void write_metrics(const std::string& path, const MetricsFile& metrics) {
  for (const auto& [name, a] : metrics.values)
    if (!a.all_finite()) fail(errk::input, "metrics value '" + name + "' not finite");
  MetaMap meta;
  meta["kind"] = "metrics";
  meta["challenge_tag"] = challenge_tag_name(metrics.tag);
  write_container(path, metrics.values, meta);
}

MetricsFile read_metrics(const std::string& path) {
  Container c = read_container(path);
  auto tag_it = c.meta.find("challenge_tag");
  if (tag_it == c.meta.end())
    fail(errk::format, "metrics file '" + path + "' has no challenge_tag");
  MetricsFile out;
  out.tag = challenge_tag_from_name(tag_it->second);
  out.values = std::move(c.arrays);
  return out;
}

std::vector<std::string> validate_results(const ResultsFile& results, ChallengeTag schema_tag,
                                          const SchemaExpectations* expect) {
  std::vector<std::string> violations;
  if (results.tag != schema_tag)
    violations.push_back(std::string("results tagged '") + challenge_tag_name(results.tag) +
                         "', schema expects '" + challenge_tag_name(schema_tag) + "'");

  switch (schema_tag) {
    case ChallengeTag::compression: {
      const FieldSpec fields[] = {{"modes", Dtype::f64, 2, true},
                                  {"energies", Dtype::f64, 1, true},
                                  {"latent", Dtype::f64, 2, true},
                                  {"mean", Dtype::f64, 1, false}};
      for (const auto& f : fields) check_field(results, f, violations);
      if (!violations.empty()) break;
      const auto& modes = results.arrays.at("modes");
      const auto& energies = results.arrays.at("energies");
      const auto& latent = results.arrays.at("latent");
      if (modes.shape()[1] != energies.shape()[0])
        violations.push_back("'modes' columns and 'energies' length differ");
      if (latent.shape()[0] != modes.shape()[1])
        violations.push_back("'latent' rows do not match mode count");
      if (auto it = results.arrays.find("mean");
          it != results.arrays.end() && it->second.shape()[0] != modes.shape()[0])
        violations.push_back("'mean' length does not match mode rows");
      if (expect) {
        check_dim("modes", "row count", modes.shape()[0], expect->space, violations);
        check_dim("latent", "column count", latent.shape()[1], expect->n_times, violations);
      }
      break;
    }
    case ChallengeTag::forecasting: {
      check_field(results, {"forecasts", Dtype::f64, 3, true}, violations);
      if (!violations.empty()) break;
      const auto& f = results.arrays.at("forecasts");
      if (expect) {
        check_dim("forecasts", "sequence count", f.shape()[0], expect->sequences, violations);
        check_dim("forecasts", "horizon", f.shape()[1], expect->horizon, violations);
        check_dim("forecasts", "space size", f.shape()[2], expect->space, violations);
      }
      break;
    }
    case ChallengeTag::sensing: {
      check_field(results, {"estimates", Dtype::f64, 2, true}, violations);
      check_field(results, {"warmup", Dtype::i64, 1, true}, violations);
      if (!violations.empty()) break;
      const auto& est = results.arrays.at("estimates");
      const auto& warmup = results.arrays.at("warmup");
      if (warmup.element_count() != 1)
        violations.push_back("'warmup' must hold exactly one value");
      else if (warmup.i64()[0] < 0 || warmup.i64()[0] >= est.shape()[1])
        violations.push_back("'warmup' outside [0, n_times)");
      if (expect) {
        check_dim("estimates", "target count", est.shape()[0], expect->n_targets, violations);
        check_dim("estimates", "time count", est.shape()[1], expect->n_times, violations);
      }
      break;
    }
  }
  return violations;
}

ArrayMap snapshot_to_arrays(const SnapshotMatrix& snaps, const std::string& name) {
  snaps.validate();
  const std::int64_t T = snaps.n_snapshots();
  const std::int64_t D = snaps.flat_dim();
  std::vector<std::int64_t> shape;
  shape.push_back(T);
  shape.push_back(snaps.n_channels);
  for (std::int64_t d : snaps.space_dims) shape.push_back(d);
  // Column t of the in-memory matrix is contiguous and already ordered
  // channel-major/row-major, so snapshot-major serialization is a transpose.
  std::vector<double> values(static_cast<std::size_t>(T * D));
  for (std::int64_t t = 0; t < T; ++t)
    for (std::int64_t i = 0; i < D; ++i)
      values[static_cast<std::size_t>(t * D + i)] = snaps.data(i, t);
  ArrayMap out;
  out.emplace(name, TypedArray(shape, std::move(values)));
  out.emplace("dt", TypedArray({1}, std::vector<double>{snaps.dt}));
  return out;
}

SnapshotMatrix snapshot_from_arrays(const ArrayMap& arrays, const std::string& name) {
  auto it = arrays.find(name);
  if (it == arrays.end()) fail(errk::schema, "container has no '" + name + "' array");
  const TypedArray& a = it->second;
  if (a.dtype() != Dtype::f64) fail(errk::schema, "'" + name + "' must be f64");
  if (a.shape().size() < 3)
    fail(errk::schema, "'" + name + "' must be [snapshots, channels, space...]");
  SnapshotMatrix out;
  const std::int64_t T = a.shape()[0];
  out.n_channels = a.shape()[1];
  out.space_dims.assign(a.shape().begin() + 2, a.shape().end());
  if (auto dt_it = arrays.find("dt"); dt_it != arrays.end() && dt_it->second.element_count() == 1)
    out.dt = dt_it->second.f64()[0];
  const std::int64_t D = out.flat_dim();
  if (T * D != a.element_count()) fail(errk::corruption, "'" + name + "' shape inconsistent");
  out.data.resize(D, T);
  const auto& values = a.f64();
  for (std::int64_t t = 0; t < T; ++t)
    for (std::int64_t i = 0; i < D; ++i)
      out.data(i, t) = values[static_cast<std::size_t>(t * D + i)];
  out.validate();
  return out;
}

TypedArray ensemble_to_array(const std::vector<SnapshotMatrix>& sequences) {
  if (sequences.empty()) fail(errk::shape, "ensemble_to_array: empty ensemble");
  const auto S = static_cast<std::int64_t>(sequences.size());
  const SnapshotMatrix& first = sequences.front();
  first.validate();
  const std::int64_t T = first.n_snapshots();
  const std::int64_t D = first.flat_dim();
  std::vector<std::int64_t> shape{S, T, first.n_channels};
  for (std::int64_t d : first.space_dims) shape.push_back(d);

  std::vector<double> values(static_cast<std::size_t>(S * T * D));
  for (std::int64_t s = 0; s < S; ++s) {
    const SnapshotMatrix& seq = sequences[static_cast<std::size_t>(s)];
    if (seq.n_snapshots() != T || seq.flat_dim() != D ||
        seq.space_dims != first.space_dims || seq.n_channels != first.n_channels)
      fail(errk::shape, "ensemble_to_array: sequences must share one shape");
    for (std::int64_t t = 0; t < T; ++t)
      for (std::int64_t i = 0; i < D; ++i)
        values[static_cast<std::size_t>((s * T + t) * D + i)] = seq.data(i, t);
  }
  return TypedArray(shape, std::move(values));
}

std::vector<SnapshotMatrix> ensemble_from_array(const TypedArray& array, double dt) {
  if (array.dtype() != Dtype::f64 || array.shape().size() < 4)
    fail(errk::schema, "ensemble array must be f64 [sequences, snapshots, channels, space...]");
  const std::int64_t S = array.shape()[0];
  const std::int64_t T = array.shape()[1];
  std::vector<SnapshotMatrix> out;
  out.reserve(static_cast<std::size_t>(S));
  SnapshotMatrix proto;
  proto.n_channels = array.shape()[2];
  proto.space_dims.assign(array.shape().begin() + 3, array.shape().end());
  proto.dt = dt;
  const std::int64_t D = proto.flat_dim();
  const auto& values = array.f64();
  for (std::int64_t s = 0; s < S; ++s) {
    SnapshotMatrix seq = proto;
    seq.data.resize(D, T);
    for (std::int64_t t = 0; t < T; ++t)
      for (std::int64_t i = 0; i < D; ++i)
        seq.data(i, t) = values[static_cast<std::size_t>((s * T + t) * D + i)];
    seq.validate();
    out.push_back(std::move(seq));
  }
  return out;
}

TypedArray matrix_to_array(const Eigen::MatrixXd& m) {
  std::vector<double> values(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      values[static_cast<std::size_t>(i * m.cols() + j)] = m(i, j);
  return TypedArray({m.rows(), m.cols()}, std::move(values));
}

Eigen::MatrixXd matrix_from_array(const TypedArray& a) {
  if (a.shape().size() != 2) fail(errk::schema, "expected rank-2 f64 array");
  Eigen::MatrixXd m(a.shape()[0], a.shape()[1]);
  const auto& values = a.f64();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      m(i, j) = values[static_cast<std::size_t>(i * m.cols() + j)];
  return m;
}

TypedArray cmatrix_to_array(const Eigen::MatrixXcd& m) {
  std::vector<std::complex<double>> values(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      values[static_cast<std::size_t>(i * m.cols() + j)] = m(i, j);
  return TypedArray({m.rows(), m.cols()}, std::move(values));
}

Eigen::MatrixXcd cmatrix_from_array(const TypedArray& a) {
  if (a.shape().size() != 2) fail(errk::schema, "expected rank-2 c128 array");
  Eigen::MatrixXcd m(a.shape()[0], a.shape()[1]);
  const auto& values = a.c128();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      m(i, j) = values[static_cast<std::size_t>(i * m.cols() + j)];
  return m;
}

TypedArray vector_to_array(const Eigen::VectorXd& v) {
  return TypedArray({v.size()}, std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from_array(const TypedArray& a) {
  if (a.shape().size() != 1) fail(errk::schema, "expected rank-1 f64 array");
  const auto& values = a.f64();
  return Eigen::Map<const Eigen::VectorXd>(values.data(),
                                           static_cast<Eigen::Index>(values.size()));
}

}  // namespace flowbench
