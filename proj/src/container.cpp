#include "flowbench/container.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "flowbench/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "container payloads are written as native little-endian");

namespace flowbench {

namespace {

constexpr char kMagic[8] = {'F', 'L', 'O', 'W', 'B', 'N', 'C', 'H'};
constexpr std::uint32_t kVersion = 1;

using json = nlohmann::json;

Dtype dtype_from_name(const std::string& name) {
  if (name == "f64") return Dtype::f64;
  if (name == "c128") return Dtype::c128;
  if (name == "i64") return Dtype::i64;
  fail(errk::format, "unknown dtype '" + name + "'");
}

std::int64_t shape_product(const std::vector<std::int64_t>& shape) {
  std::int64_t n = 1;
  for (std::int64_t d : shape) {
    if (d < 0) fail(errk::format, "negative shape dimension");
    n *= d;
  }
  return n;
}

}  // namespace

const char* dtype_name(Dtype d) {
  switch (d) {
    case Dtype::f64: return "f64";
    case Dtype::c128: return "c128";
    case Dtype::i64: return "i64";
  }
  return "?";
}

std::size_t dtype_size(Dtype d) {
  switch (d) {
    case Dtype::f64: return 8;
    case Dtype::c128: return 16;
    case Dtype::i64: return 8;
  }
  return 0;
}

TypedArray::TypedArray(std::vector<std::int64_t> shape, F64 values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (shape_product(shape_) != static_cast<std::int64_t>(f64().size()))
    fail(errk::shape, "f64 array: shape does not match value count");
}

TypedArray::TypedArray(std::vector<std::int64_t> shape, C128 values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (shape_product(shape_) != static_cast<std::int64_t>(c128().size()))
    fail(errk::shape, "c128 array: shape does not match value count");
}

TypedArray::TypedArray(std::vector<std::int64_t> shape, I64 values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (shape_product(shape_) != static_cast<std::int64_t>(i64().size()))
    fail(errk::shape, "i64 array: shape does not match value count");
}

Dtype TypedArray::dtype() const {
  switch (data_.index()) {
    case 0: return Dtype::f64;
    case 1: return Dtype::c128;
    default: return Dtype::i64;
  }
}

std::int64_t TypedArray::element_count() const { return shape_product(shape_); }

const TypedArray::F64& TypedArray::f64() const {
  if (dtype() != Dtype::f64) fail(errk::shape, "array is not f64");
  return std::get<F64>(data_);
}

const TypedArray::C128& TypedArray::c128() const {
  if (dtype() != Dtype::c128) fail(errk::shape, "array is not c128");
  return std::get<C128>(data_);
}

const TypedArray::I64& TypedArray::i64() const {
  if (dtype() != Dtype::i64) fail(errk::shape, "array is not i64");
  return std::get<I64>(data_);
}

bool TypedArray::all_finite() const {
  switch (dtype()) {
    case Dtype::f64:
      for (double v : f64())
        if (!std::isfinite(v)) return false;
      return true;
    case Dtype::c128:
      for (const auto& v : c128())
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
      return true;
    case Dtype::i64:
      return true;
  }
  return true;
}

bool TypedArray::operator==(const TypedArray& other) const {
  return shape_ == other.shape_ && data_ == other.data_;
}

void write_container(const std::string& path, const ArrayMap& arrays, const MetaMap& meta) {
  if (arrays.empty()) fail(errk::schema, "write_container: no arrays given");

  json entries = json::array();
  std::uint64_t offset = 0;  // relative to payload start
  for (const auto& [name, array] : arrays) {
    if (name.empty()) fail(errk::schema, "write_container: empty array name");
    if (!array.all_finite())
      fail(errk::input, "write_container: array '" + name + "' has non-finite values");
    json e;
    e["name"] = name;
    e["dtype"] = dtype_name(array.dtype());
    e["shape"] = array.shape();
    e["byte_offset"] = offset;
    entries.push_back(std::move(e));
    offset += array.byte_size();
  }
  json header;
  header["arrays"] = std::move(entries);
  if (!meta.empty()) header["meta"] = meta;
  const std::string header_text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(errk::io, "write_container: cannot open '" + path + "' for writing");
  out.write(kMagic, 8);
  const std::uint32_t version = kVersion;
  out.write(reinterpret_cast<const char*>(&version), 4);
  const std::uint64_t header_len = header_text.size();
  out.write(reinterpret_cast<const char*>(&header_len), 8);
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  for (const auto& [name, array] : arrays) {
    switch (array.dtype()) {
      case Dtype::f64:
        out.write(reinterpret_cast<const char*>(array.f64().data()),
                  static_cast<std::streamsize>(array.byte_size()));
        break;
      case Dtype::c128:
        out.write(reinterpret_cast<const char*>(array.c128().data()),
                  static_cast<std::streamsize>(array.byte_size()));
        break;
      case Dtype::i64:
        out.write(reinterpret_cast<const char*>(array.i64().data()),
                  static_cast<std::streamsize>(array.byte_size()));
        break;
    }
  }
  out.flush();
  if (!out) fail(errk::io, "write_container: write to '" + path + "' failed");
}

Container read_container(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errk::io, "read_container: cannot open '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (bytes.size() < 20) fail(errk::format, "read_container: file shorter than fixed header");
  if (std::memcmp(bytes.data(), kMagic, 8) != 0)
    fail(errk::format, "read_container: bad magic, not a container file");
  std::uint32_t version = 0;
  std::memcpy(&version, bytes.data() + 8, 4);
  if (version != kVersion)
    fail(errk::format, "read_container: unknown format version " + std::to_string(version));
  std::uint64_t header_len = 0;
  std::memcpy(&header_len, bytes.data() + 12, 8);
  if (20 + header_len > bytes.size())
    fail(errk::corruption, "read_container: declared header extends past end of file");

  json header;
  try {
    header = json::parse(bytes.substr(20, header_len));
  } catch (const json::parse_error& e) {
    fail(errk::format, std::string("read_container: header is not valid JSON: ") + e.what());
  }
  if (!header.is_object() || !header.contains("arrays") || !header["arrays"].is_array())
    fail(errk::format, "read_container: header missing 'arrays' list");

  const std::size_t payload_start = 20 + header_len;
  const std::size_t payload_size = bytes.size() - payload_start;

  Container result;
  if (header.contains("meta")) {
    if (!header["meta"].is_object())
      fail(errk::format, "read_container: 'meta' must be an object");
    for (const auto& [k, v] : header["meta"].items()) {
      if (!v.is_string()) fail(errk::format, "read_container: meta values must be strings");
      result.meta[k] = v.get<std::string>();
    }
  }

  for (const auto& e : header["arrays"]) {
    if (!e.contains("name") || !e.contains("dtype") || !e.contains("shape") ||
        !e.contains("byte_offset"))
      fail(errk::format, "read_container: array entry missing a required field");
    const std::string name = e["name"].get<std::string>();
    if (result.arrays.count(name))
      fail(errk::format, "read_container: duplicate array name '" + name + "'");
    const Dtype dtype = dtype_from_name(e["dtype"].get<std::string>());
    const std::vector<std::int64_t> shape = e["shape"].get<std::vector<std::int64_t>>();
    const std::uint64_t offset = e["byte_offset"].get<std::uint64_t>();
    const std::int64_t count = shape_product(shape);
    const std::size_t nbytes = static_cast<std::size_t>(count) * dtype_size(dtype);
    if (offset > payload_size || offset + nbytes > payload_size)
      fail(errk::corruption, "read_container: array '" + name +
                                 "' payload extends past end of file (offset " +
                                 std::to_string(offset) + ", " + std::to_string(nbytes) +
                                 " bytes, payload " + std::to_string(payload_size) + ")");
    const char* src = bytes.data() + payload_start + offset;
    switch (dtype) {
      case Dtype::f64: {
        TypedArray::F64 values(static_cast<std::size_t>(count));
        std::memcpy(values.data(), src, nbytes);
        result.arrays.emplace(name, TypedArray(shape, std::move(values)));
        break;
      }
      case Dtype::c128: {
        TypedArray::C128 values(static_cast<std::size_t>(count));
        std::memcpy(values.data(), src, nbytes);
        result.arrays.emplace(name, TypedArray(shape, std::move(values)));
        break;
      }
      case Dtype::i64: {
        TypedArray::I64 values(static_cast<std::size_t>(count));
        std::memcpy(values.data(), src, nbytes);
        result.arrays.emplace(name, TypedArray(shape, std::move(values)));
        break;
      }
    }
  }
  return result;
}

}  // namespace flowbench
