#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace flowbench {

// Self-describing binary array container (".fbf").
//
// Layout:
//   bytes 0..7    magic "FLOWBNCH"
//   bytes 8..11   format version, u32 little-endian (currently 1)
//   bytes 12..19  header length H, u64 little-endian
//   bytes 20..20+H-1   UTF-8 JSON header
//   remaining     raw little-endian array payloads, row-major
//
// The JSON header is an object:
//   {"arrays":[{"name":..,"dtype":"f64"|"c128"|"i64","shape":[..],
//               "byte_offset":..}, ...],
//    "meta":{"key":"value", ...}}        // "meta" optional
// byte_offset is relative to the start of the payload region (the first byte
// after the header), which keeps the header self-consistent and the file
// position-independent. c128 elements are stored as (real, imag) f64 pairs.

enum class Dtype { f64, c128, i64 };

const char* dtype_name(Dtype d);
std::size_t dtype_size(Dtype d);

class TypedArray {
 public:
  using F64 = std::vector<double>;
  using C128 = std::vector<std::complex<double>>;
  using I64 = std::vector<std::int64_t>;

  TypedArray() : shape_{0}, data_(F64{}) {}
  TypedArray(std::vector<std::int64_t> shape, F64 values);
  TypedArray(std::vector<std::int64_t> shape, C128 values);
  TypedArray(std::vector<std::int64_t> shape, I64 values);

  Dtype dtype() const;
  const std::vector<std::int64_t>& shape() const { return shape_; }
  std::int64_t element_count() const;
  std::size_t byte_size() const { return element_count() * dtype_size(dtype()); }

  const F64& f64() const;
  const C128& c128() const;
  const I64& i64() const;

  bool all_finite() const;
  bool operator==(const TypedArray& other) const;

 private:
  std::vector<std::int64_t> shape_;
  std::variant<F64, C128, I64> data_;
};

using ArrayMap = std::map<std::string, TypedArray>;
using MetaMap = std::map<std::string, std::string>;

void write_container(const std::string& path, const ArrayMap& arrays,
                     const MetaMap& meta = {});

struct Container {
  ArrayMap arrays;
  MetaMap meta;
};

Container read_container(const std::string& path);

}  // namespace flowbench
