#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace pmcoa::eval {

// One named parameter array. Values are held as double whatever the
// on-disk dtype ("F64", "F32", "F16" or "BF16").
struct Tensor {
  std::string dtype = "F64";
  std::vector<std::int64_t> shape;
  std::vector<double> values;

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

using ParamSet = std::map<std::string, Tensor>;

// Elementwise (1 - alpha) * base + alpha * adapted for every parameter;
// alpha 0 and 1 return exact copies. The result keeps the base dtype.
// ValidationError naming the parameter on a name or shape mismatch, or for
// alpha outside [0, 1].
ParamSet wise_ft_merge(const ParamSet& base, const ParamSet& adapted, double alpha);

// safetensors container: u64 little-endian header length, JSON header
// mapping names to {dtype, shape, data_offsets}, then the raw data.
ParamSet read_safetensors(const std::filesystem::path& path);
// Values are rounded to each tensor's dtype on write.
void write_safetensors(const std::filesystem::path& path, const ParamSet& params,
                       const std::map<std::string, std::string>& metadata = {});

// Round-trips a value through a dtype (what writing then reading yields).
double round_to_dtype(double v, const std::string& dtype);

}  // namespace pmcoa::eval
