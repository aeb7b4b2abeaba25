#include "pmcoa/eval/merge.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

#include "pmcoa/error.hpp"
#include "pmcoa/util/fs.hpp"

namespace fs = std::filesystem;

namespace pmcoa::eval {

static_assert(std::endian::native == std::endian::little, "safetensors I/O assumes a little-endian host");

namespace {

std::size_t element_count(const std::vector<std::int64_t>& shape) {
  std::size_t n = 1;
  for (auto d : shape) {
    if (d < 0) throw SchemaError("negative dimension in tensor shape");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::size_t dtype_size(const std::string& dtype) {
  if (dtype == "F64") return 8;
  if (dtype == "F32") return 4;
  if (dtype == "F16" || dtype == "BF16") return 2;
  return 0;
}

float half_to_float(std::uint16_t h) {
  const std::uint32_t sign = (h & 0x8000u) << 16;
  std::uint32_t exp = (h >> 10) & 0x1f;
  std::uint32_t mant = h & 0x3ffu;
  std::uint32_t bits;
  if (exp == 0) {
    if (mant == 0) {
      bits = sign;
    } else {  // subnormal: renormalize
      exp = 127 - 15 + 1;
      while (!(mant & 0x400u)) {
        mant <<= 1;
        --exp;
      }
      bits = sign | (exp << 23) | ((mant & 0x3ffu) << 13);
    }
  } else if (exp == 31) {
    bits = sign | 0x7f800000u | (mant << 13);
  } else {
    bits = sign | ((exp + 127 - 15) << 23) | (mant << 13);
  }
  return std::bit_cast<float>(bits);
}

std::uint16_t float_to_half(float f) {
  const std::uint32_t x = std::bit_cast<std::uint32_t>(f);
  const std::uint16_t sign = static_cast<std::uint16_t>((x >> 16) & 0x8000u);
  const std::uint32_t exp = (x >> 23) & 0xffu;
  std::uint32_t mant = x & 0x7fffffu;
  if (exp == 0xff) return static_cast<std::uint16_t>(sign | 0x7c00u | (mant ? 0x200u : 0));
  const int e = static_cast<int>(exp) - 127 + 15;
  if (e >= 31) return static_cast<std::uint16_t>(sign | 0x7c00u);
  if (e <= 0) {
    if (e < -10) return sign;
    mant |= 0x800000u;
    const int shift = 14 - e;
    std::uint32_t h = mant >> shift;
    const std::uint32_t rem = mant & ((1u << shift) - 1);
    const std::uint32_t half = 1u << (shift - 1);
    if (rem > half || (rem == half && (h & 1u))) ++h;
    return static_cast<std::uint16_t>(sign | h);
  }
  std::uint32_t h = (static_cast<std::uint32_t>(e) << 10) | (mant >> 13);
  const std::uint32_t rem = mant & 0x1fffu;
  if (rem > 0x1000u || (rem == 0x1000u && (h & 1u))) ++h;  // may carry into the exponent, which is correct
  return static_cast<std::uint16_t>(sign | h);
}

float bf16_to_float(std::uint16_t b) { return std::bit_cast<float>(static_cast<std::uint32_t>(b) << 16); }

std::uint16_t float_to_bf16(float f) {
  std::uint32_t x = std::bit_cast<std::uint32_t>(f);
  if ((x & 0x7f800000u) == 0x7f800000u && (x & 0x7fffffu)) return static_cast<std::uint16_t>((x >> 16) | 0x40u);
  x += 0x7fffu + ((x >> 16) & 1u);
  return static_cast<std::uint16_t>(x >> 16);
}

void encode(const std::string& dtype, double v, char* out) {
  if (dtype == "F64") {
    std::memcpy(out, &v, 8);
  } else if (dtype == "F32") {
    const float f = static_cast<float>(v);
    std::memcpy(out, &f, 4);
  } else if (dtype == "F16") {
    const auto h = float_to_half(static_cast<float>(v));
    std::memcpy(out, &h, 2);
  } else {
    const auto h = float_to_bf16(static_cast<float>(v));
    std::memcpy(out, &h, 2);
  }
}

double decode(const std::string& dtype, const char* in) {
  if (dtype == "F64") {
    double v;
    std::memcpy(&v, in, 8);
    return v;
  }
  if (dtype == "F32") {
    float f;
    std::memcpy(&f, in, 4);
    return f;
  }
  std::uint16_t h;
  std::memcpy(&h, in, 2);
  return dtype == "F16" ? half_to_float(h) : bf16_to_float(h);
}

}  // namespace

double round_to_dtype(double v, const std::string& dtype) {
  if (!dtype_size(dtype)) throw ValidationError("unsupported dtype " + dtype);
  char buf[8];
  encode(dtype, v, buf);
  return decode(dtype, buf);
}

ParamSet wise_ft_merge(const ParamSet& base, const ParamSet& adapted, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("wise_ft_merge: alpha must be in [0, 1]");
  for (const auto& [name, t] : adapted) {
    if (!base.contains(name)) throw ValidationError("parameter '" + name + "' is missing from the base set");
  }
  ParamSet out;
  for (const auto& [name, b] : base) {
    const auto it = adapted.find(name);
    if (it == adapted.end()) throw ValidationError("parameter '" + name + "' is missing from the adapted set");
    const auto& a = it->second;
    if (a.shape != b.shape || a.values.size() != b.values.size()) {
      throw ValidationError("parameter '" + name + "' has different shapes in base and adapted sets");
    }
    Tensor m;
    m.dtype = b.dtype;
    m.shape = b.shape;
    if (alpha == 0.0) {
      m.values = b.values;
    } else if (alpha == 1.0) {
      m.values = a.values;
    } else {
      m.values.resize(b.values.size());
      for (std::size_t i = 0; i < m.values.size(); ++i) m.values[i] = (1.0 - alpha) * b.values[i] + alpha * a.values[i];
    }
    out.emplace(name, std::move(m));
  }
  return out;
}

ParamSet read_safetensors(const fs::path& path) {
  const std::string data = util::read_file(path);
  if (data.size() < 8) throw ParseError(path.string() + ": too short for a safetensors file", 0);
  std::uint64_t header_len;
  std::memcpy(&header_len, data.data(), 8);
  if (header_len > data.size() - 8) throw ParseError(path.string() + ": header length past end of file", 0);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(data.substr(8, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": bad header: " + e.what(), 8);
  }
  const std::size_t base = 8 + header_len;
  ParamSet out;
  for (const auto& [name, info] : header.items()) {
    if (name == "__metadata__") continue;
    Tensor t;
    try {
      t.dtype = info.at("dtype").get<std::string>();
      t.shape = info.at("shape").get<std::vector<std::int64_t>>();
      const auto offs = info.at("data_offsets").get<std::vector<std::uint64_t>>();
      const std::size_t width = dtype_size(t.dtype);
      if (!width) throw SchemaError(path.string() + ": parameter '" + name + "' has unsupported dtype " + t.dtype);
      const std::size_t n = element_count(t.shape);
      if (offs.size() != 2 || offs[1] < offs[0] || offs[1] - offs[0] != n * width || base + offs[1] > data.size()) {
        throw ParseError(path.string() + ": parameter '" + name + "' has bad data offsets", static_cast<long long>(base));
      }
      t.values.resize(n);
      const char* p = data.data() + base + offs[0];
      for (std::size_t i = 0; i < n; ++i) t.values[i] = decode(t.dtype, p + i * width);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(path.string() + ": parameter '" + name + "': " + e.what());
    }
    out.emplace(name, std::move(t));
  }
  return out;
}

void write_safetensors(const fs::path& path, const ParamSet& params, const std::map<std::string, std::string>& metadata) {
  nlohmann::json header = nlohmann::json::object();
  if (!metadata.empty()) header["__metadata__"] = metadata;
  std::string body;
  for (const auto& [name, t] : params) {
    const std::size_t width = dtype_size(t.dtype);
    if (!width) throw ValidationError("parameter '" + name + "' has unsupported dtype " + t.dtype);
    if (element_count(t.shape) != t.values.size()) {
      throw ValidationError("parameter '" + name + "': value count does not match its shape");
    }
    const std::size_t begin = body.size();
    body.resize(begin + t.values.size() * width);
    for (std::size_t i = 0; i < t.values.size(); ++i) encode(t.dtype, t.values[i], body.data() + begin + i * width);
    header[name] = {{"dtype", t.dtype}, {"shape", t.shape}, {"data_offsets", {begin, body.size()}}};
  }
  std::string h = header.dump();
  h.append((8 - h.size() % 8) % 8, ' ');
  std::string out(8, '\0');
  const std::uint64_t len = h.size();
  std::memcpy(out.data(), &len, 8);
  out += h;
  out += body;
  util::write_file_atomic(path, out);
}

}  // namespace pmcoa::eval
