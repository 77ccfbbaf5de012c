#include "evoloss/param_set.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "evoloss/binio.hpp"
#include "evoloss/errors.hpp"

namespace evoloss {

using binio::read_f64;
using binio::read_u32;
using binio::read_u64;
using binio::write_f64;
using binio::write_u32;
using binio::write_u64;

namespace {
constexpr char kMagic[4] = {'E', 'V', 'P', 'S'};
constexpr std::uint32_t kFormatVersion = 1;
}  // namespace

void ParamSet::add(const std::string& name, DenseArray value) {
  if (params_.count(name)) {
    throw ValueError("ParamSet: duplicate parameter name '" + name + "'");
  }
  params_.emplace(name, std::move(value));
}

void ParamSet::add_glorot(const std::string& name, std::size_t fan_in,
                          std::size_t fan_out, std::vector<std::size_t> shape,
                          Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  DenseArray value(std::move(shape));
  for (double& v : value.values()) v = rng.uniform(-a, a);
  add(name, std::move(value));
}

const DenseArray& ParamSet::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ValueError("ParamSet: unknown parameter '" + name + "'");
  return it->second;
}

DenseArray& ParamSet::get_mutable(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ValueError("ParamSet: unknown parameter '" + name + "'");
  return it->second;
}

bool ParamSet::operator==(const ParamSet& other) const {
  if (params_.size() != other.params_.size()) return false;
  auto a = params_.begin();
  auto b = other.params_.begin();
  for (; a != params_.end(); ++a, ++b) {
    if (a->first != b->first || a->second.shape() != b->second.shape() ||
        a->second.values() != b->second.values()) {
      return false;
    }
  }
  return true;
}

void ParamSet::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os.write(kMagic, 4);
  write_u32(os, kFormatVersion);
  write_u32(os, static_cast<std::uint32_t>(params_.size()));
  for (const auto& [name, value] : params_) {
    write_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(os, static_cast<std::uint32_t>(value.rank()));
    for (std::size_t d : value.shape()) write_u64(os, d);
    for (double v : value.values()) write_f64(os, v);
  }
  if (!os) throw IoError("write failed for '" + path + "'");
}

ParamSet ParamSet::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "' for reading");
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw IoError("'" + path + "' is not a parameter container");
  }
  const std::uint32_t version = read_u32(is);
  if (version != kFormatVersion) {
    throw IoError("'" + path + "': unsupported format version " +
                  std::to_string(version));
  }
  const std::uint32_t count = read_u32(is);
  ParamSet out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = read_u32(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const std::uint32_t rank = read_u32(is);
    std::vector<std::size_t> shape(rank);
    std::size_t numel = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      shape[d] = static_cast<std::size_t>(read_u64(is));
      numel *= shape[d];
    }
    std::vector<double> data(numel);
    for (std::size_t j = 0; j < numel; ++j) data[j] = read_f64(is);
    if (!is) throw IoError("'" + path + "': truncated container");
    out.add(name, DenseArray(std::move(shape), std::move(data)));
  }
  return out;
}

GradSet::GradSet(const ParamSet& params) {
  for (const auto& [name, value] : params) {
    grads_.emplace(name, DenseArray::zeros(value.shape()));
  }
}

const DenseArray& GradSet::get(const std::string& name) const {
  auto it = grads_.find(name);
  if (it == grads_.end()) throw ValueError("GradSet: unknown parameter '" + name + "'");
  return it->second;
}

DenseArray& GradSet::get_mutable(const std::string& name) {
  auto it = grads_.find(name);
  if (it == grads_.end()) throw ValueError("GradSet: unknown parameter '" + name + "'");
  return it->second;
}

void GradSet::set(const std::string& name, DenseArray g) {
  grads_.insert_or_assign(name, std::move(g));
}

}  // namespace evoloss
