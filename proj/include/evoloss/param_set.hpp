#pragma once

#include <map>
#include <string>

#include "evoloss/dense_array.hpp"
#include "evoloss/rng.hpp"

namespace evoloss {

// Named collection of parameter arrays for one network (or a whole bundle,
// with dotted section prefixes). Names are unique, shapes are fixed once
// added; iteration order is the sorted name order.
class ParamSet {
 public:
  using Map = std::map<std::string, DenseArray>;

  void add(const std::string& name, DenseArray value);
  // Glorot-style uniform init in [-a, a], a = sqrt(6 / (fan_in + fan_out)).
  void add_glorot(const std::string& name, std::size_t fan_in,
                  std::size_t fan_out, std::vector<std::size_t> shape, Rng& rng);

  bool contains(const std::string& name) const { return params_.count(name) > 0; }
  const DenseArray& get(const std::string& name) const;
  DenseArray& get_mutable(const std::string& name);
  std::size_t count() const { return params_.size(); }

  Map::const_iterator begin() const { return params_.begin(); }
  Map::const_iterator end() const { return params_.end(); }
  Map::iterator begin() { return params_.begin(); }
  Map::iterator end() { return params_.end(); }

  bool operator==(const ParamSet& other) const;

  // Container format: "EVPS" magic, u32 format version, u32 entry count, then
  // per parameter: u32 name length, UTF-8 name, u32 rank, u64 dims,
  // little-endian f64 payload. Round-trips bit-exactly.
  void save(const std::string& path) const;
  static ParamSet load(const std::string& path);

 private:
  Map params_;
};

// Gradients mirroring a ParamSet: identical key set and shapes.
class GradSet {
 public:
  GradSet() = default;
  // Zero gradients for every parameter in `params`.
  explicit GradSet(const ParamSet& params);

  const DenseArray& get(const std::string& name) const;
  DenseArray& get_mutable(const std::string& name);
  bool contains(const std::string& name) const { return grads_.count(name) > 0; }

  ParamSet::Map::const_iterator begin() const { return grads_.begin(); }
  ParamSet::Map::const_iterator end() const { return grads_.end(); }

  void set(const std::string& name, DenseArray g);

 private:
  ParamSet::Map grads_;
};

}  // namespace evoloss
