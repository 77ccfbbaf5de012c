#include <cstdio>
#include <filesystem>

#include "doctest.h"

#include "evoloss/errors.hpp"
#include "evoloss/param_set.hpp"
#include "evoloss/rng.hpp"

using namespace evoloss;

TEST_CASE("add/get round-trips values and rejects duplicates") {
  ParamSet p;
  p.add("w", DenseArray({2, 2}, {1, 2, 3, 4}));
  CHECK(p.get("w").at(1, 0) == 3.0);
  CHECK(p.contains("w"));
  CHECK_FALSE(p.contains("v"));
  CHECK_THROWS_AS(p.add("w", DenseArray::zeros({1})), ValueError);
  CHECK_THROWS_AS(p.get("missing"), ValueError);
}

TEST_CASE("iteration order is sorted by name") {
  ParamSet p;
  p.add("zeta", DenseArray::zeros({1}));
  p.add("alpha", DenseArray::zeros({1}));
  p.add("mid", DenseArray::zeros({1}));
  std::vector<std::string> names;
  for (const auto& [name, value] : p) names.push_back(name);
  CHECK(names == std::vector<std::string>{"alpha", "mid", "zeta"});
}

TEST_CASE("glorot init stays inside the symmetric bound") {
  ParamSet p;
  Rng rng(3);
  p.add_glorot("w", 30, 20, {30, 20}, rng);
  const double bound = std::sqrt(6.0 / (30 + 20));
  const DenseArray& w = p.get("w");
  double lo = 0.0, hi = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    CHECK(std::abs(w.data()[i]) <= bound);
    lo = std::min(lo, w.data()[i]);
    hi = std::max(hi, w.data()[i]);
  }
  CHECK(lo < -0.5 * bound);
  CHECK(hi > 0.5 * bound);
}

TEST_CASE("container save/load round-trips bit-exactly") {
  ParamSet p;
  Rng rng(4);
  p.add_glorot("enc.w", 7, 5, {7, 5}, rng);
  p.add("b", DenseArray({3}, {0.1, -2.5e-17, 3e200}));
  const std::string path = "param_set_test.bin";
  p.save(path);
  ParamSet q = ParamSet::load(path);
  CHECK(p == q);
  std::remove(path.c_str());
}

TEST_CASE("loading a truncated container is an IoError") {
  ParamSet p;
  p.add("b", DenseArray({2}, {1.0, 2.0}));
  const std::string path = "param_set_trunc.bin";
  p.save(path);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 4);
  CHECK_THROWS_AS(ParamSet::load(path), IoError);
  std::remove(path.c_str());
}

TEST_CASE("grad set mirrors the parameter shapes") {
  ParamSet p;
  p.add("w", DenseArray::zeros({2, 3}));
  GradSet g(p);
  CHECK(g.get("w").same_shape(p.get("w")));
  g.get_mutable("w").at(0, 0) = 5.0;
  CHECK(g.get("w").at(0, 0) == 5.0);
}
