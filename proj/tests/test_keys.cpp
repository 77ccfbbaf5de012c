#include <algorithm>

#include "doctest.h"

#include "evoloss/errors.hpp"
#include "evoloss/keys.hpp"

using namespace evoloss;

TEST_CASE("canonical key catalog: count, sortedness, uniqueness") {
  const std::vector<std::string>& keys = canonical_keys();
  CHECK(keys.size() == genome_dim());
  CHECK(keys.size() == 31);
  CHECK(std::is_sorted(keys.begin(), keys.end()));
  CHECK(std::adjacent_find(keys.begin(), keys.end()) == keys.end());
  // Every modality contributes its per-modality tasks.
  for (const char* k : {"RR", "RP", "RS", "RB", "GR", "FR", "AR"})
    CHECK(is_known_key(k));
  // Cross-modal, alignment, contrastive and distillation edges.
  for (const char* k : {"RC", "FC", "GC", "GA", "FA", "AA", "GE", "FE", "AE",
                        "GD1", "GD2", "FD1", "FD2", "AD1", "AD2"})
    CHECK(is_known_key(k));
  CHECK_FALSE(is_known_key("AC"));
  CHECK_FALSE(is_known_key("RD1"));
  CHECK_FALSE(is_known_key("RA"));
}

TEST_CASE("key_index inverts the catalog order") {
  const std::vector<std::string>& keys = canonical_keys();
  for (std::size_t i = 0; i < keys.size(); ++i)
    CHECK(key_index(keys[i]) == i);
  CHECK_THROWS_AS(key_index("XX"), ValueError);
}

TEST_CASE("parse_key splits modality, task and layer") {
  GenomeKey k = parse_key("GD2");
  CHECK(k.modality == Modality::Grey);
  CHECK(k.task == 'D');
  CHECK(k.layer == 2);
  GenomeKey r = parse_key("RS");
  CHECK(r.modality == Modality::Main);
  CHECK(r.task == 'S');
  CHECK(r.layer == 0);
  CHECK_THROWS_AS(parse_key("QQ"), ValueError);
}

TEST_CASE("cross-modal decoder targets") {
  CHECK(cross_target(Modality::Main) == Modality::Flow);
  CHECK(cross_target(Modality::Flow) == Modality::Main);
  CHECK(cross_target(Modality::Grey) == Modality::Main);
  CHECK_THROWS_AS(cross_target(Modality::Audio), ValueError);
}

TEST_CASE("modality letters map onto the catalog prefixes") {
  CHECK(modality_from_letter('R') == Modality::Main);
  CHECK(modality_from_letter('G') == Modality::Grey);
  CHECK(modality_from_letter('F') == Modality::Flow);
  CHECK(modality_from_letter('A') == Modality::Audio);
  CHECK_THROWS_AS(modality_from_letter('Z'), ValueError);
}
