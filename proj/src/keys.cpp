#include "evoloss/keys.hpp"

#include <algorithm>
#include <map>

#include "evoloss/errors.hpp"

namespace evoloss {

namespace {

std::vector<std::string> build_keys() {
  std::vector<std::string> keys;
  for (char m : {'R', 'G', 'F', 'A'}) {
    for (char t : {'R', 'P', 'S', 'B'}) keys.push_back({m, t});
  }
  for (const char* k : {"RC", "FC", "GC"}) keys.push_back(k);
  for (const char* k : {"GA", "FA", "AA"}) keys.push_back(k);
  for (const char* k : {"GE", "FE", "AE"}) keys.push_back(k);
  for (char m : {'G', 'F', 'A'}) {
    keys.push_back(std::string{m, 'D', '1'});
    keys.push_back(std::string{m, 'D', '2'});
  }
  std::sort(keys.begin(), keys.end());
  return keys;
}

const std::map<std::string, std::size_t>& key_positions() {
  static const std::map<std::string, std::size_t> pos = [] {
    std::map<std::string, std::size_t> m;
    const auto& keys = canonical_keys();
    for (std::size_t i = 0; i < keys.size(); ++i) m[keys[i]] = i;
    return m;
  }();
  return pos;
}

}  // namespace

const std::vector<std::string>& canonical_keys() {
  static const std::vector<std::string> keys = build_keys();
  return keys;
}

std::size_t genome_dim() { return canonical_keys().size(); }

std::size_t key_index(const std::string& key) {
  auto it = key_positions().find(key);
  if (it == key_positions().end()) {
    throw ValueError("unknown genome key '" + key + "'");
  }
  return it->second;
}

bool is_known_key(const std::string& key) {
  return key_positions().count(key) > 0;
}

Modality modality_from_letter(char letter) {
  switch (letter) {
    case 'R': return Modality::Main;
    case 'G': return Modality::Grey;
    case 'F': return Modality::Flow;
    case 'A': return Modality::Audio;
  }
  throw ValueError(std::string("unknown modality letter '") + letter + "'");
}

GenomeKey parse_key(const std::string& key) {
  key_index(key);  // rejects unknown keys
  GenomeKey g;
  g.modality = modality_from_letter(key[0]);
  g.task = key[1];
  g.layer = key.size() > 2 ? key[2] - '0' : 0;
  return g;
}

Modality cross_target(Modality source) {
  switch (source) {
    case Modality::Main: return Modality::Flow;
    case Modality::Flow: return Modality::Main;
    case Modality::Grey: return Modality::Main;
    case Modality::Audio: break;
  }
  throw ValueError("no cross-modal task for modality audio");
}

}  // namespace evoloss
