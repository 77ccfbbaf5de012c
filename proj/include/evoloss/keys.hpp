#pragma once

#include <string>
#include <vector>

#include "evoloss/synthgen.hpp"

namespace evoloss {

// Genome keys name one weighted loss term each: `<M><T>[<layer>]` where M is
// the representation modality (R main, G grey, F flow, A audio) and T the
// task (R reconstruct, P predict future, S shuffle detect, B backward detect,
// C cross-modal transfer, A temporal alignment, E contrastive embed,
// D distill, with a 1-based tap layer suffix).
//
// Instantiated keys:
//   per modality:  R P S B            (RR RP RS RB, GR ..., FR ..., AR ...)
//   cross-modal:   RC (main->flow), FC (flow->main), GC (grey->main)
//   alignment:     GA FA AA           (auxiliary stream vs main stream)
//   contrastive:   GE FE AE           (auxiliary embedding vs main embedding)
//   distillation:  GD1 GD2 FD1 FD2 AD1 AD2 (auxiliary tap -> main tap)
//
// The sorted order of these names is canonical and defines the genome vector
// layout everywhere (files, CMA-ES coordinates, reports).

struct GenomeKey {
  Modality modality;  // first letter
  char task;          // 'R','P','S','B','C','A','E','D'
  int layer;          // distill tap layer (1-based); 0 for other tasks
};

// All keys in canonical (sorted) order.
const std::vector<std::string>& canonical_keys();
std::size_t genome_dim();

// Position of key in canonical order; throws ValueError for unknown keys.
std::size_t key_index(const std::string& key);
bool is_known_key(const std::string& key);

GenomeKey parse_key(const std::string& key);
Modality modality_from_letter(char letter);

// Decoder target of a cross-modal (task 'C') key's source modality.
Modality cross_target(Modality source);

}  // namespace evoloss
