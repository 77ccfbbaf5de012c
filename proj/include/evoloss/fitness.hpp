#pragma once

#include <cstdint>
#include <vector>

#include "evoloss/dense_array.hpp"

namespace evoloss {

struct ClusterModel {
  DenseArray centroids;  // [k, D]
  std::size_t k = 0;
  std::uint64_t seed = 0;
};

// k-means++ initialization followed by Lloyd iterations until the assignment
// fixpoint or max_iter. Deterministic in (X, seed); within-cluster SSE is
// non-increasing per iteration; a cluster that loses all members keeps its
// previous centroid.
ClusterModel kmeans(const DenseArray& X, std::size_t k, std::uint64_t seed,
                    std::size_t max_iter = 100);

// p(c_i|x) = softmax over clusters of -||x - c_i||^2 (2 sigma^2 = 1),
// computed with max-subtraction.
DenseArray soft_membership(const DenseArray& x, const ClusterModel& model);
// Row-wise batch version: [n, D] -> [n, k].
DenseArray soft_memberships(const DenseArray& X, const ClusterModel& model);

// q_i = (1/i^s) / H_{k,s} for ranks i = 1..k; strictly decreasing, sums to 1.
DenseArray zipf_prior(std::size_t k, double s);

// Columnwise mean of membership rows (each row must sum to 1).
DenseArray cluster_mass(const DenseArray& memberships);

// sum_i p_i ln(p_i / q_i). Terms with p_i = 0 contribute 0; a zero q_i under
// positive p_i is an error. Both inputs must sum to 1 within 1e-6.
double kl_divergence(const DenseArray& p, const DenseArray& q);

struct FitnessReport {
  std::vector<double> per_trial_kl;
  double mean_kl = 0.0;
  double fitness = 0.0;           // -mean_kl; higher is better
  DenseArray cluster_masses;      // sorted descending, last trial
  DenseArray prior;
};

// Unsupervised fitness: average over `trials` k-means runs (seed = base_seed
// + trial) of KL(sorted cluster masses || Zipf prior). Embedding rows are
// brought into a canonical order first, so the score is invariant under any
// permutation of the input rows.
FitnessReport elo_fitness(const DenseArray& embeddings, std::size_t k,
                          double s, std::size_t trials = 20,
                          std::uint64_t base_seed = 0);

// Weakly-supervised baseline: clips with even ids form the cluster-fitting
// half, odd ids the scoring half. Each cluster votes its majority fit-half
// label (an empty cluster abstains and scores incorrect); the result is mean
// nearest-centroid accuracy over trials.
double weak_fitness(const DenseArray& embeddings,
                    const std::vector<int>& labels,
                    const std::vector<int>& clip_ids, std::size_t k,
                    std::size_t trials = 20, std::uint64_t base_seed = 0);
// Convenience: clip ids equal to row indices.
double weak_fitness(const DenseArray& embeddings,
                    const std::vector<int>& labels, std::size_t k,
                    std::size_t trials = 20, std::uint64_t base_seed = 0);

}  // namespace evoloss
