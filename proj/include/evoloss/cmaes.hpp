#pragma once

#include <cstdint>
#include <vector>

#include "evoloss/dense_array.hpp"
#include "evoloss/rng.hpp"

namespace evoloss {

struct CmaesConfig {
  std::size_t dim = 0;
  std::size_t lambda = 0;        // 0 -> 4 + floor(3 ln d)
  double sigma0 = 0.3;
  std::vector<double> mean0;     // empty -> 0.5 everywhere
  std::uint64_t seed = 0;
};

// Covariance matrix adaptation evolution strategy (rank-1 + rank-mu updates,
// cumulative step-size adaptation), maximizing over the box [0,1]^dim.
// Samples and the mean are clamped into the box; covariance updates use the
// clamped samples.
class Cmaes {
 public:
  explicit Cmaes(const CmaesConfig& config);

  std::size_t dim() const { return dim_; }
  std::size_t lambda() const { return lambda_; }
  const std::vector<double>& mean() const { return mean_; }
  double sigma() const { return sigma_; }
  std::size_t generation() const { return generation_; }
  // Times an eigenvalue of C had to be floored at 1e-10 to keep C positive
  // definite; surfaced so runs can log repairs.
  std::size_t repair_count() const { return repairs_; }

  // One generation of candidate genomes, each clamped to [0,1]^dim.
  std::vector<DenseArray> ask();
  // Ranks by fitness (higher better) and updates mean, paths, covariance and
  // step size. `genomes` must be the vectors returned by the matching ask().
  void tell(const std::vector<DenseArray>& genomes,
            const std::vector<double>& fitness);

 private:
  void update_eigen();

  std::size_t dim_ = 0;
  std::size_t lambda_ = 0;
  std::size_t mu_ = 0;
  std::vector<double> weights_;  // mu recombination weights, sum 1
  double mu_eff_ = 0.0;
  double c_sigma_ = 0.0, d_sigma_ = 0.0;
  double c_c_ = 0.0, c_1_ = 0.0, c_mu_ = 0.0;
  double chi_n_ = 0.0;

  std::vector<double> mean_;
  double sigma_ = 0.3;
  std::vector<double> p_sigma_, p_c_;
  std::vector<double> cov_;        // [d*d] symmetric
  std::vector<double> eig_vecs_;   // [d*d], columns are eigenvectors
  std::vector<double> eig_sqrt_;   // sqrt of eigenvalues
  std::size_t generation_ = 0;
  std::size_t repairs_ = 0;
  bool asked_ = false;
  Rng rng_;
};

}  // namespace evoloss
