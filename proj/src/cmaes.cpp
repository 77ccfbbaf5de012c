#include "evoloss/cmaes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "evoloss/errors.hpp"

namespace evoloss {
namespace {

constexpr double kEigenFloor = 1e-10;

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

// Cyclic Jacobi eigendecomposition of a symmetric matrix. `a` is destroyed;
// eigenvalues land on its diagonal, `vecs` columns hold the eigenvectors.
void jacobi_eigen(std::vector<double>& a, std::vector<double>& vecs,
                  std::size_t n) {
  vecs.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) vecs[i * n + i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
    if (off < 1e-24) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double apq = a[p * n + q];
        if (std::abs(apq) < 1e-300) continue;
        double app = a[p * n + p];
        double aqq = a[q * n + q];
        double theta = 0.5 * (aqq - app) / apq;
        double t = (theta >= 0.0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          double akp = a[k * n + p];
          double akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double apk = a[p * n + k];
          double aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double vkp = vecs[k * n + p];
          double vkq = vecs[k * n + q];
          vecs[k * n + p] = c * vkp - s * vkq;
          vecs[k * n + q] = s * vkp + c * vkq;
        }
      }
    }
  }
}

}  // namespace

Cmaes::Cmaes(const CmaesConfig& config) : rng_(config.seed) {
  if (config.dim == 0) throw ValueError("cmaes: dim must be positive");
  dim_ = config.dim;
  const double d = static_cast<double>(dim_);
  lambda_ = config.lambda != 0
                ? config.lambda
                : 4 + static_cast<std::size_t>(std::floor(3.0 * std::log(d)));
  if (lambda_ < 2) throw ValueError("cmaes: lambda must be at least 2");
  mu_ = lambda_ / 2;
  weights_.resize(mu_);
  for (std::size_t i = 0; i < mu_; ++i)
    weights_[i] = std::log(static_cast<double>(mu_) + 0.5) -
                  std::log(static_cast<double>(i + 1));
  double wsum = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  double wsq = 0.0;
  for (double& w : weights_) {
    w /= wsum;
    wsq += w * w;
  }
  mu_eff_ = 1.0 / wsq;

  c_sigma_ = (mu_eff_ + 2.0) / (d + mu_eff_ + 5.0);
  d_sigma_ = 1.0 +
             2.0 * std::max(0.0, std::sqrt((mu_eff_ - 1.0) / (d + 1.0)) - 1.0) +
             c_sigma_;
  c_c_ = (4.0 + mu_eff_ / d) / (d + 4.0 + 2.0 * mu_eff_ / d);
  c_1_ = 2.0 / ((d + 1.3) * (d + 1.3) + mu_eff_);
  c_mu_ = std::min(1.0 - c_1_, 2.0 * (mu_eff_ - 2.0 + 1.0 / mu_eff_) /
                                   ((d + 2.0) * (d + 2.0) + mu_eff_));
  chi_n_ = std::sqrt(d) * (1.0 - 1.0 / (4.0 * d) + 1.0 / (21.0 * d * d));

  if (config.mean0.empty()) {
    mean_.assign(dim_, 0.5);
  } else {
    if (config.mean0.size() != dim_)
      throw ValueError("cmaes: mean0 has size " +
                       std::to_string(config.mean0.size()) + ", expected " +
                       std::to_string(dim_));
    for (double m : config.mean0)
      if (!(m >= 0.0 && m <= 1.0))
        throw ValueError("cmaes: mean0 component " + std::to_string(m) +
                         " outside [0, 1]");
    mean_ = config.mean0;
  }
  sigma_ = config.sigma0;
  if (!(sigma_ > 0.0)) throw ValueError("cmaes: sigma0 must be positive");
  p_sigma_.assign(dim_, 0.0);
  p_c_.assign(dim_, 0.0);
  cov_.assign(dim_ * dim_, 0.0);
  for (std::size_t i = 0; i < dim_; ++i) cov_[i * dim_ + i] = 1.0;
  update_eigen();
}

void Cmaes::update_eigen() {
  std::vector<double> work(dim_ * dim_);
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = 0; j < dim_; ++j)
      work[i * dim_ + j] =
          0.5 * (cov_[i * dim_ + j] + cov_[j * dim_ + i]);
  jacobi_eigen(work, eig_vecs_, dim_);
  eig_sqrt_.resize(dim_);
  bool floored = false;
  std::vector<double> eig(dim_);
  for (std::size_t i = 0; i < dim_; ++i) {
    double ev = work[i * dim_ + i];
    if (ev < kEigenFloor) {
      ev = kEigenFloor;
      floored = true;
    }
    eig[i] = ev;
    eig_sqrt_[i] = std::sqrt(ev);
  }
  if (floored) {
    ++repairs_;
    // Rebuild C from the floored spectrum so it stays positive definite.
    for (std::size_t i = 0; i < dim_; ++i) {
      for (std::size_t j = 0; j < dim_; ++j) {
        double sum = 0.0;
        for (std::size_t k = 0; k < dim_; ++k)
          sum += eig_vecs_[i * dim_ + k] * eig[k] * eig_vecs_[j * dim_ + k];
        cov_[i * dim_ + j] = sum;
      }
    }
  }
}

std::vector<DenseArray> Cmaes::ask() {
  if (asked_) throw ValueError("cmaes: ask called twice without tell");
  asked_ = true;
  std::vector<DenseArray> out;
  out.reserve(lambda_);
  std::vector<double> z(dim_);
  for (std::size_t k = 0; k < lambda_; ++k) {
    for (std::size_t j = 0; j < dim_; ++j) z[j] = rng_.normal();
    DenseArray x = DenseArray::zeros({dim_});
    for (std::size_t i = 0; i < dim_; ++i) {
      double y = 0.0;
      for (std::size_t j = 0; j < dim_; ++j)
        y += eig_vecs_[i * dim_ + j] * eig_sqrt_[j] * z[j];
      x.data()[i] = clamp01(mean_[i] + sigma_ * y);
    }
    out.push_back(std::move(x));
  }
  return out;
}

void Cmaes::tell(const std::vector<DenseArray>& genomes,
                 const std::vector<double>& fitness) {
  if (!asked_) throw ValueError("cmaes: tell without a preceding ask");
  if (genomes.size() != lambda_ || fitness.size() != lambda_)
    throw ValueError("cmaes: tell expects exactly lambda genomes and fitness values");
  asked_ = false;

  std::vector<std::size_t> order(lambda_);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return fitness[a] > fitness[b];
  });

  // Steps in sigma units, recomputed from the clamped samples.
  std::vector<std::vector<double>> ys(mu_, std::vector<double>(dim_));
  for (std::size_t r = 0; r < mu_; ++r) {
    const DenseArray& g = genomes[order[r]];
    if (g.size() != dim_)
      throw ValueError("cmaes: genome has size " + std::to_string(g.size()) +
                       ", expected " + std::to_string(dim_));
    for (std::size_t i = 0; i < dim_; ++i)
      ys[r][i] = (g.data()[i] - mean_[i]) / sigma_;
  }
  std::vector<double> y_w(dim_, 0.0);
  for (std::size_t r = 0; r < mu_; ++r)
    for (std::size_t i = 0; i < dim_; ++i) y_w[i] += weights_[r] * ys[r][i];

  for (std::size_t i = 0; i < dim_; ++i)
    mean_[i] = clamp01(mean_[i] + sigma_ * y_w[i]);

  // C^{-1/2} y_w via the eigen basis.
  std::vector<double> tmp(dim_, 0.0);
  for (std::size_t j = 0; j < dim_; ++j) {
    double dot = 0.0;
    for (std::size_t i = 0; i < dim_; ++i)
      dot += eig_vecs_[i * dim_ + j] * y_w[i];
    tmp[j] = dot / eig_sqrt_[j];
  }
  std::vector<double> cinv_y(dim_, 0.0);
  for (std::size_t i = 0; i < dim_; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < dim_; ++j)
      sum += eig_vecs_[i * dim_ + j] * tmp[j];
    cinv_y[i] = sum;
  }

  const double cs_scale = std::sqrt(c_sigma_ * (2.0 - c_sigma_) * mu_eff_);
  double ps_norm_sq = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) {
    p_sigma_[i] = (1.0 - c_sigma_) * p_sigma_[i] + cs_scale * cinv_y[i];
    ps_norm_sq += p_sigma_[i] * p_sigma_[i];
  }
  const double ps_norm = std::sqrt(ps_norm_sq);
  const double gen1 = static_cast<double>(generation_ + 1);
  const double decay = 1.0 - std::pow(1.0 - c_sigma_, 2.0 * gen1);
  const double d = static_cast<double>(dim_);
  const bool h_sigma =
      ps_norm / std::sqrt(decay) / chi_n_ < 1.4 + 2.0 / (d + 1.0);

  const double cc_scale = std::sqrt(c_c_ * (2.0 - c_c_) * mu_eff_);
  for (std::size_t i = 0; i < dim_; ++i)
    p_c_[i] = (1.0 - c_c_) * p_c_[i] + (h_sigma ? cc_scale * y_w[i] : 0.0);

  // When h_sigma stalls the p_c update, the rank-1 term loses variance; the
  // standard correction keeps a bit more of the old C to compensate.
  const double keep = 1.0 - c_1_ - c_mu_ +
                      (h_sigma ? 0.0 : c_1_ * c_c_ * (2.0 - c_c_));
  for (std::size_t i = 0; i < dim_; ++i) {
    for (std::size_t j = 0; j < dim_; ++j) {
      double rank_mu = 0.0;
      for (std::size_t r = 0; r < mu_; ++r)
        rank_mu += weights_[r] * ys[r][i] * ys[r][j];
      cov_[i * dim_ + j] = keep * cov_[i * dim_ + j] +
                           c_1_ * p_c_[i] * p_c_[j] + c_mu_ * rank_mu;
    }
  }

  sigma_ *= std::exp((c_sigma_ / d_sigma_) * (ps_norm / chi_n_ - 1.0));
  if (!std::isfinite(sigma_) || sigma_ <= 0.0)
    throw ValueError("cmaes: step size became non-finite");
  ++generation_;
  update_eigen();
}

}  // namespace evoloss
