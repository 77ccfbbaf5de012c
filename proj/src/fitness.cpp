#include "evoloss/fitness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "evoloss/errors.hpp"
#include "evoloss/rng.hpp"

namespace evoloss {

namespace {

double row_dist2(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double diff = a[j] - b[j];
    s += diff * diff;
  }
  return s;
}

void check_points(const DenseArray& X, std::size_t k, const char* op) {
  if (X.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected [n, D] points, got " +
                     X.shape_str());
  }
  if (X.rows() < k) {
    throw ValueError(std::string(op) + ": " + std::to_string(X.rows()) +
                     " points for k = " + std::to_string(k));
  }
  if (!X.all_finite()) {
    throw ValueError(std::string(op) + ": points contain non-finite values");
  }
}

// Lexicographic row order; canonicalizes the row sequence fed to k-means so
// results do not depend on how the caller happened to order the points.
DenseArray sort_rows(const DenseArray& X) {
  const std::size_t n = X.rows(), d = X.cols();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double* ra = X.data() + a * d;
    const double* rb = X.data() + b * d;
    for (std::size_t j = 0; j < d; ++j) {
      if (ra[j] != rb[j]) return ra[j] < rb[j];
    }
    return false;
  });
  DenseArray out({n, d});
  for (std::size_t i = 0; i < n; ++i) {
    const double* src = X.data() + order[i] * d;
    std::copy(src, src + d, out.data() + i * d);
  }
  return out;
}

}  // namespace

ClusterModel kmeans(const DenseArray& X, std::size_t k, std::uint64_t seed,
                    std::size_t max_iter) {
  if (k < 1) throw ValueError("kmeans: k must be >= 1");
  check_points(X, k, "kmeans");
  const std::size_t n = X.rows(), d = X.cols();
  Rng rng(seed);

  ClusterModel model;
  model.k = k;
  model.seed = seed;
  model.centroids = DenseArray({k, d});
  double* cents = model.centroids.data();

  // k-means++ seeding: first centroid uniform, then distance-squared
  // weighted draws.
  {
    const double* first = X.data() + rng.uniform_index(n) * d;
    std::copy(first, first + d, cents);
    std::vector<double> dist2(n);
    for (std::size_t i = 0; i < n; ++i) {
      dist2[i] = row_dist2(X.data() + i * d, cents, d);
    }
    for (std::size_t c = 1; c < k; ++c) {
      double total = 0.0;
      for (double v : dist2) total += v;
      std::size_t pick = 0;
      if (total > 0.0) {
        const double u = rng.uniform() * total;
        double acc = 0.0;
        pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
          acc += dist2[i];
          if (u < acc) {
            pick = i;
            break;
          }
        }
      } else {
        pick = rng.uniform_index(n);  // all points coincide with centroids
      }
      const double* row = X.data() + pick * d;
      std::copy(row, row + d, cents + c * d);
      for (std::size_t i = 0; i < n; ++i) {
        dist2[i] = std::min(dist2[i], row_dist2(X.data() + i * d, row, d));
      }
    }
  }

  std::vector<std::size_t> assign(n, k);
  std::vector<std::size_t> counts(k);
  std::vector<double> sums(k * d);
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    std::fill(counts.begin(), counts.end(), 0);
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = X.data() + i * d;
      std::size_t best = 0;
      double best_d = row_dist2(row, cents, d);
      for (std::size_t c = 1; c < k; ++c) {
        const double dist = row_dist2(row, cents + c * d, d);
        if (dist < best_d) {
          best_d = dist;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
      counts[best] += 1;
      double* sum = sums.data() + best * d;
      for (std::size_t j = 0; j < d; ++j) sum[j] += row[j];
    }
    if (!changed) break;
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its centroid
      const double inv = 1.0 / static_cast<double>(counts[c]);
      for (std::size_t j = 0; j < d; ++j) cents[c * d + j] = sums[c * d + j] * inv;
    }
  }
  return model;
}

DenseArray soft_membership(const DenseArray& x, const ClusterModel& model) {
  if (x.rank() != 1 || x.size() != model.centroids.cols()) {
    throw_shape_mismatch("soft_membership", x, model.centroids);
  }
  const std::size_t k = model.k, d = x.size();
  DenseArray out({k});
  double min_d2 = std::numeric_limits<double>::infinity();
  std::vector<double> d2(k);
  for (std::size_t c = 0; c < k; ++c) {
    d2[c] = row_dist2(x.data(), model.centroids.data() + c * d, d);
    min_d2 = std::min(min_d2, d2[c]);
  }
  double total = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    out[c] = std::exp(min_d2 - d2[c]);
    total += out[c];
  }
  for (std::size_t c = 0; c < k; ++c) out[c] /= total;
  return out;
}

DenseArray soft_memberships(const DenseArray& X, const ClusterModel& model) {
  check_points(X, 1, "soft_memberships");
  if (X.cols() != model.centroids.cols()) {
    throw_shape_mismatch("soft_memberships", X, model.centroids);
  }
  const std::size_t n = X.rows(), d = X.cols(), k = model.k;
  DenseArray out({n, k});
  std::vector<double> d2(k);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = X.data() + i * d;
    double min_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      d2[c] = row_dist2(row, model.centroids.data() + c * d, d);
      min_d2 = std::min(min_d2, d2[c]);
    }
    double total = 0.0;
    double* orow = out.data() + i * k;
    for (std::size_t c = 0; c < k; ++c) {
      orow[c] = std::exp(min_d2 - d2[c]);
      total += orow[c];
    }
    for (std::size_t c = 0; c < k; ++c) orow[c] /= total;
  }
  return out;
}

DenseArray zipf_prior(std::size_t k, double s) {
  if (k < 1) throw ValueError("zipf_prior: k must be >= 1");
  if (s <= 0.0) throw ValueError("zipf_prior: s must be > 0");
  DenseArray q({k});
  double harmonic = 0.0;
  for (std::size_t i = 1; i <= k; ++i) {
    q[i - 1] = std::pow(static_cast<double>(i), -s);
    harmonic += q[i - 1];
  }
  for (std::size_t i = 0; i < k; ++i) q[i] /= harmonic;
  return q;
}

DenseArray cluster_mass(const DenseArray& memberships) {
  if (memberships.rank() != 2) {
    throw ShapeError("cluster_mass: expected [n, k] memberships, got " +
                     memberships.shape_str());
  }
  const std::size_t n = memberships.rows(), k = memberships.cols();
  if (n == 0) throw ValueError("cluster_mass: no rows");
  for (std::size_t i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) row_sum += memberships.at(i, c);
    if (std::abs(row_sum - 1.0) > 1e-6) {
      throw ValueError("cluster_mass: row " + std::to_string(i) +
                       " sums to " + std::to_string(row_sum));
    }
  }
  DenseArray mass({k});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < k; ++c) mass[c] += memberships.at(i, c);
  }
  for (std::size_t c = 0; c < k; ++c) mass[c] /= static_cast<double>(n);
  return mass;
}

double kl_divergence(const DenseArray& p, const DenseArray& q) {
  if (!p.same_shape(q) || p.rank() != 1) throw_shape_mismatch("kl_divergence", p, q);
  double p_sum = 0.0, q_sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p_sum += p[i];
    q_sum += q[i];
  }
  if (std::abs(p_sum - 1.0) > 1e-6 || std::abs(q_sum - 1.0) > 1e-6) {
    throw ValueError("kl_divergence: inputs must sum to 1 (got " +
                     std::to_string(p_sum) + ", " + std::to_string(q_sum) +
                     ")");
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] <= 0.0) {
      throw ValueError("kl_divergence: q[" + std::to_string(i) +
                       "] = 0 under positive p");
    }
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return kl;
}

FitnessReport elo_fitness(const DenseArray& embeddings, std::size_t k,
                          double s, std::size_t trials,
                          std::uint64_t base_seed) {
  if (trials < 1) throw ValueError("elo_fitness: trials must be >= 1");
  check_points(embeddings, k, "elo_fitness");
  const DenseArray X = sort_rows(embeddings);

  FitnessReport report;
  report.prior = zipf_prior(k, s);
  report.per_trial_kl.reserve(trials);
  double total = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const ClusterModel model = kmeans(X, k, base_seed + t);
    DenseArray mass = cluster_mass(soft_memberships(X, model));
    std::sort(mass.values().begin(), mass.values().end(),
              std::greater<double>());
    const double kl = kl_divergence(mass, report.prior);
    report.per_trial_kl.push_back(kl);
    total += kl;
    if (t + 1 == trials) report.cluster_masses = std::move(mass);
  }
  report.mean_kl = total / static_cast<double>(trials);
  report.fitness = -report.mean_kl;
  return report;
}

double weak_fitness(const DenseArray& embeddings,
                    const std::vector<int>& labels,
                    const std::vector<int>& clip_ids, std::size_t k,
                    std::size_t trials, std::uint64_t base_seed) {
  if (trials < 1) throw ValueError("weak_fitness: trials must be >= 1");
  check_points(embeddings, 1, "weak_fitness");
  const std::size_t n = embeddings.rows(), d = embeddings.cols();
  if (labels.size() != n || clip_ids.size() != n) {
    throw ValueError("weak_fitness: " + std::to_string(n) + " rows vs " +
                     std::to_string(labels.size()) + " labels and " +
                     std::to_string(clip_ids.size()) + " ids");
  }

  // Assemble both halves in clip-id order so the score does not depend on
  // the row order the caller used.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return clip_ids[a] < clip_ids[b];
  });
  std::vector<std::size_t> fit_rows, eval_rows;
  for (std::size_t row : order) {
    if (clip_ids[row] % 2 == 0) {
      fit_rows.push_back(row);
    } else {
      eval_rows.push_back(row);
    }
  }
  if (fit_rows.size() < k) {
    throw ValueError("weak_fitness: fit half has " +
                     std::to_string(fit_rows.size()) + " points for k = " +
                     std::to_string(k));
  }
  if (eval_rows.empty()) {
    throw ValueError("weak_fitness: scoring half is empty");
  }

  DenseArray fit({fit_rows.size(), d});
  for (std::size_t i = 0; i < fit_rows.size(); ++i) {
    const double* src = embeddings.data() + fit_rows[i] * d;
    std::copy(src, src + d, fit.data() + i * d);
  }

  int max_label = 0;
  for (int l : labels) {
    if (l < 0) throw ValueError("weak_fitness: negative label");
    max_label = std::max(max_label, l);
  }
  const std::size_t num_labels = static_cast<std::size_t>(max_label) + 1;

  double accuracy_sum = 0.0;
  std::vector<std::size_t> votes;
  std::vector<int> cluster_label(k);
  for (std::size_t t = 0; t < trials; ++t) {
    const ClusterModel model = kmeans(fit, k, base_seed + t);
    const double* cents = model.centroids.data();

    votes.assign(k * num_labels, 0);
    for (std::size_t i = 0; i < fit_rows.size(); ++i) {
      const double* row = fit.data() + i * d;
      std::size_t best = 0;
      double best_d = row_dist2(row, cents, d);
      for (std::size_t c = 1; c < k; ++c) {
        const double dist = row_dist2(row, cents + c * d, d);
        if (dist < best_d) {
          best_d = dist;
          best = c;
        }
      }
      votes[best * num_labels +
            static_cast<std::size_t>(labels[fit_rows[i]])] += 1;
    }
    for (std::size_t c = 0; c < k; ++c) {
      std::size_t best_count = 0;
      int best_label = -1;  // abstains when the cluster is empty
      for (std::size_t l = 0; l < num_labels; ++l) {
        if (votes[c * num_labels + l] > best_count) {
          best_count = votes[c * num_labels + l];
          best_label = static_cast<int>(l);
        }
      }
      cluster_label[c] = best_label;
    }

    std::size_t correct = 0;
    for (std::size_t row : eval_rows) {
      const double* point = embeddings.data() + row * d;
      std::size_t best = 0;
      double best_d = row_dist2(point, cents, d);
      for (std::size_t c = 1; c < k; ++c) {
        const double dist = row_dist2(point, cents + c * d, d);
        if (dist < best_d) {
          best_d = dist;
          best = c;
        }
      }
      if (cluster_label[best] == labels[row]) correct += 1;
    }
    accuracy_sum += static_cast<double>(correct) /
                    static_cast<double>(eval_rows.size());
  }
  return accuracy_sum / static_cast<double>(trials);
}

double weak_fitness(const DenseArray& embeddings,
                    const std::vector<int>& labels, std::size_t k,
                    std::size_t trials, std::uint64_t base_seed) {
  std::vector<int> ids(embeddings.rank() == 2 ? embeddings.rows() : 0);
  std::iota(ids.begin(), ids.end(), 0);
  return weak_fitness(embeddings, labels, ids, k, trials, base_seed);
}

}  // namespace evoloss
