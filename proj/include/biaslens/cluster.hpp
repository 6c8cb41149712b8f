// Copyright 2026 The biaslens Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// k-means (Lloyd iterations, k-means++ seeding, best of several restarts)
// and silhouette-driven selection of the cluster count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "biaslens/embed.hpp"
#include "biaslens/error.hpp"
#include "biaslens/random.hpp"

namespace biaslens {

struct KMeansOptions {
  std::size_t max_iter = 300;
  double tol = 1e-6;  // on the largest centroid shift
  std::size_t restarts = 5;
};

struct ClusteringResult {
  std::size_t k = 0;
  std::vector<std::size_t> assignments;
  std::vector<EmbeddingVector> centroids;
  double inertia = 0.0;
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
  // Inertia after every iteration of the winning restart.
  std::vector<double> inertia_history;

  std::vector<std::size_t> cluster_sizes() const {
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t a : assignments) ++sizes[a];
    return sizes;
  }

  std::vector<std::vector<std::size_t>> members() const {
    std::vector<std::vector<std::size_t>> out(k);
    for (std::size_t i = 0; i < assignments.size(); ++i) out[assignments[i]].push_back(i);
    return out;
  }
};

namespace detail {

using Point = std::vector<double>;

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline void check_points(std::span<const EmbeddingVector> vectors) {
  require(!vectors.empty(), ErrorKind::kInvalidArgument, "clustering needs at least one vector");
  const std::size_t dim = vectors.front().dim();
  for (std::size_t i = 1; i < vectors.size(); ++i) {
    require(vectors[i].dim() == dim, ErrorKind::kInvalidArgument,
            "clustering: vector " + std::to_string(i) + " has dim " +
                std::to_string(vectors[i].dim()) + ", expected " + std::to_string(dim));
  }
}

inline std::vector<Point> seed_plus_plus(std::span<const EmbeddingVector> x, std::size_t k,
                                         Rng& rng) {
  const std::size_t n = x.size();
  std::vector<Point> centroids;
  centroids.reserve(k);
  auto take = [&](std::size_t i) {
    centroids.emplace_back(x[i].values().begin(), x[i].values().end());
  };
  take(rng.uniform_index(n));
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(x[i].values(), centroids[0]);
  while (centroids.size() < k) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = n;
    if (total > 0.0) {
      const double u = rng.uniform01() * total;
      double cum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        cum += d2[i];
        pick = i;
        if (cum > u) break;
      }
    } else {
      pick = rng.uniform_index(n);
    }
    take(pick);
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(x[i].values(), centroids.back()));
    }
  }
  return centroids;
}

inline std::size_t nearest(std::span<const double> p, const std::vector<Point>& centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = squared_distance(p, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

// Componentwise mean of each cluster, summing members in index order.
inline std::vector<Point> cluster_means(std::span<const EmbeddingVector> x,
                                        const std::vector<std::size_t>& assign, std::size_t k) {
  const std::size_t dim = x.front().dim();
  std::vector<Point> sums(k, Point(dim, 0.0));
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto& s = sums[assign[i]];
    for (std::size_t d = 0; d < dim; ++d) s[d] += x[i][d];
    ++counts[assign[i]];
  }
  for (std::size_t c = 0; c < k; ++c) {
    for (double& v : sums[c]) v /= static_cast<double>(counts[c]);
  }
  return sums;
}

inline double inertia_of(std::span<const EmbeddingVector> x,
                         const std::vector<std::size_t>& assign,
                         const std::vector<Point>& centroids) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    s += squared_distance(x[i].values(), centroids[assign[i]]);
  }
  return s;
}

// Moves the farthest point (from a cluster with more than one member) into
// each empty cluster until none is empty.
inline void repair_empty(std::span<const EmbeddingVector> x, std::vector<std::size_t>& assign,
                         std::vector<Point>& centroids) {
  const std::size_t k = centroids.size();
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t a : assign) ++counts[a];
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] != 0) continue;
    std::size_t far = x.size();
    double far_d = -1.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (counts[assign[i]] < 2) continue;
      const double d = squared_distance(x[i].values(), centroids[assign[i]]);
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    if (far == x.size()) fail(ErrorKind::kInvariant, "kmeans: cannot repair empty cluster");
    --counts[assign[far]];
    assign[far] = c;
    ++counts[c];
    centroids[c].assign(x[far].values().begin(), x[far].values().end());
  }
}

// Single-point transfers (Hartigan's criterion) after Lloyd converges: moving
// x from a to b lowers inertia iff n_b/(n_b+1)|x-m_b|^2 < n_a/(n_a-1)|x-m_a|^2.
// Lloyd fixed points are often not transfer-stable on small inputs.
inline bool transfer_pass(std::span<const EmbeddingVector> x, std::vector<std::size_t>& assign,
                          std::vector<Point>& centroids) {
  const std::size_t k = centroids.size();
  const std::size_t dim = x.front().dim();
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t a : assign) ++counts[a];
  bool moved = false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::size_t a = assign[i];
    if (counts[a] < 2) continue;
    const double na = static_cast<double>(counts[a]);
    const double removal = na / (na - 1.0) * squared_distance(x[i].values(), centroids[a]);
    std::size_t to = a;
    double best = removal * (1.0 - 1e-12);
    for (std::size_t b = 0; b < k; ++b) {
      if (b == a) continue;
      const double nb = static_cast<double>(counts[b]);
      const double add = nb / (nb + 1.0) * squared_distance(x[i].values(), centroids[b]);
      if (add < best) {
        best = add;
        to = b;
      }
    }
    if (to == a) continue;
    const double nb = static_cast<double>(counts[to]);
    for (std::size_t d = 0; d < dim; ++d) {
      centroids[a][d] = (centroids[a][d] * na - x[i][d]) / (na - 1.0);
      centroids[to][d] = (centroids[to][d] * nb + x[i][d]) / (nb + 1.0);
    }
    --counts[a];
    ++counts[to];
    assign[i] = to;
    moved = true;
  }
  return moved;
}

inline ClusteringResult lloyd(std::span<const EmbeddingVector> x, std::size_t k,
                              std::uint64_t seed, const KMeansOptions& opts) {
  Rng rng(seed);
  std::vector<Point> centroids = seed_plus_plus(x, k, rng);
  std::vector<std::size_t> assign(x.size(), 0);
  ClusteringResult r;
  r.k = k;
  r.seed = seed;
  for (std::size_t iter = 1; iter <= opts.max_iter; ++iter) {
    for (std::size_t i = 0; i < x.size(); ++i) assign[i] = nearest(x[i].values(), centroids);
    repair_empty(x, assign, centroids);
    std::vector<Point> next = cluster_means(x, assign, k);
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      shift = std::max(shift, std::sqrt(squared_distance(centroids[c], next[c])));
    }
    centroids = std::move(next);
    r.inertia_history.push_back(inertia_of(x, assign, centroids));
    r.iterations = iter;
    if (shift < opts.tol) break;
  }
  for (std::size_t round = 0; round < opts.max_iter; ++round) {
    if (!transfer_pass(x, assign, centroids)) break;
    centroids = cluster_means(x, assign, k);
    for (std::size_t iter = 0; iter < opts.max_iter; ++iter) {
      std::vector<std::size_t> next_assign(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) {
        next_assign[i] = nearest(x[i].values(), centroids);
      }
      repair_empty(x, next_assign, centroids);
      if (next_assign == assign) break;
      assign = std::move(next_assign);
      centroids = cluster_means(x, assign, k);
    }
    r.inertia_history.push_back(inertia_of(x, assign, centroids));
  }
  r.assignments = std::move(assign);
  r.inertia = r.inertia_history.back();
  r.centroids.reserve(k);
  for (auto& c : centroids) r.centroids.emplace_back(std::move(c));
  return r;
}

}  // namespace detail

// Deterministic in (vectors, k, seed, opts). Restart r uses
// derive_seed(seed, r); the lowest final inertia wins, earliest on ties.
inline ClusteringResult kmeans(std::span<const EmbeddingVector> vectors, std::size_t k,
                               std::uint64_t seed, const KMeansOptions& opts = {}) {
  detail::check_points(vectors);
  require(k >= 1, ErrorKind::kInvalidArgument, "kmeans: k must be positive");
  require(k <= vectors.size(), ErrorKind::kInvalidArgument,
          "kmeans: k=" + std::to_string(k) + " exceeds " + std::to_string(vectors.size()) +
              " vectors");
  require(opts.max_iter >= 1 && opts.tol > 0.0 && opts.restarts >= 1,
          ErrorKind::kInvalidArgument, "kmeans: invalid options");
  std::optional<ClusteringResult> best;
  for (std::size_t r = 0; r < opts.restarts; ++r) {
    ClusteringResult run = detail::lloyd(vectors, k, derive_seed(seed, r), opts);
    if (!best || run.inertia < best->inertia) best = std::move(run);
  }
  best->seed = seed;
  return std::move(*best);
}

// Condensed pairwise Euclidean distances, reused across grid candidates.
class DistanceMatrix {
 public:
  explicit DistanceMatrix(std::span<const EmbeddingVector> x) : n_(x.size()) {
    d_.resize(n_ * (n_ - 1) / 2);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = i + 1; j < n_; ++j) {
        d_[index(i, j)] = std::sqrt(detail::squared_distance(x[i].values(), x[j].values()));
      }
    }
  }

  std::size_t size() const { return n_; }

  double operator()(std::size_t i, std::size_t j) const {
    if (i == j) return 0.0;
    if (i > j) std::swap(i, j);
    return d_[index(i, j)];
  }

 private:
  std::size_t index(std::size_t i, std::size_t j) const {
    return i * n_ - i * (i + 1) / 2 + (j - i - 1);
  }

  std::size_t n_;
  std::vector<double> d_;
};

// Mean silhouette coefficient; singleton members contribute 0, as does any
// point whose a and b are both zero.
inline double silhouette(const DistanceMatrix& dist, const ClusteringResult& result) {
  require(result.k >= 2, ErrorKind::kInvalidArgument, "silhouette: needs k >= 2");
  const std::size_t n = dist.size();
  require(result.assignments.size() == n, ErrorKind::kInvalidArgument,
          "silhouette: result does not match the vectors");
  const auto sizes = result.cluster_sizes();
  double total = 0.0;
  std::vector<double> sum_to(result.k);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t own = result.assignments[i];
    if (sizes[own] < 2) continue;
    std::fill(sum_to.begin(), sum_to.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) sum_to[result.assignments[j]] += dist(i, j);
    }
    const double a = sum_to[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < result.k; ++c) {
      if (c == own || sizes[c] == 0) continue;
      b = std::min(b, sum_to[c] / static_cast<double>(sizes[c]));
    }
    const double m = std::max(a, b);
    if (m > 0.0) total += (b - a) / m;
  }
  return total / static_cast<double>(n);
}

inline double silhouette(std::span<const EmbeddingVector> vectors,
                         const ClusteringResult& result) {
  detail::check_points(vectors);
  require(result.k >= 2, ErrorKind::kInvalidArgument, "silhouette: needs k >= 2");
  return silhouette(DistanceMatrix(vectors), result);
}

struct GridCandidate {
  std::size_t k = 0;
  double silhouette = 0.0;
  double inertia = 0.0;
};

struct GridSearchReport {
  std::vector<GridCandidate> candidates;  // ascending k
  std::size_t chosen_k = 0;
};

struct GridSearchOutcome {
  GridSearchReport report;
  ClusteringResult result;
};

// Candidate k is clustered with derive_seed(seed, k). The winner (highest
// silhouette, smaller k on ties) is clustered again with the same seed.
inline GridSearchOutcome grid_search_k(std::span<const EmbeddingVector> vectors,
                                       std::size_t k_min, std::size_t k_max,
                                       std::uint64_t seed, const KMeansOptions& opts = {}) {
  detail::check_points(vectors);
  require(k_min >= 2, ErrorKind::kInvalidArgument, "grid_search_k: k_min must be >= 2");
  require(k_min <= k_max, ErrorKind::kInvalidArgument,
          "grid_search_k: k_min=" + std::to_string(k_min) + " > k_max=" + std::to_string(k_max));
  require(k_max <= vectors.size(), ErrorKind::kInvalidArgument,
          "grid_search_k: k_max=" + std::to_string(k_max) + " exceeds " +
              std::to_string(vectors.size()) + " vectors");

  const DistanceMatrix dist(vectors);
  std::vector<std::future<GridCandidate>> jobs;
  for (std::size_t k = k_min; k <= k_max; ++k) {
    jobs.push_back(std::async(std::launch::async, [&, k] {
      const ClusteringResult r = kmeans(vectors, k, derive_seed(seed, k), opts);
      return GridCandidate{k, silhouette(dist, r), r.inertia};
    }));
  }
  GridSearchOutcome out;
  for (auto& job : jobs) out.report.candidates.push_back(job.get());
  const GridCandidate* best = &out.report.candidates.front();
  for (const auto& c : out.report.candidates) {
    if (c.silhouette > best->silhouette) best = &c;
  }
  out.report.chosen_k = best->k;
  out.result = kmeans(vectors, best->k, derive_seed(seed, best->k), opts);
  return out;
}

}  // namespace biaslens
