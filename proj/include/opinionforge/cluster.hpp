#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "backend.hpp"
#include "error.hpp"

namespace opinionforge {

struct SentenceCluster {
  std::vector<std::size_t> member_indices;  // ascending
  std::size_t representative_index = 0;
};

enum class Linkage { Average, Single, Complete };

inline double euclidean_distance(const Embedding& a, const Embedding& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

/// Bottom-up clustering: repeatedly merges the closest pair of clusters while
/// their linkage distance is strictly below `threshold`. Each cluster is
/// identified by its smallest member; ties go to the lexicographically
/// smallest pair. Clusters come back ordered by smallest member, with the
/// representative defaulting to that member.
inline std::vector<SentenceCluster> agglomerative_cluster(const std::vector<Embedding>& vectors,
                                                          double threshold,
                                                          Linkage linkage = Linkage::Average) {
  if (vectors.empty()) throw ValidationError("clustering needs at least one vector");
  if (!(threshold > 0.0)) throw ValidationError("clustering threshold must be > 0");
  const std::size_t n = vectors.size();
  for (const auto& v : vectors) {
    if (v.size() != vectors.front().size()) {
      throw ValidationError("embedding dimension mismatch in clustering input");
    }
  }

  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  constexpr double kInf = std::numeric_limits<double>::infinity();

  std::vector<double> dist(n * n, 0.0);
  auto d = [&](std::size_t a, std::size_t b) -> double& { return dist[a * n + b]; };
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      d(a, b) = d(b, a) = euclidean_distance(vectors[a], vectors[b]);
    }
  }

  // Slot i always holds the cluster whose smallest member is i.
  std::vector<bool> active(n, true);
  std::vector<std::size_t> size(n, 1);
  std::vector<std::vector<std::size_t>> members(n);
  for (std::size_t i = 0; i < n; ++i) members[i] = {i};

  // Nearest active partner of each slot among higher slots.
  std::vector<std::size_t> nearest(n, kNone);
  std::vector<double> nearest_dist(n, kInf);
  auto refresh = [&](std::size_t i) {
    nearest[i] = kNone;
    nearest_dist[i] = kInf;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (active[j] && d(i, j) < nearest_dist[i]) {
        nearest[i] = j;
        nearest_dist[i] = d(i, j);
      }
    }
  };
  for (std::size_t i = 0; i < n; ++i) refresh(i);

  for (;;) {
    std::size_t a = kNone;
    for (std::size_t i = 0; i < n; ++i) {
      if (active[i] && nearest[i] != kNone && (a == kNone || nearest_dist[i] < nearest_dist[a])) {
        a = i;
      }
    }
    if (a == kNone || !(nearest_dist[a] < threshold)) break;
    std::size_t b = nearest[a];

    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == a || k == b) continue;
      double merged = 0.0;
      switch (linkage) {
        case Linkage::Average:
          merged = (static_cast<double>(size[a]) * d(k, a) + static_cast<double>(size[b]) * d(k, b)) /
                   static_cast<double>(size[a] + size[b]);
          break;
        case Linkage::Single:
          merged = std::min(d(k, a), d(k, b));
          break;
        case Linkage::Complete:
          merged = std::max(d(k, a), d(k, b));
          break;
      }
      d(k, a) = d(a, k) = merged;
    }
    active[b] = false;
    size[a] += size[b];
    members[a].insert(members[a].end(), members[b].begin(), members[b].end());
    members[b].clear();

    refresh(a);
    for (std::size_t k = 0; k < a; ++k) {
      if (!active[k]) continue;
      if (nearest[k] == a || nearest[k] == b) {
        refresh(k);
      } else if (d(k, a) < nearest_dist[k] || (d(k, a) == nearest_dist[k] && a < nearest[k])) {
        nearest[k] = a;
        nearest_dist[k] = d(k, a);
      }
    }
    for (std::size_t k = a + 1; k < b; ++k) {
      if (active[k] && nearest[k] == b) refresh(k);
    }
  }

  std::vector<SentenceCluster> clusters;
  for (std::size_t i = 0; i < n; ++i) {
    if (!active[i]) continue;
    std::sort(members[i].begin(), members[i].end());
    clusters.push_back({std::move(members[i]), i});
  }
  return clusters;
}

}  // namespace opinionforge
