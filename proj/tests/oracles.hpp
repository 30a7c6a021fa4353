#pragma once

// Brute-force reference implementations. They share no code with the library
// paths they check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace oracle {

struct Pair {
  std::size_t start;
  std::size_t end;
};

// Sequential decode restated as a total order over every admissible pair:
// highest end probability, then lowest end, then highest start probability,
// then lowest start.
inline Pair sequential_decode(const std::vector<double>& l1, const std::vector<double>& l2,
                              std::size_t sep, bool strict = false) {
  std::vector<Pair> pairs;
  for (std::size_t s = sep + 1; s < l1.size(); ++s) {
    for (std::size_t e = s + (strict ? 1 : 0); e < l2.size(); ++e) pairs.push_back({s, e});
  }
  auto key = [&](const Pair& p) {
    return std::make_tuple(-l2[p.end], p.end, -l1[p.start], p.start);
  };
  return *std::min_element(pairs.begin(), pairs.end(),
                           [&](const Pair& a, const Pair& b) { return key(a) < key(b); });
}

inline Pair joint_decode(const std::vector<double>& l1, const std::vector<double>& l2,
                         std::size_t sep, bool strict = false) {
  Pair best{0, 0};
  double best_score = -1.0;
  for (std::size_t s = sep + 1; s < l1.size(); ++s) {
    for (std::size_t e = s + (strict ? 1 : 0); e < l2.size(); ++e) {
      double score = l1[s] * l2[e];
      if (score > best_score) {
        best_score = score;
        best = {s, e};
      }
    }
  }
  return best;
}

struct Rouge {
  double precision;
  double recall;
  double f1;
};

// Counts every n-gram occurrence by rescanning both lists.
inline Rouge rouge_n(const std::vector<std::string>& cand, const std::vector<std::string>& ref,
                     std::size_t n) {
  auto grams = [n](const std::vector<std::string>& t) {
    std::vector<std::vector<std::string>> out;
    for (std::size_t i = 0; i + n <= t.size(); ++i) {
      out.emplace_back(t.begin() + static_cast<long>(i), t.begin() + static_cast<long>(i + n));
    }
    return out;
  };
  auto cg = grams(cand);
  auto rg = grams(ref);
  std::vector<std::vector<std::string>> distinct;
  for (const auto& g : cg) {
    if (std::find(distinct.begin(), distinct.end(), g) == distinct.end()) distinct.push_back(g);
  }
  double overlap = 0;
  for (const auto& g : distinct) {
    double in_c = static_cast<double>(std::count(cg.begin(), cg.end(), g));
    double in_r = static_cast<double>(std::count(rg.begin(), rg.end(), g));
    overlap += std::min(in_c, in_r);
  }
  double p = cg.empty() ? 0.0 : overlap / static_cast<double>(cg.size());
  double r = rg.empty() ? 0.0 : overlap / static_cast<double>(rg.size());
  double f = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
  return {p, r, f};
}

// Average linkage recomputed from raw point distances before every merge.
inline std::vector<std::vector<std::size_t>> average_linkage(
    const std::vector<std::vector<double>>& points, double threshold) {
  auto dist = [&](std::size_t a, std::size_t b) {
    double s = 0;
    for (std::size_t k = 0; k < points[a].size(); ++k) {
      s += (points[a][k] - points[b][k]) * (points[a][k] - points[b][k]);
    }
    return std::sqrt(s);
  };
  std::vector<std::vector<std::size_t>> clusters;
  for (std::size_t i = 0; i < points.size(); ++i) clusters.push_back({i});
  for (;;) {
    double best = INFINITY;
    std::size_t bi = 0;
    std::size_t bj = 0;
    // clusters stay sorted by smallest member
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        double total = 0;
        for (auto a : clusters[i]) {
          for (auto b : clusters[j]) total += dist(a, b);
        }
        double avg = total / static_cast<double>(clusters[i].size() * clusters[j].size());
        if (avg < best) {
          best = avg;
          bi = i;
          bj = j;
        }
      }
    }
    if (clusters.size() < 2 || !(best < threshold)) break;
    clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
    std::sort(clusters[bi].begin(), clusters[bi].end());
    clusters.erase(clusters.begin() + static_cast<long>(bj));
  }
  return clusters;
}

}  // namespace oracle
