#pragma once

// Independent reference for the weighted Damerau-Levenshtein distance: the
// recurrence written out directly on plain event structs instead of encoded
// traces.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace cfseq::oracle {

struct Event {
  int activity = 0;
  std::vector<double> v;
};

using Sequence = std::vector<Event>;

/// Attribute boundaries inside v: attribute k spans [starts[k], starts[k+1]).
struct Attributes {
  std::vector<std::size_t> starts;
};

enum class Cost { Euclidean, Count };

inline double euclid(const std::vector<double>* x, const std::vector<double>* y, std::size_t dim) {
  if (dim == 0) {
    return x != nullptr && y != nullptr ? 0.0 : 1.0;
  }
  double sq = 0.0;
  for (std::size_t k = 0; k < dim; ++k) {
    const double xv = x != nullptr ? (*x)[k] : 0.0;
    const double yv = y != nullptr ? (*y)[k] : 0.0;
    sq += (xv - yv) * (xv - yv);
  }
  return std::sqrt(sq) / std::sqrt(static_cast<double>(dim));
}

inline double count(const std::vector<double>* x, const std::vector<double>* y, const Attributes& attrs) {
  if (x == nullptr || y == nullptr) {
    return 1.0;
  }
  const std::size_t n_attr = attrs.starts.size() - 1;
  if (n_attr == 0) {
    return 0.0;
  }
  std::size_t differing = 0;
  for (std::size_t k = 0; k < n_attr; ++k) {
    for (std::size_t c = attrs.starts[k]; c < attrs.starts[k + 1]; ++c) {
      if (std::abs((*x)[c] - (*y)[c]) > 1e-9) {
        ++differing;
        break;
      }
    }
  }
  return static_cast<double>(differing) / static_cast<double>(n_attr);
}

/// Stack storage for short sequences, heap otherwise.
class Buffer {
 public:
  explicit Buffer(std::size_t size) {
    if (size > local_.size()) {
      heap_.resize(size);
      data_ = heap_.data();
    }
  }
  double& operator[](std::size_t i) noexcept { return data_[i]; }

 private:
  std::array<double, 32> local_;
  std::vector<double> heap_;
  double* data_ = local_.data();
};

inline double distance(const Sequence& a, const Sequence& b, Cost kind, const Attributes& attrs) {
  const std::size_t dim = attrs.starts.back();
  const auto cost = [&](const Event* x, const Event* y) {
    const auto* xv = x != nullptr ? &x->v : nullptr;
    const auto* yv = y != nullptr ? &y->v : nullptr;
    return kind == Cost::Euclidean ? euclid(xv, yv, dim) : count(xv, yv, attrs);
  };
  const std::size_t n = a.size();
  const std::size_t m = b.size();

  // Event costs, computed once per pair. Pair costs are only read where the
  // activities agree.
  Buffer gap_a(n);
  Buffer gap_b(m);
  Buffer pair(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    gap_a[i] = cost(&a[i], nullptr);
    for (std::size_t j = 0; j < m; ++j) {
      pair[i * m + j] = a[i].activity == b[j].activity ? cost(&a[i], &b[j]) : std::numeric_limits<double>::quiet_NaN();
    }
  }
  for (std::size_t j = 0; j < m; ++j) {
    gap_b[j] = cost(nullptr, &b[j]);
  }

  Buffer d((n + 1) * (m + 1));
  const auto at = [&](std::size_t i, std::size_t j) -> double& { return d[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) {
    for (std::size_t j = 0; j <= m; ++j) {
      if (i == 0 && j == 0) {
        at(0, 0) = 0.0;
        continue;
      }
      double best = std::numeric_limits<double>::infinity();
      if (i >= 1) {
        best = std::min(best, at(i - 1, j) + gap_a[i - 1]);
      }
      if (j >= 1) {
        best = std::min(best, at(i, j - 1) + gap_b[j - 1]);
      }
      if (i >= 1 && j >= 1) {
        if (a[i - 1].activity == b[j - 1].activity) {
          best = std::min(best, at(i - 1, j - 1) + pair[(i - 1) * m + j - 1]);
        } else {
          best = std::min(best, at(i - 1, j - 1) + gap_a[i - 1] + gap_b[j - 1]);
        }
      }
      if (i >= 2 && j >= 2 && a[i - 1].activity == b[j - 2].activity && a[i - 2].activity == b[j - 1].activity) {
        best = std::min(best, at(i - 2, j - 2) + pair[(i - 1) * m + j - 2] + pair[(i - 2) * m + j - 1]);
      }
      at(i, j) = best;
    }
  }
  return at(n, m);
}

}  // namespace cfseq::oracle
