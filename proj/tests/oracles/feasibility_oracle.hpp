#pragma once

// Hand-built 10-trace log over activities a=1, b=2, c=3 with one numeric
// attribute placed at bin centres (10 bins over [0, 1]), and five queries whose
// feasibility was counted by hand with smoothing 0.
//
// Initial counts        a 7, b 2, c 1                       (of 10)
// Transitions from a    b 5, c 2, END 1                     (of 8)
// Transitions from b    b 1, c 4, END 3                     (of 8)
// Transitions from c    a 1, END 6                          (of 7)
// Emission bins of a    bin0 6, bin1 2                      (of 8)
// Emission bins of b    bin1 4, bin3 2, bin4 2              (of 8)
// Emission bins of c    bin2 4, bin9 3                      (of 7)

#include <vector>

#include "../support/fixtures.hpp"

namespace cfseq::oracle {

inline constexpr int kA = 1;
inline constexpr int kB = 2;
inline constexpr int kC = 3;
inline constexpr std::size_t kMaxLen = 5;

inline std::vector<EncodedTrace> feasibility_log() {
  using test::make_trace1;
  return {
      make_trace1({kA, kB, kC}, {0.05, 0.15, 0.25}, kMaxLen),
      make_trace1({kA, kB}, {0.05, 0.15}, kMaxLen),
      make_trace1({kA, kC}, {0.15, 0.25}, kMaxLen),
      make_trace1({kB, kC}, {0.35, 0.25}, kMaxLen),
      make_trace1({kA, kB, kB}, {0.05, 0.45, 0.45}, kMaxLen),
      make_trace1({kA, kC}, {0.05, 0.95}, kMaxLen),
      make_trace1({kC}, {0.95}, kMaxLen),
      make_trace1({kA, kB, kC, kA}, {0.15, 0.15, 0.25, 0.05}, kMaxLen),
      make_trace1({kB}, {0.35}, kMaxLen),
      make_trace1({kA, kB, kC}, {0.05, 0.15, 0.95}, kMaxLen),
  };
}

struct FeasibilityQuery {
  EncodedTrace trace;
  double expected;
};

inline std::vector<FeasibilityQuery> feasibility_queries() {
  using test::make_trace1;
  return {
      // a(bin0) b(bin1)
      {make_trace1({kA, kB}, {0.05, 0.15}, kMaxLen), (7.0 / 10) * (6.0 / 8) * (5.0 / 8) * (4.0 / 8)},
      // c(bin9)
      {make_trace1({kC}, {0.95}, kMaxLen), (1.0 / 10) * (3.0 / 7)},
      // b(bin4) b(bin3) c(bin2)
      {make_trace1({kB, kB, kC}, {0.45, 0.35, 0.25}, kMaxLen),
       (2.0 / 10) * (2.0 / 8) * (1.0 / 8) * (2.0 / 8) * (4.0 / 8) * (4.0 / 7)},
      // a(bin1) c(bin9) a(bin0) b(bin1)
      {make_trace1({kA, kC, kA, kB}, {0.15, 0.95, 0.05, 0.15}, kMaxLen),
       (7.0 / 10) * (2.0 / 8) * (2.0 / 8) * (3.0 / 7) * (1.0 / 7) * (6.0 / 8) * (5.0 / 8) * (4.0 / 8)},
      // a -> a never observed
      {make_trace1({kA, kA}, {0.05, 0.05}, kMaxLen), 0.0},
  };
}

}  // namespace cfseq::oracle
