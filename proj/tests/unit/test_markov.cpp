#include <doctest.h>

#include <numeric>

#include "../oracles/feasibility_oracle.hpp"
#include "../support/fixtures.hpp"
#include "../support/generators.hpp"
#include "cfseq/errors.hpp"
#include "cfseq/markov.hpp"

using namespace cfseq;
using test::make_trace1;

namespace {

constexpr int a = 1;
constexpr int b = 2;
constexpr int c = 3;

double sum(std::span<const double> xs) { return std::accumulate(xs.begin(), xs.end(), 0.0); }

void check_rows_sum_to_one(const MarkovFeasibilityModel& model) {
  CHECK(sum(model.initial()) == doctest::Approx(1.0).epsilon(1e-9));
  for (int i = 1; i <= static_cast<int>(model.vocab_size()); ++i) {
    CHECK(sum(model.transition_row(i)) == doctest::Approx(1.0).epsilon(1e-9));
    for (std::size_t s = 0; s < model.layout().n_attributes(); ++s) {
      CHECK(sum(model.emission(i, s)) == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

}  // namespace

TEST_CASE("counts on two traces") {
  const std::vector<EncodedTrace> log{make_trace1({a, b}, {0.1, 0.2}, 3), make_trace1({a, c}, {0.1, 0.2}, 3)};
  const auto model = MarkovFeasibilityModel::fit(log, test::numeric_layout(), 3, 0.0);
  CHECK(model.initial_prob(a) == 1.0);
  CHECK(model.transition_prob(a, b) == 0.5);
  CHECK(model.transition_prob(a, c) == 0.5);
  CHECK(model.transition_prob(b, model.end_state()) == 1.0);
  check_rows_sum_to_one(model);
}

TEST_CASE("single trace <a> ends after a") {
  const std::vector<EncodedTrace> log{make_trace1({a}, {0.3}, 2)};
  const auto model = MarkovFeasibilityModel::fit(log, test::numeric_layout(), 1, 0.0);
  CHECK(model.initial_prob(a) == 1.0);
  CHECK(model.transition_prob(a, model.end_state()) == 1.0);
  Rng rng{1};
  for (int k = 0; k < 50; ++k) {
    CHECK(model.sample_sequence(5, rng) == std::vector<int>{a});
  }
}

TEST_CASE("smoothing makes every transition positive") {
  const auto log = oracle::feasibility_log();
  const auto model = MarkovFeasibilityModel::fit(log, test::numeric_layout(), 3, 1e-3);
  for (int i = 1; i <= 3; ++i) {
    for (const double p : model.transition_row(i)) {
      CHECK(p > 0.0);
    }
  }
  check_rows_sum_to_one(model);
  CHECK(model.feasibility(make_trace1({a, a, a}, {0.9, 0.9, 0.9}, 5)) > 0.0);
}

TEST_CASE("smoothed estimates follow the stated ratio") {
  const auto log = oracle::feasibility_log();
  const double eps = 0.5;
  const auto model = MarkovFeasibilityModel::fit(log, test::numeric_layout(), 3, eps);
  CHECK(model.initial_prob(a) == doctest::Approx((7 + eps) / (10 + 3 * eps)).epsilon(1e-14));
  CHECK(model.transition_prob(a, b) == doctest::Approx((5 + eps) / (8 + 4 * eps)).epsilon(1e-14));
  CHECK(model.transition_prob(c, model.end_state()) == doctest::Approx((6 + eps) / (7 + 4 * eps)).epsilon(1e-14));
  CHECK(model.emission(c, 0)[9] == doctest::Approx((3 + eps) / (7 + 10 * eps)).epsilon(1e-14));
}

TEST_CASE("feasibility matches the hand-counted product") {
  const auto model = MarkovFeasibilityModel::fit(oracle::feasibility_log(), test::numeric_layout(), 3, 0.0);
  for (const auto& query : oracle::feasibility_queries()) {
    CHECK(std::abs(model.feasibility(query.trace) - query.expected) <= 1e-12);
  }
}

TEST_CASE("single-event feasibility is initial times emission") {
  const auto model = MarkovFeasibilityModel::fit(oracle::feasibility_log(), test::numeric_layout(), 3, 0.0);
  const auto t = make_trace1({b}, {0.35}, 5);
  CHECK(model.feasibility(t) == model.initial_prob(b) * model.emission_prob(b, t.row(0)));
}

TEST_CASE("training traces are feasible without smoothing") {
  const auto log = oracle::feasibility_log();
  const auto model = MarkovFeasibilityModel::fit(log, test::numeric_layout(), 3, 0.0);
  for (const auto& t : log) {
    CHECK(model.feasibility(t) > 0.0);
  }
}

TEST_CASE("appending an event never raises feasibility") {
  const auto model = MarkovFeasibilityModel::fit(oracle::feasibility_log(), test::numeric_layout(), 3, 1e-2);
  Rng rng{99};
  const auto layout = test::numeric_layout();
  for (int k = 0; k < 2000; ++k) {
    auto t = test::gen_trace(rng, 3, 6, layout);
    if (t.valid_len == t.max_len()) {
      continue;
    }
    const double before = model.feasibility(t);
    t.activity_ids[t.valid_len] = static_cast<int>(uniform_int(rng, 1, 3));
    t.row(t.valid_len)[0] = uniform01(rng);
    ++t.valid_len;
    const double after = model.feasibility(t);
    CHECK(after <= before);
    CHECK(after >= 0.0);
  }
}

TEST_CASE("sampled transitions follow the fitted frequencies") {
  std::vector<EncodedTrace> log;
  for (int k = 0; k < 7; ++k) {
    log.push_back(make_trace1({a, b}, {0.5, 0.5}, 2));
  }
  for (int k = 0; k < 3; ++k) {
    log.push_back(make_trace1({a, c}, {0.5, 0.5}, 2));
  }
  const auto model = MarkovFeasibilityModel::fit(log, test::numeric_layout(), 3, 0.0);
  Rng rng{2024};
  int after_a = 0;
  int b_after_a = 0;
  for (int k = 0; k < 10000; ++k) {
    const auto seq = model.sample_sequence(4, rng);
    REQUIRE(seq.size() >= 1);
    for (std::size_t t = 1; t < seq.size(); ++t) {
      if (seq[t - 1] == a) {
        ++after_a;
        b_after_a += seq[t] == b ? 1 : 0;
      }
    }
  }
  CHECK(static_cast<double>(b_after_a) / after_a == doctest::Approx(0.7).epsilon(0.02 / 0.7));

  Rng r1{5};
  Rng r2{5};
  CHECK(model.sample_sequence(4, r1) == model.sample_sequence(4, r2));
}

TEST_CASE("attribute sampling") {
  SUBCASE("single-bin support") {
    const std::vector<EncodedTrace> log{make_trace1({a}, {0.45}, 1), make_trace1({a}, {0.42}, 1)};
    const auto model = MarkovFeasibilityModel::fit(log, test::numeric_layout(), 1, 0.0);
    Rng rng{3};
    for (int k = 0; k < 1000; ++k) {
      const auto row = model.sample_attributes(a, rng);
      CHECK(row[0] >= 0.4);
      CHECK(row[0] < 0.5);
    }
  }
  SUBCASE("categorical point mass") {
    const auto layout = test::mixed_layout();
    const auto t = test::make_trace({a, a}, {{0.2, 0.0, 1.0}, {0.7, 0.0, 1.0}}, 2, 3);
    const auto model = MarkovFeasibilityModel::fit(std::vector{t}, layout, 1, 0.0);
    Rng rng{4};
    for (int k = 0; k < 200; ++k) {
      const auto row = model.sample_attributes(a, rng);
      CHECK(row[1] == 0.0);
      CHECK(row[2] == 1.0);
    }
  }
  SUBCASE("bin frequencies follow the histogram") {
    const auto model = MarkovFeasibilityModel::fit(oracle::feasibility_log(), test::numeric_layout(), 3, 0.0);
    Rng rng{8};
    std::vector<double> freq(10, 0.0);
    const int n = 10000;
    for (int k = 0; k < n; ++k) {
      const double v = model.sample_attributes(b, rng)[0];
      freq[std::min<std::size_t>(9, static_cast<std::size_t>(v * 10))] += 1.0 / n;
    }
    const auto hist = model.emission(b, 0);
    for (std::size_t bin = 0; bin < 10; ++bin) {
      CHECK(std::abs(freq[bin] - hist[bin]) <= 0.02);
    }
  }
}

TEST_CASE("model JSON round-trip") {
  const auto model = MarkovFeasibilityModel::fit(oracle::feasibility_log(), test::numeric_layout(), 3, 1e-6);
  const auto back = MarkovFeasibilityModel::from_json(model.to_json());
  for (const auto& q : oracle::feasibility_queries()) {
    CHECK(back.feasibility(q.trace) == model.feasibility(q.trace));
  }
}

TEST_CASE("fit preconditions") {
  CHECK_THROWS_AS((void)MarkovFeasibilityModel::fit(oracle::feasibility_log(), test::numeric_layout(), 3, 0.0, 1),
                  ArgumentError);
  CHECK_THROWS_AS((void)MarkovFeasibilityModel::fit(oracle::feasibility_log(), test::numeric_layout(), 3, -1.0),
                  ArgumentError);
}
