#include <doctest.h>

#include <cstdlib>
#include <string>

#include "cfseq/errors.hpp"
#include "cfseq/external_predictor.hpp"

using namespace cfseq;

namespace {

std::string script(const char* name) {
  const char* dir = std::getenv("CFSEQ_TEST_SCRIPTS");
  REQUIRE(dir != nullptr);
  return std::string{dir} + "/" + name;
}

EncoderSpec toy_encoder() {
  EventLog log;
  log.activity_vocabulary = {"a", "b", "c"};
  log.schemas.push_back(AttributeSchema{"x", AttributeKind::Numeric, {}, 0.0, 10.0});
  for (const auto& [id, acts] : {std::pair{"1", "ab"}, std::pair{"2", "ca"}}) {
    Trace t;
    t.case_id = id;
    for (const char* p = acts; *p != '\0'; ++p) {
      t.events.push_back(Event{std::string(1, *p), std::nullopt, {{"x", 5.0}}});
    }
    log.traces.push_back(t);
  }
  return EncoderSpec::fit(log, 4);
}

EncodedTrace encoded(const EncoderSpec& encoder, const std::string& acts) {
  Trace t;
  t.case_id = "t";
  for (const char c : acts) {
    t.events.push_back(Event{std::string(1, c), std::nullopt, {{"x", 2.0}}});
  }
  return encoder.encode(t);
}

}  // namespace

TEST_CASE("external scorer round-trip") {
  const auto encoder = toy_encoder();
  const ExternalPredictor predictor("sh " + script("contains_b.sh"), encoder);
  const std::vector<EncodedTrace> batch{encoded(encoder, "ab"), encoded(encoder, "cc"), encoded(encoder, "bcab"),
                                        encoded(encoder, "a")};
  const auto p = predictor.predict_batch(batch);
  CHECK(p == std::vector<double>{0.9, 0.1, 0.9, 0.1});
  CHECK(predictor.predict_proba(batch[1]) == 0.1);
  CHECK(predictor.predict_batch({}).empty());
}

TEST_CASE("external scorer failures surface as errors") {
  const auto encoder = toy_encoder();
  const auto trace = encoded(encoder, "ab");
  CHECK_THROWS_AS(ExternalPredictor("sh " + script("failing.sh"), encoder).predict_proba(trace), Error);
  CHECK_THROWS_AS(ExternalPredictor("sh " + script("drops_first.sh"), encoder).predict_proba(trace), ParseError);
  CHECK_THROWS_AS(ExternalPredictor("", encoder), ArgumentError);
}
