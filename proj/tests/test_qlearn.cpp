#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "distflow/error.hpp"
#include "distflow/qlearn.hpp"

using namespace distflow;

namespace {

Configuration C(const char* bits) { return *Configuration::parse(bits); }

RoundRecord round_of(Configuration c, double cost, double budget = 30) {
  RoundRecord r;
  r.config = c;
  r.cost = cost;
  r.budget = budget;
  return r;
}

}  // namespace

TEST_CASE("reward") {
  CHECK(reward(60000, 40000) == doctest::Approx(0.05));
  CHECK(reward(2000, 1000) == doctest::Approx(1.0));
  CHECK(reward(1000, 3000) == doctest::Approx(-0.5));
  CHECK(reward(30, 30) == 1e6);
  CHECK(reward(30, 30, 5) == 5);
}

TEST_CASE("bellman update") {
  LearnerParams p;
  QTable q;
  update(q, kMostPrecise, C("100100"), 0.05, p);
  CHECK(q.get(kMostPrecise, C("100100")) == doctest::Approx(0.045));

  QTable before = q;
  p.alpha = 0;
  update(q, kMostPrecise, C("100100"), 7, p);
  CHECK(q == before);

  p.alpha = 1;
  p.gamma = 0;
  update(q, C("000100"), C("000101"), 3.5, p);
  CHECK(q.get(C("000100"), C("000101")) == 3.5);
}

TEST_CASE("bootstrap from the table or the next row") {
  QTable q;
  q.set(C("000100"), C("000100"), 10);  // row of an unrelated state
  LearnerParams table_max;
  table_max.alpha = 1;
  table_max.gamma = 0.5;
  auto row = table_max;
  row.next_state_max = true;
  QTable a = q, b = q;
  update(a, kMostPrecise, C("100100"), 1, table_max);
  update(b, kMostPrecise, C("100100"), 1, row);
  CHECK(a.get(kMostPrecise, C("100100")) == doctest::Approx(6));
  CHECK(b.get(kMostPrecise, C("100100")) == doctest::Approx(1));
}

TEST_CASE("table rejects invalid configurations and non-finite values") {
  QTable q;
  CHECK_THROWS_AS(q.get(C("000010"), kMostPrecise), ConfigError);
  CHECK_THROWS_AS(q.set(kMostPrecise, kMostPrecise, NAN), ConfigError);
  LearnerParams p;
  p.epsilon = 1.5;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  CHECK_THROWS_AS(QLearningController{p}, ConfigError);
  std::ostringstream out;
  q.dump(out);
  std::size_t lines = 0;
  for (char c : out.str()) lines += c == '\n';
  CHECK(lines == 26 * 26);
}

TEST_CASE("action selection") {
  QTable q;
  LearnerParams p;
  // all zero: lowest valid encoding wins the tie
  CHECK(select_action(q, kMostPrecise, p, 0.1, 3) == valid_configurations().front());
  q.set(kMostPrecise, C("110101"), 2);
  CHECK(select_action(q, kMostPrecise, p, 0.5, 3) == C("110101"));
  CHECK(select_action(q, kMostPrecise, p, 0.8, 3) == C("110101"));
  // the walkthrough draw just above 1 - epsilon explores
  CHECK(select_action(q, kMostPrecise, p, 0.803, 3) == valid_configurations()[3]);

  p.epsilon = 0;
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) CHECK(select_action(q, kMostPrecise, p, rng) == C("110101"));
}

TEST_CASE("greedy choice is scale invariant") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd;
  QTable q, scaled;
  for (auto s : valid_configurations()) {
    for (auto a : valid_configurations()) {
      const double v = nd(rng);
      q.set(s, a, v);
      scaled.set(s, a, v * 37.5);
    }
  }
  for (auto s : valid_configurations()) CHECK(q.greedy(s) == scaled.greedy(s));
}

TEST_CASE("exploration rate") {
  QTable q;
  q.set(kMostPrecise, C("110101"), 1);
  LearnerParams p;
  std::mt19937_64 rng(2024);
  const int n = 20000;
  int greedy = 0;
  for (int i = 0; i < n; ++i) greedy += select_action(q, kMostPrecise, p, rng) == C("110101");
  // greedy branch plus the 1/26 of random picks that land on it
  const double expect = 0.8 + 0.2 / 26;
  const double sigma = std::sqrt(expect * (1 - expect) / n);
  CHECK(std::abs(greedy / double(n) - expect) < 3 * sigma);
}

TEST_CASE("full exploration is uniform") {
  QTable q;
  LearnerParams p;
  p.epsilon = 1;
  std::mt19937_64 rng(77);
  const auto all = valid_configurations();
  std::map<Configuration, int> counts;
  const int n = 10000;
  for (int i = 0; i < n; ++i) ++counts[select_action(q, kMostPrecise, p, rng)];
  CHECK(counts.size() == 26);
  double chi = 0;
  const double e = double(n) / 26;
  for (auto c : all) chi += (counts[c] - e) * (counts[c] - e) / e;
  CHECK(chi < 44.31);  // chi-square, 25 degrees of freedom, p = 0.01
}

TEST_CASE("fixed seed gives the same decisions") {
  LearnerParams p;
  p.seed = 5;
  QLearningController a(p), b(p);
  auto ca = kMostPrecise, cb = kMostPrecise;
  for (int i = 0; i < 100; ++i) {
    const double cost = 5 + (ca.bits % 7);
    ca = a.next(round_of(ca, cost));
    cb = b.next(round_of(cb, cost));
    CHECK(ca == cb);
    CHECK(config_valid(ca));
  }
  CHECK(a.table() == b.table());
}

TEST_CASE("controller settles on the only configuration that fits tightly") {
  // 100101 lands just under budget; everything else is either far under it
  // (small reward) or times out
  const auto target = C("100101");
  auto cost_of = [&](Configuration c) {
    if (c == target) return 29.0;
    return c.context() ? 45.0 : 10.0;
  };
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    LearnerParams p;
    p.seed = seed;
    QLearningController ctl(p);
    auto c = kMostPrecise;
    std::size_t hits = 0;
    for (int i = 0; i < 4000; ++i) {
      auto r = round_of(c, cost_of(c));
      if (r.cost > r.budget) {
        r.timeout = true;
        r.overrun = r.cost - r.budget;
      }
      c = ctl.next(r);
      if (i >= 3900) hits += c == target;
    }
    CHECK(ctl.table().greedy(target) == target);
    // exploration moves the state off the target row, so fewer than the
    // greedy 80% land on it; uniform picking would give about 4
    CHECK(hits >= 50);
  }
}

TEST_CASE("timeouts are charged past the budget") {
  auto r = round_of(kMostPrecise, 29.5);
  CHECK(reward(r.budget, effective_cost(r)) > 0);
  r.timeout = true;
  r.overrun = 2;
  CHECK(effective_cost(r) == 32);
  CHECK(reward(r.budget, effective_cost(r)) < 0);
}
