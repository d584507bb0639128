#include "distflow/qlearn.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "distflow/error.hpp"

namespace distflow {

namespace {

const std::vector<Configuration>& valid() {
  static const auto all = valid_configurations();
  return all;
}

}  // namespace

void LearnerParams::validate() const {
  auto in_unit = [](double v) { return v >= 0 && v <= 1; };
  if (!in_unit(gamma) || !in_unit(alpha) || !in_unit(epsilon)) {
    throw ConfigError("gamma, alpha and epsilon must lie in [0, 1]");
  }
}

double reward(double budget, double cost, double cap) {
  if (budget == cost) return cap;
  return 1000.0 / (budget - cost);
}

QTable::QTable() = default;

std::size_t QTable::slot(Configuration c) {
  const auto& v = valid();
  auto it = std::lower_bound(v.begin(), v.end(), c);
  if (it == v.end() || *it != c) throw ConfigError("configuration " + c.str() + " is not valid");
  return static_cast<std::size_t>(it - v.begin());
}

double QTable::get(Configuration state, Configuration action) const { return cells_[slot(state)][slot(action)]; }

void QTable::set(Configuration state, Configuration action, double value) {
  if (!std::isfinite(value)) throw ConfigError("Q-table values must be finite");
  cells_[slot(state)][slot(action)] = value;
}

double QTable::max_value() const {
  double best = cells_[0][0];
  for (const auto& row : cells_) best = std::max(best, *std::max_element(row.begin(), row.end()));
  return best;
}

double QTable::row_max(Configuration state) const {
  const auto& row = cells_[slot(state)];
  return *std::max_element(row.begin(), row.end());
}

Configuration QTable::greedy(Configuration state) const {
  const auto& row = cells_[slot(state)];
  // max_element keeps the first maximum, and slots follow encoding order
  return valid()[static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin())];
}

void QTable::dump(std::ostream& out) const {
  const auto& v = valid();
  for (std::size_t s = 0; s < v.size(); ++s) {
    for (std::size_t a = 0; a < v.size(); ++a) out << v[s].str() << ' ' << v[a].str() << ' ' << cells_[s][a] << '\n';
  }
}

void update(QTable& q, Configuration state, Configuration action, double r, const LearnerParams& params) {
  const double best = params.next_state_max ? q.row_max(action) : q.max_value();
  const double vq = q.get(state, action);
  q.set(state, action, vq + params.alpha * (r + params.gamma * best - vq));
}

Configuration select_action(const QTable& q, Configuration state, const LearnerParams& params, double draw,
                            std::size_t pick) {
  if (draw <= 1 - params.epsilon) return q.greedy(state);
  return valid()[pick % valid().size()];
}

Configuration select_action(const QTable& q, Configuration state, const LearnerParams& params, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> any(0, valid().size() - 1);
  const double draw = unit(rng);
  const std::size_t pick = any(rng);
  return select_action(q, state, params, draw, pick);
}

QLearningController::QLearningController(LearnerParams params) : params_(params), rng_(params.seed) {
  params_.validate();
}

Configuration QLearningController::next(const RoundRecord& round) {
  const auto state = previous_.value_or(round.config);
  update(table_, state, round.config, reward(round.budget, effective_cost(round), params_.reward_cap), params_);
  previous_ = round.config;
  return select_action(table_, round.config, params_, rng_);
}

}  // namespace distflow
