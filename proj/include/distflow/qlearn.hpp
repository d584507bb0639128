#pragma once

// Tabular Q-learning over analysis configurations.

#include <array>
#include <iosfwd>
#include <random>

#include "distflow/seads.hpp"

namespace distflow {

struct LearnerParams {
  double gamma = 0.9;
  double alpha = 0.9;
  double epsilon = 0.2;
  std::uint64_t seed = 0;
  bool next_state_max = false;  // bootstrap from the next state's row instead of the whole table
  double reward_cap = 1e6;      // |reward| when cost equals budget

  /// Throws ConfigError when a rate lies outside [0, 1].
  void validate() const;
};

/// 1000 / (B - T); positive under budget, negative over it.
double reward(double budget, double cost, double cap = 1e6);

/// State and action are both valid configurations; all cells start at zero.
class QTable {
 public:
  QTable();

  double get(Configuration state, Configuration action) const;
  void set(Configuration state, Configuration action, double value);
  double max_value() const;
  double row_max(Configuration state) const;
  /// Highest-valued action in the state's row, lowest encoding on ties.
  Configuration greedy(Configuration state) const;

  void dump(std::ostream& out) const;
  friend bool operator==(const QTable&, const QTable&) = default;

 private:
  static std::size_t slot(Configuration c);
  std::array<std::array<double, 26>, 26> cells_{};
};

void update(QTable& q, Configuration state, Configuration action, double r, const LearnerParams& params);

/// Greedy when `draw` <= 1 - epsilon, else the configuration picked by
/// `pick` (an index into the valid configurations).
Configuration select_action(const QTable& q, Configuration state, const LearnerParams& params, double draw,
                            std::size_t pick);
Configuration select_action(const QTable& q, Configuration state, const LearnerParams& params, std::mt19937_64& rng);

class QLearningController : public ConfigController {
 public:
  explicit QLearningController(LearnerParams params);

  Configuration next(const RoundRecord& round) override;
  const QTable& table() const { return table_; }

 private:
  LearnerParams params_;
  QTable table_;
  std::mt19937_64 rng_;
  std::optional<Configuration> previous_;
};

}  // namespace distflow
