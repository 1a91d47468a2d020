#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

namespace pushsort {

/// Lookup-table Q-function keyed by a canonical state string. Unseen entries read q0.
class TabularQ {
 public:
  TabularQ(std::size_t action_count, double q0 = 0.0);

  double value(const std::string& state, std::size_t action) const;
  double max_value(const std::string& state) const;
  std::size_t greedy_action(const std::string& state) const;
  void set(const std::string& state, std::size_t action, double value);

  std::size_t action_count() const { return actions_; }
  std::size_t state_count() const { return table_.size(); }

 private:
  std::vector<double>& row(const std::string& state);

  std::size_t actions_;
  double q0_;
  std::unordered_map<std::string, std::vector<double>> table_;
};

/// Q(s,a) += alpha * (r + gamma * max_a' Q(s',a') - Q(s,a)); the max term is 0 when
/// s' is terminal. Returns the new Q(s,a).
double tabular_update(TabularQ& table, const std::string& state, std::size_t action, double reward,
                      const std::string& next_state, bool terminal, double gamma, double alpha);

}  // namespace pushsort
