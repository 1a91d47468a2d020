#include "pushsort/tabular.hpp"

#include <algorithm>
#include <stdexcept>

namespace pushsort {

TabularQ::TabularQ(std::size_t action_count, double q0) : actions_(action_count), q0_(q0) {
  if (action_count == 0) throw std::invalid_argument("TabularQ: no actions");
}

double TabularQ::value(const std::string& state, std::size_t action) const {
  if (action >= actions_) throw std::out_of_range("TabularQ: action out of range");
  const auto it = table_.find(state);
  return it == table_.end() ? q0_ : it->second[action];
}

double TabularQ::max_value(const std::string& state) const {
  const auto it = table_.find(state);
  if (it == table_.end()) return q0_;
  return *std::max_element(it->second.begin(), it->second.end());
}

std::size_t TabularQ::greedy_action(const std::string& state) const {
  const auto it = table_.find(state);
  if (it == table_.end()) return 0;
  return static_cast<std::size_t>(
      std::distance(it->second.begin(), std::max_element(it->second.begin(), it->second.end())));
}

void TabularQ::set(const std::string& state, std::size_t action, double value) {
  if (action >= actions_) throw std::out_of_range("TabularQ: action out of range");
  row(state)[action] = value;
}

std::vector<double>& TabularQ::row(const std::string& state) {
  auto [it, inserted] = table_.try_emplace(state);
  if (inserted) it->second.assign(actions_, q0_);
  return it->second;
}

double tabular_update(TabularQ& table, const std::string& state, std::size_t action, double reward,
                      const std::string& next_state, bool terminal, double gamma, double alpha) {
  if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("tabular_update: alpha outside [0,1]");
  const double bootstrap = terminal ? 0.0 : table.max_value(next_state);
  const double old = table.value(state, action);
  const double updated = old + alpha * (reward + gamma * bootstrap - old);
  if (alpha > 0.0) table.set(state, action, updated);
  return updated;
}

}  // namespace pushsort
