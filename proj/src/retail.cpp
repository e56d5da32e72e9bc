#include "storesim/retail.hpp"

#include <stdexcept>

namespace storesim::retail {

const RetailEnvironmentSpec& validate_environment(const RetailEnvironmentSpec& spec) {
  if (spec.n_regions < 1) throw std::invalid_argument("n_regions must be >= 1");
  if (spec.n_products < 1) throw std::invalid_argument("n_products must be >= 1");
  if (spec.adjacency.rows() != spec.n_regions ||
      spec.adjacency.cols() != spec.n_regions)
    throw std::invalid_argument("adjacency must be n_regions x n_regions");
  for (int i = 0; i < spec.n_regions; ++i) {
    if (spec.adjacency(i, i) != 0)
      throw std::invalid_argument("adjacency diagonal must be zero");
    for (int j = 0; j < spec.n_regions; ++j) {
      const int a = spec.adjacency(i, j);
      if (a != 0 && a != 1)
        throw std::invalid_argument("adjacency entries must be 0 or 1");
      if (a != spec.adjacency(j, i))
        throw std::invalid_argument("adjacency must be symmetric");
    }
  }
  if (spec.prices.size() != spec.n_products)
    throw std::invalid_argument("prices must have one entry per product");
  for (int j = 0; j < spec.n_products; ++j)
    if (!(spec.prices[j] > 0.0))
      throw std::invalid_argument("prices must be strictly positive");
  if (spec.placement_cost < 0.0)
    throw std::invalid_argument("placement_cost must be non-negative");
  return spec;
}

std::string Action::to_string() const {
  switch (kind) {
    case Kind::DoNothing:
      return "do_nothing";
    case Kind::Place:
      return "place(" + std::to_string(region) + "," + std::to_string(product) + ")";
    case Kind::Remove:
      return "remove(" + std::to_string(region) + "," + std::to_string(product) + ")";
  }
  return "?";
}

int action_index(const Action& a, int n_regions, int n_products) {
  (void)n_regions;
  switch (a.kind) {
    case Action::Kind::DoNothing:
      return 0;
    case Action::Kind::Place:
      return 1 + a.region * n_products + a.product;
    case Action::Kind::Remove:
      return 1 + n_regions * n_products + a.region * n_products + a.product;
  }
  return 0;
}

Action action_from_index(int index, int n_regions, int n_products) {
  const int cells = n_regions * n_products;
  if (index == 0) return Action::do_nothing();
  if (index <= cells)
    return Action::place((index - 1) / n_products, (index - 1) % n_products);
  const int cell = index - 1 - cells;
  return Action::remove(cell / n_products, cell % n_products);
}

std::vector<Action> feasible_actions(const EnvState& state) {
  const auto& g = state.board.grid;
  std::vector<Action> out;
  out.reserve(static_cast<std::size_t>(g.size()) + 1);
  out.push_back(Action::do_nothing());
  for (int i = 0; i < g.rows(); ++i)
    for (int j = 0; j < g.cols(); ++j)
      if (g(i, j) == 0) out.push_back(Action::place(i, j));
  for (int i = 0; i < g.rows(); ++i)
    for (int j = 0; j < g.cols(); ++j)
      if (g(i, j) == 1) out.push_back(Action::remove(i, j));
  return out;
}

bool is_feasible(const BoardConfig& board, const Action& a) {
  switch (a.kind) {
    case Action::Kind::DoNothing:
      return true;
    case Action::Kind::Place:
    case Action::Kind::Remove: {
      if (a.region < 0 || a.region >= board.grid.rows()) return false;
      if (a.product < 0 || a.product >= board.grid.cols()) return false;
      const int occupied = board.grid(a.region, a.product);
      return a.kind == Action::Kind::Place ? occupied == 0 : occupied == 1;
    }
  }
  return false;
}

BoardConfig apply_action(const BoardConfig& board, const Action& a) {
  if (!is_feasible(board, a))
    throw std::invalid_argument("infeasible action " + a.to_string());
  BoardConfig next = board;
  if (a.kind == Action::Kind::Place) next.grid(a.region, a.product) = 1;
  if (a.kind == Action::Kind::Remove) next.grid(a.region, a.product) = 0;
  return next;
}

double reward(const RetailEnvironmentSpec& spec, const BoardConfig& board,
              const Eigen::MatrixXd& quantities) {
  if (quantities.rows() != board.grid.rows() ||
      quantities.cols() != board.grid.cols() ||
      board.grid.rows() != spec.n_regions ||
      board.grid.cols() != spec.n_products)
    throw std::invalid_argument("reward: dimension mismatch");
  return total_revenue(spec.prices, quantities) -
         spec.placement_cost * board.occupied_regions();
}

Eigen::VectorXd revenue_by_region(const Eigen::VectorXd& prices,
                                  const Eigen::MatrixXd& quantities) {
  if (quantities.cols() != prices.size())
    throw std::invalid_argument("revenue: dimension mismatch");
  return quantities * prices;
}

double total_revenue(const Eigen::VectorXd& prices,
                     const Eigen::MatrixXd& quantities) {
  return revenue_by_region(prices, quantities).sum();
}

int advance_day(int day) {
  if (day < 0 || day > 6) throw std::invalid_argument("day must be in [0,6]");
  return (day + 1) % 7;
}

}  // namespace storesim::retail
