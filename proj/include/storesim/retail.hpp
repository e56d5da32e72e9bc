#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

// Domain types and deterministic mechanics of the product allocation problem:
// board configurations, actions, feasibility, revenue, and the daily reward.
namespace storesim::retail {

struct RetailEnvironmentSpec {
  int n_regions = 0;
  Eigen::MatrixXi adjacency;   // n x n, binary, symmetric, zero diagonal
  int n_products = 0;
  Eigen::VectorXd prices;      // length k, strictly positive
  double placement_cost = 1.0; // per occupied region per day

  int cells() const { return n_regions * n_products; }
};

// Throws std::invalid_argument naming the first violated invariant;
// returns the spec unchanged otherwise.
const RetailEnvironmentSpec& validate_environment(const RetailEnvironmentSpec& spec);

struct BoardConfig {
  Eigen::MatrixXi grid;  // n x k, entries in {0,1}

  static BoardConfig empty(int n_regions, int n_products) {
    BoardConfig b;
    b.grid = Eigen::MatrixXi::Zero(n_regions, n_products);
    return b;
  }
  static BoardConfig full(int n_regions, int n_products) {
    BoardConfig b;
    b.grid = Eigen::MatrixXi::Ones(n_regions, n_products);
    return b;
  }
  int occupied_cells() const { return grid.sum(); }
  int occupied_regions() const {
    int c = 0;
    for (int i = 0; i < grid.rows(); ++i)
      if (grid.row(i).any()) ++c;
    return c;
  }
  bool operator==(const BoardConfig& o) const { return grid == o.grid; }
};

struct Action {
  enum class Kind : std::uint8_t { DoNothing, Place, Remove };

  Kind kind = Kind::DoNothing;
  int region = -1;
  int product = -1;

  static Action do_nothing() { return {}; }
  static Action place(int region, int product) {
    return {Kind::Place, region, product};
  }
  static Action remove(int region, int product) {
    return {Kind::Remove, region, product};
  }

  bool operator==(const Action& o) const {
    if (kind != o.kind) return false;
    if (kind == Kind::DoNothing) return true;
    return region == o.region && product == o.product;
  }
  std::string to_string() const;
};

// Canonical dense index used for Q-network outputs and tie-breaking:
// 0 = DoNothing, 1..n*k = Place(cell), 1+n*k..2*n*k = Remove(cell),
// cell = region * k + product.
int action_index(const Action& a, int n_regions, int n_products);
Action action_from_index(int index, int n_regions, int n_products);

struct EnvState {
  BoardConfig board;
  int day_of_week = 0;          // 0 = Sunday
  Eigen::MatrixXd prev_revenue; // n x k realized revenue of the previous day
  long epoch_day = 0;           // absolute day counter within the episode
};

// DoNothing, then Place for every empty cell, then Remove for every occupied
// cell, in canonical index order. Always n*k + 1 actions.
std::vector<Action> feasible_actions(const EnvState& state);

bool is_feasible(const BoardConfig& board, const Action& a);

// Applies a feasible action; throws std::invalid_argument otherwise.
BoardConfig apply_action(const BoardConfig& board, const Action& a);

// Eq-style daily reward: sum_ij p_j q_ij - c * |occupied regions|.
double reward(const RetailEnvironmentSpec& spec, const BoardConfig& board,
              const Eigen::MatrixXd& quantities);

// rho_i = sum_j p_j q_ij per region, and the store total.
Eigen::VectorXd revenue_by_region(const Eigen::VectorXd& prices,
                                  const Eigen::MatrixXd& quantities);
double total_revenue(const Eigen::VectorXd& prices,
                     const Eigen::MatrixXd& quantities);

// (day + 1) mod 7; day must be in [0,6].
int advance_day(int day);

}  // namespace storesim::retail
