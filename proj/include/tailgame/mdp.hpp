#pragma once

#include <vector>

#include "tailgame/objectives.hpp"

namespace tailgame {

// ---------------------------------------------------------------------------
// Finite decision process for a single maximizing controller. Objectives ride
// on the probabilistic branches (accept / reject flags, weights) or on state
// priorities for parity, mirroring the automaton edge labels.
// ---------------------------------------------------------------------------

struct Branch {
  double prob = 0.0;
  int next = 0;
  bool flag = false;    // Buchi accept / CoBuchi reject
  double weight = 0.0;  // LimsupMean
};

struct DecisionProcess {
  int n_states = 0;
  int initial = 0;
  ValKind kind = ValKind::BuchiEdge;
  std::vector<std::vector<std::vector<Branch>>> actions;  // [state][action] -> branches
  std::vector<int> state_priority;                        // parity only

  void validate() const;
};

struct MdpSolution {
  std::vector<double> value;  // per state
  std::vector<int> policy;    // positional; -1 where irrelevant
  int iterations = 0;
  double residual = 0.0;
};

/// Optimal value of the objective per state, with a positional policy.
/// Buchi / CoBuchi / parity: maximal-end-component decomposition followed by
/// maximal reachability. LimsupMean: per-MEC gain via relative value
/// iteration, then reachability with terminal gains.
MdpSolution solve_mdp(const DecisionProcess& dp, double tol = 1e-10,
                      int max_iter = 200000);

/// Maximal end components as state sets, plus per-state membership (-1: none).
struct MecDecomposition {
  std::vector<std::vector<int>> mecs;
  std::vector<int> member;  // state -> mec index or -1
  /// surviving (state, action) pairs per mec
  std::vector<std::vector<std::pair<int, int>>> actions;
};

MecDecomposition maximal_end_components(const DecisionProcess& dp);

/// Max probability of reaching `target` states (value 1 inside), by value
/// iteration from below.
std::vector<double> max_reachability(const DecisionProcess& dp,
                                     const std::vector<bool>& target, double tol,
                                     int max_iter, std::vector<int>* policy = nullptr);

}  // namespace tailgame
