#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "subsvm/graphdata.hpp"
#include "subsvm/model.hpp"

namespace subsvm {

// One aggregated 1-slack constraint:  w . feature_diff >= loss - xi
struct WorkingSetEntry {
  std::vector<double> feature_diff;  // (1/n) sum_i [Psi(x_i, y_i) - Psi(x_i, ybar_i)]
  double loss = 0.0;                 // (1/n) sum_i Delta_b(y_i, ybar_i)
};

struct QpResult {
  std::vector<double> w;
  double xi = 0.0;
  double objective = 0.0;     // 0.5 |w|^2 + C xi
  double dual_objective = 0.0;
  double kkt_residual = 0.0;  // max violating-pair gap at exit
  std::size_t iterations = 0;
};

inline constexpr double kQpTolerance = 1e-8;

// min 0.5|w|^2 + C xi  s.t.  w.g_j >= l_j - xi,  xi >= 0,  w_p >= 0 for p with
// nonnegative[p] != 0. Solved in the dual: the multipliers of the
// non-negativity constraints are eliminated in closed form, which clips the
// primal w = max(0, sum_j alpha_j g_j) on P, and the remaining simplex-capped
// problem is solved by maximal-violating-pair coordinate ascent with exact
// line search. Warm starts keep the multipliers of previous solves.
class QpSolver {
public:
  QpSolver(std::size_t dimension, double C, std::vector<std::uint8_t> nonnegative,
           double tolerance = kQpTolerance, std::size_t max_iterations = 5'000'000);

  void add(WorkingSetEntry entry);
  std::size_t size() const { return entries_.size(); }
  const std::vector<WorkingSetEntry>& entries() const { return entries_; }

  // Throws SolverError if the KKT gap is still above tolerance after the
  // iteration budget.
  QpResult solve();

private:
  double line_search(std::size_t up, std::size_t down, double cap) const;
  const std::vector<double>& g(std::size_t j) const;

  std::size_t dimension_;
  double C_;
  std::vector<std::uint8_t> nonnegative_;
  double tolerance_;
  std::size_t max_iterations_;
  std::vector<WorkingSetEntry> entries_;
  // alpha_[0] is the multiplier of xi >= 0; alpha_[j+1] belongs to entries_[j].
  std::vector<double> alpha_;
  std::vector<double> z_;  // sum_j alpha_j g_j
  std::vector<double> zero_;
};

QpResult solve_qp(std::span<const WorkingSetEntry> ws, std::size_t dimension, double C,
                  std::span<const std::uint8_t> nonnegative);

enum class OracleKind { Exact, QpboR };

std::string to_string(OracleKind k);
OracleKind parse_oracle_kind(const std::string& s);

struct OracleConfig {
  double rho = 100.0;
  OracleKind kind = OracleKind::Exact;
  bool heuristic = true;  // baseline only
};

struct OracleResult {
  // Binary indicators y_u^k of the violator (0.5 marks QPBO-unlabeled bits).
  std::vector<double> labeling;
  std::vector<double> features;  // Psi(x, ybar)
  double loss = 0.0;             // Delta_b(y, ybar)
  double value = 0.0;            // loss + w . features
};

// argmax_ybar Delta_b(y, ybar) + w . Psi(x, ybar) over binary labelings
// without the sum-to-one constraint. The exact kind solves it by minimum cut
// and throws NotSubmodularError if w leaves the feasible set.
OracleResult separation_oracle(const WeightVector& w, const GraphInstance& x,
                               std::span<const int> gold, const OracleConfig& cfg);

struct TrainConfig {
  double C = 1.0;
  double rho = 100.0;
  // Termination tolerance; defaults to 1e-3 * rho.
  std::optional<double> epsilon;
  int max_iterations = 1000;
  OracleKind oracle = OracleKind::Exact;
  bool heuristic = true;
  // Pairwise weights are always kept non-negative with the exact oracle. The
  // QPBO-R baseline trains unconstrained unless this is set.
  bool baseline_nonnegative = false;
  // A new violation below the working-set slack by more than this is
  // reported as an early-termination anomaly.
  double anomaly_tolerance = 1e-6;
  bool parallel = true;

  double effective_epsilon() const { return epsilon.value_or(1e-3 * rho); }
};

enum class Termination { Converged, MaxIterations, EarlyTermination };

std::string to_string(Termination t);

struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;  // QP objective for the working set before this oracle round
  double xi = 0.0;
  double eta = 0.0;
  double min_pairwise = 0.0;
  double oracle_seconds = 0.0;
  double qp_seconds = 0.0;
};

struct TrainReport {
  int iterations = 0;
  std::vector<IterationRecord> history;
  Termination termination = Termination::Converged;
  std::optional<int> anomaly_iteration;
  double final_objective = 0.0;
  double final_xi = 0.0;
  double final_eta = 0.0;
  double epsilon = 0.0;
};

struct TrainResult {
  WeightVector weights;
  TrainReport report;
};

using IterationCallback = std::function<void(const IterationRecord&)>;

// 1-slack cutting-plane training of the partially non-negative structural
// SVM. Stops when eta - xi <= epsilon.
TrainResult train(const Dataset& d, const TrainConfig& cfg, const IterationCallback& on_iteration = {});

} // namespace subsvm
