#include "subsvm/learn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "parallel.hpp"
#include "subsvm/errors.hpp"
#include "subsvm/maxflow.hpp"
#include "subsvm/qpbo.hpp"

namespace subsvm {

QpSolver::QpSolver(std::size_t dimension, double C, std::vector<std::uint8_t> nonnegative, double tolerance,
                   std::size_t max_iterations)
    : dimension_(dimension),
      C_(C),
      nonnegative_(std::move(nonnegative)),
      tolerance_(tolerance),
      max_iterations_(max_iterations),
      alpha_{C},
      z_(dimension, 0.0),
      zero_(dimension, 0.0) {
  if (!(C > 0.0)) throw std::invalid_argument("QpSolver: C must be positive");
  if (nonnegative_.size() != dimension) throw std::invalid_argument("QpSolver: mask length mismatch");
}

void QpSolver::add(WorkingSetEntry entry) {
  if (entry.feature_diff.size() != dimension_) throw std::invalid_argument("QpSolver: entry dimension mismatch");
  entries_.push_back(std::move(entry));
  alpha_.push_back(0.0);
}

const std::vector<double>& QpSolver::g(std::size_t j) const {
  return j == 0 ? zero_ : entries_[j - 1].feature_diff;
}

double QpSolver::line_search(std::size_t up, std::size_t down, double cap) const {
  const auto& gu = g(up);
  const auto& gd = g(down);
  const double dl = (up == 0 ? 0.0 : entries_[up - 1].loss) - (down == 0 ? 0.0 : entries_[down - 1].loss);

  // Derivative of the dual along alpha_up += t, alpha_down -= t; continuous,
  // non-increasing and linear between clipping breakpoints.
  auto slope = [&](double t) {
    double s = dl;
    for (std::size_t p = 0; p < dimension_; ++p) {
      const double d = gu[p] - gd[p];
      if (d == 0.0) continue;
      double v = z_[p] + t * d;
      if (nonnegative_[p] && v < 0.0) v = 0.0;
      s -= d * v;
    }
    return s;
  };

  std::vector<double> breaks;
  for (std::size_t p = 0; p < dimension_; ++p) {
    const double d = gu[p] - gd[p];
    if (!nonnegative_[p] || d == 0.0) continue;
    const double t = -z_[p] / d;
    if (t > 0.0 && t < cap) breaks.push_back(t);
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.push_back(cap);

  double prev = 0.0;
  double f_prev = slope(0.0);
  if (f_prev <= 0.0) return 0.0;
  for (double b : breaks) {
    if (b <= prev) continue;
    const double f_b = slope(b);
    if (f_b <= 0.0) return prev + f_prev * (b - prev) / (f_prev - f_b);
    prev = b;
    f_prev = f_b;
  }
  return cap;
}

QpResult QpSolver::solve() {
  QpResult r;
  const std::size_t m = alpha_.size();
  std::vector<double> w(dimension_);
  std::vector<double> grad(m);

  auto refresh = [&] {
    for (std::size_t p = 0; p < dimension_; ++p) w[p] = (nonnegative_[p] && z_[p] < 0.0) ? 0.0 : z_[p];
    grad[0] = 0.0;
    for (std::size_t j = 1; j < m; ++j) grad[j] = entries_[j - 1].loss - dot(entries_[j - 1].feature_diff, w);
  };
  auto rebuild_z = [&] {
    std::fill(z_.begin(), z_.end(), 0.0);
    for (std::size_t j = 1; j < m; ++j)
      if (alpha_[j] != 0.0)
        for (std::size_t p = 0; p < dimension_; ++p) z_[p] += alpha_[j] * entries_[j - 1].feature_diff[p];
  };

  rebuild_z();
  double gap = 0.0;
  for (;;) {
    refresh();
    std::size_t up = 0;
    std::size_t down = m;
    for (std::size_t j = 0; j < m; ++j) {
      if (grad[j] > grad[up]) up = j;
      if (alpha_[j] > 0.0 && (down == m || grad[j] < grad[down])) down = j;
    }
    gap = grad[up] - grad[down];
    if (gap <= tolerance_ || up == down) break;
    if (r.iterations == max_iterations_)
      throw SolverError("QP did not reach KKT tolerance " + std::to_string(tolerance_) + " within " +
                        std::to_string(max_iterations_) + " iterations (gap " + std::to_string(gap) + ")");
    ++r.iterations;

    const double cap = alpha_[down];
    const double t = line_search(up, down, cap);
    if (t <= 0.0) break;
    alpha_[up] += t;
    alpha_[down] = t >= cap ? 0.0 : alpha_[down] - t;
    const auto& gu = g(up);
    const auto& gd = g(down);
    for (std::size_t p = 0; p < dimension_; ++p) z_[p] += t * (gu[p] - gd[p]);
    if (r.iterations % 1024 == 0) rebuild_z();
  }

  r.w = w;
  r.kkt_residual = std::max(gap, 0.0);
  r.xi = 0.0;
  for (std::size_t j = 1; j < m; ++j) r.xi = std::max(r.xi, grad[j]);
  const double wsq = dot(w, w);
  r.objective = 0.5 * wsq + C_ * r.xi;
  double linear = 0.0;
  for (std::size_t j = 1; j < m; ++j) linear += alpha_[j] * entries_[j - 1].loss;
  r.dual_objective = linear - 0.5 * wsq;
  return r;
}

QpResult solve_qp(std::span<const WorkingSetEntry> ws, std::size_t dimension, double C,
                  std::span<const std::uint8_t> nonnegative) {
  QpSolver solver(dimension, C, std::vector<std::uint8_t>(nonnegative.begin(), nonnegative.end()));
  for (const auto& e : ws) solver.add(e);
  return solver.solve();
}

std::string to_string(OracleKind k) { return k == OracleKind::Exact ? "exact" : "qpbo-r"; }

OracleKind parse_oracle_kind(const std::string& s) {
  if (s == "exact") return OracleKind::Exact;
  if (s == "qpbo-r") return OracleKind::QpboR;
  throw std::invalid_argument("unknown oracle kind '" + s + "' (expected exact or qpbo-r)");
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::Converged: return "converged";
    case Termination::MaxIterations: return "max-iterations";
    case Termination::EarlyTermination: return "early-termination";
  }
  return "unknown";
}

OracleResult separation_oracle(const WeightVector& w, const GraphInstance& x, std::span<const int> gold,
                               const OracleConfig& cfg) {
  const int K = w.label_count();
  const auto augmented = loss_augment(w, x, gold, LossConfig{cfg.rho});
  const auto gold_bits = BinaryLabeling::one_hot(gold, K);
  const int n = static_cast<int>(x.node_count());

  OracleResult r;
  if (cfg.kind == OracleKind::Exact) {
    const auto best = minimize_submodular(augmented.energy);
    const BinaryLabeling ybar(n, K, best.labeling);
    r.labeling.assign(best.labeling.begin(), best.labeling.end());
    r.features = joint_feature_map(x, ybar);
    r.loss = binary_hamming_loss(gold_bits, ybar, LossConfig{cfg.rho});
  } else {
    r.labeling = qpbo_r(augmented.energy);
    // The heuristic reads the coefficients of the maximized objective, i.e.
    // the negated energy tables.
    BinaryEnergy objective(augmented.energy.node_count());
    for (const auto& ed : augmented.energy.edges())
      objective.add_pairwise(ed.i, ed.j, -ed.table[0], -ed.table[1], -ed.table[2], -ed.table[3]);
    const auto products = edge_products(r.labeling, objective, cfg.heuristic);
    r.features = relaxed_feature_map(x, K, r.labeling, products);
    r.loss = relaxed_binary_hamming_loss(gold_bits, r.labeling, LossConfig{cfg.rho});
  }
  r.value = r.loss + dot(w.flat(), r.features);
  return r;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

} // namespace

TrainResult train(const Dataset& d, const TrainConfig& cfg, const IterationCallback& on_iteration) {
  validate_dataset(d);
  if (d.instances.empty()) throw DataError("train: dataset has no instances");
  if (!(cfg.C > 0.0) || !(cfg.rho > 0.0) || !(cfg.effective_epsilon() > 0.0) || cfg.max_iterations < 1)
    throw std::invalid_argument("train: C, rho, epsilon and max_iterations must be positive");

  const int K = d.label_count;
  const std::size_t dim = weight_dimension(K, d.node_dim, d.edge_dim);
  const auto n = d.instances.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  const bool constrain = cfg.oracle == OracleKind::Exact || cfg.baseline_nonnegative;

  WeightVector w(K, d.node_dim, d.edge_dim);
  std::vector<std::uint8_t> mask(dim, 0);
  if (constrain)
    for (std::size_t j = w.pairwise_offset(); j < dim; ++j) mask[j] = 1;

  // (1/n) sum_i Psi(x_i, y_i) is shared by every constraint.
  std::vector<double> gold_mean(dim, 0.0);
  for (const auto& g : d.instances) {
    const auto psi = joint_feature_map(g, BinaryLabeling::one_hot(g.labels, K));
    for (std::size_t p = 0; p < dim; ++p) gold_mean[p] += inv_n * psi[p];
  }

  const OracleConfig oracle_cfg{cfg.rho, cfg.oracle, cfg.heuristic};
  QpSolver qp(dim, cfg.C, mask);
  TrainResult result{w, {}};
  auto& report = result.report;
  report.epsilon = cfg.effective_epsilon();

  double eta = std::numeric_limits<double>::infinity();
  double xi = 0.0;
  std::vector<OracleResult> violators(n);
  while (eta - xi > report.epsilon) {
    if (report.iterations == cfg.max_iterations) {
      report.termination = Termination::MaxIterations;
      break;
    }
    IterationRecord rec;
    rec.iteration = ++report.iterations;

    auto t0 = Clock::now();
    const auto sol = qp.solve();
    rec.qp_seconds = seconds_since(t0);
    w = WeightVector(K, d.node_dim, d.edge_dim, sol.w);
    xi = sol.xi;
    rec.objective = sol.objective;
    rec.xi = xi;
    rec.min_pairwise = w.min_pairwise();

    t0 = Clock::now();
    detail::parallel_for(
        n, [&](std::size_t i) { violators[i] = separation_oracle(w, d.instances[i], d.instances[i].labels, oracle_cfg); },
        cfg.parallel);
    rec.oracle_seconds = seconds_since(t0);

    // Fixed index order keeps the aggregate reproducible.
    WorkingSetEntry entry{gold_mean, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t p = 0; p < dim; ++p) entry.feature_diff[p] -= inv_n * violators[i].features[p];
      entry.loss += inv_n * violators[i].loss;
    }
    eta = entry.loss - dot(w.flat(), entry.feature_diff);
    qp.add(std::move(entry));
    rec.eta = eta;

    report.history.push_back(rec);
    if (on_iteration) on_iteration(rec);

    if (eta < xi - cfg.anomaly_tolerance) {
      // Impossible with an exact oracle: the working set's worst member is a
      // candidate of the oracle's own search.
      report.anomaly_iteration = rec.iteration;
      report.termination = Termination::EarlyTermination;
    }
  }

  report.final_objective = report.history.empty() ? 0.0 : report.history.back().objective;
  report.final_xi = xi;
  report.final_eta = eta;
  result.weights = std::move(w);
  return result;
}

} // namespace subsvm
