#include "commands.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "subsvm/errors.hpp"
#include "subsvm/graphdata.hpp"
#include "subsvm/infer.hpp"
#include "subsvm/learn.hpp"
#include "subsvm/model.hpp"

namespace subsvm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string data;
  std::string model;
  std::string out;
  std::string log;
  std::string pred;
  double C = 1.0;
  double rho = 100.0;
  std::optional<double> epsilon;
  std::string oracle = "exact";
  bool heuristic = true;
  std::string strategy = "auto";
  std::uint64_t seed = 0;
  int folds = 0;
  int fold = 0;
  int max_iters = 1000;
  bool unary_only = false;
  GeneratorConfig gen;
};

constexpr const char* kPredictionsFormat = "subsvm-predictions";

void require_parent_dir(const std::string& path, const char* what) {
  if (path.empty()) return;
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty() && !fs::is_directory(parent))
    throw std::invalid_argument(std::string(what) + ": directory does not exist: " + parent.string());
}

// Instance indices selected by --folds/--fold. `held_out` picks fold `fold`,
// otherwise every other fold.
std::vector<std::size_t> fold_indices(const Options& o, std::size_t n, bool held_out) {
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  if (o.folds <= 1) return all;
  if (o.fold < 0 || o.fold >= o.folds)
    throw std::invalid_argument("--fold must be in [0, " + std::to_string(o.folds) + ")");
  if (static_cast<std::size_t>(o.folds) > n)
    throw DataError("--folds " + std::to_string(o.folds) + " exceeds the " + std::to_string(n) + " instances");
  const auto split = split_folds(n, o.folds, o.seed);
  if (held_out) return split[static_cast<std::size_t>(o.fold)];
  std::vector<std::size_t> rest;
  for (int f = 0; f < o.folds; ++f)
    if (f != o.fold) rest.insert(rest.end(), split[static_cast<std::size_t>(f)].begin(), split[static_cast<std::size_t>(f)].end());
  std::sort(rest.begin(), rest.end());
  return rest;
}

int cmd_generate(const Options& o) {
  require_parent_dir(o.out, "--out");
  const auto d = generate_synthetic(o.gen, o.seed);
  save_dataset(d, o.out);
  std::size_t nodes = 0;
  std::size_t edges = 0;
  for (const auto& g : d.instances) {
    nodes += g.node_count();
    edges += g.edges.size();
  }
  std::cout << "wrote " << o.out << ": " << d.instances.size() << " instances, " << nodes << " nodes, " << edges
            << " edges, K=" << d.label_count << ", d_n=" << d.node_dim << ", d_e=" << d.edge_dim << "\n";
  return kOk;
}

int cmd_train(const Options& o) {
  require_parent_dir(o.model, "--model");
  require_parent_dir(o.log, "--log");
  TrainConfig cfg;
  cfg.C = o.C;
  cfg.rho = o.rho;
  cfg.epsilon = o.epsilon;
  cfg.max_iterations = o.max_iters;
  cfg.oracle = parse_oracle_kind(o.oracle);
  cfg.heuristic = o.heuristic;

  const auto full = load_dataset(o.data);
  const auto idx = fold_indices(o, full.instances.size(), false);
  auto d = subset(full, idx);
  if (o.unary_only)
    for (auto& g : d.instances) g.edges.clear();

  std::ofstream log;
  if (!o.log.empty()) {
    log.open(o.log);
    if (!log) throw std::runtime_error("cannot open " + o.log + " for writing");
  }
  std::cout << std::setw(5) << "iter" << std::setw(14) << "objective" << std::setw(12) << "xi" << std::setw(12)
            << "eta" << std::setw(12) << "min w_P" << std::setw(11) << "oracle s" << std::setw(10) << "qp s\n";
  const auto on_iteration = [&](const IterationRecord& r) {
    std::cout << std::setw(5) << r.iteration << std::fixed << std::setprecision(5) << std::setw(14) << r.objective
              << std::setw(12) << r.xi << std::setw(12) << r.eta << std::setw(12) << r.min_pairwise
              << std::setprecision(4) << std::setw(11) << r.oracle_seconds << std::setw(10) << r.qp_seconds << "\n";
    std::cout.unsetf(std::ios::floatfield);
    if (log) {
      log << json{{"iteration", r.iteration}, {"objective", r.objective}, {"xi", r.xi},   {"eta", r.eta},
                  {"min_pairwise", r.min_pairwise}, {"oracle_seconds", r.oracle_seconds}, {"qp_seconds", r.qp_seconds}}
                 .dump()
          << "\n";
    }
  };

  const auto result = train(d, cfg, on_iteration);
  const auto& rep = result.report;
  save_checkpoint(Checkpoint{result.weights, cfg.C, cfg.rho, rep.epsilon, o.oracle}, o.model);

  std::cout << "termination: " << to_string(rep.termination) << " after " << rep.iterations << " iterations (eta - xi = "
            << rep.final_eta - rep.final_xi << ", epsilon " << rep.epsilon << ")\n";
  std::cout << "wrote " << o.model << "\n";
  if (rep.termination == Termination::EarlyTermination) {
    std::cerr << "warning: early termination at iteration " << *rep.anomaly_iteration
              << ": new violation is below the working-set slack, so the separation oracle is not exact\n";
  }
  return rep.termination == Termination::MaxIterations ? kSolver : kOk;
}

int cmd_predict(const Options& o) {
  require_parent_dir(o.out, "--out");
  const auto strategy = parse_strategy(o.strategy);
  const auto ck = load_checkpoint(o.model);
  const auto d = load_dataset(o.data);
  const auto& w = ck.weights;
  if (w.label_count() != d.label_count || w.node_dim() != d.node_dim || w.edge_dim() != d.edge_dim) {
    std::ostringstream msg;
    msg << "model/data dimension mismatch: model has K=" << w.label_count() << ", d_n=" << w.node_dim()
        << ", d_e=" << w.edge_dim() << "; data has K=" << d.label_count << ", d_n=" << d.node_dim
        << ", d_e=" << d.edge_dim;
    throw DataError(msg.str());
  }
  const auto idx = fold_indices(o, d.instances.size(), true);

  std::vector<InferenceResult> results(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) results[i] = predict(w, d.instances[idx[i]], strategy);

  std::ofstream f(o.out);
  if (!f) throw std::runtime_error("cannot open " + o.out + " for writing");
  f << json{{"format", kPredictionsFormat}, {"version", 1}, {"K", d.label_count}, {"strategy", o.strategy},
            {"count", idx.size()}}
           .dump()
    << "\n";
  std::size_t exact = 0;
  double energy = 0.0;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto& r = results[i];
    json line{{"index", idx[i]}, {"labels", r.labeling}, {"energy", r.energy}, {"exact", r.exact}};
    line["lower_bound"] = r.lower_bound ? json(*r.lower_bound) : json(nullptr);
    f << line.dump() << "\n";
    exact += r.exact ? 1 : 0;
    energy += r.energy;
  }
  if (!f) throw std::runtime_error("write failed: " + o.out);
  std::cout << "wrote " << o.out << ": " << idx.size() << " instances (" << exact << " exact), total energy "
            << energy << "\n";
  return kOk;
}

struct Predictions {
  std::vector<std::size_t> index;
  std::vector<std::vector<int>> labels;
};

Predictions load_predictions(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path);
  Predictions p;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  std::size_t count = 0;
  try {
    while (std::getline(f, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const auto j = json::parse(line);
      if (!header) {
        if (j.value("format", "") != kPredictionsFormat) throw DataError("not a predictions file");
        count = j.at("count").get<std::size_t>();
        header = true;
        continue;
      }
      p.index.push_back(j.at("index").get<std::size_t>());
      p.labels.push_back(j.at("labels").get<std::vector<int>>());
    }
  } catch (const json::exception& e) {
    throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
  }
  if (!header) throw DataError(path + ": empty predictions file");
  if (p.index.size() != count)
    throw DataError(path + ": header announces " + std::to_string(count) + " instances, found " +
                    std::to_string(p.index.size()));
  return p;
}

int cmd_evaluate(const Options& o) {
  require_parent_dir(o.out, "--out");
  const auto d = load_dataset(o.data);
  const auto p = load_predictions(o.pred);
  if (o.folds > 1) {
    const auto want = fold_indices(o, d.instances.size(), true);
    if (p.index != want) throw DataError("predictions do not cover exactly fold " + std::to_string(o.fold));
  }
  for (std::size_t i = 0; i < p.index.size(); ++i) {
    if (p.index[i] >= d.instances.size())
      throw DataError("prediction for instance " + std::to_string(p.index[i]) + " but the dataset has " +
                      std::to_string(d.instances.size()));
    if (p.labels[i].size() != d.instances[p.index[i]].node_count())
      throw DataError("instance " + std::to_string(p.index[i]) + ": " + std::to_string(p.labels[i].size()) +
                      " predicted labels for " + std::to_string(d.instances[p.index[i]].node_count()) + " nodes");
  }
  const auto gold = subset(d, p.index);
  const auto m = evaluate(p.labels, gold);

  std::cout << std::fixed << std::setprecision(4) << "accuracy        " << m.accuracy << "\n"
            << "macro precision " << m.macro_precision << "\n"
            << "macro recall    " << m.macro_recall << "\n";
  std::cout.unsetf(std::ios::floatfield);
  std::cout << "confusion (rows gold, columns predicted)\n";
  const int K = gold.label_count;
  std::cout << std::setw(6) << "";
  for (int l = 0; l < K; ++l) std::cout << std::setw(8) << l;
  std::cout << "\n";
  for (int k = 0; k < K; ++k) {
    std::cout << std::setw(6) << k;
    for (int l = 0; l < K; ++l) std::cout << std::setw(8) << m.confusion[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)];
    std::cout << "\n";
  }
  if (!o.out.empty()) {
    std::ofstream f(o.out);
    f << json{{"instances", p.index.size()},
              {"accuracy", m.accuracy},
              {"macro_precision", m.macro_precision},
              {"macro_recall", m.macro_recall},
              {"confusion", m.confusion}}
             .dump(2)
      << "\n";
    if (!f) throw std::runtime_error("write failed: " + o.out);
  }
  return kOk;
}

int cmd_inspect(const Options& o) {
  require_parent_dir(o.out, "--out");
  const auto ck = load_checkpoint(o.model);
  const auto& w = ck.weights;
  const int K = w.label_count();
  std::ofstream csv;
  if (!o.out.empty()) {
    csv.open(o.out);
    if (!csv) throw std::runtime_error("cannot open " + o.out + " for writing");
    csv << "feature,from,to,weight\n" << std::setprecision(17);
  }
  for (int f = 0; f < w.edge_dim(); ++f) {
    std::cout << "edge feature " << f << " (rows: label of u, columns: label of v)\n" << std::setw(6) << "";
    for (int l = 0; l < K; ++l) std::cout << std::setw(11) << l;
    std::cout << "\n" << std::fixed << std::setprecision(5);
    for (int k = 0; k < K; ++k) {
      std::cout << std::setw(6) << k;
      for (int l = 0; l < K; ++l) {
        const double v = w.pairwise(k, l)[static_cast<std::size_t>(f)];
        std::cout << std::setw(11) << v;
        if (csv) csv << f << "," << k << "," << l << "," << v << "\n";
      }
      std::cout << "\n";
    }
    std::cout.unsetf(std::ios::floatfield);
  }
  if (csv && !csv.flush()) throw std::runtime_error("write failed: " + o.out);
  return kOk;
}

void add_fold_flags(CLI::App* sub, Options& o) {
  sub->add_option("--folds", o.folds, "Number of cross-validation folds (0 = no split)")->check(CLI::NonNegativeNumber);
  sub->add_option("--fold", o.fold, "Held-out fold index");
  sub->add_option("--seed", o.seed, "Seed for the fold shuffle");
}

} // namespace

int run(const std::vector<std::string>& args) {
  Options o;
  CLI::App app{"Submodular structural SVM toolkit"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "Write a synthetic dataset with planted pairwise structure");
  gen->add_option("--out", o.out, "Output dataset (JSONL)")->required();
  gen->add_option("--seed", o.seed, "Random seed");
  gen->add_option("--instances", o.gen.instances, "Number of instances");
  gen->add_option("--nodes-min", o.gen.nodes_min, "Minimum nodes per instance");
  gen->add_option("--nodes-max", o.gen.nodes_max, "Maximum nodes per instance");
  gen->add_option("--edge-density", o.gen.edge_density, "Distractor edges per node");
  gen->add_option("--noise", o.gen.noise, "Node evidence noise (std. dev.)");
  gen->add_option("--K", o.gen.label_count, "Number of classes");
  gen->add_option("--affinity", o.gen.affinity, "Planted successor probability");

  auto* tr = app.add_subcommand("train", "Cutting-plane training");
  tr->add_option("--data", o.data, "Training dataset")->required()->check(CLI::ExistingFile);
  tr->add_option("--model", o.model, "Output checkpoint")->required();
  tr->add_option("--log", o.log, "Per-iteration log (JSONL)");
  tr->add_option("--C", o.C, "Regularization constant")->check(CLI::PositiveNumber);
  tr->add_option("--rho", o.rho, "Loss scale")->check(CLI::PositiveNumber);
  tr->add_option("--epsilon", o.epsilon, "Termination tolerance (default 1e-3 * rho)")->check(CLI::PositiveNumber);
  tr->add_option("--oracle", o.oracle, "Separation oracle")->check(CLI::IsMember({"exact", "qpbo-r"}));
  tr->add_flag("--heuristic,!--no-heuristic", o.heuristic, "Rounding heuristic for the qpbo-r oracle");
  tr->add_option("--max-iters", o.max_iters, "Iteration limit")->check(CLI::PositiveNumber);
  tr->add_flag("--unary-only", o.unary_only, "Drop all edges (unary-only baseline model)");
  add_fold_flags(tr, o);

  auto* pr = app.add_subcommand("predict", "Test-time inference");
  pr->add_option("--data", o.data, "Dataset")->required()->check(CLI::ExistingFile);
  pr->add_option("--model", o.model, "Checkpoint")->required()->check(CLI::ExistingFile);
  pr->add_option("--out", o.out, "Output predictions (JSONL)")->required();
  pr->add_option("--strategy", o.strategy, "Inference strategy")->check(CLI::IsMember({"auto", "exact", "trws"}));
  add_fold_flags(pr, o);

  auto* ev = app.add_subcommand("evaluate", "Score predictions against the gold labels");
  ev->add_option("--data", o.data, "Gold dataset")->required()->check(CLI::ExistingFile);
  ev->add_option("--pred", o.pred, "Predictions from `predict`")->required()->check(CLI::ExistingFile);
  ev->add_option("--out", o.out, "Metrics (JSON)");
  add_fold_flags(ev, o);

  auto* in = app.add_subcommand("inspect", "Dump the pairwise weight matrices");
  in->add_option("--model", o.model, "Checkpoint")->required()->check(CLI::ExistingFile);
  in->add_option("--out", o.out, "CSV output (feature,from,to,weight)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) return cmd_generate(o);
    if (*tr) return cmd_train(o);
    if (*pr) return cmd_predict(o);
    if (*ev) return cmd_evaluate(o);
    if (*in) return cmd_inspect(o);
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kSolver;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}

} // namespace subsvm::cli
