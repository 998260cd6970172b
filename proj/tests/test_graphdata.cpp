#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "subsvm/errors.hpp"
#include "subsvm/graphdata.hpp"
#include "subsvm/infer.hpp"
#include "support.hpp"

using namespace subsvm;
namespace fs = std::filesystem;

namespace {

fs::path tmp_file(const std::string& name) {
  fs::create_directories(TEST_TMP_DIR);
  return fs::path(TEST_TMP_DIR) / name;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream f(p);
  f << s;
}

std::string read_text(const fs::path& p) {
  std::ifstream f(p);
  return {std::istreambuf_iterator<char>(f), {}};
}

} // namespace

TEST_CASE("load_dataset reads a minimal file") {
  const auto p = tmp_file("minimal.jsonl");
  write_text(p, R"({"format":"subsvm-dataset","version":1,"d_n":2,"d_e":1,"K":2,"count":1}
{"nodes":[[0.5,1],[1,-2]],"edges":[[0,1,[0.25]]],"labels":[1,0]}
)");
  const auto d = load_dataset(p);
  REQUIRE(d.instances.size() == 1);
  CHECK(d.label_count == 2);
  CHECK(d.node_dim == 2);
  CHECK(d.edge_dim == 1);
  const auto& g = d.instances[0];
  CHECK(g.node_count() == 2);
  REQUIRE(g.edges.size() == 1);
  CHECK(g.edges[0].u == 0);
  CHECK(g.edges[0].v == 1);
  CHECK(g.edges[0].features[0] == 0.25);
  CHECK(g.labels == std::vector<int>{1, 0});
}

TEST_CASE("load_dataset rejects invariant violations with location") {
  const std::string header = R"({"format":"subsvm-dataset","version":1,"d_n":1,"d_e":1,"K":2,"count":1})";
  const auto p = tmp_file("bad.jsonl");

  SUBCASE("negative edge feature names the edge") {
    write_text(p, header + "\n" + R"({"nodes":[[1],[1]],"edges":[[0,1,[-0.1]]],"labels":[0,1]})" + "\n");
    try {
      (void)load_dataset(p);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      const std::string msg = e.what();
      CHECK(msg.find(":2:") != std::string::npos);
      CHECK(msg.find("instance 0") != std::string::npos);
      CHECK(msg.find("edge 0 (0,1)") != std::string::npos);
      CHECK(msg.find("negative") != std::string::npos);
    }
  }
  SUBCASE("dangling endpoint") {
    write_text(p, header + "\n" + R"({"nodes":[[1],[1]],"edges":[[0,5,[0.1]]],"labels":[0,1]})" + "\n");
    CHECK_THROWS_AS(load_dataset(p), DataError);
  }
  SUBCASE("self loop") {
    write_text(p, header + "\n" + R"({"nodes":[[1],[1]],"edges":[[1,1,[0.1]]],"labels":[0,1]})" + "\n");
    CHECK_THROWS_AS(load_dataset(p), DataError);
  }
  SUBCASE("duplicate undirected edge") {
    write_text(p, header + "\n" + R"({"nodes":[[1],[1]],"edges":[[0,1,[0.1]],[1,0,[0.2]]],"labels":[0,1]})" + "\n");
    CHECK_THROWS_AS(load_dataset(p), DataError);
  }
  SUBCASE("node dimension mismatch") {
    write_text(p, header + "\n" + R"({"nodes":[[1,2],[1]],"edges":[],"labels":[0,1]})" + "\n");
    CHECK_THROWS_AS(load_dataset(p), DataError);
  }
  SUBCASE("label out of range") {
    write_text(p, header + "\n" + R"({"nodes":[[1],[1]],"edges":[],"labels":[0,2]})" + "\n");
    CHECK_THROWS_AS(load_dataset(p), DataError);
  }
  SUBCASE("malformed json reports the line") {
    write_text(p, header + "\n" + R"({"nodes":[[1],[1]], oops)" + "\n");
    try {
      (void)load_dataset(p);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }
  }
  SUBCASE("count mismatch") {
    write_text(p, header + "\n");
    CHECK_THROWS_AS(load_dataset(p), DataError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(load_dataset(tmp_file("does_not_exist.jsonl")), DataError); }
}

TEST_CASE("save_dataset/load_dataset round trip") {
  SUBCASE("empty dataset keeps its header") {
    const auto p = tmp_file("empty.jsonl");
    Dataset d;
    save_dataset(d, p);
    const auto text = read_text(p);
    CHECK(text.find("subsvm-dataset") != std::string::npos);
    CHECK(load_dataset(p) == d);
  }
  SUBCASE("generated dataset") {
    GeneratorConfig cfg;
    cfg.instances = 5;
    const auto d = generate_synthetic(cfg, 3);
    const auto p = tmp_file("gen5.jsonl");
    save_dataset(d, p);
    CHECK(load_dataset(p) == d);
  }
  SUBCASE("awkward doubles survive exactly") {
    testing::Rng rng(11);
    Dataset d{3, 2, 3, {}};
    for (int i = 0; i < 4; ++i) d.instances.push_back(testing::random_instance(rng, 5, 3, 3, 2, 6));
    d.instances[0].node_features[0][0] = 0.1 + 0.2;
    d.instances[0].node_features[0][1] = 1e-300;
    d.instances[0].node_features[0][2] = -123456789.123456789;
    const auto p = tmp_file("awkward.jsonl");
    save_dataset(d, p);
    CHECK(load_dataset(p) == d);
  }
  SUBCASE("unwritable path") {
    CHECK_THROWS(save_dataset(Dataset{}, fs::path(TEST_TMP_DIR) / "no_such_dir" / "x.jsonl"));
  }
}

TEST_CASE("generate_synthetic") {
  GeneratorConfig cfg;
  cfg.instances = 8;

  SUBCASE("deterministic for a fixed seed") {
    CHECK(generate_synthetic(cfg, 7) == generate_synthetic(cfg, 7));
    CHECK_FALSE(generate_synthetic(cfg, 7) == generate_synthetic(cfg, 8));
  }
  SUBCASE("layout and invariants") {
    const auto d = generate_synthetic(cfg, 1);
    CHECK_NOTHROW(validate_dataset(d));
    CHECK(d.node_dim == cfg.label_count + 1);
    CHECK(d.edge_dim == 2);
    for (const auto& g : d.instances) {
      CHECK(static_cast<int>(g.node_count()) >= cfg.nodes_min);
      CHECK(static_cast<int>(g.node_count()) <= cfg.nodes_max);
      int planted = 0;
      for (const auto& e : g.edges) planted += e.features[kPlantedEdgeFeature] == 1.0 ? 1 : 0;
      CHECK(planted == static_cast<int>(g.node_count()) - 1);
    }
  }
  SUBCASE("planted table is non-negative, row-stochastic and not symmetric") {
    const auto t = planted_table(cfg);
    for (std::size_t k = 0; k < t.size(); ++k) {
      double s = 0.0;
      for (double x : t[k]) {
        CHECK(x >= 0.0);
        s += x;
      }
      CHECK(s == doctest::Approx(1.0));
      // Off-diagonal successor dominates the diagonal.
      CHECK(t[k][(k + 1) % t.size()] > t[k][k]);
    }
    CHECK(t[0][1] != t[1][0]);
  }
  SUBCASE("noise 0 makes node evidence decisive") {
    cfg.noise = 0.0;
    const auto d = generate_synthetic(cfg, 2);
    std::vector<std::vector<int>> pred;
    for (const auto& g : d.instances) pred.push_back(planted_unary_decode(cfg, g));
    CHECK(evaluate(pred, d).accuracy == 1.0);
  }
  SUBCASE("degenerate configs") {
    auto bad = cfg;
    bad.label_count = 1;
    CHECK_THROWS_AS(generate_synthetic(bad, 0), std::invalid_argument);
    bad = cfg;
    bad.nodes_min = 0;
    bad.nodes_max = 0;
    CHECK_THROWS_AS(generate_synthetic(bad, 0), std::invalid_argument);
    bad = cfg;
    bad.instances = 0;
    CHECK_THROWS_AS(generate_synthetic(bad, 0), std::invalid_argument);
  }
}

TEST_CASE("structured Bayes decoder beats unary-only Bayes on held-out data") {
  GeneratorConfig cfg;
  cfg.nodes_min = 30;
  cfg.nodes_max = 30;
  const auto d = generate_synthetic(cfg, 101);
  std::vector<std::vector<int>> structured;
  std::vector<std::vector<int>> unary;
  for (const auto& g : d.instances) {
    // The planted energy is a tree, where TRW-S is exact.
    structured.push_back(trws(planted_energy(cfg, g)).labeling);
    unary.push_back(planted_unary_decode(cfg, g));
  }
  const double s = evaluate(structured, d).accuracy;
  const double u = evaluate(unary, d).accuracy;
  CHECK(s > u);
}

TEST_CASE("planted energy is exactly minimized by TRW-S on small trees") {
  GeneratorConfig cfg;
  cfg.nodes_min = 6;
  cfg.nodes_max = 9;
  cfg.label_count = 3;
  const auto d = generate_synthetic(cfg, 5);
  for (const auto& g : d.instances) {
    const auto e = planted_energy(cfg, g);
    CHECK(trws(e).energy == doctest::Approx(testing::enumerate_min(e).energy).epsilon(1e-12));
  }
}

TEST_CASE("evaluate") {
  SUBCASE("perfect prediction") {
    testing::Rng rng(1);
    Dataset d{2, 1, 3, {}};
    for (int i = 0; i < 3; ++i) d.instances.push_back(testing::random_instance(rng, 6, 3, 2, 1, 4));
    std::vector<std::vector<int>> pred;
    for (const auto& g : d.instances) pred.push_back(g.labels);
    const auto m = evaluate(pred, d);
    CHECK(m.accuracy == 1.0);
    CHECK(m.macro_precision == 1.0);
    CHECK(m.macro_recall == 1.0);
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < 3; ++l)
        if (k != l) CHECK(m.confusion[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] == 0);
  }
  SUBCASE("constant class 0 against two balanced classes") {
    GraphInstance g{{{0}, {0}, {0}, {0}}, {}, {0, 1, 0, 1}, 2, 1, 0};
    Dataset d{1, 0, 2, {g}};
    const std::vector<std::vector<int>> pred{{0, 0, 0, 0}};
    const auto m = evaluate(pred, d);
    CHECK(m.accuracy == 0.5);
    CHECK(m.macro_recall == 0.5);
    // class 0 precision 0.5, class 1 never predicted -> 0
    CHECK(m.macro_precision == 0.25);
  }
  SUBCASE("three-class hand case") {
    GraphInstance g{{{0}, {0}, {0}}, {}, {0, 1, 2}, 3, 1, 0};
    Dataset d{1, 0, 3, {g}};
    const std::vector<std::vector<int>> pred{{0, 1, 1}};
    const auto m = evaluate(pred, d);
    CHECK(m.accuracy == doctest::Approx(2.0 / 3.0));
    CHECK(m.confusion[2][1] == 1);
    CHECK(m.confusion[1][1] == 1);
    CHECK(m.confusion[0][0] == 1);
    // precision: 1, 1/2, 0 ; recall: 1, 1, 0
    CHECK(m.macro_precision == doctest::Approx(0.5));
    CHECK(m.macro_recall == doctest::Approx(2.0 / 3.0));
  }
  SUBCASE("shape mismatch") {
    GraphInstance g{{{0}, {0}}, {}, {0, 1}, 2, 1, 0};
    Dataset d{1, 0, 2, {g}};
    const std::vector<std::vector<int>> wrong_len{{0}};
    CHECK_THROWS(evaluate(wrong_len, d));
    const std::vector<std::vector<int>> wrong_count{};
    CHECK_THROWS(evaluate(wrong_count, d));
  }
  SUBCASE("confusion sums and bounds on random predictions") {
    testing::Rng rng(9);
    Dataset d{2, 1, 4, {}};
    std::vector<std::vector<int>> pred;
    std::size_t total = 0;
    for (int i = 0; i < 10; ++i) {
      d.instances.push_back(testing::random_instance(rng, 7, 4, 2, 1, 5));
      std::vector<int> p;
      for (int u = 0; u < 7; ++u) p.push_back(testing::uniform_int(rng, 0, 3));
      pred.push_back(p);
      total += 7;
    }
    const auto m = evaluate(pred, d);
    std::int64_t sum = 0;
    std::int64_t trace = 0;
    for (int k = 0; k < 4; ++k) {
      std::int64_t row = 0;
      std::int64_t gold = 0;
      for (int l = 0; l < 4; ++l) row += m.confusion[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)];
      for (const auto& g : d.instances)
        for (int y : g.labels) gold += y == k ? 1 : 0;
      CHECK(row == gold);
      sum += row;
      trace += m.confusion[static_cast<std::size_t>(k)][static_cast<std::size_t>(k)];
    }
    CHECK(sum == static_cast<std::int64_t>(total));
    CHECK(m.accuracy == doctest::Approx(static_cast<double>(trace) / static_cast<double>(sum)));
    for (double v : {m.accuracy, m.macro_precision, m.macro_recall}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("split_folds and subset") {
  const auto folds = split_folds(10, 3, 4);
  REQUIRE(folds.size() == 3);
  std::vector<std::size_t> all;
  for (const auto& f : folds) {
    CHECK(f.size() >= 3);
    CHECK(f.size() <= 4);
    CHECK(std::is_sorted(f.begin(), f.end()));
    all.insert(all.end(), f.begin(), f.end());
  }
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < 10; ++i) CHECK(all[i] == i);
  CHECK(split_folds(10, 3, 4) == folds);
  CHECK_THROWS(split_folds(2, 3, 0));

  GeneratorConfig cfg;
  cfg.instances = 5;
  const auto d = generate_synthetic(cfg, 0);
  const std::vector<std::size_t> pick{4, 1};
  const auto s = subset(d, pick);
  REQUIRE(s.instances.size() == 2);
  CHECK(s.instances[0] == d.instances[4]);
  CHECK(s.instances[1] == d.instances[1]);
}
