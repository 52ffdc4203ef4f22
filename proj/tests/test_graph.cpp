#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "cim/errors.hpp"
#include "cim/graph.hpp"
#include "cim/subsets.hpp"
#include "common.hpp"

using namespace cim;

namespace {

// Reference path counter: enumerate simple paths from each seed with a plain
// recursive walk over a set-based visited list. No shared code with the
// production DFS.
void oracle_walk(const Graph& g, int v, std::set<int>& visited, std::vector<double>& arrivals) {
  for (int e : g.out_edges(v)) {
    const int w = g.edges()[static_cast<std::size_t>(e)].dst;
    if (visited.count(w)) continue;
    arrivals[static_cast<std::size_t>(w)] += 1.0;
    visited.insert(w);
    oracle_walk(g, w, visited, arrivals);
    visited.erase(w);
  }
}

std::vector<double> oracle_path_counts(const Graph& g, const SeedSet& seeds) {
  std::vector<double> arrivals(static_cast<std::size_t>(g.num_nodes()), 0.0);
  for (int s : seeds.members()) {
    std::set<int> visited{s};
    oracle_walk(g, s, visited, arrivals);
  }
  for (int s : seeds.members()) arrivals[static_cast<std::size_t>(s)] = 0.0;
  return arrivals;
}

std::vector<int> path_nodes(const Graph& g, const std::vector<int>& edge_seq) {
  std::vector<int> nodes{g.edges()[static_cast<std::size_t>(edge_seq[0])].src};
  for (int e : edge_seq) nodes.push_back(g.edges()[static_cast<std::size_t>(e)].dst);
  return nodes;
}

}  // namespace

TEST_CASE("graph construction rejects invalid input") {
  CHECK_THROWS_AS(Graph(2, {{0, 0, 0.1}}), std::invalid_argument);          // self-loop
  CHECK_THROWS_AS(Graph(2, {{0, 1, 0.1}, {0, 1, 0.2}}), std::invalid_argument);  // duplicate
  CHECK_THROWS_AS(Graph(2, {{0, 1, 1.5}}), std::invalid_argument);          // p out of range
  CHECK_THROWS_AS(Graph(2, {{0, 1, -0.1}}), std::invalid_argument);
  CHECK_THROWS_AS(Graph(2, {{0, 2, 0.1}}), std::invalid_argument);          // id >= n
  CHECK_THROWS_AS(Graph(2, {{-1, 1, 0.1}}), std::invalid_argument);

  const Graph g(3, {{0, 1, 0.1}, {1, 2, 0.2}});
  CHECK(g.num_nodes() == 3);
  CHECK(g.num_edges() == 2);
  CHECK(g.max_edge_prob() == doctest::Approx(0.2));
}

TEST_CASE("edge list parsing") {
  std::istringstream in("# comment line\n0 1 0.1\n\n1 2 0.2   # trailing comment\n");
  const Graph g = Graph::load_edge_list(in);
  CHECK(g.num_nodes() == 3);
  CHECK(g.num_edges() == 2);
  CHECK(g.max_edge_prob() == doctest::Approx(0.2));

  SUBCASE("self-loop reports its line") {
    std::istringstream bad("0 0 0.1\n");
    try {
      Graph::load_edge_list(bad);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line == 1);
      CHECK(std::string(e.what()).find("self-loop") != std::string::npos);
    }
  }
  SUBCASE("probability out of range") {
    std::istringstream bad("0 1 0.5\n1 2 1.5\n");
    try {
      Graph::load_edge_list(bad);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line == 2);
    }
  }
  SUBCASE("malformed rows") {
    std::istringstream bad("0 1\n");
    CHECK_THROWS_AS(Graph::load_edge_list(bad), ParseError);
    std::istringstream bad2("0 1 0.1 7\n");
    CHECK_THROWS_AS(Graph::load_edge_list(bad2), ParseError);
    std::istringstream bad3("0 -1 0.1\n");
    CHECK_THROWS_AS(Graph::load_edge_list(bad3), ParseError);
  }
  SUBCASE("format header accepted at 1.x, rejected beyond") {
    std::istringstream ok("# format 1.0\n0 1 0.1\n");
    CHECK(Graph::load_edge_list(ok).num_edges() == 1);
    std::istringstream newer("# format 2.0\n0 1 0.1\n");
    CHECK_THROWS_AS(Graph::load_edge_list(newer), ParseError);
  }
}

TEST_CASE("edge list round-trip is byte-stable") {
  cim::Rng rng(7);
  Graph g;
  do {
    g = testgen::random_graph(rng, {4, 8, 14, 0.9, -1.0});
  } while (g.num_edges() == 0);  // an edge-less list infers n = 0 on reload
  std::ostringstream out;
  g.save_edge_list(out);
  std::istringstream in(out.str());
  const Graph h = Graph::load_edge_list(in);
  std::ostringstream out2;
  h.save_edge_list(out2);
  CHECK(out.str() == out2.str());
  int max_id = -1;
  for (const Edge& e : g.edges()) max_id = std::max({max_id, e.src, e.dst});
  CHECK(h.num_nodes() == max_id + 1);  // node count is inferred from edges
  CHECK(h.num_edges() == g.num_edges());
}

TEST_CASE("exposure spec json") {
  std::istringstream in(R"({"format_version":"1.0","pos":{"2":[1,0,1]},"neg":{}})");
  const ExposureSpec ex = ExposureSpec::load_json(in, 3);
  CHECK(ex.pos[2] == std::vector<int>{0, 1});  // sorted, deduplicated
  CHECK(ex.pos[0].empty());
  CHECK(ex.neg[2].empty());

  std::istringstream self(R"({"pos":{"1":[1]},"neg":{}})");
  CHECK_THROWS_AS(ExposureSpec::load_json(self, 3), std::invalid_argument);
  std::istringstream oob(R"({"pos":{"1":[5]},"neg":{}})");
  CHECK_THROWS_AS(ExposureSpec::load_json(oob, 3), std::invalid_argument);
  std::istringstream newer(R"({"format_version":"2.0","pos":{},"neg":{}})");
  CHECK_THROWS_AS(ExposureSpec::load_json(newer, 3), std::invalid_argument);

  const ExposureSpec round = [&] {
    cim::Rng rng(3);
    return testgen::random_exposure(rng, 6, 3);
  }();
  std::istringstream back(round.to_json());
  const ExposureSpec again = ExposureSpec::load_json(back, 6);
  CHECK(again.pos == round.pos);
  CHECK(again.neg == round.neg);
}

TEST_CASE("seed set basics") {
  SeedSet s(6, 2);
  s.insert(4);
  s.insert(1);
  CHECK(s.members() == std::vector<int>{1, 4});
  CHECK(s.contains(4));
  CHECK_FALSE(s.contains(0));
  CHECK_THROWS_AS(s.insert(2), std::invalid_argument);  // over capacity
  s.erase(4);
  s.insert(2);
  CHECK(s.members() == std::vector<int>{1, 2});
  CHECK(s.mask64() == ((1ull << 1) | (1ull << 2)));
  CHECK_THROWS_AS(s.insert(9), std::invalid_argument);  // out of range
}

TEST_CASE("simple path enumeration on the two-route graph") {
  const Graph g(3, {{0, 1, 0.1}, {0, 2, 0.1}, {2, 1, 0.1}});
  const SeedSet s = testgen::make_seeds(3, {0});
  const auto paths = enumerate_simple_paths(g, s, 1);
  REQUIRE(paths.size() == 2);
  CHECK(path_nodes(g, paths[0]) == std::vector<int>{0, 1});
  CHECK(path_nodes(g, paths[1]) == std::vector<int>{0, 2, 1});

  CHECK_THROWS_AS(enumerate_simple_paths(g, s, 0), std::invalid_argument);  // target is a seed
  CHECK(enumerate_simple_paths(g, s, 1, 1).size() == 1);  // length cap filters the long route

  const Graph single(2, {{0, 1, 0.5}});
  const auto one = enumerate_simple_paths(single, testgen::make_seeds(2, {0}), 1);
  REQUIRE(one.size() == 1);
  CHECK(path_nodes(single, one[0]) == std::vector<int>{0, 1});
}

TEST_CASE("path counts match the reference walker on random graphs") {
  cim::Rng rng(11);
  for (int it = 0; it < 300; ++it) {
    const Graph g = testgen::random_graph(rng, {2, 7, 14, 0.5, -1.0});
    const int k = 1 + static_cast<int>(rng.uniform_below(3));
    const SeedSet s = testgen::random_seed_set(rng, g.num_nodes(), std::min(k, g.num_nodes()));
    const std::vector<double> got = path_counts(g, s);
    const std::vector<double> want = oracle_path_counts(g, s);
    REQUIRE(got.size() == want.size());
    for (std::size_t j = 0; j < got.size(); ++j) CHECK(got[j] == want[j]);

    // Arrival counts agree with full path enumeration per target.
    for (int v = 0; v < g.num_nodes(); ++v) {
      if (s.contains(v)) continue;
      CHECK(static_cast<double>(enumerate_simple_paths(g, s, v).size()) ==
            want[static_cast<std::size_t>(v)]);
    }
  }
}

TEST_CASE("path counts grow with the seed set") {
  cim::Rng rng(13);
  for (int it = 0; it < 100; ++it) {
    const Graph g = testgen::random_graph(rng, {3, 7, 12, 0.5, -1.0});
    const int n = g.num_nodes();
    SeedSet small = testgen::random_seed_set(rng, n, 1);
    SeedSet big(n, 2);
    big.insert(small.members()[0]);
    int extra = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(n)));
    if (extra == small.members()[0]) extra = (extra + 1) % n;
    big.insert(extra);
    const auto a_small = path_counts(g, small);
    const auto a_big = path_counts(g, big);
    for (int v = 0; v < n; ++v)
      if (!big.contains(v))
        CHECK(a_big[static_cast<std::size_t>(v)] >= a_small[static_cast<std::size_t>(v)]);
  }
}

TEST_CASE("enumeration guards are explicit errors") {
  // Dense DAG on 12 nodes: path counts explode past a tiny cap.
  std::vector<Edge> edges;
  for (int u = 0; u < 12; ++u)
    for (int v = u + 1; v < 12; ++v) edges.push_back({u, v, 0.1});
  const Graph g(12, edges);
  const SeedSet s = testgen::make_seeds(12, {0});
  PathCountOptions tiny;
  tiny.cap_count = 50;
  CHECK_THROWS_AS(path_counts(g, s, tiny), GuardExceeded);

  // Length cap with room to extend is an error, not truncation.
  const Graph chain(3, {{0, 1, 0.1}, {1, 2, 0.1}});
  PathCountOptions len1;
  len1.cap_len = 1;
  CHECK_THROWS_AS(path_counts(chain, testgen::make_seeds(3, {0}), len1), GuardExceeded);

  // Same cap on a star: every path already complete, no error.
  const Graph star(3, {{0, 1, 0.1}, {0, 2, 0.1}});
  const auto a = path_counts(star, testgen::make_seeds(3, {0}), len1);
  CHECK(a == std::vector<double>{0.0, 1.0, 1.0});
}

TEST_CASE("moment coefficients on the documented path graph") {
  // Chain 0 -> 1 -> 2 with the second node as the only source of the third:
  // worst case over |S| <= 1 is S={0} with one path to node 1.
  const Graph g(3, {{0, 1, 0.1}, {1, 2, 0.1}});
  ExposureSpec ex = ExposureSpec::empty(3);
  ex.pos[2] = {1};

  const MomentCoefficients at0 = moment_coefficients(g, ex, testgen::make_seeds(3, {0}));
  CHECK(at0.d_pos[2] == 1.0);
  CHECK(at0.c_pos[2] == 0.0);
  const MomentCoefficients at1 = moment_coefficients(g, ex, testgen::make_seeds(3, {1}));
  CHECK(at1.d_pos[2] == 0.0);  // the source is itself seeded
  const MomentCoefficients at2 = moment_coefficients(g, ex, testgen::make_seeds(3, {2}));
  CHECK(at2.d_pos[2] == 0.0);  // no path from node 2 back to node 1

  const WorstCaseMoments w = worst_case_moments(g, ex, 1);
  CHECK(w.d_pos[2] == 1.0);
  CHECK(w.c_pos[2] == 0.0);
  CHECK(w.d_pos[0] == 0.0);
  CHECK(w.d_neg[2] == 0.0);
}

TEST_CASE("ordered-pair coefficient counts co-reachable source pairs") {
  // Two sources, one path each under S={0}: C = (1+1)^2 - (1+1) ... = 2.
  const Graph g(4, {{0, 1, 0.1}, {0, 2, 0.1}});
  ExposureSpec ex = ExposureSpec::empty(4);
  ex.pos[3] = {1, 2};
  const MomentCoefficients m = moment_coefficients(g, ex, testgen::make_seeds(4, {0}));
  CHECK(m.d_pos[3] == 2.0);
  CHECK(m.c_pos[3] == 2.0);

  // The two-route graph doubles one source's path count: sum A = 3, sum A^2 = 5.
  const Graph h(4, {{0, 1, 0.1}, {0, 2, 0.1}, {2, 1, 0.1}});
  const MomentCoefficients mh = moment_coefficients(h, ex, testgen::make_seeds(4, {0}));
  CHECK(mh.d_pos[3] == 3.0);
  CHECK(mh.c_pos[3] == 4.0);
}

TEST_CASE("moment coefficients match a direct formula on random instances") {
  cim::Rng rng(17);
  for (int it = 0; it < 200; ++it) {
    const Graph g = testgen::random_graph(rng, {2, 7, 12, 0.5, -1.0});
    const int n = g.num_nodes();
    const ExposureSpec ex = testgen::random_exposure(rng, n, 3);
    const SeedSet s = testgen::random_seed_set(rng, n, 1 + static_cast<int>(rng.uniform_below(2)));
    const std::vector<double> a = oracle_path_counts(g, s);
    const MomentCoefficients m = moment_coefficients(g, ex, s);
    for (int i = 0; i < n; ++i) {
      for (int side = 0; side < 2; ++side) {
        const auto& sources = side == 0 ? ex.pos[i] : ex.neg[i];
        double sum = 0, sumsq = 0;
        for (int j : sources) {
          if (s.contains(j)) continue;
          sum += a[static_cast<std::size_t>(j)];
          sumsq += a[static_cast<std::size_t>(j)] * a[static_cast<std::size_t>(j)];
        }
        const double d = side == 0 ? m.d_pos[i] : m.d_neg[i];
        const double c = side == 0 ? m.c_pos[i] : m.c_neg[i];
        CHECK(d == sum);
        CHECK(c == sum * sum - sumsq);
      }
    }
  }
}

TEST_CASE("worst-case constants are nondecreasing in the budget") {
  cim::Rng rng(19);
  for (int it = 0; it < 50; ++it) {
    const Graph g = testgen::random_graph(rng, {3, 6, 10, 0.5, -1.0});
    const ExposureSpec ex = testgen::random_exposure(rng, g.num_nodes(), 2);
    const WorstCaseMoments w1 = worst_case_moments(g, ex, 1);
    const WorstCaseMoments w2 = worst_case_moments(g, ex, 2);
    for (int i = 0; i < g.num_nodes(); ++i) {
      CHECK(w2.d_pos[i] >= w1.d_pos[i]);
      CHECK(w2.d_neg[i] >= w1.d_neg[i]);
      CHECK(w2.c_pos[i] >= w1.c_pos[i]);
      CHECK(w2.c_neg[i] >= w1.c_neg[i]);
    }
  }
}

TEST_CASE("subset enumeration order and counting") {
  CHECK(count_subsets_leq(5, 2, 1000) == 1 + 5 + 10);
  CHECK(count_subsets_leq(30, 10, 1000) == 1000);  // saturates at the cap
  std::vector<std::vector<int>> seen;
  for_each_subset_leq(3, 2, [&](const std::vector<int>& s) { seen.push_back(s); });
  const std::vector<std::vector<int>> want{{}, {0}, {1}, {2}, {0, 1}, {0, 2}, {1, 2}};
  CHECK(seen == want);
}
