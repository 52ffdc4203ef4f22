#include "cim/graph.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include <nlohmann/json.hpp>

#include "cim/errors.hpp"
#include "cim/subsets.hpp"

namespace cim {

Graph::Graph(int n, std::vector<Edge> edges) : n_(n), edges_(std::move(edges)) {
  if (n_ < 0) throw std::invalid_argument("negative node count");
  out_.assign(static_cast<std::size_t>(n_), {});
  in_.assign(static_cast<std::size_t>(n_), {});
  std::set<std::pair<int, int>> seen;
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const Edge& ed = edges_[e];
    if (ed.src < 0 || ed.src >= n_ || ed.dst < 0 || ed.dst >= n_)
      throw std::invalid_argument("edge endpoint out of range");
    if (ed.src == ed.dst) throw std::invalid_argument("self-loop");
    if (!(ed.p >= 0.0 && ed.p <= 1.0))
      throw std::invalid_argument("edge probability outside [0,1]");
    if (!seen.insert({ed.src, ed.dst}).second)
      throw std::invalid_argument("duplicate edge");
    out_[static_cast<std::size_t>(ed.src)].push_back(static_cast<int>(e));
    in_[static_cast<std::size_t>(ed.dst)].push_back(static_cast<int>(e));
  }
}

double Graph::max_edge_prob() const {
  double m = 0.0;
  for (const Edge& e : edges_) m = std::max(m, e.p);
  return m;
}

Graph Graph::load_edge_list(std::istream& in) {
  std::vector<Edge> edges;
  std::set<std::pair<int, int>> seen;
  int max_id = -1;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.rfind("# format ", 0) == 0) {
      const std::string v = line.substr(9);
      if (std::atoi(v.c_str()) > 1)
        throw ParseError(lineno, "format " + v + " is newer than this reader (1.x)");
      continue;
    }
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    Edge e;
    if (!(ls >> e.src)) {
      std::string rest;
      if (ls.clear(), ls >> rest) throw ParseError(lineno, "expected `src dst p`");
      continue;  // blank or comment-only line
    }
    if (!(ls >> e.dst >> e.p)) throw ParseError(lineno, "expected `src dst p`");
    std::string trailing;
    if (ls >> trailing) throw ParseError(lineno, "trailing tokens after `src dst p`");
    if (e.src < 0 || e.dst < 0) throw ParseError(lineno, "negative node id");
    if (e.src == e.dst) throw ParseError(lineno, "self-loop");
    if (!(e.p >= 0.0 && e.p <= 1.0)) throw ParseError(lineno, "probability outside [0,1]");
    if (!seen.insert({e.src, e.dst}).second) throw ParseError(lineno, "duplicate edge");
    max_id = std::max({max_id, e.src, e.dst});
    edges.push_back(e);
  }
  return Graph(max_id + 1, std::move(edges));
}

Graph Graph::load_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return load_edge_list(in);
}

void Graph::save_edge_list(std::ostream& out) const {
  out << "# format 1.0\n";
  out.precision(17);
  for (const Edge& e : edges_) out << e.src << ' ' << e.dst << ' ' << e.p << '\n';
}

ExposureSpec ExposureSpec::load_json(std::istream& in, int n) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("exposure spec: ") + e.what());
  }
  if (doc.contains("format_version")) {
    const std::string v = doc.at("format_version").get<std::string>();
    if (std::atoi(v.c_str()) > 1)
      throw std::invalid_argument("exposure spec: format_version " + v +
                                  " is newer than this reader (1.x)");
  }
  ExposureSpec spec = ExposureSpec::empty(n);
  auto read_side = [&](const char* key, std::vector<std::vector<int>>& side) {
    if (!doc.contains(key)) return;
    for (const auto& [node, arr] : doc.at(key).items()) {
      const int i = std::stoi(node);
      if (i < 0 || i >= n) throw std::invalid_argument("exposure spec: node id " + node + " out of range");
      std::vector<int> sources = arr.get<std::vector<int>>();
      std::sort(sources.begin(), sources.end());
      sources.erase(std::unique(sources.begin(), sources.end()), sources.end());
      for (int j : sources) {
        if (j < 0 || j >= n) throw std::invalid_argument("exposure spec: source id out of range for node " + node);
        if (j == i) throw std::invalid_argument("exposure spec: node " + node + " lists itself as a source");
      }
      side[static_cast<std::size_t>(i)] = std::move(sources);
    }
  };
  read_side("pos", spec.pos);
  read_side("neg", spec.neg);
  return spec;
}

ExposureSpec ExposureSpec::load_json_file(const std::string& path, int n) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return load_json(in, n);
}

std::string ExposureSpec::to_json() const {
  nlohmann::json pos_obj = nlohmann::json::object();
  nlohmann::json neg_obj = nlohmann::json::object();
  for (std::size_t i = 0; i < pos.size(); ++i)
    if (!pos[i].empty()) pos_obj[std::to_string(i)] = pos[i];
  for (std::size_t i = 0; i < neg.size(); ++i)
    if (!neg[i].empty()) neg_obj[std::to_string(i)] = neg[i];
  nlohmann::json doc;
  doc["format_version"] = "1.0";
  doc["pos"] = pos_obj;
  doc["neg"] = neg_obj;
  return doc.dump(2);
}

SeedSet::SeedSet(int n, int capacity) : n_(n), capacity_(capacity) {
  if (n < 0) throw std::invalid_argument("negative node count");
  if (capacity < 0) throw std::invalid_argument("negative seed budget");
  mask_.assign(static_cast<std::size_t>(n), 0);
}

void SeedSet::insert(int v) {
  if (v < 0 || v >= n_) throw std::invalid_argument("seed id out of range");
  if (mask_[static_cast<std::size_t>(v)]) return;
  if (size() >= capacity_) throw std::invalid_argument("seed budget exceeded");
  mask_[static_cast<std::size_t>(v)] = 1;
  members_.insert(std::upper_bound(members_.begin(), members_.end(), v), v);
}

void SeedSet::erase(int v) {
  if (v < 0 || v >= n_ || !mask_[static_cast<std::size_t>(v)]) return;
  mask_[static_cast<std::size_t>(v)] = 0;
  members_.erase(std::find(members_.begin(), members_.end(), v));
}

std::uint64_t SeedSet::mask64() const {
  if (n_ > 64) throw std::invalid_argument("mask64 needs n <= 64");
  std::uint64_t m = 0;
  for (int v : members_) m |= std::uint64_t{1} << v;
  return m;
}

namespace {

struct PathDfs {
  const Graph& g;
  std::vector<char> on_path;
  std::vector<double>& count;  // arrivals per node
  long long total = 0;
  int cap_len;
  long long cap_count;

  void run(int v, int depth) {
    for (int e : g.out_edges(v)) {
      const int w = g.edges()[static_cast<std::size_t>(e)].dst;
      if (on_path[static_cast<std::size_t>(w)]) continue;
      if (depth == cap_len)
        throw GuardExceeded("path length cap reached with paths left to extend");
      if (++total > cap_count) throw GuardExceeded("path count cap exceeded");
      count[static_cast<std::size_t>(w)] += 1.0;
      on_path[static_cast<std::size_t>(w)] = 1;
      run(w, depth + 1);
      on_path[static_cast<std::size_t>(w)] = 0;
    }
  }
};

}  // namespace

std::vector<double> path_counts(const Graph& g, const SeedSet& seeds,
                                const PathCountOptions& opt) {
  const int n = g.num_nodes();
  std::vector<double> count(static_cast<std::size_t>(n), 0.0);
  const int cap_len = opt.cap_len < 0 ? std::max(0, n - 1) : opt.cap_len;
  PathDfs dfs{g, std::vector<char>(static_cast<std::size_t>(n), 0), count, 0, cap_len,
              opt.cap_count};
  for (int s : seeds.members()) {
    dfs.on_path[static_cast<std::size_t>(s)] = 1;
    dfs.run(s, 0);
    dfs.on_path[static_cast<std::size_t>(s)] = 0;
  }
  for (int s : seeds.members()) count[static_cast<std::size_t>(s)] = 0.0;
  return count;
}

namespace {

struct PathEnum {
  const Graph& g;
  int target;
  int max_len;
  long long cap_count;
  std::vector<char> on_path;
  std::vector<int> stack;  // edge indices of the current path
  std::vector<std::vector<int>> out;

  void run(int u, int depth) {
    if (depth == max_len) return;
    for (int e : g.out_edges(u)) {
      const int w = g.edges()[static_cast<std::size_t>(e)].dst;
      if (on_path[static_cast<std::size_t>(w)]) continue;
      stack.push_back(e);
      if (w == target) {
        if (static_cast<long long>(out.size()) >= cap_count)
          throw GuardExceeded("path enumeration cap exceeded");
        out.push_back(stack);
      } else {
        on_path[static_cast<std::size_t>(w)] = 1;
        run(w, depth + 1);
        on_path[static_cast<std::size_t>(w)] = 0;
      }
      stack.pop_back();
    }
  }
};

}  // namespace

std::vector<std::vector<int>> enumerate_simple_paths(const Graph& g, const SeedSet& seeds,
                                                     int v, int max_len,
                                                     long long cap_count) {
  const int n = g.num_nodes();
  if (v < 0 || v >= n) throw std::invalid_argument("target node out of range");
  if (seeds.contains(v)) throw std::invalid_argument("target node is a seed");
  PathEnum walk{g, v, max_len < 0 ? std::max(0, n - 1) : max_len, cap_count,
                std::vector<char>(static_cast<std::size_t>(n), 0)};
  for (int s : seeds.members()) {
    walk.on_path[static_cast<std::size_t>(s)] = 1;
    walk.run(s, 0);
    walk.on_path[static_cast<std::size_t>(s)] = 0;
  }
  return walk.out;
}

namespace {

// D = sum of A over sources outside S; C = ordered-pair sum (sum A)^2 - sum A^2.
void accumulate_moments(const std::vector<std::vector<int>>& side, const SeedSet& seeds,
                        const std::vector<double>& a, std::vector<double>& d,
                        std::vector<double>& c) {
  for (std::size_t i = 0; i < side.size(); ++i) {
    double sum = 0.0, sumsq = 0.0;
    for (int j : side[i]) {
      if (seeds.contains(j)) continue;
      const double aj = a[static_cast<std::size_t>(j)];
      sum += aj;
      sumsq += aj * aj;
    }
    d[i] = sum;
    c[i] = sum * sum - sumsq;
  }
}

}  // namespace

MomentCoefficients moment_coefficients(const Graph& g, const ExposureSpec& exposure,
                                       const SeedSet& seeds, const PathCountOptions& opt) {
  const std::size_t n = static_cast<std::size_t>(g.num_nodes());
  const std::vector<double> a = path_counts(g, seeds, opt);
  MomentCoefficients m;
  m.d_pos.assign(n, 0.0);
  m.d_neg.assign(n, 0.0);
  m.c_pos.assign(n, 0.0);
  m.c_neg.assign(n, 0.0);
  const ExposureSpec spec = exposure.resized(g.num_nodes());
  accumulate_moments(spec.pos, seeds, a, m.d_pos, m.c_pos);
  accumulate_moments(spec.neg, seeds, a, m.d_neg, m.c_neg);
  return m;
}

WorstCaseMoments worst_case_moments(const Graph& g, const ExposureSpec& exposure, int K,
                                    long long subset_guard, const PathCountOptions& opt) {
  const int n = g.num_nodes();
  if (count_subsets_leq(n, K, subset_guard + 1) > subset_guard)
    throw GuardExceeded("seed-set enumeration guard exceeded");
  WorstCaseMoments w;
  const std::size_t sn = static_cast<std::size_t>(n);
  w.d_pos.assign(sn, 0.0);
  w.d_neg.assign(sn, 0.0);
  w.c_pos.assign(sn, 0.0);
  w.c_neg.assign(sn, 0.0);
  for_each_subset_leq(n, std::min(K, n), [&](const std::vector<int>& members) {
    SeedSet s(n, K);
    for (int v : members) s.insert(v);
    const MomentCoefficients m = moment_coefficients(g, exposure, s, opt);
    for (std::size_t i = 0; i < sn; ++i) {
      w.d_pos[i] = std::max(w.d_pos[i], m.d_pos[i]);
      w.d_neg[i] = std::max(w.d_neg[i], m.d_neg[i]);
      w.c_pos[i] = std::max(w.c_pos[i], m.c_pos[i]);
      w.c_neg[i] = std::max(w.c_neg[i], m.c_neg[i]);
    }
  });
  return w;
}

long long count_subsets_leq(int n, int K, long long cap) {
  long long total = 0;
  for (int k = 0; k <= std::min(K, n); ++k) {
    long long c = 1;
    for (int i = 1; i <= k; ++i) {
      c = c * (n - k + i) / i;
      if (c > cap) return cap;
    }
    total += c;
    if (total > cap) return cap;
  }
  return total;
}

}  // namespace cim
