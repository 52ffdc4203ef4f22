#include "cim/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cim/errors.hpp"
#include "cim/parallel.hpp"
#include "cim/response.hpp"
#include "cim/rng.hpp"
#include "cim/selection.hpp"
#include "cim/subsets.hpp"

namespace cim {

namespace {

constexpr std::uint64_t kGraphKey = 0x6a;
constexpr std::uint64_t kExposureKey = 0xe0;
constexpr std::uint64_t kModelKey = 0x30;
constexpr std::uint64_t kPolicyKey = 0x70;
constexpr std::uint64_t kRecordKey = 0x4c;

using nlohmann::json;

template <typename T>
void read_field(const json& doc, const char* scope, const char* name, T& out,
                bool required = false) {
  if (!doc.contains(name)) {
    if (required)
      throw std::invalid_argument(std::string("config: missing field ") + scope + name);
    return;
  }
  try {
    out = doc.at(name).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument(std::string("config: bad value for ") + scope + name);
  }
}

}  // namespace

SynthConfig SynthConfig::from_json(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  if (doc.contains("format_version")) {
    const std::string v = doc.at("format_version").get<std::string>();
    if (std::atoi(v.c_str()) > 1)
      throw std::invalid_argument("config: format_version " + v + " is newer than this reader");
  }
  SynthConfig cfg;
  if (!doc.contains("graph")) throw std::invalid_argument("config: missing field graph");
  const json& g = doc.at("graph");
  read_field(g, "graph.", "kind", cfg.graph_kind, true);
  read_field(g, "graph.", "n", cfg.n, true);
  read_field(g, "graph.", "avg_degree", cfg.avg_degree);
  read_field(g, "graph.", "attach", cfg.attach);
  read_field(g, "graph.", "ring", cfg.ring);
  read_field(g, "graph.", "rewire", cfg.rewire);
  read_field(g, "graph.", "p_low", cfg.p_low);
  read_field(g, "graph.", "p_high", cfg.p_high);
  read_field(doc, "", "epsilon_scale", cfg.epsilon_scale);
  if (doc.contains("exposure")) {
    const json& e = doc.at("exposure");
    read_field(e, "exposure.", "pos", cfg.exposure_pos);
    read_field(e, "exposure.", "neg", cfg.exposure_neg);
    read_field(e, "exposure.", "count", cfg.exposure_count);
  }
  if (doc.contains("response")) {
    const json& r = doc.at("response");
    read_field(r, "response.", "profile", cfg.profile);
    read_field(r, "response.", "strata", cfg.strata);
    read_field(r, "response.", "budget_pos", cfg.budget_pos);
    read_field(r, "response.", "budget_neg", cfg.budget_neg);
    read_field(r, "response.", "alpha_low", cfg.alpha_low);
    read_field(r, "response.", "alpha_high", cfg.alpha_high);
    read_field(r, "response.", "scale", cfg.response_scale);
  }
  read_field(doc, "", "noise_sigma", cfg.noise_sigma);
  read_field(doc, "", "replications", cfg.replications);
  if (doc.contains("policy")) {
    const json& p = doc.at("policy");
    read_field(p, "policy.", "kind", cfg.policy);
    read_field(p, "policy.", "sets", cfg.policy_sets);
    read_field(p, "policy.", "temperature", cfg.temperature);
    read_field(p, "policy.", "k", cfg.policy_k);
    read_field(p, "policy.", "pool", cfg.policy_pool);
  }
  if (doc.contains("selection")) {
    const json& s = doc.at("selection");
    read_field(s, "selection.", "k", cfg.select_k);
    long long r = cfg.select_r;
    read_field(s, "selection.", "r", r);
    cfg.select_r = r;
  }
  read_field(doc, "", "master_seed", cfg.master_seed, true);
  cfg.validate();
  return cfg;
}

SynthConfig SynthConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return from_json(in);
}

std::string SynthConfig::to_json() const {
  json doc;
  doc["format_version"] = "1.0";
  doc["graph"] = {{"kind", graph_kind}, {"n", n},           {"avg_degree", avg_degree},
                  {"attach", attach},   {"ring", ring},     {"rewire", rewire},
                  {"p_low", p_low},     {"p_high", p_high}};
  doc["epsilon_scale"] = epsilon_scale;
  doc["exposure"] = {{"pos", exposure_pos}, {"neg", exposure_neg}, {"count", exposure_count}};
  doc["response"] = {{"profile", profile},       {"strata", strata},
                     {"budget_pos", budget_pos}, {"budget_neg", budget_neg},
                     {"alpha_low", alpha_low},   {"alpha_high", alpha_high},
                     {"scale", response_scale}};
  doc["noise_sigma"] = noise_sigma;
  doc["replications"] = replications;
  doc["policy"] = {{"kind", policy},           {"sets", policy_sets},
                   {"temperature", temperature}, {"k", policy_k},
                   {"pool", policy_pool}};
  doc["selection"] = {{"k", select_k}, {"r", select_r}};
  doc["master_seed"] = master_seed;
  return doc.dump(2);
}

void SynthConfig::validate() const {
  auto bad = [](const std::string& field, const std::string& why) {
    throw std::invalid_argument("config: " + field + " " + why);
  };
  const std::set<std::string> kinds{"erdos_renyi", "barabasi_albert", "watts_strogatz",
                                    "path", "star"};
  if (!kinds.count(graph_kind)) bad("graph.kind", "unknown family " + graph_kind);
  if (n < 1) bad("graph.n", "must be >= 1");
  if (!(p_low >= 0.0 && p_high <= 1.0 && p_low <= p_high)) bad("graph.p_low/p_high", "need 0 <= p_low <= p_high <= 1");
  if (!(epsilon_scale > 0.0)) bad("epsilon_scale", "must be > 0");
  if (p_high * epsilon_scale > 1.0) bad("epsilon_scale", "scales p_high past 1");
  const std::set<std::string> sides{"in_neighbors", "sampled", "none"};
  if (!sides.count(exposure_pos)) bad("exposure.pos", "unknown mode " + exposure_pos);
  if (!sides.count(exposure_neg)) bad("exposure.neg", "unknown mode " + exposure_neg);
  if (exposure_count < 0) bad("exposure.count", "must be >= 0");
  const std::set<std::string> profiles{"linear", "concave", "mixed"};
  if (!profiles.count(profile)) bad("response.profile", "unknown profile " + profile);
  if (strata < 1 || strata > n) bad("response.strata", "must be in [1, n]");
  if (budget_pos < 1 || budget_neg < 0) bad("response.budget_pos/budget_neg", "need budget_pos >= 1, budget_neg >= 0");
  if (alpha_low > alpha_high) bad("response.alpha_low", "exceeds alpha_high");
  if (!(response_scale > 0.0)) bad("response.scale", "must be > 0");
  if (noise_sigma < 0.0) bad("noise_sigma", "must be >= 0");
  if (replications < 1) bad("replications", "must be >= 1");
  const std::set<std::string> policies{"fixed", "uniform", "degree_biased"};
  if (!policies.count(policy)) bad("policy.kind", "unknown policy " + policy);
  if (policy == "fixed" && policy_sets.size() != 1) bad("policy.sets", "fixed policy needs exactly one set");
  if (policy == "uniform" && policy_sets.empty()) bad("policy.sets", "uniform policy needs a nonempty list");
  if (policy == "degree_biased") {
    if (!(temperature > 0.0)) bad("policy.temperature", "must be > 0");
    if (policy_k < 1 || policy_k > n) bad("policy.k", "must be in [1, n]");
    if (policy_pool < 1) bad("policy.pool", "must be >= 1");
  }
  for (const auto& s : policy_sets) {
    std::set<int> uniq(s.begin(), s.end());
    if (uniq.size() != s.size()) bad("policy.sets", "contains a duplicate id");
    for (int v : s)
      if (v < 0 || v >= n) bad("policy.sets", "id out of range");
  }
  if (select_k < 0 || select_k > n) bad("selection.k", "must be in [0, n]");
  if (select_r < 1) bad("selection.r", "must be >= 1");
}

namespace {

std::vector<Edge> family_edges(const SynthConfig& cfg, Rng& rng) {
  std::vector<Edge> edges;
  const int n = cfg.n;
  auto add = [&](int s, int d) { edges.push_back({s, d, 0.0}); };
  if (cfg.graph_kind == "path") {
    for (int v = 0; v + 1 < n; ++v) add(v, v + 1);
  } else if (cfg.graph_kind == "star") {
    for (int v = 1; v < n; ++v) add(0, v);
  } else if (cfg.graph_kind == "erdos_renyi") {
    const double p = n > 1 ? std::min(1.0, cfg.avg_degree / (n - 1)) : 0.0;
    for (int s = 0; s < n; ++s)
      for (int d = 0; d < n; ++d)
        if (s != d && rng.bernoulli(p)) add(s, d);
  } else if (cfg.graph_kind == "barabasi_albert") {
    // in-degree preferential attachment; new node sends `attach` edges
    std::vector<int> weight(static_cast<std::size_t>(n), 1);  // in-degree + 1
    for (int v = 1; v < n; ++v) {
      const int m = std::min(cfg.attach, v);
      std::set<int> targets;
      long long total = 0;
      for (int u = 0; u < v; ++u) total += weight[static_cast<std::size_t>(u)];
      while (static_cast<int>(targets.size()) < m) {
        long long roll = static_cast<long long>(rng.uniform_below(static_cast<std::uint64_t>(total)));
        int u = 0;
        while (roll >= weight[static_cast<std::size_t>(u)]) roll -= weight[static_cast<std::size_t>(u++)];
        targets.insert(u);
      }
      for (int u : targets) {
        add(v, u);
        ++weight[static_cast<std::size_t>(u)];
      }
    }
  } else {  // watts_strogatz
    std::set<std::pair<int, int>> present;
    for (int v = 0; v < n; ++v)
      for (int k = 1; k <= cfg.ring; ++k) {
        const int d = (v + k) % n;
        if (d != v && present.insert({v, d}).second) add(v, d);
      }
    for (Edge& e : edges) {
      if (!rng.bernoulli(cfg.rewire)) continue;
      // keep the source, move the destination; skip if no fresh target fits
      for (int attempt = 0; attempt < 2 * n; ++attempt) {
        const int d = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(n)));
        if (d == e.src || d == e.dst) continue;
        if (present.count({e.src, d})) continue;
        present.erase({e.src, e.dst});
        present.insert({e.src, d});
        e.dst = d;
        break;
      }
    }
  }
  for (Edge& e : edges) e.p = rng.uniform(cfg.p_low, cfg.p_high) * cfg.epsilon_scale;
  return edges;
}

std::vector<std::vector<int>> exposure_side(const SynthConfig& cfg, const Graph& g,
                                            const std::string& mode, Rng& rng) {
  const int n = cfg.n;
  std::vector<std::vector<int>> side(static_cast<std::size_t>(n));
  if (mode == "in_neighbors") {
    for (int i = 0; i < n; ++i) {
      for (int e : g.in_edges(i)) side[static_cast<std::size_t>(i)].push_back(g.edges()[static_cast<std::size_t>(e)].src);
      std::sort(side[static_cast<std::size_t>(i)].begin(), side[static_cast<std::size_t>(i)].end());
    }
  } else if (mode == "sampled") {
    const int m = std::min(cfg.exposure_count, n - 1);
    for (int i = 0; i < n; ++i) {
      std::set<int> chosen;
      while (static_cast<int>(chosen.size()) < m) {
        const int j = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(n)));
        if (j != i) chosen.insert(j);
      }
      side[static_cast<std::size_t>(i)].assign(chosen.begin(), chosen.end());
    }
  }
  return side;
}

Eigen::VectorXd draw_curve(const std::string& profile, int budget, double scale, Rng& rng,
                           bool negative_side) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(budget + 1);
  if (budget == 0) return f;
  if (profile == "linear") {
    // slope quantized to 30 mantissa bits so slope * t is exact and the
    // measured curvature is bitwise zero
    const double raw = negative_side ? 0.0 : scale * rng.uniform(0.5, 1.0);
    const double slope = std::ldexp(std::round(std::ldexp(raw, 30)), -30);
    for (int t = 1; t <= budget; ++t) f[t] = slope * t;
    return f;
  }
  // concave and mixed: geometrically decaying increments
  double inc = scale * rng.uniform(0.8, 1.2) * (negative_side ? 0.3 : 1.0);
  if (profile == "concave" && negative_side) inc = 0.0;
  for (int t = 1; t <= budget; ++t) {
    f[t] = f[t - 1] + inc;
    inc *= rng.uniform(0.3, 0.9);
  }
  return f;
}

}  // namespace

Instance gen_instance(const SynthConfig& cfg) {
  cfg.validate();
  Rng grng = substream(cfg.master_seed, {kGraphKey});
  Graph graph(cfg.n, family_edges(cfg, grng));

  Rng erng = substream(cfg.master_seed, {kExposureKey});
  ExposureSpec spec;
  spec.pos = exposure_side(cfg, graph, cfg.exposure_pos, erng);
  spec.neg = exposure_side(cfg, graph, cfg.exposure_neg, erng);

  Rng mrng = substream(cfg.master_seed, {kModelKey});
  OutcomeModel model;
  model.stratum.resize(static_cast<std::size_t>(cfg.n));
  for (int i = 0; i < cfg.n; ++i) model.stratum[static_cast<std::size_t>(i)] = i % cfg.strata;
  model.alpha = Eigen::VectorXd::Zero(cfg.strata);
  double peak = 0.0;
  for (int r = 0; r < cfg.strata; ++r) {
    model.alpha[r] = mrng.uniform(cfg.alpha_low, cfg.alpha_high);
    Eigen::VectorXd fp = draw_curve(cfg.profile, cfg.budget_pos, cfg.response_scale, mrng, false);
    Eigen::VectorXd fn = draw_curve(cfg.profile, cfg.budget_neg, cfg.response_scale, mrng, true);
    peak = std::max(peak, std::abs(model.alpha[r]) + fp[cfg.budget_pos] + fn[cfg.budget_neg]);
    model.f_pos.emplace_back(std::move(fp));
    model.f_neg.emplace_back(std::move(fn));
  }
  // keep the noiseless outcome inside [-0.9, 0.9] so boundedness clipping
  // never distorts the structural signal
  if (peak > 0.9) {
    const double shrink = 0.9 / peak;
    model.alpha *= shrink;
    for (int r = 0; r < cfg.strata; ++r) {
      model.f_pos[static_cast<std::size_t>(r)] = ResponseCurve(model.f_pos[static_cast<std::size_t>(r)].values() * shrink);
      model.f_neg[static_cast<std::size_t>(r)] = ResponseCurve(model.f_neg[static_cast<std::size_t>(r)].values() * shrink);
    }
  }
  return Instance{std::move(graph), std::move(spec), std::move(model)};
}

PolicySupport policy_support(const SynthConfig& cfg, const Graph& g) {
  PolicySupport sup;
  if (cfg.policy == "fixed") {
    sup.sets = {cfg.policy_sets.at(0)};
    sup.prob = {1.0};
  } else if (cfg.policy == "uniform") {
    sup.sets = cfg.policy_sets;
    sup.prob.assign(sup.sets.size(), 1.0 / static_cast<double>(sup.sets.size()));
  } else {
    Rng rng = substream(cfg.master_seed, {kPolicyKey});
    std::set<std::vector<int>> pool;
    long long distinct = 1;  // C(n, k), saturated
    for (int i = 1; i <= cfg.policy_k; ++i) {
      distinct = distinct * (cfg.n - cfg.policy_k + i) / i;
      if (distinct > (1 << 20)) {
        distinct = 1 << 20;
        break;
      }
    }
    const int want = static_cast<int>(std::min<long long>(cfg.policy_pool, distinct));
    while (static_cast<int>(pool.size()) < want) {
      std::vector<int> s = random_seeds(cfg.n, cfg.policy_k, rng.next_u64());
      pool.insert(std::move(s));
    }
    sup.sets.assign(pool.begin(), pool.end());
    // softmax over total out-degree, scaled by temperature
    std::vector<double> score;
    for (const auto& s : sup.sets) {
      double d = 0.0;
      for (int v : s) d += static_cast<double>(g.out_edges(v).size());
      score.push_back(d / cfg.temperature);
    }
    const double m = *std::max_element(score.begin(), score.end());
    double z = 0.0;
    for (double& sc : score) {
      sc = std::exp(sc - m);
      z += sc;
    }
    for (double sc : score) sup.prob.push_back(sc / z);
  }
  for (auto& s : sup.sets) std::sort(s.begin(), s.end());
  return sup;
}

LoggedGen gen_logged_data(const Instance& inst, const SynthConfig& cfg) {
  const PolicySupport sup = policy_support(cfg, inst.graph);
  const int n = inst.graph.num_nodes();
  LoggedGen out;
  long long clipped = 0, rows = 0;
  for (int l = 0; l < cfg.replications; ++l) {
    Rng rng = substream(cfg.master_seed, {kRecordKey, static_cast<std::uint64_t>(l)});
    // categorical draw by inverse cdf
    const double u = rng.uniform01();
    std::size_t pick = 0;
    double acc = 0.0;
    for (; pick + 1 < sup.sets.size(); ++pick) {
      acc += sup.prob[pick];
      if (u < acc) break;
    }
    LoggedRecord rec;
    rec.seed = sup.sets[pick];
    rec.context = 0;
    rec.propensity = sup.prob[pick];
    SeedSet seeds(n, std::max<int>(1, static_cast<int>(rec.seed.size())));
    for (int v : rec.seed) seeds.insert(v);
    const std::vector<char> active = sample_reachable(inst.graph, seeds, rng);
    const ExposureCounts counts = exposure_counts(inst.exposure, active);
    for (int i = 0; i < n; ++i) {
      const std::size_t si = static_cast<std::size_t>(i);
      FitRow r;
      r.i = i;
      r.z = seeds.contains(i) ? 1 : 0;
      r.kp = counts.kp[si];
      r.kn = counts.kn[si];
      double y = inst.model.alpha_of(i) * r.z + inst.model.fpos(i).at(r.kp) -
                 inst.model.fneg(i).at(r.kn);
      if (cfg.noise_sigma > 0.0) y += cfg.noise_sigma * rng.normal();
      ++rows;
      if (y > 1.0) {
        y = 1.0;
        ++clipped;
      } else if (y < -1.0) {
        y = -1.0;
        ++clipped;
      }
      r.y = y;
      rec.rows.push_back(r);
    }
    out.data.records.push_back(std::move(rec));
  }
  out.clip_fraction = rows == 0 ? 0.0 : static_cast<double>(clipped) / static_cast<double>(rows);
  return out;
}

namespace {

// Fits a model on the logged data using the true strata map and grid sizes.
OutcomeModel fit_from_logged(const Instance& inst, const LoggedDataset& data,
                             double lambda) {
  OutcomeModel fitted;
  fitted.stratum = inst.model.stratum;
  const int R = inst.model.num_strata();
  fitted.alpha = Eigen::VectorXd::Zero(R);
  for (int r = 0; r < R; ++r) {
    std::vector<FitRow> rows;
    for (const LoggedRecord& rec : data.records)
      for (const FitRow& row : rec.rows)
        if (inst.model.stratum[static_cast<std::size_t>(row.i)] == r) rows.push_back(row);
    FitOptions opt;
    opt.budget_pos = inst.model.f_pos[static_cast<std::size_t>(r)].budget();
    opt.budget_neg = inst.model.f_neg[static_cast<std::size_t>(r)].budget();
    opt.lambda = lambda;
    int max_kp = 0, max_kn = 0;
    for (const FitRow& row : rows) {
      max_kp = std::max(max_kp, row.kp);
      max_kn = std::max(max_kn, row.kn);
    }
    opt.budget_pos = std::max(opt.budget_pos, max_kp);
    opt.budget_neg = std::max(opt.budget_neg, max_kn);
    const FitResult res = fit_response(rows, opt);
    fitted.alpha[r] = res.alpha;
    fitted.f_pos.push_back(res.f_pos);
    fitted.f_neg.push_back(res.f_neg);
  }
  return fitted;
}

double curve_error(const OutcomeModel& truth, const OutcomeModel& fitted) {
  double err = 0.0;
  for (int r = 0; r < truth.num_strata(); ++r) {
    const std::size_t sr = static_cast<std::size_t>(r);
    err = std::max(err, std::abs(truth.alpha[r] - fitted.alpha[r]));
    for (int t = 0; t <= std::max(truth.f_pos[sr].budget(), fitted.f_pos[sr].budget()); ++t)
      err = std::max(err, std::abs(truth.f_pos[sr].at(t) - fitted.f_pos[sr].at(t)));
    for (int t = 0; t <= std::max(truth.f_neg[sr].budget(), fitted.f_neg[sr].budget()); ++t)
      err = std::max(err, std::abs(truth.f_neg[sr].at(t) - fitted.f_neg[sr].at(t)));
  }
  return err;
}

}  // namespace

std::vector<SweepCell> sweep(const SynthConfig& base, const std::string& axis,
                             const std::vector<double>& values, int repetitions,
                             int threads) {
  if (values.empty()) throw std::invalid_argument("sweep: empty value list");
  const std::set<std::string> axes{"sigma", "epsilon_scale", "K", "N"};
  if (!axes.count(axis)) throw std::invalid_argument("sweep: unknown axis " + axis);
  const std::vector<std::string> methods{"cim", "degree", "random", "reach"};

  const std::int64_t cells = static_cast<std::int64_t>(values.size()) * repetitions;
  std::vector<std::vector<SweepCell>> slots(static_cast<std::size_t>(cells));
  std::uint64_t axis_key = 0;
  for (char ch : axis) axis_key = axis_key * 131 + static_cast<unsigned char>(ch);

  parallel_for(cells, threads, [&](std::int64_t idx) {
    const std::size_t vi = static_cast<std::size_t>(idx) / static_cast<std::size_t>(repetitions);
    const int rep = static_cast<int>(idx % repetitions);
    const double value = values[vi];
    SynthConfig cfg = base;
    if (axis == "sigma") cfg.noise_sigma = value;
    else if (axis == "epsilon_scale") cfg.epsilon_scale = value;
    else if (axis == "K") cfg.select_k = static_cast<int>(std::llround(value));
    else cfg.replications = static_cast<int>(std::llround(value));
    // Instance, logged data, and selection streams depend on the repetition
    // only, so cells along the axis share everything the axis does not touch
    // (coupling: a sigma sweep reuses one graph and one set of noise normals,
    // an N sweep extends the same records). The cell key mixes in (axis,
    // value) and drives evaluation noise, which must be fresh per cell.
    cfg.master_seed = detail::splitmix64(detail::splitmix64(base.master_seed) ^
                                         static_cast<std::uint64_t>(rep));
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(value));
    std::memcpy(&bits, &value, sizeof(bits));
    const std::uint64_t cell_seed = detail::splitmix64(
        detail::splitmix64(detail::splitmix64(base.master_seed ^ axis_key) ^ bits) ^
        static_cast<std::uint64_t>(rep));
    cfg.validate();

    const Instance inst = gen_instance(cfg);
    const LoggedGen logged = gen_logged_data(inst, cfg);
    const OutcomeModel fitted = fit_from_logged(inst, logged.data, 0.0);

    // Exact welfare and exact expected exposures when enumerable; Monte Carlo
    // with a cell-fixed stream otherwise.
    const bool enumerable = inst.graph.num_edges() <= 20;
    const std::uint64_t eval_seed = detail::splitmix64(cell_seed ^ 0xeba1);
    MemoizedObjective evaluate(
        enumerable
            ? SetObjective([&](const std::vector<int>& members) {
                SeedSet s(inst.graph.num_nodes(), inst.graph.num_nodes());
                for (int v : members) s.insert(v);
                return welfare_exact(inst.graph, inst.exposure, inst.model, s);
              })
            : SetObjective([&](const std::vector<int>& members) {
                SeedSet s(inst.graph.num_nodes(), inst.graph.num_nodes());
                for (int v : members) s.insert(v);
                return welfare_mc(inst.graph, inst.exposure, inst.model, s, 2000, eval_seed, 1)
                    .value;
              }));

    double oracle = std::numeric_limits<double>::quiet_NaN();
    if (enumerable && count_subsets_leq(cfg.n, cfg.select_k, 20000) <= 10000)
      oracle = exhaustive_opt(cfg.n, cfg.select_k, std::cref(evaluate), 20000).value;

    std::vector<SweepCell>& rows = slots[static_cast<std::size_t>(idx)];
    for (const std::string& method : methods) {
      const auto t0 = std::chrono::steady_clock::now();
      std::vector<int> seeds;
      if (method == "cim") {
        MemoizedObjective obj(
            enumerable ? exact_surrogate_objective(inst.graph, inst.exposure, fitted)
                       : plugin_objective(inst.graph, inst.exposure, fitted, cfg.select_r,
                                          cfg.master_seed, 1));
        seeds = greedy_select(cfg.n, cfg.select_k, std::cref(obj)).members;
      } else if (method == "degree") {
        seeds = top_degree_seeds(inst.graph, cfg.select_k);
      } else if (method == "random") {
        seeds = random_seeds(cfg.n, cfg.select_k, cfg.master_seed);
      } else {
        MemoizedObjective obj(reach_objective(inst.graph, cfg.select_r, cfg.master_seed, 1));
        seeds = greedy_select(cfg.n, cfg.select_k, std::cref(obj)).members;
      }
      SweepCell cell;
      cell.axis = axis;
      cell.value = value;
      cell.repetition = rep;
      cell.method = method;
      cell.welfare = evaluate(seeds);
      cell.oracle = oracle;
      cell.gap = oracle - cell.welfare;
      cell.fit_error = method == "cim" ? curve_error(inst.model, fitted) : 0.0;
      cell.millis = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      rows.push_back(cell);
    }
  });

  std::vector<SweepCell> all;
  for (const auto& rows : slots) all.insert(all.end(), rows.begin(), rows.end());
  return all;
}

std::string sweep_csv(const std::vector<SweepCell>& cells) {
  std::ostringstream os;
  os.precision(17);
  os << "axis,value,repetition,method,welfare,oracle,gap,fit_error\n";
  for (const SweepCell& c : cells) {
    os << c.axis << ',' << c.value << ',' << c.repetition << ',' << c.method << ','
       << c.welfare << ',';
    if (std::isnan(c.oracle))
      os << ",";
    else
      os << c.oracle << ',' << c.gap;
    os << ',' << c.fit_error << '\n';
  }
  return os.str();
}

}  // namespace cim
