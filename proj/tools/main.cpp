// cim: batch front end for the pipeline. Subcommands: gen, fit, select,
// evaluate, verify, sweep, check-shape. Exit codes: 0 success, 1 verification
// failure, 2 usage or config error, 3 resource guard.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cim/diffusion.hpp"
#include "cim/errors.hpp"
#include "cim/estimand.hpp"
#include "cim/graph.hpp"
#include "cim/manifest.hpp"
#include "cim/parallel.hpp"
#include "cim/response.hpp"
#include "cim/rng.hpp"
#include "cim/selection.hpp"
#include "cim/subsets.hpp"
#include "cim/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cim;

namespace {

constexpr const char* kVersion = "1.0.0";

// Verification failures carry a report and exit with code 1, distinct from
// usage errors (2) and guards (3).
struct VerifyFailure {
  std::string message;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

std::vector<double> parse_doubles(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    out.push_back(std::stod(item, &used));
    if (used != item.size()) throw std::invalid_argument("bad number in list: " + item);
  }
  if (out.empty()) throw std::invalid_argument("empty value list");
  return out;
}

std::vector<int> parse_ints(const std::string& text) {
  std::vector<int> out;
  for (double v : parse_doubles(text)) {
    const int i = static_cast<int>(std::llround(v));
    if (static_cast<double>(i) != v) throw std::invalid_argument("expected integer list");
    out.push_back(i);
  }
  return out;
}

SeedSet to_seed_set(int n, const std::vector<int>& members) {
  SeedSet s(n, std::max<int>(1, static_cast<int>(members.size())));
  for (int v : members) s.insert(v);
  return s;
}

void finish_manifest(RunManifest m, double seconds, const std::string& path) {
  m.elapsed_seconds = seconds;
  m.write(path);
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  return substream(base, {a, b}).next_u64();
}

// ---------------------------------------------------------------------------
// gen

int cmd_gen(const std::string& config_path, const std::string& out_dir) {
  Timer timer;
  const std::string config_bytes = read_file(config_path);
  std::istringstream cfg_in(config_bytes);
  const SynthConfig cfg = SynthConfig::from_json(cfg_in);

  const Instance inst = gen_instance(cfg);
  const LoggedGen logged = gen_logged_data(inst, cfg);

  const fs::path dir(out_dir);
  fs::create_directories(dir);
  const std::string graph_path = (dir / "graph.edges").string();
  const std::string exposure_path = (dir / "exposure.json").string();
  const std::string model_path = (dir / "model.json").string();
  const std::string data_path = (dir / "logged.jsonl").string();

  {
    std::ostringstream os;
    inst.graph.save_edge_list(os);
    write_file(graph_path, os.str());
  }
  write_file(exposure_path, inst.exposure.to_json());
  write_file(model_path, inst.model.to_json());
  logged.data.save_jsonl_file(data_path);

  std::cout << "wrote " << graph_path << " (" << inst.graph.num_nodes() << " nodes, "
            << inst.graph.num_edges() << " edges)\n"
            << "wrote " << exposure_path << "\n"
            << "wrote " << model_path << "\n"
            << "wrote " << data_path << " (" << logged.data.records.size()
            << " replications)\n"
            << "clip fraction " << logged.clip_fraction << '\n';
  if (logged.clip_fraction >= 0.05)
    std::cout << "warning: clip fraction at or above 5%; the noise axis is distorted\n";

  RunManifest m = make_manifest("gen", fnv1a64(config_bytes.data(), config_bytes.size()),
                                cfg.master_seed,
                                {graph_path, exposure_path, model_path, data_path});
  finish_manifest(std::move(m), timer.seconds(), (dir / "manifest.json").string());
  return 0;
}

// ---------------------------------------------------------------------------
// fit

int cmd_fit(const std::string& data_path, const std::string& out_path, int strata,
            double lambda, const std::string& weighting, int budget_pos, int budget_neg) {
  Timer timer;
  const std::string data_bytes = read_file(data_path);
  std::istringstream data_in(data_bytes);
  const LoggedDataset data = LoggedDataset::load_jsonl(data_in);
  if (data.records.empty()) throw std::invalid_argument("dataset has no replications");
  if (strata < 1) throw std::invalid_argument("--strata must be >= 1");

  int n = 0;
  for (const LoggedRecord& rec : data.records)
    for (const FitRow& row : rec.rows) n = std::max(n, row.i + 1);
  if (strata > n) throw std::invalid_argument("--strata exceeds the node count");

  const std::vector<FitRow> pooled = pooled_rows(data, weighting == "ips");

  OutcomeModel fitted;
  fitted.stratum.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) fitted.stratum[static_cast<std::size_t>(i)] = i % strata;
  fitted.alpha = Eigen::VectorXd::Zero(strata);
  for (int r = 0; r < strata; ++r) {
    std::vector<FitRow> rows;
    for (const FitRow& row : pooled)
      if (row.i % strata == r) rows.push_back(row);
    if (rows.empty()) throw std::invalid_argument("stratum " + std::to_string(r) +
                                                  " has no observations");
    FitOptions opt;
    opt.budget_pos = budget_pos;
    opt.budget_neg = budget_neg;
    opt.lambda = lambda;
    const FitResult res = fit_response(rows, opt);
    fitted.alpha[r] = res.alpha;
    fitted.f_pos.push_back(res.f_pos);
    fitted.f_neg.push_back(res.f_neg);
    std::cout << "stratum " << r << ": alpha " << res.alpha << " objective " << res.objective
              << " iterations " << res.iterations
              << (res.converged ? "" : " (not converged)")
              << (res.alpha_identified ? "" : " (alpha unidentified, pinned to 0)") << '\n';
  }
  fitted.validate(n);
  write_file(out_path, fitted.to_json());
  std::cout << "wrote " << out_path << '\n';

  const std::string flags = "strata=" + std::to_string(strata) + ";lambda=" +
                            std::to_string(lambda) + ";weighting=" + weighting + ";Bpos=" +
                            std::to_string(budget_pos) + ";Bneg=" + std::to_string(budget_neg);
  std::uint64_t digest = fnv1a64(data_bytes.data(), data_bytes.size());
  digest ^= fnv1a64(flags.data(), flags.size());
  RunManifest m = make_manifest("fit", digest, 0, {out_path});
  finish_manifest(std::move(m), timer.seconds(), out_path + ".manifest.json");
  return 0;
}

// ---------------------------------------------------------------------------
// select

int cmd_select(const std::string& graph_path, const std::string& exposure_path,
               const std::string& model_path, const std::string& out_path, int K,
               long long R, const std::string& method, bool lazy, std::uint64_t seed,
               int threads) {
  Timer timer;
  const std::string graph_bytes = read_file(graph_path);
  const std::string exposure_bytes = read_file(exposure_path);
  const std::string model_bytes = read_file(model_path);
  std::istringstream gin(graph_bytes), ein(exposure_bytes), min(model_bytes);
  const Graph g = Graph::load_edge_list(gin);
  const ExposureSpec exposure = ExposureSpec::load_json(ein, g.num_nodes());
  const OutcomeModel model = OutcomeModel::from_json(min);
  model.validate(g.num_nodes());
  if (K < 0 || K > g.num_nodes()) throw std::invalid_argument("--K outside [0, n]");

  json doc;
  doc["format_version"] = "1.0";
  doc["method"] = method;
  doc["K"] = K;
  doc["R"] = R;
  doc["seed"] = seed;
  doc["lazy"] = lazy;

  const SetObjective plugin = plugin_objective(g, exposure, model, R, seed, threads);
  if (method == "cim" || method == "reach") {
    const SetObjective obj =
        method == "cim" ? plugin : reach_objective(g, R, seed, threads);
    const GreedyResult res = greedy_select(g.num_nodes(), K, obj, {.lazy = lazy});
    doc["members"] = res.members;
    doc["value"] = res.value;
    doc["evaluations"] = res.evaluations;
    json trace = json::array();
    for (const GreedyStep& step : res.trace)
      trace.push_back({{"node", step.node}, {"gain", step.gain}, {"value", step.value}});
    doc["trace"] = trace;
  } else {
    const std::vector<int> members = method == "degree" ? top_degree_seeds(g, K)
                                                        : random_seeds(g.num_nodes(), K, seed);
    doc["members"] = members;
    doc["value"] = plugin(members);  // scored with the same plug-in objective
    doc["evaluations"] = 0;
    doc["trace"] = json::array();
  }
  write_file(out_path, doc.dump(2) + "\n");
  std::cout << "wrote " << out_path << " (members " << doc["members"].dump() << ")\n";

  const std::string flags = "K=" + std::to_string(K) + ";R=" + std::to_string(R) +
                            ";method=" + method + ";lazy=" + (lazy ? "1" : "0") +
                            ";seed=" + std::to_string(seed);
  std::uint64_t digest = fnv1a64(graph_bytes.data(), graph_bytes.size());
  digest ^= fnv1a64(exposure_bytes.data(), exposure_bytes.size());
  digest ^= fnv1a64(model_bytes.data(), model_bytes.size());
  digest ^= fnv1a64(flags.data(), flags.size());
  RunManifest m = make_manifest("select", digest, seed, {out_path});
  finish_manifest(std::move(m), timer.seconds(), out_path + ".manifest.json");
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate

int cmd_evaluate(const std::string& graph_path, const std::string& exposure_path,
                 const std::string& model_path, const std::string& out_path,
                 const std::string& seeds_text, long long R, std::uint64_t seed,
                 const std::string& data_path, int threads) {
  Timer timer;
  const std::string graph_bytes = read_file(graph_path);
  const std::string exposure_bytes = read_file(exposure_path);
  const std::string model_bytes = read_file(model_path);
  std::istringstream gin(graph_bytes), ein(exposure_bytes), min(model_bytes);
  const Graph g = Graph::load_edge_list(gin);
  const ExposureSpec exposure = ExposureSpec::load_json(ein, g.num_nodes());
  const OutcomeModel model = OutcomeModel::from_json(min);
  model.validate(g.num_nodes());

  std::vector<int> members = seeds_text.empty() ? std::vector<int>{} : parse_ints(seeds_text);
  std::sort(members.begin(), members.end());
  for (int v : members)
    if (v < 0 || v >= g.num_nodes()) throw std::invalid_argument("--seeds id out of range");
  const SeedSet target = to_seed_set(g.num_nodes(), members);

  json doc;
  doc["format_version"] = "1.0";
  doc["seeds"] = members;

  const PluginWelfare plug = plugin_welfare(g, exposure, model, target, R, seed, threads);
  doc["plugin"] = {{"value", plug.value}, {"replicates", R}};

  const WelfareEstimate mc = welfare_mc(g, exposure, model, target, R, seed, threads);
  doc["mc"] = {{"value", mc.value}, {"std_error", mc.std_error}, {"replicates", mc.replicates}};

  if (g.num_edges() <= 20) {
    const double exact = welfare_exact(g, exposure, model, target);
    doc["exact"] = exact;
    try {
      const int K = std::max<int>(1, static_cast<int>(members.size()));
      const double bstr = structural_bound(g, exposure, model, K);
      const double eps = g.max_edge_prob();
      const ExactLaw law = exact_law(g, exposure, target);
      const double surrogate = surrogate_welfare(model, target, law.k_pos, law.k_neg);
      const IdentificationInterval iv = identification_interval(surrogate, bstr, eps);
      doc["interval"] = {{"surrogate", surrogate}, {"b_str", bstr},      {"epsilon", eps},
                         {"lo", iv.lo},            {"hi", iv.hi},        {"radius", iv.radius}};
    } catch (const GuardExceeded&) {
      // enumeration over seed classes too large; interval omitted
    }
  }

  std::uint64_t digest = fnv1a64(graph_bytes.data(), graph_bytes.size());
  digest ^= fnv1a64(exposure_bytes.data(), exposure_bytes.size());
  digest ^= fnv1a64(model_bytes.data(), model_bytes.size());
  if (!data_path.empty()) {
    const std::string data_bytes = read_file(data_path);
    std::istringstream din(data_bytes);
    const LoggedDataset data = LoggedDataset::load_jsonl(din);
    const IpsEstimate ips = ips_welfare(data, members);
    doc["ips"] = {{"value", ips.value},
                  {"std_error", ips.std_error},
                  {"matches", ips.matches},
                  {"records", ips.records}};
    digest ^= fnv1a64(data_bytes.data(), data_bytes.size());
  }

  write_file(out_path, doc.dump(2) + "\n");
  std::cout << doc.dump(2) << '\n';

  const std::string flags = "seeds=" + seeds_text + ";R=" + std::to_string(R) +
                            ";seed=" + std::to_string(seed);
  digest ^= fnv1a64(flags.data(), flags.size());
  RunManifest m = make_manifest("evaluate", digest, seed, {out_path});
  finish_manifest(std::move(m), timer.seconds(), out_path + ".manifest.json");
  return 0;
}

// ---------------------------------------------------------------------------
// check-shape

// Raw curve arrays from a model file. Reading them without constructing
// ResponseCurve keeps shape violations checkable instead of fatal at parse.
struct RawCurves {
  std::vector<Eigen::VectorXd> pos, neg;
};

RawCurves raw_model_curves(const std::string& bytes) {
  const json doc = json::parse(bytes);
  if (!doc.contains("f_pos") || !doc.contains("f_neg"))
    throw std::invalid_argument("model file lacks f_pos or f_neg");
  RawCurves out;
  for (const char* key : {"f_pos", "f_neg"}) {
    for (const json& arr : doc.at(key)) {
      const std::vector<double> v = arr.get<std::vector<double>>();
      Eigen::VectorXd e(static_cast<Eigen::Index>(v.size()));
      for (std::size_t t = 0; t < v.size(); ++t) e[static_cast<Eigen::Index>(t)] = v[t];
      (key[2] == 'p' ? out.pos : out.neg).push_back(std::move(e));
    }
  }
  if (out.pos.size() != out.neg.size())
    throw std::invalid_argument("model file strata differ between f_pos and f_neg");
  return out;
}

int cmd_check_shape(const std::string& model_path, const std::string& out_dir) {
  Timer timer;
  const std::string model_bytes = read_file(model_path);
  const RawCurves curves = raw_model_curves(model_bytes);

  bool ok = true;
  std::string first_why;
  for (std::size_t r = 0; r < curves.pos.size(); ++r) {
    for (const char* side : {"pos", "neg"}) {
      const Eigen::VectorXd& values = side[0] == 'p' ? curves.pos[r] : curves.neg[r];
      std::string why;
      const bool valid = ResponseCurve::validate(values, 1e-9, &why);
      std::cout << "stratum " << r << " f_" << side << ": "
                << (valid ? "ok" : "VIOLATION " + why) << '\n';
      if (!valid && ok) {
        ok = false;
        first_why = "stratum " + std::to_string(r) + " f_" + side + ": " + why;
      }
    }
  }
  RunManifest m = make_manifest("check-shape", fnv1a64(model_bytes.data(), model_bytes.size()),
                                0, {});
  finish_manifest(std::move(m), timer.seconds(),
                  (fs::path(out_dir) / "check_shape.manifest.json").string());
  if (!ok) throw VerifyFailure{"shape constraints violated: " + first_why};
  std::cout << "all curves satisfy the shape constraints\n";
  return 0;
}

// ---------------------------------------------------------------------------
// verify

SynthConfig verify_config(std::uint64_t master, const std::string& profile, bool negative) {
  SynthConfig cfg;
  cfg.graph_kind = "erdos_renyi";
  cfg.n = 7;
  cfg.avg_degree = 1.5;
  cfg.p_low = 0.02;
  cfg.p_high = 0.05;
  cfg.exposure_pos = "in_neighbors";
  cfg.exposure_neg = negative ? "sampled" : "none";
  cfg.exposure_count = 2;
  cfg.profile = profile;
  // grids cover any reachable exposure so linear profiles stay exactly linear
  cfg.budget_pos = cfg.n - 1;
  cfg.budget_neg = negative ? cfg.n - 1 : 0;
  cfg.alpha_low = 0.05;
  cfg.alpha_high = 0.15;
  cfg.policy = "degree_biased";
  cfg.policy_k = 2;
  cfg.policy_pool = 6;
  cfg.master_seed = master;
  return cfg;
}

// Enumeration-scale instance: bump the seed until the edge count is within
// the exact-law guard.
Instance enumerable_instance(SynthConfig& cfg) {
  for (int bump = 0; bump < 64; ++bump) {
    Instance inst = gen_instance(cfg);
    if (inst.graph.num_edges() <= 18) return inst;
    cfg.master_seed = detail::splitmix64(cfg.master_seed ^ 0xb3);
  }
  throw std::runtime_error("could not draw an enumeration-scale graph");
}

void dump_reproducer(const std::string& out_dir, const std::string& suite, const json& extra) {
  json doc;
  doc["format_version"] = "1.0";
  doc["suite"] = suite;
  for (auto it = extra.begin(); it != extra.end(); ++it) doc[it.key()] = it.value();
  const std::string path =
      (fs::path(out_dir) / ("verify_" + suite + "_reproducer.json")).string();
  write_file(path, doc.dump(2) + "\n");
  std::cout << "reproducer written to " << path << '\n';
}

bool verify_reduction(int instances, std::uint64_t seed, const std::string& out_dir) {
  for (int m = 0; m < instances; ++m) {
    const bool linear = m % 3 == 2;
    SynthConfig cfg = verify_config(derive_seed(seed, 0xa1, m),
                                    linear ? "linear" : "concave", m % 2 == 1);
    const Instance inst = enumerable_instance(cfg);
    const int K = 2;
    const double eps = inst.graph.max_edge_prob();
    const double bstr = structural_bound(inst.graph, inst.exposure, inst.model, K);
    double max_gap = 0.0;
    std::vector<int> worst;
    for_each_subset_leq(inst.graph.num_nodes(), K, [&](const std::vector<int>& members) {
      const SeedSet s = to_seed_set(inst.graph.num_nodes(), members);
      const ExactLaw law = exact_law(inst.graph, inst.exposure, s);
      const double f = welfare_exact(inst.graph, inst.exposure, inst.model, s);
      const double ft = surrogate_welfare(inst.model, s, law.k_pos, law.k_neg);
      if (std::abs(f - ft) > max_gap) {
        max_gap = std::abs(f - ft);
        worst = members;
      }
    });
    const double bound = linear ? 1e-10 : bstr * eps * eps + 1e-12;
    if (max_gap > bound) {
      dump_reproducer(out_dir, "reduction",
                      {{"instance", m},
                       {"master_seed", cfg.master_seed},
                       {"config", json::parse(cfg.to_json())},
                       {"worst_set", worst},
                       {"gap", max_gap},
                       {"bound", bound}});
      return false;
    }
  }
  return true;
}

bool verify_moments(int instances, std::uint64_t seed, const std::string& out_dir) {
  for (int m = 0; m < instances; ++m) {
    SynthConfig cfg = verify_config(derive_seed(seed, 0xa2, m), "concave", m % 2 == 0);
    const Instance inst = enumerable_instance(cfg);
    const double eps = inst.graph.max_edge_prob();
    bool ok = true;
    json detail;
    for_each_subset_leq(inst.graph.num_nodes(), 2, [&](const std::vector<int>& members) {
      if (!ok) return;
      const SeedSet s = to_seed_set(inst.graph.num_nodes(), members);
      const ExposureSpec spec = inst.exposure;
      const ExactLaw law = exact_law(inst.graph, spec, s);
      const MomentCoefficients mc = moment_coefficients(inst.graph, spec, s);
      for (int i = 0; i < cfg.n && ok; ++i) {
        const auto fail = [&](const char* what, double got, double cap) {
          ok = false;
          detail = {{"set", members}, {"node", i}, {"moment", what}, {"value", got}, {"bound", cap}};
        };
        if (law.mean_u_pos[i] > mc.d_pos[static_cast<std::size_t>(i)] * eps + 1e-12)
          fail("mean_u_pos", law.mean_u_pos[i], mc.d_pos[static_cast<std::size_t>(i)] * eps);
        else if (law.mean_u_neg[i] > mc.d_neg[static_cast<std::size_t>(i)] * eps + 1e-12)
          fail("mean_u_neg", law.mean_u_neg[i], mc.d_neg[static_cast<std::size_t>(i)] * eps);
        else if (law.fall2_u_pos[i] > mc.c_pos[static_cast<std::size_t>(i)] * eps * eps + 1e-12)
          fail("fall2_u_pos", law.fall2_u_pos[i], mc.c_pos[static_cast<std::size_t>(i)] * eps * eps);
        else if (law.fall2_u_neg[i] > mc.c_neg[static_cast<std::size_t>(i)] * eps * eps + 1e-12)
          fail("fall2_u_neg", law.fall2_u_neg[i], mc.c_neg[static_cast<std::size_t>(i)] * eps * eps);
      }
    });
    if (!ok) {
      detail["instance"] = m;
      detail["master_seed"] = cfg.master_seed;
      detail["config"] = json::parse(cfg.to_json());
      dump_reproducer(out_dir, "moments", detail);
      return false;
    }
  }
  return true;
}

bool verify_jensen(int instances, std::uint64_t seed, const std::string& out_dir) {
  Rng rng(derive_seed(seed, 0xa3, 0));
  for (int m = 0; m < instances; ++m) {
    const int budget = 2 + static_cast<int>(rng.uniform_below(5));
    Eigen::VectorXd values = Eigen::VectorXd::Zero(budget + 1);
    double inc = rng.uniform(0.1, 0.5);
    for (int t = 1; t <= budget; ++t) {
      values[t] = values[t - 1] + inc;
      inc *= rng.uniform(0.2, 1.0);
    }
    const ResponseCurve f(values);
    // curvature bounds the gap only while t + u stays on the grid
    const int support =
        1 + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(std::min(5, budget + 1))));
    std::vector<double> pmf(static_cast<std::size_t>(support));
    double z = 0.0;
    for (double& p : pmf) {
      p = rng.uniform(0.01, 1.0);
      z += p;
    }
    for (double& p : pmf) p /= z;
    const int base =
        static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(budget - support + 2)));

    double mean_u = 0.0, fall2 = 0.0, mean_f = 0.0;
    for (int u = 0; u < support; ++u) {
      mean_u += pmf[static_cast<std::size_t>(u)] * u;
      fall2 += pmf[static_cast<std::size_t>(u)] * u * (u - 1);
      mean_f += pmf[static_cast<std::size_t>(u)] * f.at(base + u);
    }
    const double gap = f.interp(base + mean_u) - mean_f;
    const double cap = 0.5 * f.curvature() * fall2;
    if (gap < -1e-9 || gap > cap + 1e-9) {
      std::vector<double> vals(values.data(), values.data() + values.size());
      dump_reproducer(out_dir, "jensen",
                      {{"instance", m},
                       {"curve", vals},
                       {"pmf", pmf},
                       {"base", base},
                       {"gap", gap},
                       {"bound", cap}});
      return false;
    }
  }
  return true;
}

bool verify_estimation(int instances, std::uint64_t seed, const std::string& out_dir) {
  for (int m = 0; m < instances; ++m) {
    Rng rng(derive_seed(seed, 0xa4, m));
    const int bp = 2 + static_cast<int>(rng.uniform_below(3));
    const int bn = static_cast<int>(rng.uniform_below(3));
    const double alpha = rng.uniform(0.0, 0.2);
    Eigen::VectorXd fp = Eigen::VectorXd::Zero(bp + 1), fn = Eigen::VectorXd::Zero(bn + 1);
    double inc = rng.uniform(0.05, 0.2);
    for (int t = 1; t <= bp; ++t) {
      fp[t] = fp[t - 1] + inc;
      inc *= rng.uniform(0.3, 0.9);
    }
    inc = rng.uniform(0.02, 0.1);
    for (int t = 1; t <= bn; ++t) {
      fn[t] = fn[t - 1] + inc;
      inc *= rng.uniform(0.3, 0.9);
    }
    const ResponseCurve truth_p(fp), truth_n(fn);

    // noiseless rows covering every (kp, kn, z) cell
    std::vector<FitRow> rows;
    for (int kp = 0; kp <= bp; ++kp)
      for (int kn = 0; kn <= bn; ++kn)
        for (int z = 0; z <= 1; ++z)
          rows.push_back({0, z, kp, kn, alpha * z + truth_p.at(kp) - truth_n.at(kn), 1.0});

    FitOptions opt;
    opt.budget_pos = bp;
    opt.budget_neg = bn;
    const FitResult res = fit_response(rows, opt);
    double err = std::abs(res.alpha - alpha);
    for (int t = 0; t <= bp; ++t) err = std::max(err, std::abs(res.f_pos.at(t) - truth_p.at(t)));
    for (int t = 0; t <= bn; ++t) err = std::max(err, std::abs(res.f_neg.at(t) - truth_n.at(t)));
    std::string why;
    const bool shape_ok = ResponseCurve::validate(res.f_pos.values(), 1e-9, &why) &&
                          ResponseCurve::validate(res.f_neg.values(), 1e-9, &why);
    if (err > 1e-6 || !shape_ok) {
      std::vector<double> vp(fp.data(), fp.data() + fp.size());
      std::vector<double> vn(fn.data(), fn.data() + fn.size());
      dump_reproducer(out_dir, "estimation",
                      {{"instance", m},
                       {"alpha", alpha},
                       {"f_pos", vp},
                       {"f_neg", vn},
                       {"max_error", err},
                       {"shape_ok", shape_ok}});
      return false;
    }
  }
  return true;
}

bool verify_end2end(int instances, std::uint64_t seed, const std::string& out_dir) {
  for (int m = 0; m < instances; ++m) {
    SynthConfig cfg = verify_config(derive_seed(seed, 0xa5, m), "concave", false);
    cfg.alpha_low = 0.1;
    cfg.alpha_high = 0.2;
    cfg.noise_sigma = 0.05;
    cfg.replications = 60;
    const Instance inst = enumerable_instance(cfg);
    const int n = inst.graph.num_nodes();
    const int K = 2;

    const LoggedGen logged = gen_logged_data(inst, cfg);
    const std::vector<FitRow> pooled = pooled_rows(logged.data, false);
    FitOptions opt;
    opt.budget_pos = inst.model.f_pos[0].budget();
    opt.budget_neg = inst.model.f_neg[0].budget();
    const FitResult fit = fit_response(pooled, opt);
    OutcomeModel fitted = OutcomeModel::homogeneous(n, fit.alpha, fit.f_pos, fit.f_neg);

    const SetObjective f_hat = exact_surrogate_objective(inst.graph, inst.exposure, fitted);
    const SetObjective f_tilde = exact_surrogate_objective(inst.graph, inst.exposure, inst.model);
    const GreedyResult picked = greedy_select(n, K, f_hat);

    double delta_est = 0.0, delta_str = 0.0, max_f = -1e300, max_f_hat = -1e300;
    for_each_subset_leq(n, K, [&](const std::vector<int>& members) {
      const SeedSet s = to_seed_set(n, members);
      const double f = welfare_exact(inst.graph, inst.exposure, inst.model, s);
      const double ft = f_tilde(members);
      const double fh = f_hat(members);
      delta_est = std::max(delta_est, std::abs(fh - ft));
      delta_str = std::max(delta_str, std::abs(f - ft));
      max_f = std::max(max_f, f);
      max_f_hat = std::max(max_f_hat, fh);
    });
    const double f_of_pick =
        welfare_exact(inst.graph, inst.exposure, inst.model, to_seed_set(n, picked.members));
    const double rho = picked.value / max_f_hat;  // max_f_hat >= alpha > 0 by design
    const double lhs = f_of_pick;
    const double rhs = rho * max_f - (1.0 + rho) * (delta_est + delta_str);
    if (!(max_f_hat > 0.0) || lhs < rhs - 1e-9) {
      dump_reproducer(out_dir, "end2end",
                      {{"instance", m},
                       {"master_seed", cfg.master_seed},
                       {"config", json::parse(cfg.to_json())},
                       {"selected", picked.members},
                       {"welfare_of_selected", lhs},
                       {"rho", rho},
                       {"delta_est", delta_est},
                       {"delta_str", delta_str},
                       {"oracle", max_f},
                       {"required", rhs}});
      return false;
    }
  }
  return true;
}

int cmd_verify(const std::string& suite, int instances, std::uint64_t seed,
               const std::string& fixture, const std::string& out_dir) {
  Timer timer;
  fs::create_directories(out_dir);

  if (!fixture.empty()) {
    const std::string bytes = read_file(fixture);
    const RawCurves curves = raw_model_curves(bytes);
    for (std::size_t r = 0; r < curves.pos.size(); ++r) {
      for (const char* side : {"pos", "neg"}) {
        const Eigen::VectorXd& v = side[0] == 'p' ? curves.pos[r] : curves.neg[r];
        std::string why;
        if (!ResponseCurve::validate(v, 1e-9, &why)) {
          std::vector<double> vals(v.data(), v.data() + v.size());
          dump_reproducer(out_dir, "fixture",
                          {{"path", fixture},
                           {"stratum", r},
                           {"side", side},
                           {"values", vals},
                           {"why", why}});
          std::cout << "fixture: FAIL (" << why << ")\n";
          throw VerifyFailure{"fixture model violates shape constraints: " + why};
        }
      }
    }
    std::cout << "fixture: PASS\n";
    RunManifest m = make_manifest("verify", fnv1a64(bytes.data(), bytes.size()), seed, {});
    finish_manifest(std::move(m), timer.seconds(),
                    (fs::path(out_dir) / "verify.manifest.json").string());
    return 0;
  }

  const std::vector<std::string> all{"reduction", "moments", "jensen", "estimation", "end2end"};
  std::vector<std::string> run;
  if (suite == "all")
    run = all;
  else
    run = {suite};

  bool ok = true;
  for (const std::string& s : run) {
    bool pass = false;
    if (s == "reduction") pass = verify_reduction(instances, seed, out_dir);
    else if (s == "moments") pass = verify_moments(instances, seed, out_dir);
    else if (s == "jensen") pass = verify_jensen(instances, seed, out_dir);
    else if (s == "estimation") pass = verify_estimation(instances, seed, out_dir);
    else pass = verify_end2end(instances, seed, out_dir);
    std::cout << s << ": " << (pass ? "PASS" : "FAIL") << " (" << instances << " instances)\n";
    ok = ok && pass;
  }

  const std::string inputs = "suite=" + suite + ";instances=" + std::to_string(instances) +
                             ";seed=" + std::to_string(seed);
  RunManifest m = make_manifest("verify", fnv1a64(inputs.data(), inputs.size()), seed, {});
  finish_manifest(std::move(m), timer.seconds(),
                  (fs::path(out_dir) / "verify.manifest.json").string());
  if (!ok) throw VerifyFailure{"verification suite failed"};
  return 0;
}

// ---------------------------------------------------------------------------
// sweep

int cmd_sweep(const std::string& config_path, const std::string& out_dir,
              const std::string& axis, const std::string& values_text, int repetitions,
              int threads) {
  Timer timer;
  const std::string config_bytes = read_file(config_path);
  std::istringstream cfg_in(config_bytes);
  const SynthConfig cfg = SynthConfig::from_json(cfg_in);
  const std::vector<double> values = parse_doubles(values_text);
  if (repetitions < 1) throw std::invalid_argument("--reps must be >= 1");

  const std::vector<SweepCell> cells = sweep(cfg, axis, values, repetitions, threads);
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  const std::string csv_path = (dir / "sweep.csv").string();
  write_file(csv_path, sweep_csv(cells));
  std::cout << "wrote " << csv_path << " (" << cells.size() << " cells)\n";

  const std::string flags = "axis=" + axis + ";values=" + values_text +
                            ";reps=" + std::to_string(repetitions);
  std::uint64_t digest = fnv1a64(config_bytes.data(), config_bytes.size());
  digest ^= fnv1a64(flags.data(), flags.size());
  RunManifest m = make_manifest("sweep", digest, cfg.master_seed, {csv_path});
  finish_manifest(std::move(m), timer.seconds(), (dir / "manifest.json").string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"causal influence maximization pipeline"};
  app.require_subcommand(1);
  int threads = 0;

  // gen
  auto* gen = app.add_subcommand("gen", "generate graph, exposure, model, and logged data");
  std::string gen_config, gen_out = ".";
  gen->add_option("config", gen_config, "generator config (json)")->required();
  gen->add_option("-o,--out", gen_out, "output directory");
  gen->add_option("--threads", threads, "worker threads (default: CIM_THREADS or cores)");

  // fit
  auto* fit = app.add_subcommand("fit", "fit shape-constrained responses from logged data");
  std::string fit_data, fit_out = "fitted_model.json", fit_weighting = "uniform";
  int fit_strata = 1, fit_bpos = -1, fit_bneg = -1;
  double fit_lambda = 0.0;
  fit->add_option("data", fit_data, "logged dataset (jsonl)")->required();
  fit->add_option("-o,--out", fit_out, "output model file");
  fit->add_option("--strata", fit_strata, "number of response strata (node i joins i mod strata)");
  fit->add_option("--lambda", fit_lambda, "total-variation penalty");
  fit->add_option("--weighting", fit_weighting, "row weighting")
      ->check(CLI::IsMember({"uniform", "ips"}));
  fit->add_option("--Bpos", fit_bpos, "positive grid size (-1: max observed)");
  fit->add_option("--Bneg", fit_bneg, "negative grid size (-1: max observed)");
  fit->add_option("--threads", threads, "worker threads");

  // select
  auto* sel = app.add_subcommand("select", "pick a seed set under a budget");
  std::string sel_graph, sel_exposure, sel_model, sel_out = "selection.json",
              sel_method = "cim";
  int sel_k = 1;
  long long sel_r = 2000;
  bool sel_lazy = false;
  std::uint64_t sel_seed = 1;
  sel->add_option("graph", sel_graph, "edge list")->required();
  sel->add_option("exposure", sel_exposure, "exposure spec (json)")->required();
  sel->add_option("model", sel_model, "outcome model (json)")->required();
  sel->add_option("-o,--out", sel_out, "output selection file");
  sel->add_option("--K", sel_k, "seed budget")->required();
  sel->add_option("--R", sel_r, "monte carlo replicates per evaluation");
  sel->add_option("--method", sel_method, "selection method")
      ->check(CLI::IsMember({"cim", "degree", "random", "reach"}));
  sel->add_flag("--lazy", sel_lazy, "lazy greedy queue");
  sel->add_option("--seed", sel_seed, "random seed");
  sel->add_option("--threads", threads, "worker threads");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "welfare estimates for a given seed set");
  std::string eval_graph, eval_exposure, eval_model, eval_out = "evaluation.json",
              eval_seeds, eval_data;
  long long eval_r = 20000;
  std::uint64_t eval_seed = 1;
  eval->add_option("graph", eval_graph, "edge list")->required();
  eval->add_option("exposure", eval_exposure, "exposure spec (json)")->required();
  eval->add_option("model", eval_model, "outcome model (json)")->required();
  eval->add_option("--seeds", eval_seeds, "comma list of seed ids (empty set if omitted)");
  eval->add_option("-o,--out", eval_out, "output file");
  eval->add_option("--R", eval_r, "monte carlo replicates");
  eval->add_option("--seed", eval_seed, "random seed");
  eval->add_option("--data", eval_data, "logged dataset for an ips estimate");
  eval->add_option("--threads", threads, "worker threads");

  // verify
  auto* ver = app.add_subcommand("verify", "check theorem-backed invariants on random instances");
  std::string ver_suite = "all", ver_fixture, ver_out = ".";
  int ver_instances = 100;
  std::uint64_t ver_seed = 1;
  ver->add_option("--suite", ver_suite, "suite to run")
      ->check(CLI::IsMember({"reduction", "moments", "jensen", "estimation", "end2end", "all"}));
  ver->add_option("--instances", ver_instances, "instances per suite")
      ->check(CLI::PositiveNumber);
  ver->add_option("--seed", ver_seed, "base seed");
  ver->add_option("--fixture", ver_fixture, "model file to shape-check instead of suites");
  ver->add_option("-o,--out", ver_out, "directory for reproducer dumps");
  ver->add_option("--threads", threads, "worker threads");

  // sweep
  auto* swp = app.add_subcommand("sweep", "experiment matrix over one axis");
  std::string swp_config, swp_axis, swp_values, swp_out = ".";
  int swp_reps = 5;
  swp->add_option("config", swp_config, "generator config (json)")->required();
  swp->add_option("--axis", swp_axis, "sweep axis")
      ->check(CLI::IsMember({"sigma", "epsilon_scale", "K", "N"}))
      ->required();
  swp->add_option("--values", swp_values, "comma list of axis values")->required();
  swp->add_option("--reps", swp_reps, "repetitions per value");
  swp->add_option("-o,--out", swp_out, "output directory");
  swp->add_option("--threads", threads, "worker threads");

  // check-shape
  auto* chk = app.add_subcommand("check-shape", "validate a model file's curve shapes");
  std::string chk_model, chk_out = ".";
  chk->add_option("model", chk_model, "outcome model (json)")->required();
  chk->add_option("-o,--out", chk_out, "directory for the manifest");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) return cmd_gen(gen_config, gen_out);
    if (*fit) return cmd_fit(fit_data, fit_out, fit_strata, fit_lambda, fit_weighting,
                             fit_bpos, fit_bneg);
    if (*sel) return cmd_select(sel_graph, sel_exposure, sel_model, sel_out, sel_k, sel_r,
                                sel_method, sel_lazy, sel_seed, threads);
    if (*eval) return cmd_evaluate(eval_graph, eval_exposure, eval_model, eval_out, eval_seeds,
                                   eval_r, eval_seed, eval_data, threads);
    if (*ver) return cmd_verify(ver_suite, ver_instances, ver_seed, ver_fixture, ver_out);
    if (*swp) return cmd_sweep(swp_config, swp_out, swp_axis, swp_values, swp_reps, threads);
    if (*chk) return cmd_check_shape(chk_model, chk_out);
  } catch (const VerifyFailure& e) {
    std::cerr << "error: " << e.message << '\n';
    return 1;
  } catch (const GuardExceeded& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
