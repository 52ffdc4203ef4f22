#include "cim/estimand.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cim/errors.hpp"
#include "cim/parallel.hpp"

namespace cim {

OutcomeModel OutcomeModel::homogeneous(int n, double alpha, ResponseCurve fp,
                                       ResponseCurve fn) {
  OutcomeModel m;
  m.stratum.assign(static_cast<std::size_t>(n), 0);
  m.alpha = Eigen::VectorXd::Constant(1, alpha);
  m.f_pos = {std::move(fp)};
  m.f_neg = {std::move(fn)};
  return m;
}

void OutcomeModel::validate(int n) const {
  if (static_cast<int>(stratum.size()) != n)
    throw std::invalid_argument("model covers " + std::to_string(stratum.size()) +
                                " nodes, graph has " + std::to_string(n));
  const int R = num_strata();
  if (static_cast<int>(f_pos.size()) != R || static_cast<int>(f_neg.size()) != R)
    throw std::invalid_argument("per-stratum curve count mismatch");
  for (int s : stratum)
    if (s < 0 || s >= R) throw std::invalid_argument("stratum id out of range");
}

std::string OutcomeModel::to_json() const {
  nlohmann::json doc;
  doc["format_version"] = "1.0";
  doc["stratum"] = stratum;
  doc["alpha"] = std::vector<double>(alpha.begin(), alpha.end());
  auto curves = [](const std::vector<ResponseCurve>& fs) {
    nlohmann::json arr = nlohmann::json::array();
    for (const ResponseCurve& f : fs)
      arr.push_back(std::vector<double>(f.values().begin(), f.values().end()));
    return arr;
  };
  doc["f_pos"] = curves(f_pos);
  doc["f_neg"] = curves(f_neg);
  return doc.dump(2);
}

namespace {

void check_format_version(const nlohmann::json& doc, const char* what) {
  if (!doc.contains("format_version")) return;
  const std::string v = doc.at("format_version").get<std::string>();
  const int major = std::atoi(v.c_str());
  if (major > 1)
    throw std::invalid_argument(std::string(what) + ": format_version " + v +
                                " is newer than this reader (1.x)");
}

}  // namespace

OutcomeModel OutcomeModel::from_json(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("model file: ") + e.what());
  }
  check_format_version(doc, "model file");
  OutcomeModel m;
  m.stratum = doc.at("stratum").get<std::vector<int>>();
  const std::vector<double> a = doc.at("alpha").get<std::vector<double>>();
  m.alpha = Eigen::Map<const Eigen::VectorXd>(a.data(), static_cast<Eigen::Index>(a.size()));
  for (const auto& v : doc.at("f_pos")) {
    const std::vector<double> f = v.get<std::vector<double>>();
    m.f_pos.emplace_back(Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size())));
  }
  for (const auto& v : doc.at("f_neg")) {
    const std::vector<double> f = v.get<std::vector<double>>();
    m.f_neg.emplace_back(Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size())));
  }
  m.validate(static_cast<int>(m.stratum.size()));
  return m;
}

OutcomeModel OutcomeModel::load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return from_json(in);
}

double realized_welfare(const ExposureSpec& exposure, const OutcomeModel& model,
                        const SeedSet& seeds, const std::vector<char>& active) {
  const ExposureCounts counts = exposure_counts(exposure, active);
  double total = 0.0;
  for (int i = 0; i < model.num_nodes(); ++i) {
    const std::size_t si = static_cast<std::size_t>(i);
    double y = model.fpos(i).at(counts.kp[si]) - model.fneg(i).at(counts.kn[si]);
    if (seeds.contains(i)) y += model.alpha_of(i);
    total += y;
  }
  return total;
}

double surrogate_welfare(const OutcomeModel& model, const SeedSet& seeds,
                         const Eigen::VectorXd& k_pos, const Eigen::VectorXd& k_neg) {
  if (k_pos.size() != model.num_nodes() || k_neg.size() != model.num_nodes())
    throw std::invalid_argument("expected-exposure length mismatch");
  double total = 0.0;
  for (int i = 0; i < model.num_nodes(); ++i) {
    double y = model.fpos(i).interp(k_pos[i]) - model.fneg(i).interp(k_neg[i]);
    if (seeds.contains(i)) y += model.alpha_of(i);
    total += y;
  }
  return total;
}

double welfare_exact(const Graph& g, const ExposureSpec& exposure, const OutcomeModel& model,
                     const SeedSet& seeds, int edge_guard) {
  model.validate(g.num_nodes());
  const ExposureSpec spec = exposure.resized(g.num_nodes());
  const ExactLaw law = exact_law(g, spec, seeds, edge_guard);
  double total = 0.0;
  for (const auto& [z, prob] : law.support)
    total += prob * realized_welfare(spec, model, seeds, z);
  return total;
}

namespace {
constexpr std::uint64_t kWelfareKey = 0x3e1fa2e5;
constexpr long long kChunk = 4096;
}  // namespace

WelfareEstimate welfare_mc(const Graph& g, const ExposureSpec& exposure,
                           const OutcomeModel& model, const SeedSet& seeds,
                           long long replicates, std::uint64_t seed, int threads) {
  if (replicates < 1) throw std::invalid_argument("replicates must be >= 1");
  model.validate(g.num_nodes());
  const ExposureSpec spec = exposure.resized(g.num_nodes());
  const long long chunks = (replicates + kChunk - 1) / kChunk;
  // Fixed chunk boundaries and a sequential fold over chunk slots keep the
  // floating-point sum identical at any thread count.
  std::vector<double> sum(static_cast<std::size_t>(chunks), 0.0);
  std::vector<double> sumsq(static_cast<std::size_t>(chunks), 0.0);
  parallel_for(chunks, threads, [&](std::int64_t c) {
    double s = 0.0, s2 = 0.0;
    const long long lo = c * kChunk;
    const long long hi = std::min(replicates, lo + kChunk);
    for (long long r = lo; r < hi; ++r) {
      Rng rng = substream(seed, {kWelfareKey, static_cast<std::uint64_t>(r)});
      const double w = realized_welfare(spec, model, seeds,
                                        reachable_under(g, seeds, sample_live_edges(g, rng)));
      s += w;
      s2 += w * w;
    }
    sum[static_cast<std::size_t>(c)] = s;
    sumsq[static_cast<std::size_t>(c)] = s2;
  });
  double s = 0.0, s2 = 0.0;
  for (long long c = 0; c < chunks; ++c) {
    s += sum[static_cast<std::size_t>(c)];
    s2 += sumsq[static_cast<std::size_t>(c)];
  }
  WelfareEstimate est;
  est.replicates = replicates;
  const double R = static_cast<double>(replicates);
  est.value = s / R;
  if (replicates > 1) {
    const double var = std::max(0.0, (s2 - s * s / R) / (R - 1.0));
    est.std_error = std::sqrt(var / R);
  }
  return est;
}

double structural_bound(const Graph& g, const ExposureSpec& exposure,
                        const OutcomeModel& model, int K, long long subset_guard,
                        const PathCountOptions& opt) {
  model.validate(g.num_nodes());
  const ExposureSpec spec = exposure.resized(g.num_nodes());
  const WorstCaseMoments wc = worst_case_moments(g, spec, K, subset_guard, opt);
  double b = 0.0;
  for (int i = 0; i < g.num_nodes(); ++i) {
    const std::size_t si = static_cast<std::size_t>(i);
    b += model.fpos(i).curvature() * wc.c_pos[si] + model.fneg(i).curvature() * wc.c_neg[si];
  }
  return 0.5 * b;
}

IdentificationInterval identification_interval(double surrogate, double b_str, double epsilon) {
  IdentificationInterval iv;
  iv.center = surrogate;
  iv.radius = b_str * epsilon * epsilon;
  iv.lo = surrogate - iv.radius;
  iv.hi = surrogate + iv.radius;
  return iv;
}

PluginWelfare plugin_welfare(const Graph& g, const ExposureSpec& exposure,
                             const OutcomeModel& fitted, const SeedSet& seeds,
                             long long replicates, std::uint64_t seed, int threads) {
  fitted.validate(g.num_nodes());
  PluginWelfare p;
  p.exposures = mc_exposures(g, exposure, seeds, replicates, seed, threads);
  p.value = surrogate_welfare(fitted, seeds, p.exposures.k_pos, p.exposures.k_neg);
  return p;
}

double bernstein_radius(double variance, double bound, long long replicates, double delta) {
  if (variance < 0.0) throw std::invalid_argument("negative variance");
  if (bound <= 0.0) throw std::invalid_argument("bound must be positive");
  if (replicates < 1) throw std::invalid_argument("replicates must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta outside (0,1)");
  const double L = std::log(2.0 / delta);
  const double R = static_cast<double>(replicates);
  return std::sqrt(2.0 * variance * L / R) + 2.0 * bound * L / (3.0 * R);
}

LoggedDataset LoggedDataset::load_jsonl(std::istream& in) {
  LoggedDataset data;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(lineno, e.what());
    }
    if (!doc.contains("seed")) {
      // header line carrying only metadata
      try {
        check_format_version(doc, "dataset");
      } catch (const std::invalid_argument& e) {
        throw ParseError(lineno, e.what());
      }
      continue;
    }
    LoggedRecord rec;
    try {
      rec.seed = doc.at("seed").get<std::vector<int>>();
      rec.context = doc.at("context").get<int>();
      rec.propensity = doc.at("propensity").get<double>();
      for (const auto& row : doc.at("rows")) {
        FitRow r;
        r.i = row.at("i").get<int>();
        r.z = row.at("z").get<int>();
        r.kp = row.at("kp").get<int>();
        r.kn = row.at("kn").get<int>();
        r.y = row.at("y").get<double>();
        rec.rows.push_back(r);
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(lineno, e.what());
    }
    std::sort(rec.seed.begin(), rec.seed.end());
    if (!(rec.propensity > 0.0 && rec.propensity <= 1.0))
      throw ParseError(lineno, "propensity outside (0,1]");
    for (const FitRow& r : rec.rows) {
      if (r.z != 0 && r.z != 1) throw ParseError(lineno, "z must be 0 or 1");
      if (r.kp < 0 || r.kn < 0) throw ParseError(lineno, "negative exposure count");
      if (!(std::abs(r.y) <= 1.0 + 1e-12)) throw ParseError(lineno, "|y| > 1");
    }
    data.records.push_back(std::move(rec));
  }
  return data;
}

LoggedDataset LoggedDataset::load_jsonl_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return load_jsonl(in);
}

void LoggedDataset::save_jsonl(std::ostream& out) const {
  out << nlohmann::json{{"format_version", "1.0"}}.dump() << '\n';
  for (const LoggedRecord& rec : records) {
    nlohmann::json doc;
    doc["seed"] = rec.seed;
    doc["context"] = rec.context;
    doc["propensity"] = rec.propensity;
    nlohmann::json rows = nlohmann::json::array();
    for (const FitRow& r : rec.rows)
      rows.push_back({{"i", r.i}, {"z", r.z}, {"kp", r.kp}, {"kn", r.kn}, {"y", r.y}});
    doc["rows"] = rows;
    out << doc.dump() << '\n';
  }
}

void LoggedDataset::save_jsonl_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  save_jsonl(out);
}

std::vector<double> ips_weights(const LoggedDataset& data, const std::vector<int>& target) {
  std::vector<int> sorted = target;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> w;
  w.reserve(data.records.size());
  for (const LoggedRecord& rec : data.records) {
    if (rec.seed == sorted) {
      if (!(rec.propensity > 0.0))
        throw std::invalid_argument("matching record with nonpositive propensity");
      w.push_back(1.0 / rec.propensity);
    } else {
      w.push_back(0.0);
    }
  }
  return w;
}

IpsEstimate ips_welfare(const LoggedDataset& data, const std::vector<int>& target) {
  const std::vector<double> w = ips_weights(data, target);
  IpsEstimate est;
  est.records = static_cast<long long>(data.records.size());
  if (data.records.empty()) return est;
  double s = 0.0, s2 = 0.0;
  for (std::size_t l = 0; l < data.records.size(); ++l) {
    double y = 0.0;
    for (const FitRow& r : data.records[l].rows) y += r.y;
    const double term = w[l] * y;
    if (w[l] != 0.0) ++est.matches;
    s += term;
    s2 += term * term;
  }
  const double N = static_cast<double>(est.records);
  est.value = s / N;
  if (est.records > 1) {
    const double var = std::max(0.0, (s2 - s * s / N) / (N - 1.0));
    est.std_error = std::sqrt(var / N);
  }
  return est;
}

std::vector<FitRow> pooled_rows(const LoggedDataset& data, bool ips_weighting) {
  std::vector<FitRow> rows;
  for (const LoggedRecord& rec : data.records) {
    if (ips_weighting && !(rec.propensity > 0.0))
      throw std::invalid_argument("ips weighting needs positive propensities");
    const double w = ips_weighting ? 1.0 / rec.propensity : 1.0;
    for (FitRow r : rec.rows) {
      r.w = w;
      rows.push_back(r);
    }
  }
  return rows;
}

}  // namespace cim
