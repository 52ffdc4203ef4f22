#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cim/estimand.hpp"
#include "cim/graph.hpp"

namespace cim {

// Generator configuration, loaded from a JSON document. Everything downstream
// (graph, model, logged data, sweep cells) is a pure function of this struct,
// so equal configs give byte-identical outputs.
struct SynthConfig {
  // graph
  std::string graph_kind = "erdos_renyi";  // erdos_renyi | barabasi_albert | watts_strogatz | path | star
  int n = 20;
  double avg_degree = 3.0;   // erdos_renyi
  int attach = 2;            // barabasi_albert edges per new node
  int ring = 2;              // watts_strogatz neighbors per side
  double rewire = 0.1;       // watts_strogatz rewiring probability
  double p_low = 0.02;       // activation probability range before scaling
  double p_high = 0.05;
  double epsilon_scale = 1.0;

  // exposure
  std::string exposure_pos = "in_neighbors";  // in_neighbors | sampled | none
  std::string exposure_neg = "none";
  int exposure_count = 2;    // sources per node for "sampled"

  // response
  std::string profile = "concave";  // linear | concave | mixed
  int strata = 1;
  int budget_pos = 4;
  int budget_neg = 3;
  double alpha_low = 0.0;
  double alpha_high = 0.2;
  double response_scale = 0.1;  // first increment magnitude

  // logged data
  double noise_sigma = 0.0;
  int replications = 50;
  std::string policy = "uniform";  // fixed | uniform | degree_biased
  std::vector<std::vector<int>> policy_sets;  // fixed: one set; uniform: the support
  double temperature = 1.0;  // degree_biased softmax temperature
  int policy_k = 2;          // degree_biased set size
  int policy_pool = 8;       // degree_biased support size

  // selection stage of the pipeline
  int select_k = 2;
  long long select_r = 500;

  std::uint64_t master_seed = 1;

  static SynthConfig from_json(std::istream& in);
  static SynthConfig load_file(const std::string& path);
  std::string to_json() const;
  void validate() const;  // throws std::invalid_argument naming the field
};

struct Instance {
  Graph graph;
  ExposureSpec exposure;
  OutcomeModel model;
};

// Graph from the named family with p_e ~ U[p_low, p_high] * epsilon_scale,
// exposure spec per config, and a shape-feasible response model with the
// requested curvature profile. Fully determined by cfg.master_seed.
Instance gen_instance(const SynthConfig& cfg);

// The logging policy's finite support with exact probabilities.
struct PolicySupport {
  std::vector<std::vector<int>> sets;  // each ascending
  std::vector<double> prob;            // sums to 1
};

PolicySupport policy_support(const SynthConfig& cfg, const Graph& g);

// Replicated experiment: draw Z_l from the policy, run one diffusion, record
// realized exposures and Y = alpha [i in Z] + f^+(kp) - f^-(kn) + clipped
// Gaussian noise. clip_fraction reports how often the [-1,1] clip engaged.
struct LoggedGen {
  LoggedDataset data;
  double clip_fraction = 0.0;
};

LoggedGen gen_logged_data(const Instance& inst, const SynthConfig& cfg);

// One sweep cell: full pipeline (generate, fit, select, evaluate) for one
// method at one axis value. oracle is the exhaustive optimum of the same
// evaluation objective, NaN when enumeration is infeasible.
struct SweepCell {
  std::string axis;
  double value = 0.0;
  int repetition = 0;
  std::string method;        // cim | degree | random | reach
  double welfare = 0.0;
  double oracle = 0.0;
  double gap = 0.0;          // oracle - welfare
  double fit_error = 0.0;    // max abs fitted-vs-true curve error, cim only
  double millis = 0.0;
};

// Runs repetitions x values x methods cells in parallel; cell seeds derive
// from (master_seed, axis, value, repetition) so the matrix is reproducible
// at any thread count. axis is one of: sigma, epsilon_scale, K, N.
std::vector<SweepCell> sweep(const SynthConfig& base, const std::string& axis,
                             const std::vector<double>& values, int repetitions,
                             int threads = 0);

std::string sweep_csv(const std::vector<SweepCell>& cells);

}  // namespace cim
