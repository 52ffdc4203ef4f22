// End-to-end checks of the command line front end: exit codes, file outputs,
// reproducibility across reruns and thread counts, and the failure paths.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "cim/estimand.hpp"
#include "cim/graph.hpp"
#include "cim/selection.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CmdResult {
  int exit_code = -1;
  std::string out;
};

CmdResult run_cli(const std::string& args) {
  const std::string cmd = std::string(CIM_BINARY) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  std::size_t n = 0;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  const int status = pclose(pipe);
  CmdResult res;
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  res.out = out;
  return res;
}

// Fresh scratch directory per test case.
fs::path scratch(const std::string& name) {
  const fs::path dir = fs::path("cli_scratch") / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

json base_config(std::uint64_t master_seed) {
  json cfg;
  cfg["format_version"] = "1.0";
  cfg["graph"] = {{"kind", "erdos_renyi"}, {"n", 8},      {"avg_degree", 1.5},
                  {"p_low", 0.02},         {"p_high", 0.05}};
  cfg["epsilon_scale"] = 1.0;
  cfg["exposure"] = {{"pos", "in_neighbors"}, {"neg", "none"}, {"count", 2}};
  cfg["response"] = {{"profile", "concave"},  {"strata", 1}, {"budget_pos", 4},
                     {"budget_neg", 0},       {"alpha_low", 0.05},
                     {"alpha_high", 0.15},    {"scale", 0.1}};
  cfg["noise_sigma"] = 0.05;
  cfg["replications"] = 120;
  cfg["policy"] = {{"kind", "uniform"}, {"sets", json::array({{0}, {1}, {2}, {3}})}};
  cfg["selection"] = {{"k", 2}, {"r", 300}};
  cfg["master_seed"] = master_seed;
  return cfg;
}

std::string q(const fs::path& p) { return p.string(); }

}  // namespace

TEST_CASE("gen writes the four artifacts plus a manifest and reruns bit-identically") {
  const fs::path dir = scratch("gen_repro");
  spit(dir / "config.json", base_config(2024).dump(2));

  const CmdResult first = run_cli("gen " + q(dir / "config.json") + " -o " + q(dir / "a"));
  REQUIRE(first.exit_code == 0);
  for (const char* f : {"graph.edges", "exposure.json", "model.json", "logged.jsonl",
                        "manifest.json"})
    CHECK(fs::exists(dir / "a" / f));

  const CmdResult second = run_cli("gen " + q(dir / "config.json") + " -o " + q(dir / "b"));
  REQUIRE(second.exit_code == 0);
  for (const char* f : {"graph.edges", "exposure.json", "model.json", "logged.jsonl"})
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));

  const json ma = json::parse(slurp(dir / "a" / "manifest.json"));
  const json mb = json::parse(slurp(dir / "b" / "manifest.json"));
  CHECK(ma.at("digest") == mb.at("digest"));
  CHECK(ma.at("command") == "gen");
  CHECK(ma.at("format_version") == "1.0");
}

TEST_CASE("gen rejects a config with a missing field and names it") {
  const fs::path dir = scratch("gen_missing");
  json cfg = base_config(7);
  cfg["graph"].erase("kind");
  spit(dir / "config.json", cfg.dump());
  const CmdResult res = run_cli("gen " + q(dir / "config.json") + " -o " + q(dir / "out"));
  CHECK(res.exit_code == 2);
  CHECK(res.out.find("graph.kind") != std::string::npos);
}

TEST_CASE("fit recovers a noiseless feasible model and passes check-shape") {
  const fs::path dir = scratch("fit_recover");
  const double alpha = 0.12;
  const std::vector<double> fp{0.0, 0.2, 0.35, 0.45};

  // rows covering every (kp, z) cell, exactly consistent with the model
  std::ostringstream data;
  data << "{\"format_version\":\"1.0\"}\n";
  for (int rep = 0; rep < 3; ++rep) {
    data << "{\"context\":0,\"propensity\":0.5,\"seed\":[0],\"rows\":[";
    bool first = true;
    int i = 0;
    for (int kp = 0; kp < 4; ++kp)
      for (int z = 0; z <= 1; ++z) {
        const double y = alpha * z + fp[static_cast<std::size_t>(kp)];
        if (!first) data << ",";
        first = false;
        data << "{\"i\":" << i++ << ",\"z\":" << z << ",\"kp\":" << kp
             << ",\"kn\":0,\"y\":" << y << "}";
      }
    data << "]}\n";
  }
  spit(dir / "data.jsonl", data.str());

  const fs::path model = dir / "fitted.json";
  const CmdResult res = run_cli("fit " + q(dir / "data.jsonl") + " --Bpos 3 --Bneg 0 -o " +
                                q(model));
  REQUIRE(res.exit_code == 0);
  REQUIRE(fs::exists(model));
  REQUIRE(fs::exists(dir / "fitted.json.manifest.json"));

  const json doc = json::parse(slurp(model));
  CHECK(std::abs(doc.at("alpha")[0].get<double>() - alpha) < 1e-6);
  const json curve = doc.at("f_pos")[0];
  REQUIRE(curve.size() == 4);
  for (int t = 0; t < 4; ++t)
    CHECK(std::abs(curve[t].get<double>() - fp[static_cast<std::size_t>(t)]) < 1e-6);

  CHECK(run_cli("check-shape " + q(model) + " -o " + q(dir)).exit_code == 0);
}

TEST_CASE("fit with ips weighting rejects a dataset with a bad propensity") {
  const fs::path dir = scratch("fit_ips");
  std::ostringstream data;
  data << "{\"format_version\":\"1.0\"}\n"
       << "{\"context\":0,\"propensity\":0.0,\"seed\":[0],\"rows\":"
       << "[{\"i\":0,\"z\":1,\"kp\":0,\"kn\":0,\"y\":0.1}]}\n";
  spit(dir / "data.jsonl", data.str());
  const CmdResult res =
      run_cli("fit " + q(dir / "data.jsonl") + " --weighting ips -o " + q(dir / "m.json"));
  CHECK(res.exit_code == 2);
  CHECK(res.out.find("propensity") != std::string::npos);
}

TEST_CASE("degree selection on a star returns the hub") {
  const fs::path dir = scratch("select_star");
  json cfg = base_config(11);
  cfg["graph"] = {{"kind", "star"}, {"n", 6}, {"p_low", 0.3}, {"p_high", 0.4}};
  spit(dir / "config.json", cfg.dump());
  REQUIRE(run_cli("gen " + q(dir / "config.json") + " -o " + q(dir)).exit_code == 0);

  const fs::path out = dir / "sel.json";
  const CmdResult res = run_cli("select " + q(dir / "graph.edges") + " " +
                                q(dir / "exposure.json") + " " + q(dir / "model.json") +
                                " --K 1 --method degree -o " + q(out));
  REQUIRE(res.exit_code == 0);
  const json doc = json::parse(slurp(out));
  CHECK(doc.at("members") == json::array({0}));
  CHECK(doc.at("method") == "degree");
}

TEST_CASE("select with a fixed seed reruns byte-identically") {
  const fs::path dir = scratch("select_repro");
  spit(dir / "config.json", base_config(31).dump());
  REQUIRE(run_cli("gen " + q(dir / "config.json") + " -o " + q(dir)).exit_code == 0);

  const std::string inputs = q(dir / "graph.edges") + " " + q(dir / "exposure.json") + " " +
                             q(dir / "model.json");
  REQUIRE(run_cli("select " + inputs + " --K 2 --R 300 --seed 17 --threads 1 -o " +
                  q(dir / "s1.json"))
              .exit_code == 0);
  REQUIRE(run_cli("select " + inputs + " --K 2 --R 300 --seed 17 --threads 4 -o " +
                  q(dir / "s2.json"))
              .exit_code == 0);
  CHECK(slurp(dir / "s1.json") == slurp(dir / "s2.json"));

  REQUIRE(run_cli("select " + inputs + " --K 2 --R 300 --seed 18 -o " + q(dir / "s3.json"))
              .exit_code == 0);
  CHECK(json::parse(slurp(dir / "s1.json")).at("seed") != json::parse(slurp(dir / "s3.json")).at("seed"));
}

TEST_CASE("greedy selection matches exhaustive search on a certified instance") {
  // deterministic star diffusion: the plug-in objective is modular there
  const fs::path dir = scratch("select_exhaustive");
  json cfg = base_config(5);
  cfg["graph"] = {{"kind", "star"}, {"n", 6}, {"p_low", 1.0}, {"p_high", 1.0}};
  spit(dir / "config.json", cfg.dump());
  REQUIRE(run_cli("gen " + q(dir / "config.json") + " -o " + q(dir)).exit_code == 0);

  const fs::path out = dir / "sel.json";
  const CmdResult res = run_cli("select " + q(dir / "graph.edges") + " " +
                                q(dir / "exposure.json") + " " + q(dir / "model.json") +
                                " --K 2 --R 200 --method cim --seed 4 -o " + q(out));
  REQUIRE(res.exit_code == 0);
  const json doc = json::parse(slurp(out));

  std::ifstream gin(dir / "graph.edges");
  const cim::Graph g = cim::Graph::load_edge_list(gin);
  const cim::ExposureSpec exposure =
      cim::ExposureSpec::load_json_file((dir / "exposure.json").string(), g.num_nodes());
  const cim::OutcomeModel model =
      cim::OutcomeModel::load_json_file((dir / "model.json").string());
  const cim::SetObjective obj = cim::plugin_objective(g, exposure, model, 200, 4);

  const cim::SubmodularityCertificate cert = cim::certify_submodular(g.num_nodes(), obj);
  REQUIRE(cert.monotone);
  REQUIRE(cert.submodular);

  const cim::ExhaustiveResult best = cim::exhaustive_opt(g.num_nodes(), 2, obj);
  CHECK(doc.at("members").get<std::vector<int>>() == best.members);
  CHECK(doc.at("value").get<double>() == doctest::Approx(best.value).epsilon(1e-12));
}

TEST_CASE("evaluate reports mc, plugin, exact, and an interval containing the exact value") {
  const fs::path dir = scratch("evaluate");
  spit(dir / "config.json", base_config(47).dump());
  REQUIRE(run_cli("gen " + q(dir / "config.json") + " -o " + q(dir)).exit_code == 0);

  const fs::path out = dir / "eval.json";
  const CmdResult res = run_cli("evaluate " + q(dir / "graph.edges") + " " +
                                q(dir / "exposure.json") + " " + q(dir / "model.json") +
                                " --seeds 0,3 --R 4000 --seed 2 --data " +
                                q(dir / "logged.jsonl") + " -o " + q(out));
  REQUIRE(res.exit_code == 0);
  const json doc = json::parse(slurp(out));
  REQUIRE(doc.contains("exact"));
  const double exact = doc.at("exact").get<double>();
  const double mc = doc.at("mc").at("value").get<double>();
  const double se = doc.at("mc").at("std_error").get<double>();
  CHECK(std::abs(mc - exact) <= 5.0 * se + 1e-12);
  CHECK(doc.at("interval").at("lo").get<double>() <= exact + 1e-12);
  CHECK(exact <= doc.at("interval").at("hi").get<double>() + 1e-12);
  CHECK(doc.at("ips").at("records").get<int>() == 120);
}

TEST_CASE("verify passes its suites and fails an injected shape violation with a reproducer") {
  const fs::path dir = scratch("verify");
  const CmdResult jensen =
      run_cli("verify --suite jensen --instances 200 --seed 3 -o " + q(dir));
  CHECK(jensen.exit_code == 0);
  CHECK(jensen.out.find("jensen: PASS (200 instances)") != std::string::npos);

  json bad;
  bad["format_version"] = "1.0";
  bad["stratum"] = {0, 0};
  bad["alpha"] = {0.1};
  bad["f_pos"] = json::array({{0.0, 0.1, 0.5}});  // slope increases: not concave
  bad["f_neg"] = json::array({{0.0}});
  spit(dir / "bad_model.json", bad.dump());
  const CmdResult fixture =
      run_cli("verify --fixture " + q(dir / "bad_model.json") + " -o " + q(dir));
  CHECK(fixture.exit_code == 1);
  CHECK(fs::exists(dir / "verify_fixture_reproducer.json"));
  const json rep = json::parse(slurp(dir / "verify_fixture_reproducer.json"));
  CHECK(rep.at("suite") == "fixture");
  CHECK(rep.at("why").get<std::string>().find("slope") != std::string::npos);

  CHECK(run_cli("check-shape " + q(dir / "bad_model.json") + " -o " + q(dir)).exit_code == 1);
}

TEST_CASE("sweep output is byte-identical across thread counts") {
  const fs::path dir = scratch("sweep");
  spit(dir / "config.json", base_config(13).dump());
  REQUIRE(run_cli("sweep " + q(dir / "config.json") +
                  " --axis sigma --values 0,0.2 --reps 2 --threads 1 -o " + q(dir / "t1"))
              .exit_code == 0);
  REQUIRE(run_cli("sweep " + q(dir / "config.json") +
                  " --axis sigma --values 0,0.2 --reps 2 --threads 4 -o " + q(dir / "t4"))
              .exit_code == 0);
  const std::string csv = slurp(dir / "t1" / "sweep.csv");
  CHECK(csv == slurp(dir / "t4" / "sweep.csv"));
  CHECK(csv.rfind("axis,value,repetition,method,welfare,oracle,gap,fit_error\n", 0) == 0);
}

TEST_CASE("unknown flags and absent subcommands exit with the usage code") {
  CHECK(run_cli("").exit_code == 2);
  CHECK(run_cli("select").exit_code == 2);
  CHECK(run_cli("gen no_such_config.json -o nowhere").exit_code == 2);
  CHECK(run_cli("verify --suite nonsense").exit_code == 2);
}
