#include <CLI11.hpp>
#include <fmt/format.h>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "equistop/builtins.hpp"
#include "equistop/chain_equilibrium.hpp"
#include "equistop/config.hpp"
#include "equistop/errors.hpp"
#include "equistop/forward_iteration.hpp"
#include "equistop/monte_carlo.hpp"
#include "equistop/one_sided.hpp"
#include "equistop/parallel.hpp"
#include "equistop/repro.hpp"
#include "equistop/stopping_solver.hpp"
#include "equistop/vi_verifier.hpp"

namespace fs = std::filesystem;
using namespace equistop;

namespace {

void Emit(const Json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    WriteJson(out, j);
  }
}

Json ReportJson(const EquilibriumReport& rep) {
  Json j;
  j["pass"] = rep.passed();
  j["cond1_violation"] = rep.cond1_violation;
  j["cond2_violation"] = rep.cond2_violation;
  j["tolerance"] = rep.tolerance;
  j["unresolved"] = rep.unresolved;
  j["J"] = rep.J;
  return j;
}

Json SetJson(const ChainModel& chain, const StoppingSet& S) {
  Json a = Json::array();
  for (std::size_t i : S.Indices()) a.push_back(chain.state(i));
  return a;
}

StoppingSet ParseIndexList(const std::string& list, std::size_t n) {
  StoppingSet S(n);
  std::stringstream ss(list);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const std::size_t i = std::stoul(tok);
    if (i >= n) throw ConfigError(fmt::format("state index {} out of range", i));
    S.set(i);
  }
  return S;
}

int RunChain(const std::string& config, bool enumerate,
             const std::vector<double>& mixed, const std::string& set,
             double tol, const std::string& out) {
  const ProblemConfig cfg = LoadProblem(config);
  const ChainModel chain = cfg.BuildChain();
  if (tol < 0.0) tol = DefaultEquilibriumTolerance(chain);
  Json report;
  report["tolerance"] = tol;
  bool pass = true;
  if (!set.empty()) {
    StoppingSet S = ParseIndexList(set, chain.size());
    S = S.Union(StoppingSet::Absorbing(chain));
    const EquilibriumReport rep = CheckPureEquilibrium(chain, S, cfg.reward, tol);
    report["check"] = ReportJson(rep);
    report["check"]["set"] = SetJson(chain, S);
    pass = pass && rep.passed();
  }
  if (enumerate) {
    Json list = Json::array();
    for (const StoppingSet& S : EnumeratePureEquilibria(chain, cfg.reward, tol)) {
      Json j = ReportJson(CheckPureEquilibrium(chain, S, cfg.reward, tol));
      j["set"] = SetJson(chain, S);
      list.push_back(j);
    }
    report["pure_equilibria"] = list;
  }
  if (!mixed.empty()) {
    const MixedProfile prof{mixed[0], mixed[1]};
    const MixedCheck mc = VerifyMixedEquilibrium(prof);
    report["mixed"] = {{"p", prof.p},
                       {"q", prof.q},
                       {"pass", mc.pass},
                       {"max_gain", mc.max_gain},
                       {"gain_a", mc.gain_a},
                       {"gain_b", mc.gain_b},
                       {"value_a", MixedValue(prof, MixedAgent::kA)},
                       {"value_b", MixedValue(prof, MixedAgent::kB)}};
    pass = pass && mc.pass;
  }
  Emit(report, out);
  return pass ? 0 : 1;
}

int RunSolve(const std::string& config, double agent,
             const std::string& constraint, const std::string& out) {
  const ProblemConfig cfg = LoadProblem(config);
  const ChainModel chain = cfg.BuildChain();
  const StoppingSet C = constraint.empty() ? StoppingSet(chain.size())
                                           : ReadMask(constraint, chain.size());
  const StandardSolution sol = SolveStandard(chain, cfg.reward, agent, C);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    rows.push_back({chain.state(i), sol.value[i], sol.stopset.contains(i) ? 1.0 : 0.0});
  }
  WriteCsv(out.empty() ? "/dev/stdout" : out, {"x", "value", "stop"}, rows);
  return 0;
}

int RunIterate(const std::string& config, int max_iters, const std::string& out) {
  const ProblemConfig cfg = LoadProblem(config);
  const ChainModel chain = cfg.BuildChain();
  ForwardOptions opts;
  opts.max_iters = max_iters;
  const ForwardResult fr = ForwardIterate(chain, cfg.reward, opts);
  const fs::path dir = out.empty() ? fs::path(".") : fs::path(out);
  fs::create_directories(dir);
  std::vector<std::vector<double>> rows;
  for (const IterationRecord& rec : fr.history) {
    for (auto [lo, hi] : rec.intervals) {
      rows.push_back({static_cast<double>(rec.n), lo, hi});
    }
  }
  WriteCsv(dir / "iterations.csv", {"n", "lo", "hi"}, rows);
  Json report = ReportJson(fr.report);
  report.erase("J");
  report["iterations"] = fr.iterations;
  report["terminated"] = fr.terminated;
  report["certification"] = fr.certification == Certification::kTerminated ? "terminated"
                            : fr.certification == Certification::kProxy   ? "proxy"
                                                                           : "failed";
  report["failed_assumption"] = fr.failed_assumption;
  report["detail"] = fr.detail;
  report["a3_violation"] = fr.a3_violation;
  report["s_hat"] = SetJson(chain, fr.s_hat);
  Json ivs = Json::array();
  for (auto [lo, hi] : fr.history.empty() ? std::vector<std::pair<double, double>>{}
                                          : fr.history.back().intervals) {
    ivs.push_back({lo, hi});
  }
  report["s_hat_intervals"] = ivs;
  WriteJson(dir / "report.json", report);
  fmt::print("{} iterations, {}; report in {}\n", fr.iterations,
             report["certification"].get<std::string>(), (dir / "report.json").string());
  return fr.certified() ? 0 : 1;
}

int RunOneSided(const std::string& config, const std::vector<double>& bracket,
                const std::vector<double>& xbracket, const std::string& out) {
  const ProblemConfig cfg = LoadProblem(config);
  if (!cfg.representation) {
    throw ConfigError("one-sided needs a state_dependent_strike reward with r > 0");
  }
  const MaxRepresentation& rep = *cfg.representation;
  const Interval yb{bracket[0], bracket[1]};
  std::optional<Interval> xb;
  if (xbracket.size() == 2) xb = Interval{xbracket[0], xbracket[1]};
  const double x_star = EquilibriumThreshold(rep, yb, xb);
  const Interval xrange = xb.value_or(Interval{yb.lo - (yb.hi - yb.lo),
                                               yb.hi + (yb.hi - yb.lo)});
  const fs::path dir = out.empty() ? fs::path(".") : fs::path(out);
  fs::create_directories(dir);
  std::vector<std::vector<double>> rows;
  double a3 = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double y = yb.lo + (yb.hi - yb.lo) * k / 100.0;
    const double xy = ThresholdForAgent(rep, y, xrange);
    const double v = OneSidedValue(rep, y, y, x_star).value;
    const double F = cfg.reward.F(y, y);
    if (y < x_star) a3 = std::max(a3, F - v);
    rows.push_back({y, xy, v, F});
  }
  const fs::path table = dir / "one_sided_values.csv";
  WriteCsv(table, {"y", "x_star_y", "value_diag", "F_diag"}, rows);
  Json report;
  report["x_star"] = x_star;
  report["checks"] = {{"fixed_point_residual",
                       std::abs(ThresholdForAgent(rep, x_star, xrange) - x_star)},
                      {"max_F_minus_value_below_x_star", a3}};
  report["value_table"] = table.string();
  Emit(report, "");
  return a3 <= 1e-9 ? 0 : 1;
}

int RunVerifyVi(const std::string& config, const std::vector<double>& grid,
                double h_fd, const std::string& out) {
  const ProblemConfig cfg = LoadProblem(config);
  const CandidateSolution cand = CandidateFromConfig(cfg);
  const Grid g(grid[0], grid[1], static_cast<std::size_t>(grid[2]));
  ViTolerances tols;
  tols.h_fd = h_fd;
  const ViReport rep = CheckVi(cand, g, tols);
  Json j;
  j["candidate"] = cand.name;
  j["subharmonic"] = rep.subharmonic;
  j["harmonic"] = rep.harmonic;
  j["obstacle"] = rep.obstacle;
  j["boundary_limit"] = rep.boundary_limit;
  j["smooth_fit_gap"] = rep.smooth_fit_gap;
  j["continuity_gap"] = rep.continuity_gap;
  j["max_abs_f"] = rep.max_abs_f;
  j["sigma_positive"] = rep.sigma_positive;
  j["boundary"] = rep.boundary;
  j["boundary_count"] = rep.boundary.size();
  j["c_nodes"] = rep.c_nodes;
  j["pass"] = rep.pass;
  Emit(j, out);
  return rep.pass ? 0 : 1;
}

int RunMcCheck(const std::string& config, const std::vector<double>& grid,
               const McOptions& opts, const std::string& out) {
  const ProblemConfig cfg = LoadProblem(config);
  StopRegion region;
  DiffusionModel model;
  RewardSpec reward = cfg.reward;
  std::function<double(double, double)> reference;
  const bool has_candidate = cfg.c || cfg.habit;
  if (has_candidate) {
    const CandidateSolution cand = CandidateFromConfig(cfg);
    const Grid g = cfg.grid.value_or(Grid(grid[0], grid[1], static_cast<std::size_t>(grid[2])));
    model = cfg.model.value_or(cand.model);
    region = RegionFromContinuationSet(ExtractContinuationSet(cand, g), g, model);
    reference = cand.f;
  } else {
    if (!cfg.model || !cfg.grid || !cfg.raw.contains("stop_set")) {
      throw ConfigError("mc-check needs a closed-form candidate or model, grid "
                        "and stop_set (node indices)");
    }
    model = *cfg.model;
    StoppingSet S(cfg.grid->size());
    for (std::size_t i : cfg.raw.at("stop_set").get<std::vector<std::size_t>>()) {
      S.set(i);
    }
    region = RegionFromStoppingSet(*cfg.grid, S, model);
  }
  const McReport rep = McEquilibriumCheck(region, model, reward, opts, reference);
  Json j;
  j["paths"] = opts.paths;
  j["seed"] = opts.seed;
  Json pts = Json::array();
  for (const McPoint& p : rep.points) {
    Json pj;
    pj["x0"] = p.x0;
    pj["J"] = p.J;
    pj["J_se"] = p.J_se;
    pj["F_diag"] = p.F_diag;
    if (!std::isnan(p.reference)) pj["reference"] = p.reference;
    pj["cond1_pass"] = p.cond1_pass;
    pj["cond2_pass"] = p.cond2_pass;
    pj["reference_pass"] = p.reference_pass;
    pj["truncated_paths"] = p.truncated_paths;
    Json hs = Json::array();
    for (const McRatio& r : p.per_h) {
      hs.push_back({{"h", r.h},
                    {"numerator", r.numerator},
                    {"numerator_se", r.numerator_se},
                    {"mean_tau", r.mean_tau},
                    {"ratio", r.ratio},
                    {"ratio_se", r.ratio_se}});
    }
    pj["per_h"] = hs;
    pts.push_back(pj);
  }
  j["points"] = pts;
  j["pass"] = rep.pass;
  Emit(j, out);
  return rep.pass ? 0 : 1;
}

std::vector<double> ParseList(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) v.push_back(std::stod(tok));
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equilibrium stopping for time-inconsistent Markovian stopping problems"};
  app.set_version_flag("--version", std::string(EQUISTOP_VERSION));
  app.require_subcommand(1);

  std::string config, out;

  auto* chain = app.add_subcommand("chain", "Pure and mixed equilibria on a finite chain");
  bool enumerate = false;
  std::vector<double> mixed;
  std::string set;
  double tol = -1.0;
  chain->add_option("--config", config, "chain JSON")->required();
  chain->add_flag("--enumerate", enumerate, "list all pure equilibria");
  chain->add_option("--mixed", mixed, "check the mixed profile p q")->expected(2);
  chain->add_option("--set", set, "check the set given as state indices, e.g. 0,2,3");
  chain->add_option("--tol", tol, "equilibrium tolerance");
  chain->add_option("--out", out, "output JSON (default stdout)");

  auto* solve = app.add_subcommand("solve", "Standard optimal stopping for one agent");
  double agent = 0.0;
  std::string constraint;
  solve->add_option("--config", config)->required();
  solve->add_option("--agent", agent)->required();
  solve->add_option("--constraint", constraint, "CSV mask of forced stopping nodes");
  solve->add_option("--out", out, "output CSV (default stdout)");

  auto* iterate = app.add_subcommand("iterate", "Forward iteration of stopping sets");
  int max_iters = 200;
  iterate->add_option("--config", config)->required();
  iterate->add_option("--max-iters", max_iters);
  iterate->add_option("--out", out, "output directory");

  auto* one = app.add_subcommand("one-sided", "Threshold equilibrium for one-sided problems");
  std::vector<double> bracket, xbracket;
  one->add_option("--config", config)->required();
  one->add_option("--bracket", bracket, "agent bracket lo hi")->expected(2)->required();
  one->add_option("--x-bracket", xbracket, "threshold bracket lo hi")->expected(2);
  one->add_option("--out", out, "directory for the value table");

  auto* vi = app.add_subcommand("verify-vi", "Variational inequality checks for a candidate");
  std::vector<double> grid;
  double h_fd = 0.0;
  vi->add_option("--config", config)->required();
  vi->add_option("--grid", grid, "lo hi n")->expected(3)->required();
  vi->add_option("--h-fd", h_fd, "finite-difference step (default h/4)");
  vi->add_option("--out", out);

  auto* mc = app.add_subcommand("mc-check", "Monte Carlo test of the equilibrium conditions");
  McOptions mc_opts;
  std::string x0s, hs = "0.2,0.1,0.05";
  std::vector<double> mc_grid{-2.0, 2.0, 401};
  mc->add_option("--config", config)->required();
  mc->add_option("--x0", x0s, "comma-separated start points")->required();
  // "--h" takes the short help name, so help is long-only here.
  mc->set_help_flag("--help", "Print this help message and exit");
  mc->add_option("--h", hs, "comma-separated ball radii");
  mc->add_option("--paths", mc_opts.paths);
  mc->add_option("--seed", mc_opts.seed);
  mc->add_option("--dt", mc_opts.dt_sim, "base time step (default min(h)^2/100)");
  mc->add_option("--grid", mc_grid, "grid for the boundary search: lo hi n")->expected(3);
  mc->add_option("--out", out);

  auto* repro = app.add_subcommand("repro", "Reproduce a worked example");
  std::string target;
  ReproOptions ropts;
  std::string rout = ".";
  repro->add_option("target", target)->required()->check(CLI::IsMember(ReproTargets()));
  repro->add_option("--out", rout, "output directory");
  repro->add_option("--seed", ropts.seed);
  repro->add_option("--fig1-nodes", ropts.fig1_nodes, "grid size for fig1 on [-4, 4]");

  CLI11_PARSE(app, argc, argv);
  ConfigureThreadsFromEnv();
  try {
    if (*chain) return RunChain(config, enumerate, mixed, set, tol, out);
    if (*solve) return RunSolve(config, agent, constraint, out);
    if (*iterate) return RunIterate(config, max_iters, out);
    if (*one) return RunOneSided(config, bracket, xbracket, out);
    if (*vi) return RunVerifyVi(config, grid, h_fd, out);
    if (*mc) {
      mc_opts.x0 = ParseList(x0s);
      mc_opts.h_list = ParseList(hs);
      return RunMcCheck(config, mc_grid, mc_opts, out);
    }
    if (*repro) {
      ropts.out_dir = rout;
      return RunRepro(target, ropts, std::cout).pass ? 0 : 1;
    }
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  }
  return 0;
}
