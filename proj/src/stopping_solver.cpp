#include "equistop/stopping_solver.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "equistop/errors.hpp"
#include "equistop/linear_solvers.hpp"
#include "equistop/parallel.hpp"

namespace equistop {

namespace {

// Thrown when the envelope construction does not apply; caller falls back.
struct EnvelopeUnavailable {};

// Nodes whose value is fixed in advance: the constraint (V = F) and
// absorbing states (V = F if r = 0, else max(F, 0)).
struct Fixed {
  std::vector<std::uint8_t> known;
  std::vector<double> value;
};

Fixed FixedNodes(const ChainModel& chain, std::span<const double> F, double r,
                 const StoppingSet& constraint) {
  const std::size_t n = chain.size();
  Fixed fx{std::vector<std::uint8_t>(n, 0), std::vector<double>(n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    if (constraint.contains(i)) {
      fx.known[i] = 1;
      fx.value[i] = F[i];
    } else if (chain.absorbing(i)) {
      fx.known[i] = 1;
      fx.value[i] = r == 0.0 ? F[i] : std::max(F[i], 0.0);
    }
  }
  return fx;
}

// Least concave majorant of the points (s[i], g[i]) evaluated at every s[i];
// s must be strictly increasing.
void UpperEnvelope(std::span<const double> s, std::span<const double> g,
                   std::span<double> out) {
  const std::size_t m = s.size();
  std::vector<std::size_t> hull;
  hull.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    while (hull.size() >= 2) {
      const std::size_t o = hull[hull.size() - 2];
      const std::size_t a = hull.back();
      const double cross =
          (s[a] - s[o]) * (g[i] - g[o]) - (g[a] - g[o]) * (s[i] - s[o]);
      if (cross >= 0.0) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(i);
  }
  std::size_t k = 0;
  for (std::size_t i = 0; i < m; ++i) {
    while (k + 1 < hull.size() && hull[k + 1] <= i) ++k;
    const std::size_t a = hull[k];
    if (a == i) {
      out[i] = g[i];
      continue;
    }
    const std::size_t b = hull[k + 1];
    const double t = (s[i] - s[a]) / (s[b] - s[a]);
    out[i] = std::max(g[i], g[a] + t * (g[b] - g[a]));
  }
}

struct Local {
  std::vector<double> down, stay, up, beta, F;
  std::size_t size() const { return F.size(); }
};

Local Slice(const ChainModel& chain, std::span<const double> F, double r,
            std::size_t lo, std::size_t hi, bool mirrored) {
  Local seg;
  const std::size_t m = hi - lo + 1;
  for (auto* v : {&seg.down, &seg.stay, &seg.up, &seg.beta, &seg.F}) {
    v->resize(m);
  }
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t i = mirrored ? hi - k : lo + k;
    seg.down[k] = mirrored ? chain.up(i) : chain.down(i);
    seg.up[k] = mirrored ? chain.down(i) : chain.up(i);
    seg.stay[k] = chain.stay(i);
    seg.beta[k] = chain.Discount(i, r);
    seg.F[k] = F[i];
  }
  return seg;
}

void RequireFinite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) throw EnvelopeUnavailable{};
  }
}

// Both end values of `seg.F` are the fixed boundary values.
void EnvelopeBetween(const Local& seg, std::span<double> out) {
  const std::size_t m = seg.size();
  out[0] = seg.F[0];
  out[m - 1] = seg.F[m - 1];
  if (m <= 2) return;
  for (std::size_t i = 1; i + 1 < m; ++i) {
    if (!(seg.up[i] > 0.0) || !(seg.down[i] > 0.0)) throw EnvelopeUnavailable{};
  }
  // psi vanishes at the left end, phi is flat at the right end; both solve
  // u = beta (down u[-1] + stay u + up u[+1]) on the interior.
  std::vector<double> psi(m), phi(m), s(m), g(m), env(m);
  psi[0] = 0.0;
  psi[1] = 1.0;
  for (std::size_t i = 1; i + 1 < m; ++i) {
    psi[i + 1] =
        (psi[i] * (1.0 / seg.beta[i] - seg.stay[i]) - seg.down[i] * psi[i - 1]) /
        seg.up[i];
  }
  phi[m - 1] = 1.0;
  phi[m - 2] = 1.0;
  for (std::size_t i = m - 2; i >= 1; --i) {
    phi[i - 1] =
        (phi[i] * (1.0 / seg.beta[i] - seg.stay[i]) - seg.up[i] * phi[i + 1]) /
        seg.down[i];
  }
  for (std::size_t i = 0; i < m; ++i) {
    s[i] = psi[i] / phi[i];
    g[i] = seg.F[i] / phi[i];
  }
  RequireFinite(s);
  RequireFinite(g);
  for (std::size_t i = 1; i < m; ++i) {
    if (!(s[i] > s[i - 1])) throw EnvelopeUnavailable{};
  }
  UpperEnvelope(s, g, env);
  for (std::size_t i = 1; i + 1 < m; ++i) out[i] = env[i] * phi[i];
}

// Reflecting end at local index 0, fixed value seg.F[m-1] at the other end.
void EnvelopeReflecting(const Local& seg, std::span<double> out) {
  const std::size_t m = seg.size();
  out[m - 1] = seg.F[m - 1];
  if (m == 1) return;
  if (!(seg.up[0] > 0.0)) throw EnvelopeUnavailable{};
  for (std::size_t i = 1; i + 1 < m; ++i) {
    if (!(seg.up[i] > 0.0) || !(seg.down[i] > 0.0)) throw EnvelopeUnavailable{};
  }
  // psi satisfies the reflecting row at 0; chi vanishes at 0.
  std::vector<double> psi(m), chi(m), s(m), g(m), env(m);
  psi[0] = 1.0;
  psi[1] = (1.0 / seg.beta[0] - seg.stay[0]) / seg.up[0];
  chi[0] = 0.0;
  chi[1] = 1.0;
  for (std::size_t i = 1; i + 1 < m; ++i) {
    const double w = 1.0 / seg.beta[i] - seg.stay[i];
    psi[i + 1] = (psi[i] * w - seg.down[i] * psi[i - 1]) / seg.up[i];
    chi[i + 1] = (chi[i] * w - seg.down[i] * chi[i - 1]) / seg.up[i];
  }
  for (std::size_t i = 0; i < m; ++i) {
    s[i] = chi[i] / psi[i];
    g[i] = seg.F[i] / psi[i];
  }
  RequireFinite(s);
  RequireFinite(g);
  for (std::size_t i = 1; i < m; ++i) {
    if (!(s[i] > s[i - 1])) throw EnvelopeUnavailable{};
  }
  std::size_t top = 0;
  for (std::size_t i = 1; i < m; ++i) {
    if (g[i] >= g[top]) top = i;
  }
  // Smallest concave non-increasing majorant: flat up to the last maximum.
  for (std::size_t i = 0; i <= top; ++i) env[i] = g[top];
  UpperEnvelope(std::span<const double>(s).subspan(top),
                std::span<const double>(g).subspan(top),
                std::span<double>(env).subspan(top));
  for (std::size_t i = 0; i + 1 < m; ++i) out[i] = env[i] * psi[i];
}

GridFunction EnvelopeValue(const ChainModel& chain, std::span<const double> F,
                           double r, const Fixed& fx) {
  const std::size_t n = chain.size();
  std::vector<std::uint8_t> known = fx.known;
  std::vector<double> kval = fx.value;
  std::vector<std::size_t> anchors;
  for (std::size_t i = 0; i < n; ++i) {
    if (known[i]) anchors.push_back(i);
  }
  if (anchors.empty()) {
    const auto top = static_cast<std::size_t>(
        std::max_element(F.begin(), F.end()) - F.begin());
    if (F[top] <= 0.0) return GridFunction(n, 0.0);
    known[top] = 1;
    kval[top] = F[top];
    anchors.push_back(top);
  }
  GridFunction v(n);
  std::vector<double> work(n);
  for (std::size_t a : anchors) v[a] = kval[a];
  if (anchors.front() > 0) {
    const std::size_t k = anchors.front();
    Local seg = Slice(chain, F, r, 0, k, false);
    seg.F[k] = kval[k];
    EnvelopeReflecting(seg, std::span<double>(work).first(k + 1));
    for (std::size_t i = 0; i < k; ++i) v[i] = work[i];
  }
  for (std::size_t j = 0; j + 1 < anchors.size(); ++j) {
    const std::size_t lo = anchors[j], hi = anchors[j + 1];
    if (hi - lo < 2) continue;
    Local seg = Slice(chain, F, r, lo, hi, false);
    seg.F.front() = kval[lo];
    seg.F.back() = kval[hi];
    EnvelopeBetween(seg, std::span<double>(work).first(hi - lo + 1));
    for (std::size_t i = lo + 1; i < hi; ++i) v[i] = work[i - lo];
  }
  if (anchors.back() + 1 < n) {
    // Mirror so the reflecting end sits at local index 0.
    const std::size_t k = anchors.back();
    const std::size_t m = n - k;
    Local seg = Slice(chain, F, r, k, n - 1, true);
    seg.F[m - 1] = kval[k];
    EnvelopeReflecting(seg, std::span<double>(work).first(m));
    for (std::size_t l = 0; l + 1 < m; ++l) v[n - 1 - l] = work[l];
  }
  return v;
}

struct PolicyResult {
  GridFunction value;
  long iterations = 0;
};

// Howard iteration over stop/continue at the free nodes.
PolicyResult PolicyIterate(const ChainModel& chain, std::span<const double> F,
                           double r, const Fixed& fx,
                           std::vector<std::uint8_t> stop, int max_iters) {
  const std::size_t n = chain.size();
  const double delta = 1e-13 * std::max(1.0, SupNorm(F));
  std::vector<double> g(n);
  for (long it = 1;; ++it) {
    StoppingSet S(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (fx.known[i]) {
        S.set(i);
        g[i] = fx.value[i];
      } else if (stop[i]) {
        S.set(i);
        g[i] = F[i];
      }
    }
    GridFunction v = EntryValueSolver(chain, S, r).Solve(g);
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (fx.known[i]) continue;
      const double cont = OneStepValue(chain, i, v, r);
      if (stop[i] && cont > F[i] + delta) {
        stop[i] = 0;
        changed = true;
      } else if (!stop[i] && F[i] > v[i] + delta) {
        stop[i] = 1;
        changed = true;
      }
    }
    if (!changed) return {std::move(v), it};
    if (it >= max_iters) {
      throw NoConvergence(
          fmt::format("policy iteration did not settle in {} steps", max_iters));
    }
  }
}

std::vector<std::uint8_t> StopWhereEqual(std::span<const double> v,
                                         std::span<const double> F,
                                         const Fixed& fx, double tol) {
  std::vector<std::uint8_t> stop(v.size(), 0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    stop[i] = !fx.known[i] && v[i] <= F[i] + tol;
  }
  return stop;
}

GridFunction ValueIterate(const ChainModel& chain, std::span<const double> F,
                          double r, const Fixed& fx, const SolveOptions& opts,
                          long* sweeps) {
  const std::size_t n = chain.size();
  GridFunction v(n), next(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = fx.known[i] ? fx.value[i] : F[i];
  for (long k = 1; k <= opts.max_sweeps; ++k) {
    double inc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      next[i] = fx.known[i] ? fx.value[i]
                            : std::max(F[i], OneStepValue(chain, i, v, r));
      inc = std::max(inc, std::abs(next[i] - v[i]));
    }
    v.swap(next);
    if (inc <= opts.eps_vi) {
      *sweeps = k;
      return v;
    }
  }
  throw NoConvergence(fmt::format(
      "value iteration hit {} sweeps (r = {}, {} absorbing states)",
      opts.max_sweeps, r, chain.absorbing_count()));
}

}  // namespace

double StopSetTolerance(double eps_vi, double reward_sup) {
  return 10.0 * eps_vi * std::max(1.0, reward_sup);
}

StandardSolution SolveStandard(const ChainModel& chain,
                               std::span<const double> F, double r,
                               const StoppingSet& constraint,
                               const SolveOptions& opts) {
  const std::size_t n = chain.size();
  if (F.size() != n || constraint.size() != n) {
    throw ConfigError("reward/constraint size does not match the chain");
  }
  if (!(r >= 0.0)) throw ConfigError("discount rate must be >= 0");
  const Fixed fx = FixedNodes(chain, F, r, constraint);
  const double eps_set = StopSetTolerance(opts.eps_vi, SupNorm(F));

  StandardSolution sol;
  SolveMethod method = opts.method;
  if (method == SolveMethod::kAuto) {
    method = chain.birth_death() ? SolveMethod::kEnvelope
                                 : SolveMethod::kPolicyIteration;
  }
  if (method == SolveMethod::kEnvelope && !chain.birth_death()) {
    method = SolveMethod::kPolicyIteration;
  }

  std::vector<std::uint8_t> stop;
  if (method == SolveMethod::kEnvelope) {
    try {
      const GridFunction env = EnvelopeValue(chain, F, r, fx);
      const double tie = 1e-12 * std::max(1.0, SupNorm(F));
      stop = StopWhereEqual(env, F, fx, tie);
    } catch (const EnvelopeUnavailable&) {
      method = SolveMethod::kPolicyIteration;
    }
  }
  if (method == SolveMethod::kValueIteration) {
    long sweeps = 0;
    const GridFunction v = ValueIterate(chain, F, r, fx, opts, &sweeps);
    stop = StopWhereEqual(v, F, fx, eps_set);
    sol.iterations = sweeps;
  }
  if (method == SolveMethod::kPolicyIteration) {
    stop.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) stop[i] = !fx.known[i];
  }
  PolicyResult pr =
      PolicyIterate(chain, F, r, fx, std::move(stop), opts.max_policy_iters);
  sol.value = std::move(pr.value);
  sol.iterations += pr.iterations;
  sol.method = method;

  sol.stopset = StoppingSet(n);
  double res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double target = fx.value[i];
    if (!fx.known[i]) target = std::max(F[i], OneStepValue(chain, i, sol.value, r));
    res = std::max(res, std::abs(sol.value[i] - target));
    if (sol.value[i] <= F[i] + eps_set) sol.stopset.set(i);
  }
  sol.residual = res;
  return sol;
}

StandardSolution SolveStandard(const ChainModel& chain,
                               const RewardSpec& reward, double agent,
                               const StoppingSet& constraint,
                               const SolveOptions& opts) {
  const GridFunction F = RewardColumn(chain, reward, agent);
  return SolveStandard(chain, F, reward.r, constraint, opts);
}

bool ValueLowerBoundCheck(std::span<const double> value,
                          const ChainModel& chain, const RewardSpec& reward,
                          double agent) {
  for (std::size_t i = 0; i < chain.size(); ++i) {
    if (value[i] < reward.F(chain.state(i), agent) - 1e-10) return false;
  }
  return true;
}

namespace {

double SolveAgent(const ChainModel& chain, const RewardSpec& reward,
                  const StoppingSet& constraint, const SolveOptions& opts,
                  std::size_t j, bool compare, GridFunction2D& values) {
  const StandardSolution sol =
      SolveStandard(chain, reward, chain.state(j), constraint, opts);
  auto col = values.Column(j);
  double inc = 0.0;
  for (std::size_t i = 0; i < col.size(); ++i) {
    if (compare) inc = std::max(inc, sol.value[i] - col[i]);
    col[i] = sol.value[i];
  }
  return inc;
}

}  // namespace

double SolveAllAgents(const ChainModel& chain, const RewardSpec& reward,
                      const StoppingSet& constraint, GridFunction2D& values,
                      const SolveOptions& opts) {
  const std::size_t n = chain.size();
  const bool compare = values.nx() == n && values.ny() == n;
  if (!compare) values = GridFunction2D(n, n);
  std::vector<double> inc(n, 0.0);
  ExceptionSlot errors;
#pragma omp parallel for schedule(dynamic, 8)
  for (std::size_t j = 0; j < n; ++j) {
    try {
      inc[j] = SolveAgent(chain, reward, constraint, opts, j, compare, values);
    } catch (...) {
      errors.Capture(j);
    }
  }
  errors.Rethrow();
  return *std::max_element(inc.begin(), inc.end());
}

double SolveAllAgentsSerial(const ChainModel& chain, const RewardSpec& reward,
                            const StoppingSet& constraint,
                            GridFunction2D& values, const SolveOptions& opts) {
  const std::size_t n = chain.size();
  const bool compare = values.nx() == n && values.ny() == n;
  if (!compare) values = GridFunction2D(n, n);
  double inc = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    inc = std::max(inc,
                   SolveAgent(chain, reward, constraint, opts, j, compare, values));
  }
  return inc;
}

}  // namespace equistop
