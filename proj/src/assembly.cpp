#include "mpfem/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include "parallel.hpp"

namespace mpfem {

namespace {

void check_inputs(const ControlProblem& problem, const BasisFamily& test,
                  const BasisFamily& primal, double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw std::invalid_argument("time step must be positive and finite, got " +
                                std::to_string(delta));
  }
  if (test.size() == 0 || primal.size() == 0) {
    throw std::invalid_argument("basis families must be non-empty");
  }
  if (test.dim() != problem.n || primal.dim() != problem.n) {
    throw std::invalid_argument("basis dimension does not match the state dimension " +
                                std::to_string(problem.n));
  }
  if (problem.X.dim() != problem.n || problem.U.dim() != problem.m) {
    throw std::invalid_argument("problem boxes do not match the declared dimensions");
  }
}

void check_pieces(const ControlProblem& problem) {
  if (problem.pieces.empty()) {
    throw std::invalid_argument("problem '" + problem.name + "' has no concave pieces");
  }
  for (const auto& piece : problem.pieces) {
    if (piece.state_region.dim() != problem.n || piece.controls.dim() != problem.m) {
      throw std::invalid_argument("concave piece region dimensions do not match the problem");
    }
    if (!piece.dynamics || !piece.lagrangian) {
      throw std::invalid_argument("concave piece is missing dynamics or lagrangian");
    }
  }
}

// Mutable slots of one worker thread; the entry loop retargets z/w per
// entry while the objective lambdas hold a stable pointer to the slot.
struct EntryWorkspace {
  const BasisFunction* z = nullptr;
  const BasisFunction* w = nullptr;
  const Box* domain = nullptr;  // set when the problem is state constrained
  std::vector<double> f, adv, gw, gz, jx, ju, glx, glu, xpin;
  std::vector<std::uint8_t> clip;
  std::vector<std::vector<double>> warm;

  EntryWorkspace(std::size_t n, std::size_t m)
      : f(n), adv(n), gw(n), gz(n), jx(n), ju(m), glx(n), glu(m), xpin(n), clip(n),
        warm(1) {
    warm[0].resize(n + m);
  }

  // Clamp the advected point to the domain, remembering which coordinates
  // were clipped; the primal gradient is zero across a clipped coordinate.
  void clamp_advected() {
    if (domain == nullptr) return;
    for (std::size_t k = 0; k < adv.size(); ++k) {
      clip[k] = 0;
      if (adv[k] < domain->lower[k]) {
        adv[k] = domain->lower[k];
        clip[k] = 1;
      } else if (adv[k] > domain->upper[k]) {
        adv[k] = domain->upper[k];
        clip[k] = 1;
      }
    }
  }

  void mask_clipped_gradient() {
    if (domain == nullptr) return;
    for (std::size_t k = 0; k < gw.size(); ++k) {
      if (clip[k]) gw[k] = 0.0;
    }
  }
};

// Prune map from the mass kernel: entry (j,i) survives when its mass entry
// is within `threshold` of the row maximum.
std::vector<std::uint8_t> prune_map(const MaxPlusMatrix& mass, double threshold,
                                    std::size_t& pruned) {
  const std::size_t q = mass.rows();
  const std::size_t p = mass.cols();
  std::vector<std::uint8_t> keep(q * p, 1);
  pruned = 0;
  for (std::size_t j = 0; j < q; ++j) {
    double row_max = neg_inf;
    for (std::size_t i = 0; i < p; ++i) row_max = std::max(row_max, mass(j, i));
    for (std::size_t i = 0; i < p; ++i) {
      if (mass(j, i) < row_max - threshold) {
        keep[j * p + i] = 0;
        ++pruned;
      }
    }
  }
  return keep;
}

void finalize_diagnostics(AssemblyDiagnostics& diag, double delta,
                          const SmoothnessData* smoothness) {
  diag.total_iterations = 0;
  diag.max_spread = 0.0;
  for (std::size_t e = 0; e < diag.iterations.size(); ++e) {
    diag.total_iterations += diag.iterations[e];
    diag.max_spread = std::max(diag.max_spread, static_cast<double>(diag.spread[e]));
  }
  if (smoothness != nullptr) {
    diag.certified_threshold = delta0(*smoothness);
    diag.certified = delta <= diag.certified_threshold;
  } else {
    diag.certified_threshold = std::numeric_limits<double>::quiet_NaN();
    diag.certified = false;
  }
}

}  // namespace

MaxPlusMatrix assemble_mass(const BasisFamily& test, const BasisFamily& primal, const Box& X) {
  if (test.size() == 0 || primal.size() == 0) {
    throw std::invalid_argument("basis families must be non-empty");
  }
  if (test.dim() != X.dim() || primal.dim() != X.dim()) {
    throw std::invalid_argument("basis dimension does not match the domain");
  }
  const std::size_t q = test.size();
  const std::size_t p = primal.size();
  MaxPlusMatrix A(q, p);
  for (std::size_t j = 0; j < q; ++j) {
    for (std::size_t i = 0; i < p; ++i) {
      A(j, i) = scalar_product(test.functions[j], primal.functions[i], X).value;
    }
  }
  return A;
}

MaxPlusMatrix assemble_stiffness_direct(const ControlProblem& problem, const BasisFamily& test,
                                        const BasisFamily& primal, double delta,
                                        const AssemblyOptions& options,
                                        AssemblyDiagnostics* diagnostics) {
  check_inputs(problem, test, primal, delta);
  check_pieces(problem);

  const std::size_t n = problem.n;
  const std::size_t m = problem.m;
  const std::size_t q = test.size();
  const std::size_t p = primal.size();
  const std::size_t entries = q * p;
  const int threads = std::max(1, options.threads);

  std::vector<std::uint8_t> keep;
  AssemblyDiagnostics diag;
  if (std::isfinite(options.pruning_threshold)) {
    const MaxPlusMatrix mass = assemble_mass(test, primal, problem.X);
    keep = prune_map(mass, options.pruning_threshold, diag.pruned_entries);
  }
  diag.iterations.assign(entries, 0);
  diag.spread.assign(entries, 0.0f);
  diag.converged.assign(entries, 1);

  // Per-worker objective specs, one per concave piece; the lambdas read the
  // element pointers through the worker's slot so no per-entry allocation
  // happens for the spec itself.
  std::vector<EntryWorkspace> workspaces;
  workspaces.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    workspaces.emplace_back(n, m);
    if (problem.state_constrained) workspaces.back().domain = &problem.X;
  }

  const std::size_t pieces = problem.pieces.size();
  std::vector<std::vector<ObjectiveSpec>> specs(static_cast<std::size_t>(threads));
  std::vector<std::vector<ObjectiveSpec>> pinned_specs(static_cast<std::size_t>(threads));
  std::vector<std::vector<double>> control_centers(pieces);
  for (std::size_t pi = 0; pi < pieces; ++pi) {
    control_centers[pi] = problem.pieces[pi].controls.center();
  }
  for (int t = 0; t < threads; ++t) {
    auto& list = specs[static_cast<std::size_t>(t)];
    auto& pinned_list = pinned_specs[static_cast<std::size_t>(t)];
    list.resize(pieces);
    pinned_list.resize(pieces);
    EntryWorkspace* ws = &workspaces[static_cast<std::size_t>(t)];
    for (std::size_t pi = 0; pi < pieces; ++pi) {
      const ConcavePiece* piece = &problem.pieces[pi];
      ObjectiveSpec& spec = list[pi];
      spec.dim = n + m;
      spec.box = Box::product(piece->state_region, piece->controls);
      spec.value = [ws, piece, n, delta](std::span<const double> y) {
        const auto x = y.first(n);
        const auto u = y.subspan(n);
        piece->dynamics(x, u, ws->f);
        for (std::size_t k = 0; k < n; ++k) ws->adv[k] = x[k] + delta * ws->f[k];
        ws->clamp_advected();
        return ws->z->evaluate(x) + ws->w->evaluate(ws->adv) +
               delta * piece->lagrangian(x, u);
      };
      if (piece->has_gradients()) {
        spec.gradient = [ws, piece, n, m, delta](std::span<const double> y,
                                                 std::span<double> out) {
          const auto x = y.first(n);
          const auto u = y.subspan(n);
          piece->dynamics(x, u, ws->f);
          for (std::size_t k = 0; k < n; ++k) ws->adv[k] = x[k] + delta * ws->f[k];
          ws->clamp_advected();
          ws->w->gradient(ws->adv, ws->gw);
          ws->mask_clipped_gradient();
          ws->z->gradient(x, ws->gz);
          piece->dynamics_jtx(x, u, ws->gw, ws->jx);
          piece->dynamics_jtu(x, u, ws->gw, ws->ju);
          piece->lagrangian_gradient(x, u, ws->glx, ws->glu);
          for (std::size_t k = 0; k < n; ++k) {
            out[k] = ws->gz[k] + ws->gw[k] + delta * (ws->jx[k] + ws->glx[k]);
          }
          for (std::size_t k = 0; k < m; ++k) {
            out[n + k] = delta * (ws->ju[k] + ws->glu[k]);
          }
        };
      }

      // Control-only objective with the state pinned at ws->xpin.  For a
      // Lipschitz test element the joint objective is kinked exactly where
      // the entry's sup typically sits (the cone tip, per coordinate), and
      // the pinned maximization recovers the control gain there that a
      // joint ascent can leave behind.
      ObjectiveSpec& pinned = pinned_list[pi];
      pinned.dim = m;
      pinned.box = piece->controls;
      pinned.value = [ws, piece, n, delta](std::span<const double> u) {
        piece->dynamics(ws->xpin, u, ws->f);
        for (std::size_t k = 0; k < n; ++k) ws->adv[k] = ws->xpin[k] + delta * ws->f[k];
        ws->clamp_advected();
        return ws->z->evaluate(ws->xpin) + ws->w->evaluate(ws->adv) +
               delta * piece->lagrangian(ws->xpin, u);
      };
      if (piece->has_gradients()) {
        pinned.gradient = [ws, piece, n, m, delta](std::span<const double> u,
                                                   std::span<double> out) {
          piece->dynamics(ws->xpin, u, ws->f);
          for (std::size_t k = 0; k < n; ++k) ws->adv[k] = ws->xpin[k] + delta * ws->f[k];
          ws->clamp_advected();
          ws->w->gradient(ws->adv, ws->gw);
          ws->mask_clipped_gradient();
          piece->dynamics_jtu(ws->xpin, u, ws->gw, ws->ju);
          piece->lagrangian_gradient(ws->xpin, u, ws->glx, ws->glu);
          for (std::size_t k = 0; k < m; ++k) {
            out[k] = delta * (ws->ju[k] + ws->glu[k]);
          }
        };
      }
    }
  }

  MaxPlusMatrix B(q, p);
  detail::parallel_for(entries, threads, [&](std::size_t e, int worker) {
    const std::size_t j = e / p;
    const std::size_t i = e % p;
    if (!keep.empty() && keep[e] == 0) {
      B(j, i) = neg_inf;
      return;
    }
    EntryWorkspace& ws = workspaces[static_cast<std::size_t>(worker)];
    ws.z = &test.functions[j];
    ws.w = &primal.functions[i];

    double best = neg_inf;
    std::uint32_t iters = 0;
    float spread = 0.0f;
    std::uint8_t all_converged = 1;
    for (std::size_t pi = 0; pi < pieces; ++pi) {
      const ConcavePiece& piece = problem.pieces[pi];
      auto& warm = ws.warm[0];
      for (std::size_t k = 0; k < n; ++k) {
        warm[k] = std::clamp(ws.z->center[k], piece.state_region.lower[k],
                             piece.state_region.upper[k]);
      }
      std::copy(control_centers[pi].begin(), control_centers[pi].end(), warm.begin() + n);
      const std::span<const std::vector<double>> extra(
          ws.warm.data(), options.warm_start_test_center ? 1 : 0);
      OptimizerResult r;
      try {
        r = maximize_concave_box(specs[static_cast<std::size_t>(worker)][pi],
                                 options.optimizer, extra);
        if (ws.z->kind == BasisKind::Lipschitz && options.warm_start_test_center) {
          std::copy(warm.begin(), warm.begin() + static_cast<std::ptrdiff_t>(n),
                    ws.xpin.begin());
          const OptimizerResult rp = maximize_concave_box(
              pinned_specs[static_cast<std::size_t>(worker)][pi], options.optimizer);
          r.value = std::max(r.value, rp.value);
          r.iterations += rp.iterations;
          r.converged = r.converged && rp.converged;
        }
      } catch (const std::exception& ex) {
        throw std::runtime_error("stiffness entry (test " + std::to_string(j) +
                                 ", primal " + std::to_string(i) + ", piece " +
                                 std::to_string(pi) + "): " + ex.what());
      }
      best = std::max(best, r.value);
      iters += static_cast<std::uint32_t>(r.iterations);
      spread = std::max(spread, static_cast<float>(r.multistart_spread));
      all_converged = all_converged && r.converged ? 1 : 0;
    }
    B(j, i) = best;
    diag.iterations[e] = iters;
    diag.spread[e] = spread;
    diag.converged[e] = all_converged;
  });

  finalize_diagnostics(diag, delta, options.smoothness);
  if (diagnostics != nullptr) *diagnostics = std::move(diag);
  return B;
}

MaxPlusMatrix assemble_stiffness_hamiltonian(const ControlProblem& problem, const HamiltonianFn& H,
                                             const BasisFamily& test, const BasisFamily& primal,
                                             double delta, const AssemblyOptions& options,
                                             AssemblyDiagnostics* diagnostics) {
  check_inputs(problem, test, primal, delta);
  if (!H) throw std::invalid_argument("Hamiltonian callback is empty");
  if (primal.functions.front().kind == BasisKind::Lipschitz) {
    throw std::invalid_argument(
        "Hamiltonian assembly needs differentiable primal elements; "
        "Lipschitz elements have kinks");
  }

  const std::size_t n = problem.n;
  const std::size_t q = test.size();
  const std::size_t p = primal.size();
  const std::size_t entries = q * p;
  const int threads = std::max(1, options.threads);

  std::vector<std::uint8_t> keep;
  AssemblyDiagnostics diag;
  if (std::isfinite(options.pruning_threshold)) {
    const MaxPlusMatrix mass = assemble_mass(test, primal, problem.X);
    keep = prune_map(mass, options.pruning_threshold, diag.pruned_entries);
  }
  diag.iterations.assign(entries, 0);
  diag.spread.assign(entries, 0.0f);
  diag.converged.assign(entries, 1);

  std::vector<EntryWorkspace> workspaces;
  workspaces.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) workspaces.emplace_back(n, problem.m);

  std::vector<ObjectiveSpec> specs(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    EntryWorkspace* ws = &workspaces[static_cast<std::size_t>(t)];
    ObjectiveSpec& spec = specs[static_cast<std::size_t>(t)];
    spec.dim = n;
    spec.box = problem.X;
    spec.value = [ws, &H, delta](std::span<const double> x) {
      ws->w->gradient(x, ws->gw);
      return ws->z->evaluate(x) + ws->w->evaluate(x) + delta * H(x, ws->gw);
    };
  }

  MaxPlusMatrix B(q, p);
  detail::parallel_for(entries, threads, [&](std::size_t e, int worker) {
    const std::size_t j = e / p;
    const std::size_t i = e % p;
    if (!keep.empty() && keep[e] == 0) {
      B(j, i) = neg_inf;
      return;
    }
    EntryWorkspace& ws = workspaces[static_cast<std::size_t>(worker)];
    ws.z = &test.functions[j];
    ws.w = &primal.functions[i];
    ws.warm[0] = ws.z->center;
    const std::span<const std::vector<double>> extra(
        ws.warm.data(), options.warm_start_test_center ? 1 : 0);
    OptimizerResult r;
    try {
      r = maximize_concave_box(specs[static_cast<std::size_t>(worker)],
                               options.optimizer, extra);
    } catch (const std::exception& ex) {
      throw std::runtime_error("stiffness entry (test " + std::to_string(j) +
                               ", primal " + std::to_string(i) + "): " + ex.what());
    }
    B(j, i) = r.value;
    diag.iterations[e] = static_cast<std::uint32_t>(r.iterations);
    diag.spread[e] = static_cast<float>(r.multistart_spread);
    diag.converged[e] = r.converged ? 1 : 0;
  });

  finalize_diagnostics(diag, delta, options.smoothness);
  if (diagnostics != nullptr) *diagnostics = std::move(diag);
  return B;
}

AssembledSystem assemble_system(const ControlProblem& problem, const FamilyPair& pair,
                                double delta, const AssemblyOptions& options) {
  AssembledSystem system;
  system.mass = assemble_mass(pair.test, pair.primal, problem.X);
  system.stiffness = assemble_stiffness_direct(problem, pair.test, pair.primal, delta, options,
                                               &system.diagnostics);
  system.delta = delta;
  return system;
}

double one_step_value(const ControlProblem& problem, const TerminalFn& w,
                      std::span<const double> x, double delta,
                      const OptimizerOptions& options) {
  if (!w) throw std::invalid_argument("terminal callback is empty");
  if (x.size() != problem.n) {
    throw std::invalid_argument("state has dimension " + std::to_string(x.size()) +
                                ", expected " + std::to_string(problem.n));
  }
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw std::invalid_argument("time step must be positive and finite");
  }
  const std::vector<double> x0(x.begin(), x.end());
  std::vector<double> f(problem.n);
  std::vector<double> adv(problem.n);

  ObjectiveSpec obj;
  obj.dim = problem.m;
  obj.box = problem.U;
  obj.value = [&](std::span<const double> u) {
    problem.dynamics(x0, u, f);
    for (std::size_t k = 0; k < x0.size(); ++k) adv[k] = x0[k] + delta * f[k];
    if (problem.state_constrained) {
      for (std::size_t k = 0; k < adv.size(); ++k) {
        adv[k] = std::clamp(adv[k], problem.X.lower[k], problem.X.upper[k]);
      }
    }
    return w(adv) + delta * problem.lagrangian(x0, u);
  };
  return maximize_concave_box(obj, options).value;
}

}  // namespace mpfem
