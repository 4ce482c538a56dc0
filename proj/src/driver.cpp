#include "morphon/driver.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "morphon/filter.hpp"
#include "morphon/surrogate.hpp"
#include "morphon/twoscale.hpp"

namespace morphon {

const char* to_string(Preset p) { return p == Preset::cantilever ? "cantilever" : "mbb"; }
const char* to_string(Mode m) { return m == Mode::standard ? "standard" : "onsg"; }
const char* to_string(TrainBudget b) { return b == TrainBudget::total ? "total" : "per_session"; }

void RunConfig::validate() const {
  if (nelx < 1 || nely < 1 || nelz < 1) throw std::invalid_argument("nelx, nely, nelz must be >= 1");
  if (!(lengths[0] > 0 && lengths[1] > 0 && lengths[2] > 0))
    throw std::invalid_argument("lx, ly, lz must be > 0");
  if (!(volfrac > 0.0 && volfrac <= 1.0)) throw std::invalid_argument("volfrac must be in (0,1]");
  if (!(filter_radius > 0.0)) throw std::invalid_argument("filter_radius must be > 0");
  material.validate();
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (warmup < 1) throw std::invalid_argument("warmup must be >= 1");
  if (warmup > iterations) throw std::invalid_argument("warmup must not exceed iterations");
  if (interval < 1) throw std::invalid_argument("nf must be >= 1");
  if (block_size < 1) throw std::invalid_argument("nb must be >= 1");
  if (width < 1 || layers < 1) throw std::invalid_argument("width and layers must be >= 1");
  if (train_steps < 1) throw std::invalid_argument("train_steps must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch must be >= 1");
  if (!(solver_tol > 0.0 && solver_tol < 1.0)) throw std::invalid_argument("solver_tol must be in (0,1)");
  if (max_solver_iters < 0) throw std::invalid_argument("max_solver_iters must be >= 0");
  if (!(g_floor > 0.0)) throw std::invalid_argument("g_floor must be > 0");
  oc.validate();
  if (problem == Preset::mbb && (nelx % 2 != 0 || nely % 2 != 0))
    throw std::invalid_argument("mbb requires even nelx and nely");
  if (mode == Mode::onsg) {
    const char* names[3] = {"nelx", "nely", "nelz"};
    const int dims[3] = {nelx, nely, nelz};
    for (int a = 0; a < 3; ++a)
      if (dims[a] % block_size != 0)
        throw std::invalid_argument(std::string(names[a]) + " = " + std::to_string(dims[a]) +
                                    " is not divisible by nb = " + std::to_string(block_size));
  }
}

StructuredGrid RunConfig::grid() const { return build_grid(nelx, nely, nelz, lengths); }

BoundaryConditions RunConfig::boundary_conditions(const StructuredGrid& g) const {
  return problem == Preset::cantilever ? cantilever_preset(g, load) : mbb_preset(g, load);
}

bool is_synthetic(int k, int warmup, int interval, int iterations) {
  if (k < warmup) return false;
  if (k == iterations - 1) return false;
  return (k - warmup) % interval != interval - 1;
}

std::vector<int> exact_iterations(int warmup, int interval, int iterations) {
  std::vector<int> out;
  for (int k = 0; k < iterations; ++k)
    if (!is_synthetic(k, warmup, interval, iterations)) out.push_back(k);
  return out;
}

std::vector<std::int64_t> session_steps(const RunConfig& cfg) {
  const auto sessions = std::int64_t(exact_iterations(cfg.warmup, cfg.interval, cfg.iterations).size());
  if (cfg.train_budget == TrainBudget::per_session)
    return std::vector<std::int64_t>(std::size_t(sessions), cfg.train_steps);
  std::vector<std::int64_t> steps(std::size_t(sessions), cfg.train_steps / sessions);
  for (std::int64_t i = 0; i < cfg.train_steps % sessions; ++i) ++steps[std::size_t(i)];
  return steps;
}

double RunHistory::final_objective() const {
  return records.empty() ? std::numeric_limits<double>::quiet_NaN() : records.back().objective;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int solver_cap(const RunConfig& cfg, Index dofs) {
  return cfg.max_solver_iters > 0 ? cfg.max_solver_iters : int(std::min<Index>(10 * dofs, 1 << 30));
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// State shared by both optimizers: the fine problem, filter and volume data.
struct FineProblem {
  explicit FineProblem(const RunConfig& cfg)
      : grid(cfg.grid()),
        bc(cfg.boundary_conditions(grid)),
        solver(grid, cfg.material, bc),
        filter(grid, cfg.filter_radius),
        volume_weights(element_volume_weights(grid)),
        dV(filter.apply_transpose(volume_weights)),
        max_iters(solver_cap(cfg, grid.num_dofs())) {}

  StructuredGrid grid;
  BoundaryConditions bc;
  StateSolver solver;
  FilterOperator filter;
  std::vector<double> volume_weights;
  std::vector<double> dV;
  int max_iters;
};

[[noreturn]] void abort_run(RunHistory& history, EvaluationRecord rec, const std::string& why) {
  rec.objective = std::numeric_limits<double>::quiet_NaN();
  history.records.push_back(std::move(rec));
  throw RunFailure(why, std::move(history));
}

// Exact branch: fine solve + adjoint gradient. Updates u in place.
void exact_evaluation(const FineProblem& fp, const RunConfig& cfg, std::span<const double> z,
                      std::vector<double>& u, EvaluationRecord& rec, RunHistory& history) {
  const auto zf = fp.filter.apply(z);
  SolveResult state;
  try {
    state = fp.solver.solve(zf, u, cfg.solver_tol, fp.max_iters);
  } catch (const std::exception& e) {
    abort_run(history, rec, std::string("fine solve failed at iteration ") +
                                std::to_string(rec.iteration) + ": " + e.what());
  }
  ++history.fine_solves;
  rec.fine_solve_performed = true;
  rec.fine_stats = state.stats;
  if (!state.stats.converged)
    abort_run(history, rec, "fine solve did not converge at iteration " + std::to_string(rec.iteration) +
                                " (relative residual " + std::to_string(state.stats.final_relative_residual) +
                                " after " + std::to_string(state.stats.iterations) + " iterations)");
  rec.objective = compliance(fp.solver.load(), state.u);
  rec.gradient = compliance_gradient(fp.solver.op(), z, fp.filter, state);
  rec.gradient_kind = GradientKind::exact;
  u = std::move(state.u);
}

}  // namespace

RunHistory run_standard(const RunConfig& cfg, const IterationCallback& on_iteration) {
  cfg.validate();
  const auto start = Clock::now();
  const FineProblem fp(cfg);
  RunHistory history;
  std::vector<double> z(std::size_t(fp.grid.num_elements()), cfg.volfrac);
  std::vector<double> u(std::size_t(fp.grid.num_dofs()), 0.0);

  for (int k = 0; k < cfg.iterations; ++k) {
    const auto t0 = Clock::now();
    EvaluationRecord rec;
    rec.iteration = k;
    rec.volume_fraction = dot(fp.dV, z);
    exact_evaluation(fp, cfg, z, u, rec, history);
    try {
      z = oc_update(z, rec.gradient, fp.dV, cfg.volfrac, cfg.oc);
    } catch (const std::exception& e) {
      abort_run(history, rec, std::string("design update failed: ") + e.what());
    }
    rec.wall_time = seconds_since(t0);
    if (on_iteration) on_iteration(rec);
    history.records.push_back(std::move(rec));
  }
  history.final_design = std::move(z);
  history.total_wall_time = seconds_since(start);
  return history;
}

RunHistory run_onsg(const RunConfig& cfg, const IterationCallback& on_iteration) {
  cfg.validate();
  const auto start = Clock::now();
  const FineProblem fp(cfg);
  const CoarseMap map(fp.grid, cfg.block_size);
  const BoundaryConditions coarse_bc = restrict_bc(fp.bc, map);
  const StateSolver coarse(map.coarse_grid(), cfg.material, coarse_bc);
  const int coarse_iters = solver_cap(cfg, map.coarse_grid().num_dofs());

  DenseMlp model = init_model(int(map.feature_dim()), cfg.width, cfg.layers, int(map.target_dim()), cfg.seed);
  TrainState train_state(model, cfg.seed, cfg.batch_size);
  TargetTransform transform(cfg.g_floor);
  OnlineDataset dataset;
  const auto steps = session_steps(cfg);

  RunHistory history;
  history.surrogate_parameters = model.parameter_count();
  std::vector<double> z(std::size_t(fp.grid.num_elements()), cfg.volfrac);
  std::vector<double> u(std::size_t(fp.grid.num_dofs()), 0.0);
  std::vector<double> uc(std::size_t(map.coarse_grid().num_dofs()), 0.0);

  for (int k = 0; k < cfg.iterations; ++k) {
    const auto t0 = Clock::now();
    EvaluationRecord rec;
    rec.iteration = k;
    rec.volume_fraction = dot(fp.dV, z);

    const auto zc = coarsen_density(z, map);
    SolveResult coarse_state;
    try {
      coarse_state = coarse.solve(zc, uc, cfg.solver_tol, coarse_iters);
    } catch (const std::exception& e) {
      abort_run(history, rec, std::string("coarse solve failed: ") + e.what());
    }
    ++history.coarse_solves;
    if (!coarse_state.stats.converged)
      abort_run(history, rec, "coarse solve did not converge at iteration " + std::to_string(k));
    uc = std::move(coarse_state.u);

    if (is_synthetic(k, cfg.warmup, cfg.interval, cfg.iterations)) {
      rec.objective = std::numeric_limits<double>::quiet_NaN();
      try {
        rec.gradient = predict_full_gradient(model, z, uc, coarse.fixed_mask(), map, transform);
      } catch (const std::exception& e) {
        abort_run(history, rec, std::string("surrogate prediction failed: ") + e.what());
      }
      rec.gradient_kind = GradientKind::synthetic;
    } else {
      exact_evaluation(fp, cfg, z, u, rec, history);
      try {
        auto samples = make_samples(z, uc, coarse.fixed_mask(), map, rec.gradient, k, cfg.g_floor);
        for (const auto& s : samples) transform.ingest_log(s.target_log);
        dataset.append(std::move(samples));
        const auto report =
            train(model, train_state, dataset, transform, steps[std::size_t(history.training_sessions)]);
        history.session_losses.push_back(report.last_batch_loss);
      } catch (const std::exception& e) {
        abort_run(history, rec, std::string("surrogate update failed: ") + e.what());
      }
      ++history.training_sessions;
    }

    try {
      z = oc_update(z, rec.gradient, fp.dV, cfg.volfrac, cfg.oc);
    } catch (const std::exception& e) {
      abort_run(history, rec, std::string("design update failed: ") + e.what());
    }
    rec.wall_time = seconds_since(t0);
    if (on_iteration) on_iteration(rec);
    history.records.push_back(std::move(rec));
  }
  history.final_design = std::move(z);
  history.total_wall_time = seconds_since(start);
  return history;
}

RunHistory run(const RunConfig& cfg, const IterationCallback& on_iteration) {
  return cfg.mode == Mode::standard ? run_standard(cfg, on_iteration) : run_onsg(cfg, on_iteration);
}

}  // namespace morphon
