#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "morphon/fem.hpp"
#include "morphon/mesh.hpp"
#include "morphon/oc.hpp"
#include "morphon/sensitivity.hpp"

namespace morphon {

enum class Preset { cantilever, mbb };
enum class Mode { standard, onsg };
// How train_steps is spent: split across all exact-gradient sessions of a
// run, or spent in full at every session.
enum class TrainBudget { total, per_session };

const char* to_string(Preset p);
const char* to_string(Mode m);
const char* to_string(TrainBudget b);

struct RunConfig {
  Preset problem = Preset::cantilever;
  int nelx = 40, nely = 20, nelz = 20;
  Vec3 lengths{2.0, 1.0, 1.0};
  double load = 1.0;  // tau for the cantilever line load, F for the MBB point load
  double volfrac = 0.12;
  double filter_radius = 0.08;
  MaterialModel material{};

  int iterations = 200;  // K
  int warmup = 10;       // N_I
  int interval = 10;     // N_F
  int block_size = 5;    // N_B

  int width = 1000;
  int layers = 4;
  std::int64_t train_steps = 2000;
  TrainBudget train_budget = TrainBudget::total;
  int batch_size = 256;
  std::uint64_t seed = 0;

  double solver_tol = 1e-8;
  int max_solver_iters = 0;  // 0 means 10 * N_s of the system being solved

  OcConfig oc{};
  double g_floor = 1e-12;
  Mode mode = Mode::onsg;

  // Throws std::invalid_argument naming the offending field(s).
  void validate() const;
  StructuredGrid grid() const;
  BoundaryConditions boundary_conditions(const StructuredGrid& grid) const;
};

// True when iteration k uses a synthetic gradient. Exact iterations are the
// first N_I and the last iteration of every N_F-wide window after warmup,
// where the final window is truncated at K-1.
bool is_synthetic(int k, int warmup, int interval, int iterations);

std::vector<int> exact_iterations(int warmup, int interval, int iterations);

// Adam steps for each exact-gradient session, in session order.
std::vector<std::int64_t> session_steps(const RunConfig& cfg);

struct RunHistory {
  std::vector<EvaluationRecord> records;
  std::vector<double> final_design;  // z^(K)
  int fine_solves = 0;
  int coarse_solves = 0;
  int training_sessions = 0;
  double total_wall_time = 0.0;
  std::size_t surrogate_parameters = 0;
  std::vector<double> session_losses;  // last minibatch loss per session

  double final_objective() const;
};

// Thrown when a run cannot continue; carries the records produced so far
// plus a diagnostic record for the failing iteration.
class RunFailure : public std::runtime_error {
public:
  RunFailure(const std::string& what, RunHistory partial)
      : std::runtime_error(what), history(std::move(partial)) {}
  RunHistory history;
};

using IterationCallback = std::function<void(const EvaluationRecord&)>;

RunHistory run_standard(const RunConfig& cfg, const IterationCallback& on_iteration = {});
RunHistory run_onsg(const RunConfig& cfg, const IterationCallback& on_iteration = {});
RunHistory run(const RunConfig& cfg, const IterationCallback& on_iteration = {});

}  // namespace morphon
