#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "morphon/driver.hpp"

namespace morphon {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Flat `key = value` documents, one entry per line, `#` starts a comment.
// Recognized keys (defaults in parentheses):
//   problem        cantilever | mbb                          (cantilever)
//   nelx nely nelz element counts          (40 20 20; mbb: 48 8 16)
//   lx ly lz       domain lengths          (2 1 1;    mbb: 6 1 2)
//   load           line-load intensity / point force          (1)
//   volfrac        allowed volume fraction Vmax               (0.12)
//   filter_radius  density filter radius, length units        (0.08)
//   e0 emin nu penal  SIMP material                   (1 1e-9 0.3 3)
//   iterations     K                                          (200)
//   ni             warmup iterations N_I                      (10)
//   nf             exact-gradient interval N_F                (10;   mbb: 45)
//   nb             block size N_B                             (5;    mbb: 4)
//   width layers   surrogate hidden width / depth             (1000 4; mbb: 500 4)
//   train_steps    Adam steps                                 (2000; mbb: 3000)
//   train_budget   total | per_session                        (total)
//   batch          minibatch size                             (256)
//   seed           model init and minibatch seed              (0)
//   solver_tol     PCG relative residual tolerance            (1e-8)
//   max_solver_iters  PCG cap, 0 = 10 x system size           (0)
//   move_limit damping oc_tol   OC update                (0.2 0.5 1e-6)
//   g_floor        sensitivity floor                          (1e-12)
//   mode           standard | onsg                            (onsg)
RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& source = "<config>");

// Every field of the resolved config as (key, value) pairs in parse order;
// feeding them back through parse_config_text reproduces the config.
std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& cfg);
std::string format_config(const RunConfig& cfg);

Mode parse_mode(const std::string& text);

}  // namespace morphon
