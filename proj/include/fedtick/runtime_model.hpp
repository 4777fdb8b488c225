#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedtick/errors.hpp"

// Simulated wall-clock accounting for a communication round: download the
// model, run k minibatches, upload. All clients share the same bandwidths and
// per-minibatch compute time, so the straggler max degenerates to the common
// value; a per-client-beta overload covers the heterogeneous extension.

namespace fedtick {

struct RuntimeConfig {
  double model_megabits = 1.0;  // |x|
  double down_mbps = 20.0;      // D
  double up_mbps = 5.0;         // U
  double beta_seconds = 0.01;   // per-minibatch compute time (nominal mean)
  int n_participants = 1;       // N clients sampled per round
  // Optional per-round Gaussian perturbation of beta (off by default; the
  // model otherwise uses the nominal mean everywhere).
  double beta_jitter_std = 0.0;

  void validate() const {
    if (!(model_megabits > 0.0) || !(down_mbps > 0.0) || !(up_mbps > 0.0) ||
        !(beta_seconds >= 0.0) || n_participants < 1 || !(beta_jitter_std >= 0.0))
      throw ConfigError("RuntimeConfig: all fields must be positive");
  }

  double comm_seconds() const { return model_megabits / down_mbps + model_megabits / up_mbps; }
};

// Download + k local steps + upload for one client.
inline double client_round_time(const RuntimeConfig& cfg, long long k) {
  if (k < 1) throw ContractViolation("client_round_time: k >= 1 required");
  return cfg.model_megabits / cfg.down_mbps + static_cast<double>(k) * cfg.beta_seconds +
         cfg.model_megabits / cfg.up_mbps;
}

// The server waits for the slowest participant; with homogeneous clients that
// is the common client_round_time.
inline double round_time(const RuntimeConfig& cfg, long long k) {
  return client_round_time(cfg, k);
}

// Heterogeneous extension: per-client compute times, same bandwidths.
inline double round_time(const RuntimeConfig& cfg, long long k, std::span<const double> client_betas) {
  if (k < 1) throw ContractViolation("round_time: k >= 1 required");
  if (client_betas.empty()) throw ContractViolation("round_time: empty client list");
  double worst = 0.0;
  for (double b : client_betas)
    worst = std::max(worst, cfg.model_megabits / cfg.down_mbps + static_cast<double>(k) * b +
                                cfg.model_megabits / cfg.up_mbps);
  return worst;
}

// Total runtime of a round sequence:
//   R * (|x|/D + |x|/U) + beta * sum k_r,
// which for constant K collapses to (T/K) * (|x|/D + |x|/U + beta K).
inline double cumulative_walltime(const RuntimeConfig& cfg, std::span<const int> k_sequence) {
  double steps = 0.0;
  for (int k : k_sequence) {
    if (k < 1) throw ContractViolation("cumulative_walltime: all k >= 1 required");
    steps += static_cast<double>(k);
  }
  return static_cast<double>(k_sequence.size()) * cfg.comm_seconds() + cfg.beta_seconds * steps;
}

// Named experiment presets: model size and measured compute time plus the
// schedule/participation constants each task was run with. beta_std_seconds
// is the measured spread of the minibatch time, available for opting into
// beta jitter; presets themselves keep jitter off.
struct Preset {
  std::string name;
  RuntimeConfig runtime;
  int k0 = 1;
  double eta0 = 0.1;
  int c_total = 1;
  double beta_std_seconds = 0.0;
};

inline const std::vector<Preset>& presets() {
  static const std::vector<Preset> table = {
      {"sent140", {0.32, 20.0, 5.0, 5.2e-3, 50}, 60, 3.0, 21876, 2.1e-4},
      {"femnist", {6.71, 20.0, 5.0, 0.017, 60}, 80, 0.3, 3000, 5.1e-4},
      {"cifar100", {40.0, 20.0, 5.0, 0.31, 25}, 50, 0.01, 500, 1.7e-2},
      {"shakespeare", {5.21, 20.0, 5.0, 1.5, 10}, 80, 0.1, 660, 8.5e-2},
  };
  return table;
}

inline std::optional<Preset> find_preset(const std::string& name) {
  for (const Preset& p : presets())
    if (p.name == name) return p;
  return std::nullopt;
}

}  // namespace fedtick
