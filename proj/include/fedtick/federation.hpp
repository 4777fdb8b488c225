#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "fedtick/dataset.hpp"
#include "fedtick/errors.hpp"
#include "fedtick/linalg.hpp"
#include "fedtick/objectives.hpp"
#include "fedtick/param_vector.hpp"
#include "fedtick/rng.hpp"

// Client populations: synthetic quadratic federations with exact heterogeneity
// constants, and label-shard partitions of small classification datasets.
// Constructed federations are immutable and freely shareable across threads.

namespace fedtick {

struct Client {
  int id = 0;
  double weight_p = 0.0;               // fraction of all samples, sums to 1
  double sigma = 0.0;                  // gradient-noise level (quadratic kind)
  std::optional<QuadraticObjective> quadratic;
  std::vector<int> sample_indices;     // rows of the shared dataset (dataset kind)

  int n_samples() const {
    return quadratic.has_value() ? 1 : static_cast<int>(sample_indices.size());
  }
};

// Constants for evaluating the convergence bound on quadratic federations.
// g_squared and f0 depend on the run's initial point and n_participants on the
// sampling config, neither known at construction: with_start rebinds them.
struct TheoryConstants {
  double l_smooth = 0.0;
  double mu = 0.0;
  double kappa = 0.0;        // l_smooth / mu
  double gamma = 0.0;        // heterogeneity gap F* - sum p_c f_c*
  double g_squared = 0.0;    // L^2 ||x0 - x*||^2 for the bound's gradient cap
  double sigma_weighted = 0.0;  // sum p_c^2 sigma_c^2
  double f_star = 0.0;       // minimum of the global objective
  Vector x_star;             // global minimizer
  double f0 = 0.0;           // F(x0)
  int n_participants = 0;    // N sampled per round
  int c_total = 0;
};

struct Federation {
  ModelKind kind = ModelKind::quadratic;
  ParamLayout layout;
  std::vector<Client> clients;
  std::shared_ptr<const Dataset> dataset;  // dataset kind only
  std::optional<TheoryConstants> constants;  // quadratic kind only

  int c_total() const { return static_cast<int>(clients.size()); }
  bool is_quadratic() const { return kind == ModelKind::quadratic; }
};

namespace detail {
inline void validate_weights(const std::vector<Client>& clients) {
  if (clients.empty()) throw ContractViolation("Federation: needs at least one client");
  double sum = 0.0;
  for (std::size_t i = 0; i < clients.size(); ++i) {
    if (clients[i].id != static_cast<int>(i))
      throw ContractViolation("Federation: client ids must be dense 0..C-1");
    sum += clients[i].weight_p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw ContractViolation("Federation: client weights sum to " + std::to_string(sum));
}
}  // namespace detail

// Global objective F(x) = sum_c p_c f_c(x) evaluated exactly (quadratic kind).
inline double global_loss(const Federation& fed, const Vector& x) {
  if (!fed.is_quadratic())
    throw UnsupportedOperation("global_loss: exact form available for quadratic federations only");
  double f = 0.0;
  for (const Client& c : fed.clients) f += c.weight_p * c.quadratic->value(x);
  return f;
}

// grad F(x) = sum_c p_c A_c (x - b_c), exact.
inline Vector global_grad(const Federation& fed, const Vector& x) {
  if (!fed.is_quadratic())
    throw UnsupportedOperation("global_grad: exact form available for quadratic federations only");
  Vector g(x.size(), 0.0);
  for (const Client& c : fed.clients) axpy(c.weight_p, c.quadratic->gradient(x), g);
  return g;
}

// Exact global minimizer: solves (sum p_c A_c) x = sum p_c A_c b_c.
inline Vector global_minimizer(const Federation& fed) {
  if (!fed.is_quadratic())
    throw UnsupportedOperation("global_minimizer: quadratic federations only");
  const int d = fed.layout.d0;
  SymMatrix abar(d);
  Vector rhs(static_cast<std::size_t>(d), 0.0);
  for (const Client& c : fed.clients) {
    const SymMatrix& a = c.quadratic->matrix();
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) abar(i, j) += c.weight_p * a(i, j);
    axpy(c.weight_p, a.matvec(c.quadratic->center()), rhs);
  }
  return cholesky_solve(abar, rhs);
}

// Heterogeneity gap F* - sum_c p_c f_c*. Our quadratics have f_c* = 0, so this
// is F at the global minimizer. Zero iff all client minimizers coincide (for
// the identical-A family).
inline double compute_gamma(const Federation& fed) {
  if (!fed.is_quadratic())
    throw UnsupportedOperation("compute_gamma: dataset-backed federations have no closed-form minimizer");
  return global_loss(fed, global_minimizer(fed));
}

enum class SpectrumMode { shared, per_client };

// Synthetic quadratic federation with known constants. Client centers are
// drawn from `seed` with spread proportional to `heterogeneity`; in shared
// mode all clients see the same matrix A (eigenvalues spread over [mu, L] in a
// seeded random orthogonal basis), so x* = sum p_c b_c in closed form. In
// per_client mode each client gets its own seeded basis and spectrum within
// [mu, L]; constants are still exact via the linear solve above.
inline Federation make_quadratic_federation(int c_total, int dim, double heterogeneity,
                                            double mu, double l_smooth, double sigma,
                                            std::uint64_t seed,
                                            SpectrumMode mode = SpectrumMode::shared) {
  if (c_total < 1) throw ContractViolation("make_quadratic_federation: c_total >= 1 required");
  if (dim < 1) throw ContractViolation("make_quadratic_federation: dim >= 1 required");
  if (!(l_smooth >= mu) || !(mu > 0.0))
    throw ConfigError("make_quadratic_federation: spectrum needs L >= mu > 0");
  if (dim == 1 && l_smooth != mu)
    throw ConfigError("make_quadratic_federation: dim == 1 admits a single eigenvalue; set mu == L");
  if (heterogeneity < 0.0) throw ContractViolation("make_quadratic_federation: heterogeneity >= 0");
  if (sigma < 0.0) throw ContractViolation("make_quadratic_federation: sigma >= 0");

  Federation fed;
  fed.kind = ModelKind::quadratic;
  fed.layout = ParamLayout::quadratic(dim);

  Vector shared_eigs(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i)
    shared_eigs[static_cast<std::size_t>(i)] =
        dim == 1 ? mu : mu + (l_smooth - mu) * static_cast<double>(i) / (dim - 1);
  Rng basis_rng(derive_stream(seed, StreamTag::federation_build, 0));
  const std::vector<double> shared_basis = random_orthogonal(dim, basis_rng);

  const double w = 1.0 / c_total;
  for (int c = 0; c < c_total; ++c) {
    Rng crng(derive_stream(seed, StreamTag::federation_build, 1, static_cast<std::uint64_t>(c)));
    Vector center(static_cast<std::size_t>(dim));
    const double scale = heterogeneity / std::sqrt(static_cast<double>(dim));
    for (double& v : center) v = scale * crng.normal();
    Client client;
    client.id = c;
    client.weight_p = w;
    client.sigma = sigma;
    if (mode == SpectrumMode::shared) {
      client.quadratic = QuadraticObjective::from_spectrum(shared_eigs, shared_basis, std::move(center));
    } else {
      Vector eigs(static_cast<std::size_t>(dim));
      for (int i = 0; i < dim; ++i)
        eigs[static_cast<std::size_t>(i)] = mu + (l_smooth - mu) * crng.uniform01();
      eigs.front() = mu;
      eigs.back() = l_smooth;  // keep the extremes pinned so (L, mu) are exact
      if (dim == 1) eigs.front() = mu;
      const std::vector<double> basis = random_orthogonal(dim, crng);
      client.quadratic = QuadraticObjective::from_spectrum(eigs, basis, std::move(center));
    }
    fed.clients.push_back(std::move(client));
  }
  detail::validate_weights(fed.clients);

  TheoryConstants tc;
  tc.c_total = c_total;
  tc.n_participants = c_total;
  tc.mu = mu;
  tc.l_smooth = l_smooth;
  tc.kappa = l_smooth / mu;
  tc.x_star = global_minimizer(fed);
  tc.f_star = global_loss(fed, tc.x_star);
  tc.gamma = tc.f_star;  // f_c* = 0 for every client
  double sw = 0.0;
  for (const Client& c : fed.clients) sw += c.weight_p * c.weight_p * c.sigma * c.sigma;
  tc.sigma_weighted = sw;
  const Vector x0(static_cast<std::size_t>(dim), 0.0);
  tc.g_squared = l_smooth * l_smooth * norm_sq(sub(x0, tc.x_star));
  tc.f0 = global_loss(fed, x0);
  fed.constants = std::move(tc);
  return fed;
}

// Rebind the constants that depend on the run: initial point x0 (G^2, F0) and
// the per-round participation count N.
inline TheoryConstants with_start(const Federation& fed, const ParamVector& x0, int n_participants) {
  if (!fed.constants.has_value())
    throw UnsupportedOperation("with_start: federation carries no theory constants");
  require_same_layout(x0, fed.layout, "with_start");
  if (n_participants < 1 || n_participants > fed.c_total())
    throw ContractViolation("with_start: n_participants must be in [1, C]");
  TheoryConstants tc = *fed.constants;
  tc.n_participants = n_participants;
  tc.g_squared = tc.l_smooth * tc.l_smooth * norm_sq(sub(x0.values, tc.x_star));
  tc.f0 = global_loss(fed, x0.values);
  return tc;
}

// Label-shard partition: samples are ordered by class (seeded shuffle inside
// each class), cut into c_total * shards_per_client equal contiguous shards,
// and client c receives shards [c*spc, (c+1)*spc). Disjoint cover by
// construction.
inline std::vector<std::vector<int>> shard_partition(const std::vector<int>& labels, int c_total,
                                                     int shards_per_client, std::uint64_t seed) {
  if (c_total < 1 || shards_per_client < 1)
    throw ConfigError("shard_partition: c_total and shards_per_client must be >= 1");
  const int n = static_cast<int>(labels.size());
  const int n_shards = c_total * shards_per_client;
  if (n == 0 || n % n_shards != 0)
    throw ConfigError("shard_partition: " + std::to_string(n) + " samples not divisible into " +
                      std::to_string(n_shards) + " shards");
  const int shard_size = n / n_shards;

  const int n_classes = *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<std::vector<int>> by_class(static_cast<std::size_t>(n_classes));
  for (int i = 0; i < n; ++i) by_class[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])].push_back(i);
  Rng rng(derive_stream(seed, StreamTag::federation_build, 2));
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(n));
  for (auto& group : by_class) {
    for (std::size_t i = group.size(); i > 1; --i)
      std::swap(group[i - 1], group[rng.uniform_below(i)]);
    order.insert(order.end(), group.begin(), group.end());
  }

  std::vector<std::vector<int>> assignment(static_cast<std::size_t>(c_total));
  for (int c = 0; c < c_total; ++c) {
    auto& mine = assignment[static_cast<std::size_t>(c)];
    mine.reserve(static_cast<std::size_t>(shards_per_client) * static_cast<std::size_t>(shard_size));
    const int first_shard = c * shards_per_client;
    mine.insert(mine.end(),
                order.begin() + static_cast<std::ptrdiff_t>(first_shard) * shard_size,
                order.begin() + static_cast<std::ptrdiff_t>(first_shard + shards_per_client) * shard_size);
  }
  return assignment;
}

// Dataset-backed federation via shard_partition; p_c = n_c / sum n_c.
inline Federation make_dataset_federation(std::shared_ptr<const Dataset> ds, int c_total,
                                          int shards_per_client, std::uint64_t seed,
                                          ParamLayout layout) {
  if (!ds) throw ContractViolation("make_dataset_federation: null dataset");
  if (layout.kind == ModelKind::quadratic)
    throw ContractViolation("make_dataset_federation: needs a classification layout");
  if (layout.input_dim() != ds->n_features)
    throw ConfigError("make_dataset_federation: layout input dim " +
                      std::to_string(layout.input_dim()) + " vs dataset features " +
                      std::to_string(ds->n_features));
  if (layout.num_classes() < ds->n_classes)
    throw ConfigError("make_dataset_federation: layout has fewer classes than the dataset");
  auto parts = shard_partition(ds->labels, c_total, shards_per_client, seed);
  Federation fed;
  fed.kind = layout.kind;
  fed.layout = layout;
  fed.dataset = std::move(ds);
  const double total = static_cast<double>(fed.dataset->n_rows);
  for (int c = 0; c < c_total; ++c) {
    Client client;
    client.id = c;
    client.sample_indices = std::move(parts[static_cast<std::size_t>(c)]);
    client.weight_p = static_cast<double>(client.sample_indices.size()) / total;
    fed.clients.push_back(std::move(client));
  }
  detail::validate_weights(fed.clients);
  return fed;
}

// Uniform-with-replacement minibatch from a client's local samples; for the
// quadratic kind the "batch" is a fresh gradient-noise seed.
inline Minibatch sample_minibatch(const Federation& fed, const Client& client, int batch_size,
                                  Rng& rng) {
  if (batch_size < 1) throw ContractViolation("sample_minibatch: batch_size >= 1 required");
  if (fed.is_quadratic())
    return Minibatch::for_quadratic(*client.quadratic, client.sigma, rng.raw());
  if (client.sample_indices.empty())
    throw ContractViolation("sample_minibatch: client " + std::to_string(client.id) +
                            " has no samples");
  const Dataset& ds = *fed.dataset;
  Minibatch b;
  b.batch = batch_size;
  b.features = ds.n_features;
  b.inputs.resize(static_cast<std::size_t>(batch_size) * static_cast<std::size_t>(ds.n_features));
  b.targets.resize(static_cast<std::size_t>(batch_size));
  for (int i = 0; i < batch_size; ++i) {
    const int row = client.sample_indices[rng.uniform_below(client.sample_indices.size())];
    const double* src = ds.row(row);
    std::copy(src, src + ds.n_features,
              b.inputs.begin() + static_cast<std::ptrdiff_t>(i) * ds.n_features);
    b.targets[static_cast<std::size_t>(i)] = ds.labels[static_cast<std::size_t>(row)];
  }
  return b;
}

}  // namespace fedtick
