#pragma once

#include <cmath>
#include <string>

#include "fedtick/errors.hpp"
#include "fedtick/linalg.hpp"

namespace fedtick {

enum class ModelKind { quadratic, linear_softmax, mlp };

inline const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::quadratic: return "quadratic";
    case ModelKind::linear_softmax: return "linear-softmax";
    case ModelKind::mlp: return "mlp";
  }
  return "?";
}

// Layout descriptor for the flat parameter vector.
//   quadratic:      dim                     -> dim parameters
//   linear-softmax: features x classes      -> features*classes weights
//   mlp:            in -> hidden -> out     -> in*hidden + hidden*out weights
// Models carry no bias terms; zero parameters give uniform logits.
struct ParamLayout {
  ModelKind kind = ModelKind::quadratic;
  int d0 = 0, d1 = 0, d2 = 0;

  static ParamLayout quadratic(int dim) { return {ModelKind::quadratic, dim, 0, 0}; }
  static ParamLayout linear(int features, int classes) {
    return {ModelKind::linear_softmax, features, classes, 0};
  }
  static ParamLayout mlp(int in, int hidden, int out) {
    return {ModelKind::mlp, in, hidden, out};
  }

  std::size_t param_count() const {
    switch (kind) {
      case ModelKind::quadratic: return static_cast<std::size_t>(d0);
      case ModelKind::linear_softmax: return static_cast<std::size_t>(d0) * static_cast<std::size_t>(d1);
      case ModelKind::mlp:
        return static_cast<std::size_t>(d0) * static_cast<std::size_t>(d1) +
               static_cast<std::size_t>(d1) * static_cast<std::size_t>(d2);
    }
    return 0;
  }

  int input_dim() const { return kind == ModelKind::quadratic ? d0 : d0; }
  int num_classes() const { return kind == ModelKind::linear_softmax ? d1 : d2; }

  bool operator==(const ParamLayout&) const = default;

  std::string describe() const {
    switch (kind) {
      case ModelKind::quadratic: return "quadratic(dim=" + std::to_string(d0) + ")";
      case ModelKind::linear_softmax:
        return "linear(" + std::to_string(d0) + "x" + std::to_string(d1) + ")";
      case ModelKind::mlp:
        return "mlp(" + std::to_string(d0) + "-" + std::to_string(d1) + "-" + std::to_string(d2) + ")";
    }
    return "?";
  }
};

struct ParamVector {
  Vector values;
  ParamLayout layout;

  ParamVector() = default;
  ParamVector(Vector v, ParamLayout l) : values(std::move(v)), layout(l) {
    if (values.size() != layout.param_count())
      throw ContractViolation("ParamVector: " + std::to_string(values.size()) +
                              " values for layout " + layout.describe() + " (expects " +
                              std::to_string(layout.param_count()) + ")");
    for (double x : values)
      if (!std::isfinite(x)) throw ContractViolation("ParamVector: non-finite entry");
  }

  static ParamVector zeros(ParamLayout l) { return ParamVector(Vector(l.param_count(), 0.0), l); }

  std::size_t size() const { return values.size(); }
  bool operator==(const ParamVector&) const = default;
};

inline void require_same_layout(const ParamVector& a, const ParamLayout& expect,
                                const char* where) {
  if (!(a.layout == expect))
    throw ContractViolation(std::string(where) + ": layout " + a.layout.describe() +
                            " does not match expected " + expect.describe());
}

}  // namespace fedtick
