#pragma once

#include <cmath>
#include <vector>

#include "prolink/autodiff.hpp"
#include "prolink/reasoner.hpp"
#include "prolink/training.hpp"

namespace prolink::testing {

// Gradient of a small training loss w.r.t. every parameter tensor, by
// reverse mode and by central differences.
struct GradientComparison {
  std::vector<std::string> names;
  std::vector<double> relative_errors;
  double worst() const {
    double w = 0.0;
    for (double e : relative_errors) w = std::max(w, e);
    return w;
  }
};

inline GradientComparison compare_model_gradients(const ModelParams& params, const Batch& batch,
                                                  const KnowledgeGraph& message_kg, double eps) {
  Tape tape;
  auto bound = bind_params(tape, params, true);
  Var loss = batch_loss(bound, batch, message_kg);
  auto vars = bound.all();
  auto grads = tape.gradients(loss, vars);

  std::vector<Tensor> flat;
  for (const auto* t : params.tensors()) flat.push_back(*t);
  auto objective = [&](const std::vector<Tensor>& ts) {
    ModelParams p = params;
    auto dst = p.tensors();
    for (std::size_t i = 0; i < ts.size(); ++i) *dst[i] = ts[i];
    Tape t;
    auto b = bind_params(t, p, false);
    return batch_loss(b, batch, message_kg).value().item();
  };
  auto fd = finite_difference(objective, flat, eps);

  GradientComparison out;
  out.names = params.names();
  for (std::size_t i = 0; i < fd.size(); ++i) out.relative_errors.push_back(relative_error(grads[i], fd[i], 1e-8));
  return out;
}

}  // namespace prolink::testing
