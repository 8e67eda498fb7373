#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "prolink/tensor.hpp"

namespace prolink {

class Tape;

// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;
  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Append-only record of primitive operations supporting one reverse sweep.
// Every forward op checks its output for non-finite values and throws
// NumericError naming the op.
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Tensor& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // A leaf. Only leaves created with track = true receive gradients.
  Var leaf(Tensor value, bool track = false);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  Var record(std::string op, Tensor value, std::vector<std::size_t> inputs, Backward backward);

  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  bool tracked(std::size_t id) const { return nodes_.at(id).tracked; }
  const std::string& op(std::size_t id) const { return nodes_.at(id).op; }
  std::size_t size() const { return nodes_.size(); }

  // Adds `g` to the gradient slot of node `id` (no-op for untracked nodes).
  void accumulate(std::size_t id, const Tensor& g);

  // Reverse sweep from a 1x1 loss. Returns the gradient of each requested
  // leaf; unreachable leaves get zeros. Throws ContractError for a non-scalar
  // loss and NumericError if a non-finite gradient appears.
  std::vector<Tensor> gradients(const Var& loss, std::span<const Var> wrt);

 private:
  struct Node {
    std::string op;
    Tensor value;
    Tensor grad;
    bool tracked = false;
    bool has_grad = false;
    std::vector<std::size_t> inputs;
    Backward backward;
  };
  std::vector<Node> nodes_;
};

// Primitive ops. All operands must live on the same tape.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
// a [n x m] + bias [1 x m] broadcast over rows.
Var add_row(const Var& a, const Var& bias);
// Element-wise product.
Var mul(const Var& a, const Var& b);
Var matmul(const Var& a, const Var& b);
// scale * a + shift
Var affine(const Var& a, double scale, double shift = 0.0);
Var relu(const Var& a);
Var sigmoid(const Var& a);
// log(max(a, floor)); gradient is zero where the floor is active.
Var log_floor(const Var& a, double floor);
Var sum(const Var& a);
Var mean(const Var& a);
// [a | b] along columns.
Var concat_cols(const Var& a, const Var& b);
// [a ; b] along rows.
Var concat_rows(const Var& a, const Var& b);
// out[i] = a[index[i]]
Var index_rows(const Var& a, std::vector<std::uint32_t> index);
// out[index[i]] += a[i], with `out_rows` output rows.
Var scatter_sum_rows(const Var& a, std::vector<std::uint32_t> index, std::size_t out_rows);

// Central finite differences (f(x + eps e) - f(x - eps e)) / 2 eps for every
// coordinate of every tensor in `params`. Throws NumericError if two baseline
// evaluations of f disagree.
std::vector<Tensor> finite_difference(const std::function<double(const std::vector<Tensor>&)>& f,
                                      std::vector<Tensor> params, double eps);

// max |a - b| / max(|a|, |b|, floor) over all coordinates.
double max_relative_error(const Tensor& a, const Tensor& b, double floor = 1e-8);
// ||a - b|| / max(||a||, ||b||, floor) in the Frobenius norm.
double relative_error(const Tensor& a, const Tensor& b, double floor = 1e-12);

}  // namespace prolink
