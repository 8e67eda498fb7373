#include "prolink/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "prolink/errors.hpp"

namespace prolink {

namespace {

Tape& common_tape(const Var& a, const Var& b, const char* op) {
  if (!a.valid() || a.tape() != b.tape())
    throw ContractError(std::string(op) + ": operands live on different tapes");
  return *a.tape();
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw ContractError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                        std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                        std::to_string(b.cols()));
}

}  // namespace

const Tensor& Var::value() const {
  if (!tape_) throw ContractError("Var: null handle");
  return tape_->value(id_);
}

Var Tape::leaf(Tensor value, bool track) {
  if (!value.all_finite()) throw NumericError("non-finite value in leaf tensor");
  Node n;
  n.op = "leaf";
  n.value = std::move(value);
  n.tracked = track;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(std::string op, Tensor value, std::vector<std::size_t> inputs,
                 Backward backward) {
  if (!value.all_finite()) throw NumericError("non-finite value produced by op '" + op + "'");
  Node n;
  n.op = std::move(op);
  n.value = std::move(value);
  n.tracked = std::any_of(inputs.begin(), inputs.end(),
                          [&](std::size_t i) { return nodes_.at(i).tracked; });
  n.inputs = std::move(inputs);
  if (n.tracked) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

void Tape::accumulate(std::size_t id, const Tensor& g) {
  Node& n = nodes_.at(id);
  if (!n.tracked) return;
  if (!n.has_grad) {
    n.grad = g;
    n.has_grad = true;
    return;
  }
  auto dst = n.grad.data();
  auto src = g.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

std::vector<Tensor> Tape::gradients(const Var& loss, std::span<const Var> wrt) {
  if (loss.tape() != this) throw ContractError("gradients: loss is not on this tape");
  const Tensor& lv = value(loss.id());
  if (lv.rows() != 1 || lv.cols() != 1) throw ContractError("gradients: loss must be a scalar");
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad = Tensor();
  }
  accumulate(loss.id(), Tensor::scalar(1.0));
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.backward) continue;
    if (!n.grad.all_finite())
      throw NumericError("non-finite gradient flowing into op '" + n.op + "'");
    n.backward(*this, n.grad);
  }
  std::vector<Tensor> out;
  out.reserve(wrt.size());
  for (const auto& v : wrt) {
    const Node& n = nodes_.at(v.id());
    if (n.has_grad) {
      if (!n.grad.all_finite()) throw NumericError("non-finite gradient at leaf");
      out.push_back(n.grad);
    } else {
      out.emplace_back(n.value.rows(), n.value.cols(), 0.0);
    }
  }
  return out;
}

Var add(const Var& a, const Var& b) {
  Tape& t = common_tape(a, b, "add");
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  auto o = out.data();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
  const auto ia = a.id(), ib = b.id();
  return t.record("add", std::move(out), {ia, ib}, [ia, ib](Tape& tp, const Tensor& g) {
    tp.accumulate(ia, g);
    tp.accumulate(ib, g);
  });
}

Var sub(const Var& a, const Var& b) {
  Tape& t = common_tape(a, b, "sub");
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  auto o = out.data();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bv[i];
  const auto ia = a.id(), ib = b.id();
  return t.record("sub", std::move(out), {ia, ib}, [ia, ib](Tape& tp, const Tensor& g) {
    tp.accumulate(ia, g);
    Tensor neg = g;
    for (auto& v : neg.data()) v = -v;
    tp.accumulate(ib, neg);
  });
}

Var add_row(const Var& a, const Var& bias) {
  Tape& t = common_tape(a, bias, "add_row");
  const Tensor& av = a.value();
  const Tensor& bv = bias.value();
  if (bv.rows() != 1 || bv.cols() != av.cols())
    throw ContractError("add_row: bias must be 1 x cols(a)");
  Tensor out = av;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += bv[c];
  const auto ia = a.id(), ib = bias.id();
  return t.record("add_row", std::move(out), {ia, ib}, [ia, ib](Tape& tp, const Tensor& g) {
    tp.accumulate(ia, g);
    if (!tp.tracked(ib)) return;
    Tensor gb(1, g.cols(), 0.0);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) gb[c] += g(r, c);
    tp.accumulate(ib, gb);
  });
}

Var mul(const Var& a, const Var& b) {
  Tape& t = common_tape(a, b, "mul");
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  auto o = out.data();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bv[i];
  const auto ia = a.id(), ib = b.id();
  return t.record("mul", std::move(out), {ia, ib}, [ia, ib](Tape& tp, const Tensor& g) {
    const Tensor& av = tp.value(ia);
    const Tensor& bv = tp.value(ib);
    if (tp.tracked(ia)) {
      Tensor ga = g;
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= bv[i];
      tp.accumulate(ia, ga);
    }
    if (tp.tracked(ib)) {
      Tensor gb = g;
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] *= av[i];
      tp.accumulate(ib, gb);
    }
  });
}

namespace {

// out[n x m] = a[n x k] * b[k x m]
void gemm(const Tensor& a, const Tensor& b, Tensor& out) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    double* orow = out.row(i).data();
    const double* arow = a.row(i).data();
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b.row(p).data();
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  }
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  Tape& t = common_tape(a, b, "matmul");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.rows()) throw ContractError("matmul: inner dimensions differ");
  Tensor out(av.rows(), bv.cols(), 0.0);
  gemm(av, bv, out);
  const auto ia = a.id(), ib = b.id();
  return t.record("matmul", std::move(out), {ia, ib}, [ia, ib](Tape& tp, const Tensor& g) {
    const Tensor& av = tp.value(ia);
    const Tensor& bv = tp.value(ib);
    if (tp.tracked(ia)) {
      // dA = G * B^T
      Tensor ga(av.rows(), av.cols(), 0.0);
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t p = 0; p < bv.rows(); ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < g.cols(); ++j) s += g(i, j) * bv(p, j);
          ga(i, p) = s;
        }
      tp.accumulate(ia, ga);
    }
    if (tp.tracked(ib)) {
      // dB = A^T * G
      Tensor gb(bv.rows(), bv.cols(), 0.0);
      for (std::size_t i = 0; i < av.rows(); ++i)
        for (std::size_t p = 0; p < av.cols(); ++p) {
          const double x = av(i, p);
          if (x == 0.0) continue;
          for (std::size_t j = 0; j < g.cols(); ++j) gb(p, j) += x * g(i, j);
        }
      tp.accumulate(ib, gb);
    }
  });
}

Var affine(const Var& a, double scale, double shift) {
  Tape& t = *a.tape();
  Tensor out = a.value();
  for (auto& v : out.data()) v = scale * v + shift;
  const auto ia = a.id();
  return t.record("affine", std::move(out), {ia}, [ia, scale](Tape& tp, const Tensor& g) {
    Tensor ga = g;
    for (auto& v : ga.data()) v *= scale;
    tp.accumulate(ia, ga);
  });
}

Var relu(const Var& a) {
  Tape& t = *a.tape();
  Tensor out = a.value();
  for (auto& v : out.data()) v = v > 0.0 ? v : 0.0;
  const auto ia = a.id();
  return t.record("relu", std::move(out), {ia}, [ia](Tape& tp, const Tensor& g) {
    const Tensor& x = tp.value(ia);
    Tensor ga = g;
    for (std::size_t i = 0; i < ga.size(); ++i)
      if (!(x[i] > 0.0)) ga[i] = 0.0;
    tp.accumulate(ia, ga);
  });
}

Var sigmoid(const Var& a) {
  Tape& t = *a.tape();
  Tensor out = a.value();
  for (auto& v : out.data())
    v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  const auto ia = a.id();
  const auto self = t.size();
  return t.record("sigmoid", std::move(out), {ia}, [ia, self](Tape& tp, const Tensor& g) {
    const Tensor& y = tp.value(self);
    Tensor ga = g;
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= y[i] * (1.0 - y[i]);
    tp.accumulate(ia, ga);
  });
}

Var log_floor(const Var& a, double floor) {
  Tape& t = *a.tape();
  Tensor out = a.value();
  for (auto& v : out.data()) v = std::log(std::max(v, floor));
  const auto ia = a.id();
  return t.record("log", std::move(out), {ia}, [ia, floor](Tape& tp, const Tensor& g) {
    const Tensor& x = tp.value(ia);
    Tensor ga = g;
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] = x[i] > floor ? ga[i] / x[i] : 0.0;
    tp.accumulate(ia, ga);
  });
}

Var sum(const Var& a) {
  Tape& t = *a.tape();
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const auto ia = a.id();
  return t.record("sum", Tensor::scalar(s), {ia}, [ia](Tape& tp, const Tensor& g) {
    const Tensor& x = tp.value(ia);
    tp.accumulate(ia, Tensor(x.rows(), x.cols(), g.item()));
  });
}

Var mean(const Var& a) {
  const auto n = a.value().size();
  if (n == 0) throw ContractError("mean of an empty tensor");
  return affine(sum(a), 1.0 / static_cast<double>(n));
}

Var concat_cols(const Var& a, const Var& b) {
  Tape& t = common_tape(a, b, "concat_cols");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rows() != bv.rows()) throw ContractError("concat_cols: row counts differ");
  const std::size_t ca = av.cols(), cb = bv.cols();
  Tensor out(av.rows(), ca + cb);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    std::copy(av.row(r).begin(), av.row(r).end(), out.row(r).begin());
    std::copy(bv.row(r).begin(), bv.row(r).end(), out.row(r).begin() + ca);
  }
  const auto ia = a.id(), ib = b.id();
  return t.record("concat_cols", std::move(out), {ia, ib},
                  [ia, ib, ca, cb](Tape& tp, const Tensor& g) {
                    Tensor ga(g.rows(), ca), gb(g.rows(), cb);
                    for (std::size_t r = 0; r < g.rows(); ++r) {
                      auto gr = g.row(r);
                      std::copy(gr.begin(), gr.begin() + ca, ga.row(r).begin());
                      std::copy(gr.begin() + ca, gr.end(), gb.row(r).begin());
                    }
                    tp.accumulate(ia, ga);
                    tp.accumulate(ib, gb);
                  });
}

Var concat_rows(const Var& a, const Var& b) {
  Tape& t = common_tape(a, b, "concat_rows");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.cols()) throw ContractError("concat_rows: column counts differ");
  const std::size_t ra = av.rows(), rb = bv.rows(), cols = av.cols();
  std::vector<double> data(av.data().begin(), av.data().end());
  data.insert(data.end(), bv.data().begin(), bv.data().end());
  Tensor out(ra + rb, cols, std::move(data));
  const auto ia = a.id(), ib = b.id();
  return t.record("concat_rows", std::move(out), {ia, ib},
                  [ia, ib, ra, rb, cols](Tape& tp, const Tensor& g) {
                    auto gd = g.data();
                    tp.accumulate(ia, Tensor(ra, cols, {gd.begin(), gd.begin() + ra * cols}));
                    tp.accumulate(ib, Tensor(rb, cols, {gd.begin() + ra * cols, gd.end()}));
                  });
}

Var index_rows(const Var& a, std::vector<std::uint32_t> index) {
  Tape& t = *a.tape();
  const Tensor& av = a.value();
  const std::size_t cols = av.cols();
  Tensor out(index.size(), cols);
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= av.rows()) throw ContractError("index_rows: index out of range");
    std::copy(av.row(index[i]).begin(), av.row(index[i]).end(), out.row(i).begin());
  }
  const auto ia = a.id();
  const std::size_t rows = av.rows();
  return t.record("index_rows", std::move(out), {ia},
                  [ia, rows, cols, index = std::move(index)](Tape& tp, const Tensor& g) {
                    Tensor ga(rows, cols, 0.0);
                    for (std::size_t i = 0; i < index.size(); ++i) {
                      auto dst = ga.row(index[i]);
                      auto src = g.row(i);
                      for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
                    }
                    tp.accumulate(ia, ga);
                  });
}

Var scatter_sum_rows(const Var& a, std::vector<std::uint32_t> index, std::size_t out_rows) {
  Tape& t = *a.tape();
  const Tensor& av = a.value();
  if (index.size() != av.rows()) throw ContractError("scatter_sum_rows: one index per row required");
  const std::size_t cols = av.cols();
  Tensor out(out_rows, cols, 0.0);
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= out_rows) throw ContractError("scatter_sum_rows: index out of range");
    auto dst = out.row(index[i]);
    auto src = av.row(i);
    for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
  }
  const auto ia = a.id();
  return t.record("scatter_sum_rows", std::move(out), {ia},
                  [ia, cols, index = std::move(index)](Tape& tp, const Tensor& g) {
                    Tensor ga(index.size(), cols);
                    for (std::size_t i = 0; i < index.size(); ++i)
                      std::copy(g.row(index[i]).begin(), g.row(index[i]).end(),
                                ga.row(i).begin());
                    tp.accumulate(ia, ga);
                  });
}

std::vector<Tensor> finite_difference(const std::function<double(const std::vector<Tensor>&)>& f,
                                      std::vector<Tensor> params, double eps) {
  if (!(eps > 0.0)) throw ContractError("finite_difference: eps must be positive");
  const double base1 = f(params);
  const double base2 = f(params);
  if (base1 != base2 && !(std::isnan(base1) && std::isnan(base2)))
    throw NumericError("finite_difference: objective is not deterministic");
  std::vector<Tensor> grads;
  grads.reserve(params.size());
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor g(params[p].rows(), params[p].cols(), 0.0);
    for (std::size_t i = 0; i < params[p].size(); ++i) {
      const double x = params[p][i];
      params[p][i] = x + eps;
      const double up = f(params);
      params[p][i] = x - eps;
      const double down = f(params);
      params[p][i] = x;
      g[i] = (up - down) / (2.0 * eps);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

double max_relative_error(const Tensor& a, const Tensor& b, double floor) {
  if (!a.same_shape(b)) throw ContractError("max_relative_error: shape mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

double relative_error(const Tensor& a, const Tensor& b, double floor) {
  if (!a.same_shape(b)) throw ContractError("relative_error: shape mismatch");
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), floor});
}

}  // namespace prolink
