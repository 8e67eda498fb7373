#include "prolink/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "prolink/errors.hpp"

namespace prolink {

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) throw ContractError("Tensor: data length does not match shape");
}

double Tensor::item() const {
  if (rows_ != 1 || cols_ != 1) throw ContractError("Tensor::item on a non-scalar tensor");
  return data_[0];
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

}  // namespace prolink
