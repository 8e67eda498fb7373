#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "prolink/tensor.hpp"

namespace prolink {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// Binary container of named tensors plus a text manifest.
//
// <path>.bin:       "PLCKPT01", u64 count, then per tensor
//                   u64 name_len, name, u64 rows, u64 cols, rows*cols f64 (LE)
// <path>.manifest:  "# key<TAB>value" metadata lines, then
//                   name<TAB>rows<TAB>cols<TAB>byte_offset_of_data
struct Checkpoint {
  std::vector<NamedTensor> tensors;
  std::map<std::string, std::string> metadata;

  const Tensor& at(const std::string& name) const;
};

void save_checkpoint(const std::string& path_prefix, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path_prefix);

}  // namespace prolink
