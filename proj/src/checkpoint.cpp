#include "prolink/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "prolink/errors.hpp"

namespace prolink {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'P', 'L', 'C', 'K', 'P', 'T', '0', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw DataError("checkpoint: truncated file");
  return v;
}

}  // namespace

const Tensor& Checkpoint::at(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return t.tensor;
  throw DataError("checkpoint: missing tensor '" + name + "'");
}

void save_checkpoint(const std::string& path_prefix, const Checkpoint& ckpt) {
  std::ofstream bin(path_prefix + ".bin", std::ios::binary);
  std::ofstream manifest(path_prefix + ".manifest");
  if (!bin || !manifest) throw DataError("checkpoint: cannot write '" + path_prefix + "'");
  for (const auto& [k, v] : ckpt.metadata) manifest << "# " << k << '\t' << v << '\n';

  bin.write(kMagic, sizeof kMagic);
  put_u64(bin, ckpt.tensors.size());
  std::uint64_t offset = sizeof kMagic + 8;
  for (const auto& [name, t] : ckpt.tensors) {
    put_u64(bin, name.size());
    bin.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u64(bin, t.rows());
    put_u64(bin, t.cols());
    offset += 8 + name.size() + 16;
    manifest << name << '\t' << t.rows() << '\t' << t.cols() << '\t' << offset << '\n';
    bin.write(reinterpret_cast<const char*>(t.data().data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
    offset += t.size() * sizeof(double);
  }
  if (!bin || !manifest) throw DataError("checkpoint: write failed for '" + path_prefix + "'");
}

Checkpoint load_checkpoint(const std::string& path_prefix) {
  std::ifstream bin(path_prefix + ".bin", std::ios::binary);
  if (!bin) throw DataError("checkpoint: cannot open '" + path_prefix + ".bin'");
  char magic[8];
  if (!bin.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw DataError("checkpoint: bad magic in '" + path_prefix + ".bin'");
  Checkpoint ckpt;
  const auto count = get_u64(bin);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = get_u64(bin);
    if (len > (1u << 20)) throw DataError("checkpoint: implausible tensor name length");
    std::string name(len, '\0');
    if (!bin.read(name.data(), static_cast<std::streamsize>(len)))
      throw DataError("checkpoint: truncated file");
    const auto rows = get_u64(bin);
    const auto cols = get_u64(bin);
    if (rows > (1u << 24) || cols > (1u << 24)) throw DataError("checkpoint: implausible shape");
    std::vector<double> data(rows * cols);
    if (!bin.read(reinterpret_cast<char*>(data.data()),
                  static_cast<std::streamsize>(data.size() * sizeof(double))))
      throw DataError("checkpoint: truncated file");
    Tensor t(rows, cols, std::move(data));
    if (!t.all_finite()) throw NumericError("checkpoint: tensor '" + name + "' is not finite");
    ckpt.tensors.push_back({std::move(name), std::move(t)});
  }

  std::ifstream manifest(path_prefix + ".manifest");
  std::string line;
  while (manifest && std::getline(manifest, line)) {
    if (line.rfind("# ", 0) != 0) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) continue;
    ckpt.metadata[line.substr(2, tab - 2)] = line.substr(tab + 1);
  }
  return ckpt;
}

}  // namespace prolink
