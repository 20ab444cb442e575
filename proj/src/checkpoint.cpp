#include "hosdp/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "hosdp/error.hpp"

namespace hosdp {
namespace {

template <typename T>
void put_le(std::ostream& out, T v) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) throw ParseError(0, "checkpoint truncated");
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
  return v;
}

void put_string(std::ostream& out, const std::string& s) {
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_bytes(std::istream& in, std::uint64_t n) {
  std::string s(n, '\0');
  if (n && !in.read(s.data(), static_cast<std::streamsize>(n))) throw ParseError(0, "checkpoint truncated");
  return s;
}

}  // namespace

const std::string* Checkpoint::section(const std::string& name) const {
  for (const auto& [k, v] : sections)
    if (k == name) return &v;
  return nullptr;
}

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  out.write(kCheckpointMagic, 8);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, ckpt.tensors.size());
  for (const auto& nt : ckpt.tensors) {
    put_string(out, nt.name);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(nt.value.rank()));
    for (auto e : nt.value.shape()) put_le<std::uint64_t>(out, e);
    for (double x : nt.value.data()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(x));
  }
  put_le<std::uint64_t>(out, ckpt.sections.size());
  for (const auto& [name, body] : ckpt.sections) {
    put_string(out, name);
    put_le<std::uint64_t>(out, body.size());
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
  }
  if (!out) throw SerializationError("failed writing checkpoint");
}

Checkpoint read_checkpoint(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw ParseError(0, "not a checkpoint file (bad magic)");
  }
  const auto version = get_le<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw ParseError(0, "unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  const auto count = get_le<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    NamedTensor nt;
    nt.name = get_bytes(in, get_le<std::uint32_t>(in));
    const auto rank = get_le<std::uint32_t>(in);
    if (rank == 0 || rank > 8) throw ParseError(0, "bad tensor rank in checkpoint: " + nt.name);
    Shape shape;
    for (std::uint32_t r = 0; r < rank; ++r) shape.push_back(get_le<std::uint64_t>(in));
    std::vector<double> data(shape_size(shape));
    for (double& x : data) x = std::bit_cast<double>(get_le<std::uint64_t>(in));
    nt.value = Tensor(std::move(shape), std::move(data));
    ckpt.tensors.push_back(std::move(nt));
  }
  const auto nsec = get_le<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < nsec; ++i) {
    std::string name = get_bytes(in, get_le<std::uint32_t>(in));
    std::string body = get_bytes(in, get_le<std::uint64_t>(in));
    ckpt.sections.emplace_back(std::move(name), std::move(body));
  }
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SerializationError("cannot open " + path + " for writing");
  write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(0, "cannot open checkpoint " + path);
  return read_checkpoint(in);
}

std::vector<NamedTensor> export_parameters(const ParameterStore& store) {
  std::vector<NamedTensor> out;
  for (const Parameter* p : store.all()) out.push_back({p->name, p->value});
  return out;
}

void import_parameters(ParameterStore& store, const std::vector<NamedTensor>& tensors,
                       const std::string& prefix) {
  for (Parameter* p : store.all()) {
    const std::string want = prefix + p->name;
    const NamedTensor* found = nullptr;
    for (const auto& nt : tensors)
      if (nt.name == want) found = &nt;
    if (!found) throw ParseError(0, "checkpoint lacks parameter " + want);
    if (found->value.shape() != p->value.shape()) {
      throw ParseError(0, "checkpoint parameter " + want + " has shape " +
                              shape_string(found->value.shape()) + ", expected " +
                              shape_string(p->value.shape()));
    }
    p->value = found->value;
  }
}

}  // namespace hosdp
