#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "hosdp/autograd.hpp"

namespace hosdp {

// Binary layout, all integers little-endian:
//   "HOSDPCKP"            8-byte magic
//   u32 version           currently 1
//   u64 count
//   count x { u32 name_len, name bytes, u32 rank, rank x u64 extent,
//             prod(extents) x f64 (IEEE-754, little-endian) }
//   u64 section_count
//   section_count x { u32 name_len, name bytes, u64 byte_len, bytes }
// Sections carry auxiliary text (model config, vocabulary).
struct NamedTensor {
  std::string name;
  Tensor value;
};

struct Checkpoint {
  std::vector<NamedTensor> tensors;
  std::vector<std::pair<std::string, std::string>> sections;

  const std::string* section(const std::string& name) const;
};

inline constexpr char kCheckpointMagic[9] = "HOSDPCKP";
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// Values of every parameter, in store order.
std::vector<NamedTensor> export_parameters(const ParameterStore& store);
// Copies checkpoint tensors into same-named parameters; every parameter must
// be present with a matching shape.
void import_parameters(ParameterStore& store, const std::vector<NamedTensor>& tensors,
                       const std::string& prefix = "");

}  // namespace hosdp
