#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace hosdp {

// Pretrained vectors: one line per token, the token followed by D
// whitespace-separated numbers. Blank lines are ignored.
struct PretrainedEmbeddings {
  std::size_t dim = 0;
  std::map<std::string, std::vector<double>> vectors;

  const std::vector<double>* find(const std::string& token) const;
  std::size_t size() const { return vectors.size(); }
};

PretrainedEmbeddings read_embeddings(std::istream& in);
PretrainedEmbeddings load_embeddings_file(const std::string& path);

}  // namespace hosdp
