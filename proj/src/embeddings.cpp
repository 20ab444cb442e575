#include "hosdp/embeddings.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "hosdp/error.hpp"

namespace hosdp {

const std::vector<double>* PretrainedEmbeddings::find(const std::string& token) const {
  auto it = vectors.find(token);
  return it == vectors.end() ? nullptr : &it->second;
}

PretrainedEmbeddings read_embeddings(std::istream& in) {
  PretrainedEmbeddings out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string token;
    if (!(fields >> token)) continue;
    std::vector<double> vec;
    std::string num;
    while (fields >> num) {
      try {
        std::size_t used = 0;
        const double v = std::stod(num, &used);
        if (used != num.size() || !std::isfinite(v)) throw std::invalid_argument(num);
        vec.push_back(v);
      } catch (const std::exception&) {
        throw ParseError(line_no, "embedding value '" + num + "' is not a finite number");
      }
    }
    if (vec.empty()) throw ParseError(line_no, "embedding line for '" + token + "' has no values");
    if (out.dim == 0) out.dim = vec.size();
    if (vec.size() != out.dim) {
      throw ParseError(line_no, "embedding for '" + token + "' has " + std::to_string(vec.size()) +
                                    " values, expected " + std::to_string(out.dim));
    }
    out.vectors[token] = std::move(vec);
  }
  return out;
}

PretrainedEmbeddings load_embeddings_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open embedding file " + path);
  return read_embeddings(in);
}

}  // namespace hosdp
