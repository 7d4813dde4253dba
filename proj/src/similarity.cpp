// Copyright (c) 2026 the zdda authors
// SPDX-License-Identifier: Apache-2.0
#include "zdda/eval/similarity.hpp"

#include <zlib.h>

#include <cmath>
#include <sstream>

#include "zdda/errors.hpp"

namespace zdda {
namespace {

// Buffered gz reader (plain files read transparently).
class Source {
 public:
  explicit Source(const std::filesystem::path& path)
      : path_(path.string()), f_(gzopen(path_.c_str(), "rb")) {
    if (!f_) throw FormatError("cannot open " + path_);
  }
  ~Source() {
    if (f_) gzclose(f_);
  }
  Source(const Source&) = delete;
  Source& operator=(const Source&) = delete;

  int get() {
    if (pos_ == len_) {
      len_ = gzread(f_, buf_, sizeof(buf_));
      pos_ = 0;
      if (len_ <= 0) return -1;
    }
    return static_cast<unsigned char>(buf_[pos_++]);
  }

  bool read_exact(void* dst, std::size_t n) {
    auto* p = static_cast<char*>(dst);
    for (std::size_t i = 0; i < n; ++i) {
      const int c = get();
      if (c < 0) return false;
      p[i] = static_cast<char>(c);
    }
    return true;
  }

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  gzFile f_;
  char buf_[1 << 16];
  int pos_ = 0, len_ = 0;
};

void normalize_or_reject(Vec<float>& v, const std::string& word) {
  const float norm = v.norm();
  if (!(norm > 0.0f) || !std::isfinite(norm))
    throw FormatError("embedding for '" + word + "' is zero or non-finite");
  v /= norm;
}

}  // namespace

Vec<float> EmbeddingTable::embed_label(const std::string& label) const {
  std::istringstream words(label);
  Vec<float> sum = Vec<float>::Zero(dim);
  std::string w;
  int count = 0;
  while (words >> w) {
    const auto it = vectors.find(w);
    if (it == vectors.end()) throw VocabularyError("missing word: " + w);
    sum += it->second;
    ++count;
  }
  if (count == 0) throw VocabularyError("empty label");
  normalize_or_reject(sum, label);
  return sum;
}

EmbeddingTable load_embeddings_word2vec_bin(
    const std::filesystem::path& path) {
  Source in(path);
  std::string header;
  for (int c = in.get(); c >= 0 && c != '\n'; c = in.get())
    header.push_back(static_cast<char>(c));
  std::istringstream hs(header);
  long long vocab = 0, dim = 0;
  if (!(hs >> vocab >> dim) || vocab <= 0 || dim <= 0)
    throw FormatError(in.path() + ": bad word-vector header");

  EmbeddingTable table;
  table.dim = static_cast<int>(dim);
  table.vectors.reserve(static_cast<std::size_t>(vocab));
  for (long long i = 0; i < vocab; ++i) {
    std::string word;
    int c = in.get();
    while (c == '\n' || c == ' ') c = in.get();  // the entry separator
    for (; c >= 0 && c != ' '; c = in.get()) word.push_back(static_cast<char>(c));
    if (word.empty()) throw FormatError(in.path() + ": truncated vocabulary");
    Vec<float> v(dim);
    if (!in.read_exact(v.data(), sizeof(float) * static_cast<std::size_t>(dim)))
      throw FormatError(in.path() + ": truncated vector payload");
    normalize_or_reject(v, word);
    table.vectors.emplace(std::move(word), std::move(v));
  }
  return table;
}

EmbeddingTable load_embeddings_text(const std::filesystem::path& path) {
  Source in(path);
  EmbeddingTable table;
  std::string line;
  for (;;) {
    line.clear();
    int c = in.get();
    if (c < 0) break;
    for (; c >= 0 && c != '\n'; c = in.get()) line.push_back(static_cast<char>(c));
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    std::vector<float> coeffs;
    double x;
    while (ls >> x) coeffs.push_back(static_cast<float>(x));
    if (coeffs.empty())
      throw FormatError(path.string() + ": no coefficients for '" + word + "'");
    if (table.dim == 0) table.dim = static_cast<int>(coeffs.size());
    if (static_cast<int>(coeffs.size()) != table.dim)
      throw FormatError(path.string() + ": inconsistent dimension at '" +
                        word + "'");
    Vec<float> v = Eigen::Map<Vec<float>>(coeffs.data(), table.dim);
    normalize_or_reject(v, word);
    table.vectors.emplace(std::move(word), std::move(v));
  }
  if (table.vectors.empty())
    throw FormatError(path.string() + ": empty embedding table");
  return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  // The binary format leads with "<vocab> <dim>\n" and then raw float bytes;
  // sniff the first line and the bytes right after it.
  bool binary = false;
  {
    Source in(path);
    std::string header;
    for (int c = in.get(); c >= 0 && c != '\n' && header.size() < 64;
         c = in.get())
      header.push_back(static_cast<char>(c));
    std::istringstream hs(header);
    long long vocab = 0, dim = 0;
    std::string trailing;
    if ((hs >> vocab >> dim) && !(hs >> trailing) && vocab > 0 && dim > 0) {
      for (int i = 0; i < 256; ++i) {
        const int c = in.get();
        if (c < 0) break;
        if (c < 0x09) {
          binary = true;
          break;
        }
      }
    }
  }
  return binary ? load_embeddings_word2vec_bin(path)
                : load_embeddings_text(path);
}

double semantic_similarity(const std::vector<std::string>& labels_a,
                           const std::vector<std::string>& labels_b,
                           const EmbeddingTable& emb) {
  if (labels_a.empty() || labels_b.empty())
    throw CapacityError("semantic_similarity: empty label list");

  // Collect every missing word first so the error names all of them.
  std::string misses;
  for (const auto* labels : {&labels_a, &labels_b})
    for (const auto& label : *labels) {
      std::istringstream words(label);
      std::string w;
      while (words >> w)
        if (!emb.contains(w)) misses += (misses.empty() ? "" : ", ") + w;
    }
  if (!misses.empty())
    throw VocabularyError("words missing from embedding table: " + misses);

  std::vector<Vec<float>> va, vb;
  for (const auto& l : labels_a) va.push_back(emb.embed_label(l));
  for (const auto& l : labels_b) vb.push_back(emb.embed_label(l));

  double total = 0.0;
  for (const auto& a : va)
    for (const auto& b : vb) total += static_cast<double>(a.dot(b));
  return total / (static_cast<double>(va.size()) * static_cast<double>(vb.size()));
}

}  // namespace zdda
