// Copyright (c) 2026 the zdda authors
// SPDX-License-Identifier: Apache-2.0
#ifndef ZDDA_EVAL_SIMILARITY_HPP_
#define ZDDA_EVAL_SIMILARITY_HPP_

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "zdda/image.hpp"

namespace zdda {

// Word -> unit-norm vector table. Vectors are normalized at load.
struct EmbeddingTable {
  int dim = 0;
  std::unordered_map<std::string, Vec<float>> vectors;

  bool contains(const std::string& word) const {
    return vectors.find(word) != vectors.end();
  }

  // A label embeds as the renormalized mean of its word vectors
  // (labels like "dining room" are split on whitespace).
  Vec<float> embed_label(const std::string& label) const;
};

// Loads the classic binary word-vector format ("<vocab> <dim>\n" header,
// then "<word> " followed by dim little-endian floats per entry) or a plain
// text table ("word v1 ... vd" per line). The format is detected from the
// content; gzip-compressed files are accepted.
EmbeddingTable load_embeddings(const std::filesystem::path& path);
EmbeddingTable load_embeddings_word2vec_bin(const std::filesystem::path& path);
EmbeddingTable load_embeddings_text(const std::filesystem::path& path);

// Mean cosine similarity over all cross pairs (a, b), a from labels_a and
// b from labels_b. Symmetric in its arguments; result lies in [-1, 1].
double semantic_similarity(const std::vector<std::string>& labels_a,
                           const std::vector<std::string>& labels_b,
                           const EmbeddingTable& emb);

}  // namespace zdda

#endif  // ZDDA_EVAL_SIMILARITY_HPP_
