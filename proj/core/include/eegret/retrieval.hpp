#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "eegret/params.hpp"

namespace eegret {

// Dense query x candidate scores plus the class of every row and column.
// A query is answered correctly when a candidate with its label ranks high.
struct SimilarityMatrix {
    RowMatrix<double> scores;
    std::vector<int> query_labels;
    std::vector<int> candidate_labels;

    std::size_t n_queries() const noexcept { return static_cast<std::size_t>(scores.rows()); }
    std::size_t n_candidates() const noexcept { return static_cast<std::size_t>(scores.cols()); }
};

struct Assignment {
    std::vector<int> permutation;  // candidate index per query
    double total_score = 0.0;
};

// Cosine similarity between every row of e and every row of v. Throws
// DataError on a zero-norm row.
SimilarityMatrix cosine_matrix(const RowMatrix<double>& e, const RowMatrix<double>& v, std::vector<int> query_labels,
                               std::vector<int> candidate_labels);

// 0-based rank of the best-ranked candidate sharing the query's label, ties
// broken toward the lower candidate index; n_candidates when none matches.
std::vector<std::size_t> true_ranks(const SimilarityMatrix& s);

double top_k_accuracy(const SimilarityMatrix& s, int k);

// Maximum-total one-to-one assignment (lexicographically smallest among
// optima). Square matrices only.
Assignment hungarian_assign(const SimilarityMatrix& s);

// k successive disjoint assignments, each round forbidding the pairs used by
// earlier rounds; a query counts as a hit if any round pairs it with a
// candidate of its own class.
double hungarian_top_k(const SimilarityMatrix& s, int k);

enum class Protocol { standard, hungarian };

std::string to_string(Protocol p);
Protocol parse_protocol(const std::string& s);

struct RetrievalMetrics {
    Protocol protocol = Protocol::standard;
    double top1 = 0.0;
    double top5 = 0.0;
    std::size_t n = 0;
};

// Top-1 / Top-5 (Top-k capped at the candidate count) under one protocol.
RetrievalMetrics score_similarity(const SimilarityMatrix& s, Protocol protocol);

}  // namespace eegret
