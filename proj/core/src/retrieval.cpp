#include "eegret/retrieval.hpp"

#include <algorithm>
#include <cmath>

#include "eegret/errors.hpp"
#include "eegret/hungarian.hpp"

namespace eegret {

namespace {

Vector<double> row_norms(const RowMatrix<double>& x, const char* what) {
    Vector<double> n = x.rowwise().norm();
    for (Eigen::Index i = 0; i < n.size(); ++i)
        if (!(n[i] > 0.0) || !std::isfinite(n[i]))
            throw DataError(std::string(what) + " row " + std::to_string(i) + " has zero or non-finite norm");
    return n;
}

double label_hits(const SimilarityMatrix& s, const std::vector<int>& perm) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < perm.size(); ++i)
        hits += s.candidate_labels[static_cast<std::size_t>(perm[i])] == s.query_labels[i];
    return static_cast<double>(hits) / static_cast<double>(perm.size());
}

void check_labels(const SimilarityMatrix& s) {
    if (s.query_labels.size() != s.n_queries() || s.candidate_labels.size() != s.n_candidates())
        throw ShapeError("similarity labels do not match the score matrix");
}

}  // namespace

SimilarityMatrix cosine_matrix(const RowMatrix<double>& e, const RowMatrix<double>& v, std::vector<int> query_labels,
                               std::vector<int> candidate_labels) {
    if (e.cols() != v.cols()) throw ShapeError("query and candidate embeddings differ in width");
    const Vector<double> ne = row_norms(e, "query");
    const Vector<double> nv = row_norms(v, "candidate");
    SimilarityMatrix s;
    s.scores = ne.cwiseInverse().asDiagonal() * (e * v.transpose()) * nv.cwiseInverse().asDiagonal();
    s.query_labels = std::move(query_labels);
    s.candidate_labels = std::move(candidate_labels);
    check_labels(s);
    return s;
}

std::vector<std::size_t> true_ranks(const SimilarityMatrix& s) {
    check_labels(s);
    const std::size_t m = s.n_candidates();
    std::vector<std::size_t> ranks(s.n_queries(), m);
    for (std::size_t i = 0; i < s.n_queries(); ++i) {
        const auto row = s.scores.row(static_cast<Eigen::Index>(i));
        for (std::size_t j = 0; j < m; ++j) {
            if (s.candidate_labels[j] != s.query_labels[i]) continue;
            const double sj = row[static_cast<Eigen::Index>(j)];
            std::size_t rank = 0;
            for (std::size_t k = 0; k < m; ++k) {
                const double sk = row[static_cast<Eigen::Index>(k)];
                rank += sk > sj || (sk == sj && k < j);
            }
            ranks[i] = std::min(ranks[i], rank);
        }
    }
    return ranks;
}

double top_k_accuracy(const SimilarityMatrix& s, int k) {
    if (k < 1 || static_cast<std::size_t>(k) > s.n_candidates())
        throw ParameterError("top-k needs 1 <= k <= n_candidates");
    if (s.n_queries() == 0) throw ParameterError("top-k needs at least one query");
    const auto ranks = true_ranks(s);
    const auto hits = std::count_if(ranks.begin(), ranks.end(), [k](std::size_t r) { return r < static_cast<std::size_t>(k); });
    return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

Assignment hungarian_assign(const SimilarityMatrix& s) {
    if (s.scores.rows() != s.scores.cols()) throw ParameterError("Hungarian retrieval needs a square matrix");
    Assignment a;
    a.permutation = solve_assignment_min(-s.scores);
    for (std::size_t i = 0; i < a.permutation.size(); ++i)
        a.total_score += s.scores(static_cast<Eigen::Index>(i), a.permutation[i]);
    return a;
}

double hungarian_top_k(const SimilarityMatrix& s, int k) {
    if (s.scores.rows() != s.scores.cols()) throw ParameterError("Hungarian retrieval needs a square matrix");
    check_labels(s);
    const std::size_t n = s.n_queries();
    if (k < 1 || static_cast<std::size_t>(k) > n) throw ParameterError("Hungarian top-k needs 1 <= k <= n");
    const RowMatrix<double> cost = -s.scores;
    std::vector<char> forbidden(n * n, 0);
    std::vector<char> hit(n, 0);
    for (int round = 0; round < k; ++round) {
        const auto perm = solve_assignment_min(cost, forbidden);
        for (std::size_t i = 0; i < n; ++i) {
            const auto j = static_cast<std::size_t>(perm[i]);
            hit[i] = hit[i] || s.candidate_labels[j] == s.query_labels[i];
            forbidden[i * n + j] = 1;
        }
    }
    return static_cast<double>(std::count(hit.begin(), hit.end(), 1)) / static_cast<double>(n);
}

std::string to_string(Protocol p) {
    return p == Protocol::standard ? "standard" : "hungarian";
}

Protocol parse_protocol(const std::string& s) {
    if (s == "standard") return Protocol::standard;
    if (s == "hungarian") return Protocol::hungarian;
    throw ParameterError("unknown retrieval protocol '" + s + "'");
}

RetrievalMetrics score_similarity(const SimilarityMatrix& s, Protocol protocol) {
    RetrievalMetrics m;
    m.protocol = protocol;
    m.n = s.n_queries();
    const int k5 = static_cast<int>(std::min<std::size_t>(5, s.n_candidates()));
    if (protocol == Protocol::standard) {
        m.top1 = top_k_accuracy(s, 1);
        m.top5 = top_k_accuracy(s, k5);
    } else {
        m.top1 = label_hits(s, hungarian_assign(s).permutation);
        m.top5 = hungarian_top_k(s, k5);
    }
    return m;
}

}  // namespace eegret
