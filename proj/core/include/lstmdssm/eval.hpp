#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lstmdssm/parameters.hpp"
#include "lstmdssm/text.hpp"

namespace lstmdssm {

inline constexpr std::array<std::size_t, 3> kNdcgCutoffs = {1, 3, 10};

/// NDCG@k with gain 2^rel - 1 and discount 1 / log2(rank + 1). Zero when no
/// grade is positive. Throws InputError for k < 1 or grades outside 0..4.
double ndcg_at_k(std::span<const int> relevances_in_ranked_order, std::size_t k);

struct EvalResult {
    /// Mean NDCG over queries at 1, 3 and 10, in kNdcgCutoffs order.
    std::array<double, 3> mean_ndcg{};
    std::vector<std::array<double, 3>> per_query;

    double at(std::size_t k) const;
};

struct ScoredCandidate {
    std::size_t index = 0;
    double score = 0.0;
};

/// Candidates by descending cosine similarity to the query; ties keep input
/// order.
std::vector<ScoredCandidate> score_candidates(const LstmParameters& params,
                                              const WordSequence& query,
                                              std::span<const WordSequence> candidates,
                                              const TrigramVocabulary& vocab);

std::vector<std::size_t> rank_candidates(const LstmParameters& params, const WordSequence& query,
                                         std::span<const WordSequence> candidates,
                                         const TrigramVocabulary& vocab);

/// Ranks every judged query with the model and averages NDCG@{1,3,10}.
EvalResult evaluate_model(const LstmParameters& params, std::span<const JudgedRanking> judged,
                          const TrigramVocabulary& vocab);

/// Averages NDCG@{1,3,10} of externally produced rankings: orders[q] is a
/// permutation of judged[q]'s candidate indices.
EvalResult evaluate_orders(std::span<const JudgedRanking> judged,
                           std::span<const std::vector<std::size_t>> orders);

struct CorpusStats {
    std::size_t document_count = 0;
    double average_length = 0.0;
    std::unordered_map<std::string, std::size_t> document_frequency;

    std::size_t df(const std::string& term) const;
};

/// Statistics over the given documents. Throws InputError if empty or if
/// every document is empty.
CorpusStats build_corpus_stats(std::span<const WordSequence> documents);

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

/// Okapi BM25 summed over distinct query terms, with
/// idf = ln(1 + (N - df + 0.5) / (df + 0.5)).
double bm25_score(const WordSequence& query, const WordSequence& document,
                  const CorpusStats& stats, const Bm25Params& params = {});

/// Corpus statistics from the distinct candidates of all queries, then
/// stable BM25 ranking per query.
EvalResult evaluate_bm25(std::span<const JudgedRanking> judged, const Bm25Params& params = {});

struct EvalRow {
    std::string model;
    EvalResult result;
};

/// Model name and NDCG@1/3/10 as percentages with one decimal.
void print_eval_table(std::ostream& out, std::span<const EvalRow> rows);

}  // namespace lstmdssm
