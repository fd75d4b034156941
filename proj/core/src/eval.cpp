#include "lstmdssm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>

#include "lstmdssm/error.hpp"
#include "lstmdssm/lstm.hpp"
#include "lstmdssm/ranking_loss.hpp"

namespace lstmdssm {

namespace {

double dcg(std::span<const int> grades, std::size_t k) {
    double total = 0.0;
    const std::size_t cut = std::min(k, grades.size());
    for (std::size_t pos = 0; pos < cut; ++pos) {
        const double gain = std::exp2(static_cast<double>(grades[pos])) - 1.0;
        total += gain / std::log2(static_cast<double>(pos) + 2.0);
    }
    return total;
}

std::vector<std::size_t> stable_order(const std::vector<double>& scores) {
    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

}  // namespace

double ndcg_at_k(std::span<const int> relevances_in_ranked_order, std::size_t k) {
    if (k < 1) throw InputError("ndcg_at_k: k must be >= 1");
    for (int g : relevances_in_ranked_order) {
        if (g < 0 || g > 4) throw InputError("ndcg_at_k: grade outside 0..4");
    }
    std::vector<int> ideal(relevances_in_ranked_order.begin(), relevances_in_ranked_order.end());
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    const double best = dcg(ideal, k);
    if (best == 0.0) return 0.0;
    return dcg(relevances_in_ranked_order, k) / best;
}

double EvalResult::at(std::size_t k) const {
    for (std::size_t i = 0; i < kNdcgCutoffs.size(); ++i) {
        if (kNdcgCutoffs[i] == k) return mean_ndcg[i];
    }
    throw InputError("EvalResult: no NDCG@" + std::to_string(k));
}

std::vector<ScoredCandidate> score_candidates(const LstmParameters& params,
                                              const WordSequence& query,
                                              std::span<const WordSequence> candidates,
                                              const TrigramVocabulary& vocab) {
    if (query.empty()) throw InputError("rank_candidates: empty query");
    if (candidates.empty()) throw InputError("rank_candidates: no candidates");
    const auto y_q = embed_words(params, query, vocab);
    std::vector<double> scores;
    scores.reserve(candidates.size());
    for (const auto& cand : candidates) {
        scores.push_back(cosine_similarity(y_q, embed_words(params, cand, vocab)));
    }
    std::vector<ScoredCandidate> out;
    for (std::size_t idx : stable_order(scores)) out.push_back({idx, scores[idx]});
    return out;
}

std::vector<std::size_t> rank_candidates(const LstmParameters& params, const WordSequence& query,
                                         std::span<const WordSequence> candidates,
                                         const TrigramVocabulary& vocab) {
    std::vector<std::size_t> order;
    for (const auto& sc : score_candidates(params, query, candidates, vocab)) {
        order.push_back(sc.index);
    }
    return order;
}

EvalResult evaluate_orders(std::span<const JudgedRanking> judged,
                           std::span<const std::vector<std::size_t>> orders) {
    if (judged.empty()) throw InputError("evaluate: no judged queries");
    if (orders.size() != judged.size()) throw InputError("evaluate: one order per query needed");
    EvalResult result;
    for (std::size_t q = 0; q < judged.size(); ++q) {
        std::vector<int> grades;
        for (std::size_t idx : orders[q]) grades.push_back(judged[q].candidates.at(idx).second);
        std::array<double, 3> row{};
        for (std::size_t c = 0; c < kNdcgCutoffs.size(); ++c) {
            row[c] = ndcg_at_k(grades, kNdcgCutoffs[c]);
        }
        result.per_query.push_back(row);
    }
    for (std::size_t c = 0; c < kNdcgCutoffs.size(); ++c) {
        double total = 0.0;
        for (const auto& row : result.per_query) total += row[c];
        result.mean_ndcg[c] = total / static_cast<double>(result.per_query.size());
    }
    return result;
}

EvalResult evaluate_model(const LstmParameters& params, std::span<const JudgedRanking> judged,
                          const TrigramVocabulary& vocab) {
    if (judged.empty()) throw InputError("evaluate_model: no judged queries");
    std::vector<std::vector<std::size_t>> orders;
    for (std::size_t q = 0; q < judged.size(); ++q) {
        std::vector<WordSequence> docs;
        for (const auto& [doc, grade] : judged[q].candidates) docs.push_back(doc);
        try {
            orders.push_back(rank_candidates(params, judged[q].query, docs, vocab));
        } catch (const DegenerateEmbeddingError& e) {
            throw DegenerateEmbeddingError("query " + std::to_string(q) + ": " + e.what());
        } catch (const DivergenceError& e) {
            throw DivergenceError("query " + std::to_string(q) + ": " + e.what());
        } catch (const InputError& e) {
            throw InputError("query " + std::to_string(q) + ": " + e.what());
        }
    }
    return evaluate_orders(judged, orders);
}

std::size_t CorpusStats::df(const std::string& term) const {
    auto it = document_frequency.find(term);
    return it == document_frequency.end() ? 0 : it->second;
}

CorpusStats build_corpus_stats(std::span<const WordSequence> documents) {
    if (documents.empty()) throw InputError("build_corpus_stats: no documents");
    CorpusStats stats;
    stats.document_count = documents.size();
    std::size_t total_length = 0;
    for (const auto& doc : documents) {
        total_length += doc.size();
        std::set<std::string> seen(doc.begin(), doc.end());
        for (const auto& term : seen) ++stats.document_frequency[term];
    }
    if (total_length == 0) throw InputError("build_corpus_stats: all documents are empty");
    stats.average_length =
        static_cast<double>(total_length) / static_cast<double>(stats.document_count);
    return stats;
}

double bm25_score(const WordSequence& query, const WordSequence& document,
                  const CorpusStats& stats, const Bm25Params& params) {
    std::map<std::string, std::size_t> tf;
    for (const auto& w : document) ++tf[w];
    const double n_docs = static_cast<double>(stats.document_count);
    const double len_norm = static_cast<double>(document.size()) / stats.average_length;

    double score = 0.0;
    std::set<std::string> terms(query.begin(), query.end());
    for (const auto& term : terms) {
        auto it = tf.find(term);
        if (it == tf.end()) continue;
        const double df = static_cast<double>(stats.df(term));
        const double idf = std::log(1.0 + (n_docs - df + 0.5) / (df + 0.5));
        const double f = static_cast<double>(it->second);
        score += idf * f * (params.k1 + 1.0) / (f + params.k1 * (1.0 - params.b + params.b * len_norm));
    }
    return score;
}

EvalResult evaluate_bm25(std::span<const JudgedRanking> judged, const Bm25Params& params) {
    if (judged.empty()) throw InputError("evaluate_bm25: no judged queries");
    std::set<WordSequence> distinct;
    for (const auto& j : judged) {
        for (const auto& [doc, grade] : j.candidates) distinct.insert(doc);
    }
    const std::vector<WordSequence> corpus(distinct.begin(), distinct.end());
    const auto stats = build_corpus_stats(corpus);

    std::vector<std::vector<std::size_t>> orders;
    for (const auto& j : judged) {
        std::vector<double> scores;
        for (const auto& [doc, grade] : j.candidates) {
            scores.push_back(bm25_score(j.query, doc, stats, params));
        }
        orders.push_back(stable_order(scores));
    }
    return evaluate_orders(judged, orders);
}

void print_eval_table(std::ostream& out, std::span<const EvalRow> rows) {
    std::size_t width = 5;
    for (const auto& r : rows) width = std::max(width, r.model.size());
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-*s  %8s  %8s  %8s\n", static_cast<int>(width), "Model",
                  "NDCG@1", "NDCG@3", "NDCG@10");
    out << buf;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%-*s  %7.1f%%  %7.1f%%  %7.1f%%\n",
                      static_cast<int>(width), r.model.c_str(), 100.0 * r.result.mean_ndcg[0],
                      100.0 * r.result.mean_ndcg[1], 100.0 * r.result.mean_ndcg[2]);
        out << buf;
    }
}

}  // namespace lstmdssm
