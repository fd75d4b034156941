#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lstmdssm/error.hpp"
#include "lstmdssm/eval.hpp"
#include "lstmdssm/lstm.hpp"
#include "lstmdssm/ranking_loss.hpp"
#include "lstmdssm/rng.hpp"

using namespace lstmdssm;
using doctest::Approx;

namespace {

// Straight from the definition: sort a copy for the ideal list.
double brute_ndcg(std::vector<int> rel, std::size_t k) {
    auto dcg = [k](const std::vector<int>& r) {
        double s = 0.0;
        for (std::size_t i = 0; i < std::min(k, r.size()); ++i) {
            s += (std::pow(2.0, r[i]) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
        }
        return s;
    };
    const double actual = dcg(rel);
    std::sort(rel.rbegin(), rel.rend());
    const double ideal = dcg(rel);
    return ideal == 0.0 ? 0.0 : actual / ideal;
}

JudgedRanking judged(WordSequence q, std::vector<std::pair<WordSequence, int>> c) {
    return JudgedRanking{std::move(q), std::move(c)};
}

}  // namespace

TEST_CASE("ndcg_at_k examples") {
    const std::vector<int> ideal{3, 2, 0};
    CHECK(ndcg_at_k(ideal, 3) == 1.0);
    const std::vector<int> swapped{0, 3};
    CHECK(ndcg_at_k(swapped, 2) == Approx(0.63093).epsilon(1e-5));
    CHECK(ndcg_at_k(swapped, 1) == 0.0);
    const std::vector<int> none{0, 0, 0};
    for (std::size_t k : {1u, 3u, 10u}) CHECK(ndcg_at_k(none, k) == 0.0);
    CHECK_THROWS_AS(ndcg_at_k(ideal, 0), InputError);
    const std::vector<int> bad{5};
    CHECK_THROWS_AS(ndcg_at_k(bad, 1), InputError);
}

TEST_CASE("ndcg_at_k agrees with a brute-force reference") {
    Rng rng(1234);
    for (int draw = 0; draw < 1000; ++draw) {
        std::vector<int> rel(1 + uniform_index(rng, 20));
        for (int& g : rel) g = static_cast<int>(uniform_index(rng, 5));
        for (std::size_t k : kNdcgCutoffs) {
            const double got = ndcg_at_k(rel, k);
            CHECK(std::abs(got - brute_ndcg(rel, k)) <= 1e-12);
            CHECK(got >= 0.0);
            CHECK(got <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("evaluate_orders means over queries") {
    const std::vector<JudgedRanking> j = {
        judged({"a"}, {{{"x"}, 4}, {{"y"}, 0}}),
        judged({"b"}, {{{"x"}, 0}, {{"y"}, 4}}),
    };
    const std::vector<std::vector<std::size_t>> orders = {{0, 1}, {0, 1}};
    const auto r = evaluate_orders(j, orders);
    CHECK(r.at(1) == Approx(0.5));
    CHECK(r.per_query.size() == 2);
    CHECK(r.per_query[0][0] == 1.0);
    CHECK(r.per_query[1][0] == 0.0);
    CHECK_THROWS_AS(r.at(2), InputError);

    const std::vector<JudgedRanking> zero = {judged({"a"}, {{{"x"}, 0}, {{"y"}, 0}})};
    const std::vector<std::vector<std::size_t>> one = {{1, 0}};
    for (double m : evaluate_orders(zero, one).mean_ndcg) CHECK(m == 0.0);
}

TEST_CASE("rank_candidates") {
    const std::vector<WordSequence> corpus = {{"red", "apple", "pie", "green", "tea"}};
    const auto vocab = build_vocabulary(corpus);
    const auto p = init_parameters({vocab.dimension(), 6}, 12);

    const std::vector<WordSequence> single = {{"pie"}};
    CHECK(rank_candidates(p, {"red"}, single, vocab) == std::vector<std::size_t>{0});

    const std::vector<WordSequence> copies = {{"tea"}, {"apple", "pie"}, {"tea"}};
    const auto order = rank_candidates(p, {"red", "apple"}, copies, vocab);
    const auto first = std::find(order.begin(), order.end(), 0u);
    const auto second = std::find(order.begin(), order.end(), 2u);
    CHECK(first < second);

    const std::vector<WordSequence> three = {{"green", "tea"}, {"apple"}, {"red", "pie"}};
    const auto q = embed_words(p, {"apple", "pie"}, vocab);
    std::vector<std::pair<double, std::size_t>> sims;
    for (std::size_t k = 0; k < 3; ++k) {
        sims.emplace_back(-cosine_similarity(q, embed_words(p, three[k], vocab)), k);
    }
    std::sort(sims.begin(), sims.end());
    const auto got = rank_candidates(p, {"apple", "pie"}, three, vocab);
    for (std::size_t k = 0; k < 3; ++k) CHECK(got[k] == sims[k].second);
}

TEST_CASE("evaluate_model") {
    const std::vector<WordSequence> corpus = {{"red", "apple", "pie", "green", "tea"}};
    const auto vocab = build_vocabulary(corpus);
    const auto p = init_parameters({vocab.dimension(), 6}, 12);
    // the query itself is the top candidate under cosine
    const std::vector<JudgedRanking> j = {
        judged({"red", "apple"}, {{{"green", "tea"}, 0}, {{"red", "apple"}, 3}}),
        judged({"pie"}, {{{"pie"}, 2}, {{"tea"}, 0}}),
    };
    const auto r = evaluate_model(p, j, vocab);
    for (double m : r.mean_ndcg) CHECK(m == Approx(1.0));

    const LstmParameters zero(p.dims());
    try {
        evaluate_model(zero, j, vocab);
        FAIL("expected an error");
    } catch (const DegenerateEmbeddingError& e) {
        CHECK(std::string(e.what()).find("query 0") != std::string::npos);
    }
}

TEST_CASE("bm25_score") {
    // N=4, df(x)=2, avg length 2
    const std::vector<WordSequence> docs = {{"x", "x"}, {"x", "y"}, {"y", "z"}, {"z", "w"}};
    const auto stats = build_corpus_stats(docs);
    CHECK(stats.document_count == 4);
    CHECK(stats.average_length == 2.0);
    CHECK(stats.df("x") == 2);
    CHECK(stats.df("q") == 0);
    CHECK(bm25_score({"x"}, docs[0], stats) ==
          Approx(std::log(2.0) * (2 * 2.2 / 3.2)).epsilon(1e-14));
    CHECK(bm25_score({"q"}, docs[0], stats) == 0.0);
    CHECK(bm25_score({"x", "x"}, docs[0], stats) == bm25_score({"x"}, docs[0], stats));
}

TEST_CASE("evaluate_bm25") {
    const std::vector<JudgedRanking> forced = {
        judged({"pizza"}, {{{"car", "insurance"}, 0}, {{"pizza", "hut"}, 4}, {{"weather"}, 0}}),
    };
    CHECK(evaluate_bm25(forced).at(1) == 1.0);

    const std::vector<JudgedRanking> ties = {
        judged({"q"}, {{{"same"}, 0}, {{"same"}, 4}}),
    };
    CHECK(evaluate_bm25(ties).at(1) == 0.0);

    // three queries: hit, miss (relevant doc lacks the term), tie kept in input order
    const std::vector<JudgedRanking> three = {
        judged({"a"}, {{{"b"}, 0}, {{"a"}, 1}}),
        judged({"c"}, {{{"c", "d"}, 0}, {{"e"}, 1}}),
        judged({"f"}, {{{"g"}, 2}, {{"h"}, 0}}),
    };
    const auto r = evaluate_bm25(three);
    CHECK(r.per_query[0][0] == 1.0);
    CHECK(r.per_query[1][0] == 0.0);
    CHECK(r.per_query[2][0] == 1.0);
    CHECK(r.at(1) == Approx(2.0 / 3.0));
    // query 1 at k=3: relevant doc in position 2 -> 1/log2(3)
    CHECK(r.per_query[1][1] == Approx(1.0 / std::log2(3.0)));
}

TEST_CASE("print_eval_table") {
    EvalResult r;
    r.mean_ndcg = {0.331, 0.365, 0.436};
    const std::vector<EvalRow> rows = {{"LSTM", r}};
    std::ostringstream out;
    print_eval_table(out, rows);
    const auto text = out.str();
    CHECK(text.find("NDCG@1") != std::string::npos);
    CHECK(text.find("33.1") != std::string::npos);
    CHECK(text.find("43.6") != std::string::npos);
}
