#pragma once

#include <cstdint>
#include <vector>

#include "lstmdssm/text.hpp"

namespace lstmdssm {

/// Click-through data where relevance depends on word order.
///
/// Each query is a few distinct content words. The clicked title keeps at
/// least two of them in query order, ends on the query's last word and
/// carries one filler word. One distractor holds the same query words in a
/// non-order-preserving permutation, so a bag-of-words ranker cannot prefer
/// the clicked title; the remaining distractors are random vocabulary.
///
/// Training instances carry only query and clicked title unless
/// train_with_negatives is set, so training samples negatives from the other
/// clicked titles. Held-out instances always carry their distractors.
struct SyntheticSpec {
    std::size_t train_count = 500;
    std::size_t heldout_count = 100;
    std::size_t n_negatives = 4;
    std::size_t vocabulary_size = 400;
    std::size_t query_length = 3;
    bool train_with_negatives = false;
    std::uint64_t seed = 7;
};

struct SyntheticDataset {
    std::vector<std::string> words;
    std::vector<ClickThroughInstance> train;
    std::vector<ClickThroughInstance> heldout;
    /// Held-out candidates in shuffled order: clicked grade 4, distractors 0.
    std::vector<JudgedRanking> heldout_judgments;
};

SyntheticDataset make_synthetic_dataset(const SyntheticSpec& spec);

}  // namespace lstmdssm
