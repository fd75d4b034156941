#include "lstmdssm/synthetic.hpp"

#include <algorithm>
#include <set>

#include "lstmdssm/error.hpp"
#include "lstmdssm/rng.hpp"

namespace lstmdssm {

namespace {

std::string random_word(Rng& rng) {
    const auto length = 4 + uniform_index(rng, 4);
    std::string w;
    for (std::uint64_t i = 0; i < length; ++i) {
        w.push_back(static_cast<char>('a' + uniform_index(rng, 26)));
    }
    return w;
}

class Generator {
  public:
    Generator(const SyntheticSpec& spec, std::vector<std::string> words)
        : spec_(spec), words_(std::move(words)), rng_(spec.seed ^ 0xD1CEULL) {}

    ClickThroughInstance instance() {
        ClickThroughInstance inst;
        inst.query = distinct_words(spec_.query_length, {});
        const std::set<std::string> used(inst.query.begin(), inst.query.end());

        // The last two query words stay adjacent at the end; at most one
        // earlier word is dropped and the filler goes somewhere before them.
        WordSequence kept = inst.query;
        if (kept.size() > 2 && uniform_index(rng_, 2) == 0) {
            kept.erase(kept.begin() + static_cast<std::ptrdiff_t>(uniform_index(rng_, kept.size() - 2)));
        }
        const auto filler = distinct_words(1, used);
        inst.clicked = kept;
        inst.clicked.insert(inst.clicked.begin() +
                                static_cast<std::ptrdiff_t>(uniform_index(rng_, kept.size() - 1)),
                            filler[0]);

        inst.negatives.push_back(scrambled(inst.query, used));
        while (inst.negatives.size() < spec_.n_negatives) {
            auto neg = distinct_words(kept.size() + 1, used);
            if (neg != inst.clicked) inst.negatives.push_back(std::move(neg));
        }
        return inst;
    }

    JudgedRanking judgments(const ClickThroughInstance& inst) {
        JudgedRanking j;
        j.query = inst.query;
        j.candidates.emplace_back(inst.clicked, 4);
        for (const auto& neg : inst.negatives) j.candidates.emplace_back(neg, 0);
        shuffle(j.candidates.begin(), j.candidates.end(), rng_);
        return j;
    }

  private:
    WordSequence distinct_words(std::size_t count, const std::set<std::string>& exclude) {
        WordSequence out;
        while (out.size() < count) {
            const auto& w = words_[uniform_index(rng_, words_.size())];
            if (exclude.count(w) || std::find(out.begin(), out.end(), w) != out.end()) continue;
            out.push_back(w);
        }
        return out;
    }

    // Same words as the query in an order that is not a subsequence of it,
    // plus one filler word in front.
    WordSequence scrambled(const WordSequence& query, const std::set<std::string>& used) {
        WordSequence out = query;
        std::reverse(out.begin(), out.end());
        out.insert(out.begin(), distinct_words(1, used)[0]);
        return out;
    }

    const SyntheticSpec& spec_;
    std::vector<std::string> words_;
    Rng rng_;
};

}  // namespace

SyntheticDataset make_synthetic_dataset(const SyntheticSpec& spec) {
    if (spec.query_length < 2) throw InputError("synthetic: query length must be >= 2");
    if (spec.n_negatives < 1) throw InputError("synthetic: need at least one negative");
    if (spec.vocabulary_size < 2 * spec.query_length + 4) {
        throw InputError("synthetic: vocabulary too small");
    }

    Rng word_rng(spec.seed);
    std::set<std::string> seen;
    SyntheticDataset data;
    while (data.words.size() < spec.vocabulary_size) {
        auto w = random_word(word_rng);
        if (seen.insert(w).second) data.words.push_back(std::move(w));
    }

    Generator gen(spec, data.words);
    for (std::size_t r = 0; r < spec.train_count; ++r) {
        data.train.push_back(gen.instance());
        if (!spec.train_with_negatives) data.train.back().negatives.clear();
    }
    for (std::size_t r = 0; r < spec.heldout_count; ++r) {
        data.heldout.push_back(gen.instance());
        data.heldout_judgments.push_back(gen.judgments(data.heldout.back()));
    }
    return data;
}

}  // namespace lstmdssm
