#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace lstmdssm {

using WordSequence = std::vector<std::string>;

/// Lowercases ASCII and splits on runs of anything that is not an ASCII
/// letter, ASCII digit, or a byte of a multi-byte UTF-8 sequence. '#' is a
/// separator, so it never survives into a word.
WordSequence tokenize(std::string_view text);

/// Letter trigrams of "#word#" in window order, with multiplicity.
/// Throws InputError on an empty word.
std::vector<std::string> word_to_trigrams(std::string_view word);

/// Dense 0-based index over the distinct trigrams of a corpus.
class TrigramVocabulary {
  public:
    TrigramVocabulary() = default;

    /// Builds from an ordered list of distinct trigrams; position is index.
    /// Throws InputError on duplicates or malformed entries.
    static TrigramVocabulary from_entries(std::vector<std::string> entries);

    std::size_t dimension() const { return entries_.size(); }
    std::optional<std::uint32_t> index_of(std::string_view trigram) const;
    const std::vector<std::string>& entries() const { return entries_; }

    /// Hex SHA-256 of the vocabulary file serialization.
    std::string content_hash() const;

    friend bool operator==(const TrigramVocabulary& a, const TrigramVocabulary& b) {
        return a.entries_ == b.entries_;
    }

  private:
    friend class VocabularyBuilder;
    void append(std::string trigram);

    std::vector<std::string> entries_;
    std::unordered_map<std::string, std::uint32_t> index_;
};

/// Streaming construction in first-occurrence order.
class VocabularyBuilder {
  public:
    void add_sequence(const WordSequence& words);
    std::size_t dimension() const { return vocab_.dimension(); }
    /// Throws InputError when no trigram was seen.
    TrigramVocabulary finish() &&;

  private:
    TrigramVocabulary vocab_;
};

/// Throws InputError on an empty corpus or one without any word.
TrigramVocabulary build_vocabulary(std::span<const WordSequence> corpus);

void write_vocabulary(std::ostream& out, const TrigramVocabulary& vocab);
void save_vocabulary(const std::filesystem::path& path, const TrigramVocabulary& vocab);
TrigramVocabulary load_vocabulary(const std::filesystem::path& path);

/// One hashed word: sorted (index, count) pairs over the vocabulary.
struct SparseTermVector {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    std::size_t dimension = 0;

    bool empty() const { return pairs.empty(); }
    std::uint32_t total_count() const;
    friend bool operator==(const SparseTermVector&, const SparseTermVector&) = default;
};

/// Counts of the word's in-vocabulary trigrams; OOV trigrams are dropped.
SparseTermVector hash_word(std::string_view word, const TrigramVocabulary& vocab);

std::vector<SparseTermVector> hash_sequence(const WordSequence& words,
                                            const TrigramVocabulary& vocab);

/// A query with its clicked title and unclicked titles.
struct ClickThroughInstance {
    WordSequence query;
    WordSequence clicked;
    std::vector<WordSequence> negatives;

    friend bool operator==(const ClickThroughInstance&, const ClickThroughInstance&) = default;
};

/// Parses one click-through file. Every line must carry exactly n_required
/// unclicked titles. Errors name the 1-based line number.
std::vector<ClickThroughInstance> load_clickthrough(const std::filesystem::path& path,
                                                    std::size_t n_required);
std::vector<ClickThroughInstance> parse_clickthrough(std::istream& in, std::size_t n_required);

/// Writes instances back as tab-separated lines of space-joined tokens.
void write_clickthrough(std::ostream& out, std::span<const ClickThroughInstance> instances);

/// Number of tab-separated fields on the first non-blank line, 0 if none.
std::size_t clickthrough_field_count(const std::filesystem::path& path);

/// Draws n clicked titles of other instances, uniformly without replacement,
/// skipping any equal to instance r's clicked title.
std::vector<WordSequence> sample_negatives(std::span<const ClickThroughInstance> pool,
                                           std::size_t r, std::size_t n, std::uint64_t seed);

/// A judged query: candidate titles with relevance grades in 0..4.
struct JudgedRanking {
    WordSequence query;
    std::vector<std::pair<WordSequence, int>> candidates;
};

/// Parses query \t candidate \t grade lines; lines sharing a tokenized query
/// form one ranking, kept in first-appearance order.
std::vector<JudgedRanking> load_judgments(const std::filesystem::path& path);
std::vector<JudgedRanking> parse_judgments(std::istream& in);
void write_judgments(std::ostream& out, std::span<const JudgedRanking> judged);

std::string join_words(const WordSequence& words);

}  // namespace lstmdssm
