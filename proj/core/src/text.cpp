#include "lstmdssm/text.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "lstmdssm/digest.hpp"
#include "lstmdssm/error.hpp"
#include "lstmdssm/rng.hpp"

namespace lstmdssm {

namespace {

bool is_word_byte(unsigned char ch) {
    return (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') ||
           ch >= 0x80;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        if (tab == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

bool is_blank(std::string_view line) {
    return std::all_of(line.begin(), line.end(), [](char c) {
        return c == ' ' || c == '\t' || c == '\r';
    });
}

[[noreturn]] void line_error(std::size_t line_no, const std::string& what) {
    throw InputError("line " + std::to_string(line_no) + ": " + what);
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    return in;
}

}  // namespace

WordSequence tokenize(std::string_view text) {
    WordSequence words;
    std::string current;
    for (char c : text) {
        const auto ch = static_cast<unsigned char>(c);
        if (is_word_byte(ch)) {
            current.push_back(ch >= 'A' && ch <= 'Z' ? static_cast<char>(ch - 'A' + 'a') : c);
        } else if (!current.empty()) {
            words.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) words.push_back(std::move(current));
    return words;
}

std::vector<std::string> word_to_trigrams(std::string_view word) {
    if (word.empty()) throw InputError("word_to_trigrams: empty word");
    std::string wrapped;
    wrapped.reserve(word.size() + 2);
    wrapped.push_back('#');
    wrapped.append(word);
    wrapped.push_back('#');

    std::vector<std::string> trigrams;
    trigrams.reserve(wrapped.size() - 2);
    for (std::size_t i = 0; i + 3 <= wrapped.size(); ++i) {
        trigrams.emplace_back(wrapped.substr(i, 3));
    }
    return trigrams;
}

TrigramVocabulary TrigramVocabulary::from_entries(std::vector<std::string> entries) {
    TrigramVocabulary vocab;
    for (auto& t : entries) {
        if (t.size() != 3) throw InputError("vocabulary entry '" + t + "' is not a trigram");
        if (vocab.index_of(t)) throw InputError("duplicate vocabulary entry '" + t + "'");
        vocab.append(std::move(t));
    }
    return vocab;
}

std::optional<std::uint32_t> TrigramVocabulary::index_of(std::string_view trigram) const {
    auto it = index_.find(std::string(trigram));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

void TrigramVocabulary::append(std::string trigram) {
    const auto idx = static_cast<std::uint32_t>(entries_.size());
    index_.emplace(trigram, idx);
    entries_.push_back(std::move(trigram));
}

std::string TrigramVocabulary::content_hash() const {
    std::ostringstream out;
    write_vocabulary(out, *this);
    const std::string bytes = out.str();
    const auto digest = sha256(
        {reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()});
    return to_hex(digest);
}

void VocabularyBuilder::add_sequence(const WordSequence& words) {
    for (const auto& w : words) {
        if (w.empty()) continue;
        for (auto& t : word_to_trigrams(w)) {
            if (!vocab_.index_of(t)) vocab_.append(std::move(t));
        }
    }
}

TrigramVocabulary VocabularyBuilder::finish() && {
    if (vocab_.dimension() == 0) throw InputError("build_vocabulary: corpus has no words");
    return std::move(vocab_);
}

TrigramVocabulary build_vocabulary(std::span<const WordSequence> corpus) {
    if (corpus.empty()) throw InputError("build_vocabulary: empty corpus");
    VocabularyBuilder builder;
    for (const auto& seq : corpus) builder.add_sequence(seq);
    return std::move(builder).finish();
}

void write_vocabulary(std::ostream& out, const TrigramVocabulary& vocab) {
    for (const auto& t : vocab.entries()) out << t << '\n';
}

void save_vocabulary(const std::filesystem::path& path, const TrigramVocabulary& vocab) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    write_vocabulary(out, vocab);
    if (!out) throw Error("write failed: " + path.string());
}

TrigramVocabulary load_vocabulary(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::vector<std::string> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto t = strip_cr(line);
        if (t.size() != 3) line_error(line_no, "vocabulary entry is not a trigram");
        entries.emplace_back(t);
    }
    if (entries.empty()) throw InputError("empty vocabulary file " + path.string());
    return TrigramVocabulary::from_entries(std::move(entries));
}

std::uint32_t SparseTermVector::total_count() const {
    std::uint32_t n = 0;
    for (const auto& [idx, count] : pairs) n += count;
    return n;
}

SparseTermVector hash_word(std::string_view word, const TrigramVocabulary& vocab) {
    std::map<std::uint32_t, std::uint32_t> counts;
    for (const auto& t : word_to_trigrams(word)) {
        if (auto idx = vocab.index_of(t)) ++counts[*idx];
    }
    SparseTermVector v;
    v.dimension = vocab.dimension();
    v.pairs.assign(counts.begin(), counts.end());
    return v;
}

std::vector<SparseTermVector> hash_sequence(const WordSequence& words,
                                            const TrigramVocabulary& vocab) {
    std::vector<SparseTermVector> seq;
    seq.reserve(words.size());
    for (const auto& w : words) seq.push_back(hash_word(w, vocab));
    return seq;
}

std::vector<ClickThroughInstance> parse_clickthrough(std::istream& in, std::size_t n_required) {
    std::vector<ClickThroughInstance> instances;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = strip_cr(raw);
        if (is_blank(line)) continue;
        const auto fields = split_tabs(line);
        if (fields.size() != 2 + n_required) {
            line_error(line_no, "expected " + std::to_string(2 + n_required) +
                                    " tab-separated fields, found " +
                                    std::to_string(fields.size()));
        }
        ClickThroughInstance inst;
        inst.query = tokenize(fields[0]);
        inst.clicked = tokenize(fields[1]);
        if (inst.query.empty()) line_error(line_no, "empty query");
        if (inst.clicked.empty()) line_error(line_no, "empty clicked title");
        for (std::size_t j = 2; j < fields.size(); ++j) {
            auto neg = tokenize(fields[j]);
            if (neg == inst.clicked) line_error(line_no, "clicked title repeated among negatives");
            if (neg.empty()) line_error(line_no, "empty unclicked title");
            inst.negatives.push_back(std::move(neg));
        }
        instances.push_back(std::move(inst));
    }
    return instances;
}

std::vector<ClickThroughInstance> load_clickthrough(const std::filesystem::path& path,
                                                    std::size_t n_required) {
    auto in = open_input(path);
    return parse_clickthrough(in, n_required);
}

void write_clickthrough(std::ostream& out, std::span<const ClickThroughInstance> instances) {
    for (const auto& inst : instances) {
        out << join_words(inst.query) << '\t' << join_words(inst.clicked);
        for (const auto& neg : inst.negatives) out << '\t' << join_words(neg);
        out << '\n';
    }
}

std::size_t clickthrough_field_count(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::string raw;
    while (std::getline(in, raw)) {
        const auto line = strip_cr(raw);
        if (!is_blank(line)) return split_tabs(line).size();
    }
    return 0;
}

std::vector<WordSequence> sample_negatives(std::span<const ClickThroughInstance> pool,
                                           std::size_t r, std::size_t n, std::uint64_t seed) {
    if (n == 0) return {};
    if (r >= pool.size()) throw InputError("sample_negatives: instance index out of range");

    std::vector<std::size_t> eligible;
    for (std::size_t j = 0; j < pool.size(); ++j) {
        if (j != r && pool[j].clicked != pool[r].clicked) eligible.push_back(j);
    }
    if (eligible.size() < n) {
        throw InputError("sample_negatives: only " + std::to_string(eligible.size()) +
                         " distinct clicked titles available for instance " +
                         std::to_string(r) + ", need " + std::to_string(n));
    }

    // Partial Fisher-Yates: the first n slots end up a uniform n-subset.
    Rng rng(seed);
    std::vector<WordSequence> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto pick = k + uniform_index(rng, eligible.size() - k);
        std::swap(eligible[k], eligible[pick]);
        out.push_back(pool[eligible[k]].clicked);
    }
    return out;
}

std::vector<JudgedRanking> parse_judgments(std::istream& in) {
    std::vector<JudgedRanking> judged;
    std::map<WordSequence, std::size_t> by_query;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = strip_cr(raw);
        if (is_blank(line)) continue;
        const auto fields = split_tabs(line);
        if (fields.size() != 3) {
            line_error(line_no, "expected 3 tab-separated fields, found " +
                                    std::to_string(fields.size()));
        }
        auto query = tokenize(fields[0]);
        auto doc = tokenize(fields[1]);
        if (query.empty()) line_error(line_no, "empty query");
        if (doc.empty()) line_error(line_no, "empty candidate title");

        auto grade_text = fields[2];
        while (!grade_text.empty() && grade_text.front() == ' ') grade_text.remove_prefix(1);
        while (!grade_text.empty() && grade_text.back() == ' ') grade_text.remove_suffix(1);
        int grade = -1;
        const auto [ptr, ec] =
            std::from_chars(grade_text.data(), grade_text.data() + grade_text.size(), grade);
        if (ec != std::errc{} || ptr != grade_text.data() + grade_text.size() || grade < 0 ||
            grade > 4) {
            line_error(line_no, "relevance grade must be an integer in 0..4");
        }

        auto [it, inserted] = by_query.emplace(query, judged.size());
        if (inserted) judged.push_back(JudgedRanking{std::move(query), {}});
        judged[it->second].candidates.emplace_back(std::move(doc), grade);
    }
    return judged;
}

std::vector<JudgedRanking> load_judgments(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_judgments(in);
}

void write_judgments(std::ostream& out, std::span<const JudgedRanking> judged) {
    for (const auto& j : judged) {
        for (const auto& [doc, grade] : j.candidates) {
            out << join_words(j.query) << '\t' << join_words(doc) << '\t' << grade << '\n';
        }
    }
}

std::string join_words(const WordSequence& words) {
    std::string s;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (i) s.push_back(' ');
        s += words[i];
    }
    return s;
}

}  // namespace lstmdssm
