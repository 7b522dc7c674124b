#pragma once

#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vh/ipa.hpp"

namespace vh::lex {

struct WordForm {
    std::vector<std::string> segments;
    std::string language;
    std::string concept_id;  // optional, empty when absent
};

// How a segment got its vowel/consonant label.
enum class ClassSource { Builtin, Override };

struct PhonemeInventory {
    // segment -> (class, provenance); insertion order irrelevant, map keeps
    // iteration deterministic.
    std::map<std::string, std::pair<ipa::SegmentClass, ClassSource>> segments;

    bool contains(const std::string& seg) const {
        return segments.count(seg) > 0;
    }
    bool is_vowel(const std::string& seg) const;
    std::vector<std::string> vowels() const;
    std::size_t size() const { return segments.size(); }
};

struct Lexicon {
    std::vector<WordForm> forms;
    PhonemeInventory inventory;
    std::string language;
};

struct DatasetSplit {
    std::vector<WordForm> train, valid, test;
    std::uint64_t seed = 0;
    double ratios[3] = {0.6, 0.1, 0.3};
};

// segment -> vowel|consonant reassignments, e.g. from an override file
using ClassOverrides = std::map<std::string, ipa::SegmentClass>;

// Parses a CLDF FormTable-style TSV with at least Language_ID and Segments
// columns. Rows whose Language_ID differs from language_filter are dropped
// (empty filter keeps everything).
Lexicon parse_wordlist(std::istream& table, const std::string& language_filter,
                       const ClassOverrides& overrides = {});
Lexicon parse_wordlist_file(const std::string& path,
                            const std::string& language_filter,
                            const ClassOverrides& overrides = {});

// Lines of the form "segment<TAB>vowel|consonant".
ClassOverrides parse_overrides(std::istream& in);

// Collapses exact duplicates, then removes any form whose segment sequence
// occurs contiguously inside another form. Survivor order is preserved.
Lexicon preprocess(const Lexicon& lexicon);

DatasetSplit split_dataset(const Lexicon& lexicon, std::uint64_t seed,
                           double train_ratio = 0.6, double valid_ratio = 0.1,
                           double test_ratio = 0.3);

struct SyntheticSpec {
    std::vector<std::string> class_a = {"i", "e", "y", "æ"};
    std::vector<std::string> class_b = {"u", "o", "ɑ", "ɯ"};
    std::vector<std::string> consonants = {"p", "t", "k", "s", "m", "n", "l", "r"};
    int word_count = 1000;
    int min_vowels = 2;
    int max_vowels = 4;
    double harmony_strength = 1.0;  // 1 = deterministic harmony, 0 = i.i.d.
    std::uint64_t seed = 1;
    std::string language = "syn";
};

// CV-skeleton corpus with a tunable harmony constraint; the test oracle for
// the whole pipeline.
Lexicon generate_synthetic_lexicon(const SyntheticSpec& spec);

// JSON snapshot of forms + inventory + provenance.
std::string lexicon_to_json(const Lexicon& lexicon);

// Writes a FormTable-style TSV so synthetic corpora can be re-ingested.
void write_wordlist_tsv(const Lexicon& lexicon, std::ostream& out);

}  // namespace vh::lex
