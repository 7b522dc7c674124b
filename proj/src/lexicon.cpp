#include "vh/lexicon.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "vh/errors.hpp"
#include "vh/rng.hpp"

namespace vh::lex {

bool PhonemeInventory::is_vowel(const std::string& seg) const {
    auto it = segments.find(seg);
    return it != segments.end() &&
           it->second.first == ipa::SegmentClass::Vowel;
}

std::vector<std::string> PhonemeInventory::vowels() const {
    std::vector<std::string> out;
    for (const auto& [seg, cls] : segments)
        if (cls.first == ipa::SegmentClass::Vowel) out.push_back(seg);
    return out;
}

namespace {

std::vector<std::string> split_line(const std::string& line, char sep) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

std::vector<std::string> tokenize(const std::string& s) {
    std::vector<std::string> tokens;
    std::istringstream iss(s);
    std::string tok;
    while (iss >> tok) tokens.push_back(tok);
    return tokens;
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

PhonemeInventory build_inventory(const std::vector<WordForm>& forms,
                                 const ClassOverrides& overrides) {
    PhonemeInventory inv;
    for (const auto& form : forms) {
        for (const auto& seg : form.segments) {
            if (inv.contains(seg)) continue;
            if (auto it = overrides.find(seg); it != overrides.end()) {
                inv.segments[seg] = {it->second, ClassSource::Override};
            } else if (auto cls = ipa::classify(seg)) {
                inv.segments[seg] = {*cls, ClassSource::Builtin};
            } else {
                throw UnknownSegmentClass(
                    "segment '" + seg +
                    "' is not classifiable and no override was given");
            }
        }
    }
    return inv;
}

}  // namespace

ClassOverrides parse_overrides(std::istream& in) {
    ClassOverrides out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty() || line[0] == '#') continue;
        auto fields = split_line(line, '\t');
        if (fields.size() != 2 ||
            (fields[1] != "vowel" && fields[1] != "consonant"))
            throw MalformedRow("override line " + std::to_string(lineno) +
                               ": expected 'segment<TAB>vowel|consonant'");
        out[fields[0]] = fields[1] == "vowel" ? ipa::SegmentClass::Vowel
                                              : ipa::SegmentClass::Consonant;
    }
    return out;
}

Lexicon parse_wordlist(std::istream& table, const std::string& language_filter,
                       const ClassOverrides& overrides) {
    std::string header;
    if (!std::getline(table, header))
        throw MalformedRow("empty input table");
    header = strip_cr(header);
    auto cols = split_line(header, '\t');
    int lang_col = -1, seg_col = -1, concept_col = -1;
    for (int i = 0; i < static_cast<int>(cols.size()); ++i) {
        if (cols[i] == "Language_ID") lang_col = i;
        if (cols[i] == "Segments") seg_col = i;
        if (cols[i] == "Parameter_ID" || cols[i] == "Concept_ID")
            concept_col = i;
    }
    if (lang_col < 0 || seg_col < 0)
        throw MalformedRow("table must have Language_ID and Segments columns");

    Lexicon lexicon;
    lexicon.language = language_filter;
    std::string line;
    int lineno = 1;
    while (std::getline(table, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty()) continue;
        auto fields = split_line(line, '\t');
        if (static_cast<int>(fields.size()) <= std::max(lang_col, seg_col))
            throw MalformedRow("row " + std::to_string(lineno) +
                               ": too few columns");
        if (!language_filter.empty() && fields[lang_col] != language_filter)
            continue;
        auto segments = tokenize(fields[seg_col]);
        if (segments.empty())
            throw MalformedRow("row " + std::to_string(lineno) +
                               ": empty segments field");
        WordForm form;
        form.segments = std::move(segments);
        form.language = fields[lang_col];
        if (concept_col >= 0 &&
            concept_col < static_cast<int>(fields.size()))
            form.concept_id = fields[concept_col];
        lexicon.forms.push_back(std::move(form));
    }
    lexicon.inventory = build_inventory(lexicon.forms, overrides);
    return lexicon;
}

Lexicon parse_wordlist_file(const std::string& path,
                            const std::string& language_filter,
                            const ClassOverrides& overrides) {
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot open word list: " + path);
    return parse_wordlist(in, language_filter, overrides);
}

namespace {

bool contains_subsequence(const std::vector<std::string>& haystack,
                          const std::vector<std::string>& needle) {
    if (needle.size() > haystack.size()) return false;
    for (std::size_t off = 0; off + needle.size() <= haystack.size(); ++off) {
        if (std::equal(needle.begin(), needle.end(), haystack.begin() + off))
            return true;
    }
    return false;
}

}  // namespace

Lexicon preprocess(const Lexicon& lexicon) {
    // duplicate collapse first, then substring pruning
    std::vector<WordForm> unique_forms;
    std::set<std::vector<std::string>> seen;
    for (const auto& form : lexicon.forms) {
        if (seen.insert(form.segments).second) unique_forms.push_back(form);
    }
    Lexicon out;
    out.language = lexicon.language;
    out.inventory = lexicon.inventory;
    for (std::size_t i = 0; i < unique_forms.size(); ++i) {
        bool is_substring = false;
        for (std::size_t j = 0; j < unique_forms.size(); ++j) {
            if (i == j) continue;
            if (contains_subsequence(unique_forms[j].segments,
                                     unique_forms[i].segments)) {
                is_substring = true;
                break;
            }
        }
        if (!is_substring) out.forms.push_back(unique_forms[i]);
    }
    if (out.forms.empty())
        throw EmptyLexicon("no forms survive preprocessing");
    return out;
}

DatasetSplit split_dataset(const Lexicon& lexicon, std::uint64_t seed,
                           double train_ratio, double valid_ratio,
                           double test_ratio) {
    if (train_ratio <= 0 || valid_ratio <= 0 || test_ratio <= 0 ||
        std::abs(train_ratio + valid_ratio + test_ratio - 1.0) > 1e-9)
        throw BadSpec("split ratios must be positive and sum to 1");
    const std::size_t n = lexicon.forms.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);

    const auto n_train = static_cast<std::size_t>(train_ratio * n);
    const auto n_valid = static_cast<std::size_t>(valid_ratio * n);
    DatasetSplit split;
    split.seed = seed;
    split.ratios[0] = train_ratio;
    split.ratios[1] = valid_ratio;
    split.ratios[2] = test_ratio;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& form = lexicon.forms[order[i]];
        if (i < n_train)
            split.train.push_back(form);
        else if (i < n_train + n_valid)
            split.valid.push_back(form);
        else
            split.test.push_back(form);
    }
    if (split.train.empty() || split.valid.empty() || split.test.empty())
        throw InsufficientData("lexicon too small to split (n=" +
                               std::to_string(n) + ")");
    return split;
}

Lexicon generate_synthetic_lexicon(const SyntheticSpec& spec) {
    if (spec.class_a.size() < 2 || spec.class_b.size() < 2)
        throw BadSpec("need at least 2 vowels per class");
    if (spec.word_count <= 0) throw BadSpec("word count must be positive");
    if (spec.min_vowels < 1 || spec.max_vowels < spec.min_vowels)
        throw BadSpec("bad vowel-count range");
    if (spec.consonants.empty()) throw BadSpec("need at least one consonant");
    if (spec.harmony_strength < 0 || spec.harmony_strength > 1)
        throw BadSpec("harmony strength must be in [0,1]");

    std::vector<std::string> all_vowels = spec.class_a;
    all_vowels.insert(all_vowels.end(), spec.class_b.begin(),
                      spec.class_b.end());

    Rng rng(spec.seed);
    Lexicon lexicon;
    lexicon.language = spec.language;
    for (int w = 0; w < spec.word_count; ++w) {
        int n_vowels =
            spec.min_vowels +
            static_cast<int>(rng.uniform_int(
                static_cast<std::uint64_t>(spec.max_vowels - spec.min_vowels + 1)));
        WordForm form;
        form.language = spec.language;
        bool first_in_a = true;
        for (int v = 0; v < n_vowels; ++v) {
            form.segments.push_back(
                spec.consonants[rng.uniform_int(spec.consonants.size())]);
            std::string vowel;
            if (v == 0) {
                vowel = all_vowels[rng.uniform_int(all_vowels.size())];
                first_in_a = std::find(spec.class_a.begin(), spec.class_a.end(),
                                       vowel) != spec.class_a.end();
            } else if (rng.bernoulli(spec.harmony_strength)) {
                const auto& cls = first_in_a ? spec.class_a : spec.class_b;
                vowel = cls[rng.uniform_int(cls.size())];
            } else {
                vowel = all_vowels[rng.uniform_int(all_vowels.size())];
            }
            form.segments.push_back(vowel);
        }
        lexicon.forms.push_back(std::move(form));
    }
    lexicon.inventory = build_inventory(lexicon.forms, {});
    return lexicon;
}

std::string lexicon_to_json(const Lexicon& lexicon) {
    nlohmann::json j;
    j["language"] = lexicon.language;
    j["forms"] = nlohmann::json::array();
    for (const auto& form : lexicon.forms) {
        j["forms"].push_back({{"segments", form.segments},
                              {"language", form.language},
                              {"concept", form.concept_id}});
    }
    j["inventory"] = nlohmann::json::array();
    for (const auto& [seg, cls] : lexicon.inventory.segments) {
        j["inventory"].push_back(
            {{"segment", seg},
             {"class",
              cls.first == ipa::SegmentClass::Vowel ? "vowel" : "consonant"},
             {"provenance",
              cls.second == ClassSource::Builtin ? "builtin" : "override"}});
    }
    return j.dump(2);
}

void write_wordlist_tsv(const Lexicon& lexicon, std::ostream& out) {
    out << "Language_ID\tForm\tSegments\n";
    for (const auto& form : lexicon.forms) {
        std::string joined, flat;
        for (const auto& seg : form.segments) {
            if (!joined.empty()) joined += ' ';
            joined += seg;
            flat += seg;
        }
        out << form.language << '\t' << flat << '\t' << joined << '\n';
    }
}

}  // namespace vh::lex
