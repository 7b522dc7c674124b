#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vh::ipa {

enum class SegmentClass { Vowel, Consonant };

// Decodes UTF-8 into codepoints; invalid bytes map to U+FFFD.
std::vector<char32_t> decode_utf8(std::string_view s);

// Classifies an IPA segment by its first base symbol. Diacritics, length
// marks and modifier letters are skipped, so a long or nasalized vowel
// inherits the class of its base symbol and a diphthong is classed by its
// first element. Returns nullopt for segments with no classifiable base.
std::optional<SegmentClass> classify(std::string_view segment);

bool is_vowel_base(char32_t cp);
bool is_consonant_base(char32_t cp);

// Rough articulatory features of vowel base symbols, used to derive
// harmonic groupings when no curated scheme exists for a language.
enum class Backness { Front, Central, Back };
std::optional<Backness> backness(std::string_view segment);
std::optional<bool> rounded(std::string_view segment);

}  // namespace vh::ipa
