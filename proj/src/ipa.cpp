#include "vh/ipa.hpp"

#include <algorithm>
#include <array>

namespace vh::ipa {

std::vector<char32_t> decode_utf8(std::string_view s) {
    std::vector<char32_t> out;
    std::size_t i = 0;
    while (i < s.size()) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        char32_t cp = 0xFFFD;
        std::size_t len = 1;
        if (c < 0x80) {
            cp = c;
        } else if ((c & 0xE0) == 0xC0 && i + 1 < s.size()) {
            cp = (c & 0x1F) << 6 | (s[i + 1] & 0x3F);
            len = 2;
        } else if ((c & 0xF0) == 0xE0 && i + 2 < s.size()) {
            cp = (c & 0x0F) << 12 | (s[i + 1] & 0x3F) << 6 | (s[i + 2] & 0x3F);
            len = 3;
        } else if ((c & 0xF8) == 0xF0 && i + 3 < s.size()) {
            cp = (c & 0x07) << 18 | (s[i + 1] & 0x3F) << 12 |
                 (s[i + 2] & 0x3F) << 6 | (s[i + 3] & 0x3F);
            len = 4;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

namespace {

constexpr std::array<char32_t, 28> kVowels = {
    U'i', U'y', U'ɨ', U'ʉ', U'ɯ', U'u', U'ɪ', U'ʏ', U'ʊ', U'e',
    U'ø', U'ɘ', U'ɵ', U'ɤ', U'o', U'ə', U'ɛ', U'œ', U'ɜ', U'ɞ',
    U'ʌ', U'ɔ', U'æ', U'ɐ', U'a', U'ɶ', U'ɑ', U'ɒ'};

constexpr std::array<char32_t, 78> kConsonants = {
    U'p', U'b', U't', U'd', U'ʈ', U'ɖ', U'c', U'ɟ', U'k', U'ɡ', U'g',
    U'q', U'ɢ', U'ʔ', U'm', U'ɱ', U'n', U'ɳ', U'ɲ', U'ŋ', U'ɴ', U'ʙ',
    U'r', U'ʀ', U'ɾ', U'ɽ', U'ɸ', U'β', U'f', U'v', U'θ', U'ð', U's',
    U'z', U'ʃ', U'ʒ', U'ʂ', U'ʐ', U'ç', U'ʝ', U'x', U'ɣ', U'χ', U'ʁ',
    U'ħ', U'ʕ', U'h', U'ɦ', U'ɬ', U'ɮ', U'ʋ', U'ɹ', U'ɻ', U'j', U'ɰ',
    U'l', U'ɭ', U'ʎ', U'ʟ', U'w', U'ʍ', U'ɥ', U'ʜ', U'ʢ', U'ʡ', U'ɕ',
    U'ʑ', U'ɺ', U'ɧ', U'ʦ', U'ʣ', U'ʧ', U'ʤ', U'ʨ', U'ʥ', U'ɓ', U'ɗ',
    U'ʄ'};

bool is_skippable(char32_t cp) {
    if (cp >= 0x0300 && cp <= 0x036F) return true;  // combining diacritics
    if (cp >= 0x1DC0 && cp <= 0x1DFF) return true;
    if (cp >= 0x02B0 && cp <= 0x02FF) return true;  // modifier letters incl. ː ˑ ʰ ʲ ʷ
    if (cp == U'ˈ' || cp == U'ˌ' || cp == 0x207F) return true;
    return false;
}

std::optional<char32_t> base_symbol(std::string_view segment) {
    for (char32_t cp : decode_utf8(segment)) {
        if (is_skippable(cp)) continue;
        return cp;
    }
    return std::nullopt;
}

}  // namespace

bool is_vowel_base(char32_t cp) {
    return std::find(kVowels.begin(), kVowels.end(), cp) != kVowels.end();
}

bool is_consonant_base(char32_t cp) {
    return std::find(kConsonants.begin(), kConsonants.end(), cp) !=
           kConsonants.end();
}

std::optional<SegmentClass> classify(std::string_view segment) {
    for (char32_t cp : decode_utf8(segment)) {
        if (is_skippable(cp)) continue;
        if (is_vowel_base(cp)) return SegmentClass::Vowel;
        if (is_consonant_base(cp)) return SegmentClass::Consonant;
        return std::nullopt;  // unknown base symbol
    }
    return std::nullopt;
}

std::optional<Backness> backness(std::string_view segment) {
    auto base = base_symbol(segment);
    if (!base || !is_vowel_base(*base)) return std::nullopt;
    static constexpr std::u32string_view front = U"iyɪʏeøɛœæaɶ";
    static constexpr std::u32string_view central = U"ɨʉɘɵəɜɞɐ";
    if (front.find(*base) != std::u32string_view::npos) return Backness::Front;
    if (central.find(*base) != std::u32string_view::npos)
        return Backness::Central;
    return Backness::Back;
}

std::optional<bool> rounded(std::string_view segment) {
    auto base = base_symbol(segment);
    if (!base || !is_vowel_base(*base)) return std::nullopt;
    static constexpr std::u32string_view round = U"yʉuʏʊøɵoœɞɔɶɒ";
    return round.find(*base) != std::u32string_view::npos;
}

}  // namespace vh::ipa
