#include "vh/surprisal.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "vh/errors.hpp"

namespace vh::surp {

void HarmonyScheme::apply_default_labels() {
    if (!minus_label.empty() && !plus_label.empty() && !harmony_label.empty())
        return;
    if (feature == "back") {
        minus_label = "f";
        plus_label = "b";
        harmony_label = "f";
    } else if (feature == "round") {
        minus_label = "u";
        plus_label = "r";
        harmony_label = "r";
    } else if (feature == "atr") {
        minus_label = "natr";
        plus_label = "atr";
        harmony_label = "atr";
    } else {
        if (minus_label.empty()) minus_label = "m";
        if (plus_label.empty()) plus_label = "p";
        if (harmony_label.empty()) harmony_label = feature;
    }
}

VowelClass classify_vowel(const HarmonyScheme& scheme, const std::string& seg) {
    if (scheme.minus.count(seg)) return VowelClass::Minus;
    if (scheme.plus.count(seg)) return VowelClass::Plus;
    if (scheme.neutral.count(seg)) return VowelClass::Neutral;
    return VowelClass::Unassigned;
}

namespace {

HarmonyScheme make_scheme(std::string language, std::string feature,
                          std::set<std::string> minus,
                          std::set<std::string> plus,
                          std::set<std::string> neutral) {
    HarmonyScheme s;
    s.language = std::move(language);
    s.feature = std::move(feature);
    s.minus = std::move(minus);
    s.plus = std::move(plus);
    s.neutral = std::move(neutral);
    s.apply_default_labels();
    return s;
}

}  // namespace

std::vector<HarmonyScheme> builtin_schemes() {
    return {
        make_scheme("fin", "back", {"y", "ø", "æ"}, {"u", "o", "ɑ"},
                    {"e", "i"}),
        make_scheme("hun", "back", {"y", "ø"}, {"u", "o", "ɒ"}, {"e", "i"}),
        make_scheme("mnc", "back", {"e", "ɤ"}, {"ɑ", "ɔ"}, {"i", "u"}),
        make_scheme("khk", "atr", {"e", "u", "ɔ"}, {"a", "ɒ", "o"}, {"i"}),
        make_scheme("khk", "round", {"e", "a", "i"}, {"o"}, {"u", "ʊ"}),
        make_scheme("tur", "back", {"i", "e", "y", "œ"}, {"ɯ", "a", "u", "o"},
                    {}),
        make_scheme("tur", "round", {"i", "e", "u", "o"}, {"ɯ", "a", "y", "œ"},
                    {}),
    };
}

std::vector<HarmonyScheme> builtin_schemes(const std::string& language) {
    std::vector<HarmonyScheme> out;
    for (auto& s : builtin_schemes())
        if (s.language == language) out.push_back(std::move(s));
    return out;
}

HarmonyScheme derive_scheme(const lex::PhonemeInventory& inventory,
                            const std::string& feature,
                            const std::string& language) {
    HarmonyScheme s;
    s.language = language;
    s.feature = feature;
    for (const auto& v : inventory.vowels()) {
        if (feature == "back") {
            auto b = ipa::backness(v);
            if (!b) continue;
            switch (*b) {
                case ipa::Backness::Front: s.minus.insert(v); break;
                case ipa::Backness::Central: s.neutral.insert(v); break;
                case ipa::Backness::Back: s.plus.insert(v); break;
            }
        } else if (feature == "round") {
            auto r = ipa::rounded(v);
            if (!r) continue;
            (*r ? s.plus : s.minus).insert(v);
        } else {
            throw BadSpec("cannot derive groups for feature '" + feature + "'");
        }
    }
    if (s.minus.empty() || s.plus.empty())
        throw SchemeInventoryMismatch("derived scheme for '" + feature +
                                      "' has an empty group");
    s.apply_default_labels();
    return s;
}

namespace {

std::set<std::string> set_from_json(const nlohmann::json& j) {
    std::set<std::string> out;
    for (const auto& v : j) out.insert(v.get<std::string>());
    return out;
}

}  // namespace

std::vector<HarmonyScheme> load_schemes_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot open scheme file: " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    std::vector<HarmonyScheme> out;
    for (const auto& e : j) {
        HarmonyScheme s;
        s.language = e.at("language");
        s.feature = e.at("feature");
        s.minus = set_from_json(e.at("minus"));
        s.plus = set_from_json(e.at("plus"));
        if (e.contains("neutral")) s.neutral = set_from_json(e.at("neutral"));
        if (e.contains("minus_label")) s.minus_label = e.at("minus_label");
        if (e.contains("plus_label")) s.plus_label = e.at("plus_label");
        if (e.contains("harmony_label")) s.harmony_label = e.at("harmony_label");
        s.apply_default_labels();
        if (s.minus.empty() || s.plus.empty())
            throw BadSpec("scheme groups must be non-empty");
        out.push_back(std::move(s));
    }
    return out;
}

std::string schemes_to_json(const std::vector<HarmonyScheme>& schemes) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& s : schemes) {
        j.push_back({{"language", s.language},
                     {"feature", s.feature},
                     {"minus", s.minus},
                     {"plus", s.plus},
                     {"neutral", s.neutral},
                     {"minus_label", s.minus_label},
                     {"plus_label", s.plus_label},
                     {"harmony_label", s.harmony_label}});
    }
    return j.dump(2);
}

double vowel_surprisal(double p) {
    if (p <= 0.0) throw NonPositiveProbability("probability must be positive");
    return -std::log2(std::min(p, 1.0));
}

double group_surprisal(const num::VectorXd& distribution,
                       const std::vector<int>& group_indices) {
    if (group_indices.empty()) throw EmptyGroup("empty vowel group");
    double mass = 0.0;
    for (int i : group_indices) {
        if (i < 0 || i >= distribution.size())
            throw DimensionMismatch("group index out of range");
        mass += distribution[i];
    }
    if (mass <= 0.0) throw ZeroMass("group has zero probability mass");
    return -std::log2(std::min(mass, 1.0));
}

std::vector<std::string> label_condition(
    const lex::WordForm& word, int t, const HarmonyScheme& scheme,
    const lex::PhonemeInventory& inventory) {
    std::vector<int> preceding;  // vowel positions before t, nearest first
    for (int i = t - 1; i >= 0; --i)
        if (inventory.is_vowel(word.segments[i])) preceding.push_back(i);
    if (preceding.empty())
        throw NoPrecedingVowel("no vowel precedes position " +
                               std::to_string(t));

    auto class_label = [&](VowelClass c) -> std::string {
        switch (c) {
            case VowelClass::Minus: return scheme.minus_label;
            case VowelClass::Plus: return scheme.plus_label;
            case VowelClass::Neutral: return "n";
            default: return "";
        }
    };

    std::vector<std::string> contexts;
    const VowelClass c1 =
        classify_vowel(scheme, word.segments[preceding[0]]);
    if (c1 == VowelClass::Unassigned) return contexts;
    contexts.push_back(class_label(c1));
    if (c1 == VowelClass::Neutral && preceding.size() > 1) {
        const VowelClass c0 =
            classify_vowel(scheme, word.segments[preceding[1]]);
        if (c0 == VowelClass::Neutral)
            contexts.push_back("n_n");
        else if (c0 != VowelClass::Unassigned)
            contexts.push_back(class_label(c0) + "_n");
    }
    return contexts;
}

EvaluationResult evaluate_testset(const plm::TrainedModel& model,
                                  const std::vector<lex::WordForm>& forms,
                                  const lex::PhonemeInventory& inventory,
                                  const HarmonyScheme& scheme) {
    auto indices_of = [&](const std::set<std::string>& group) {
        std::vector<int> out;
        for (const auto& v : group) {
            auto it = model.vocab.output_index.find(v);
            if (it != model.vocab.output_index.end()) out.push_back(it->second);
        }
        return out;
    };
    const auto minus_idx = indices_of(scheme.minus);
    const auto plus_idx = indices_of(scheme.plus);
    const auto neutral_idx = indices_of(scheme.neutral);
    if (minus_idx.empty() || plus_idx.empty())
        throw SchemeInventoryMismatch(
            "harmonic groups of scheme '" + scheme.feature +
            "' have no vowels in the model vocabulary");

    EvaluationResult result;
    for (int fi = 0; fi < static_cast<int>(forms.size()); ++fi) {
        std::vector<plm::TrainedModel::Prediction> preds;
        try {
            preds = model.predict_distributions(forms[fi], inventory);
        } catch (const UnknownSegment&) {
            ++result.skipped_forms;
            continue;
        }
        for (const auto& pred : preds) {
            auto contexts =
                label_condition(forms[fi], pred.position, scheme, inventory);
            if (contexts.empty()) continue;
            SurprisalSample sample;
            sample.form_index = fi;
            sample.position = pred.position;
            sample.eta_minus = group_surprisal(pred.probs, minus_idx);
            sample.eta_plus = group_surprisal(pred.probs, plus_idx);
            if (!neutral_idx.empty())
                sample.eta_neutral = group_surprisal(pred.probs, neutral_idx);
            for (const auto& ctx : contexts) {
                sample.context = ctx;
                result.samples.push_back(sample);
            }
        }
    }
    return result;
}

double delta_eta(const std::vector<double>& harmonic,
                 const std::vector<double>& disharmonic) {
    if (harmonic.empty() || disharmonic.empty())
        throw EmptySampleList("delta_eta needs non-empty sample lists");
    auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    return mean(harmonic) - mean(disharmonic);
}

double surprisal_reduction(double delta) { return -delta; }

namespace {

stats::TestReport try_shapiro(const std::vector<double>& v) {
    stats::TestReport r;
    try {
        r = stats::shapiro_wilk(v);
    } catch (const Error&) {
        // too few or degenerate; left unfilled
    }
    return r;
}

std::optional<ContrastResult> make_contrast(std::string label, bool paired,
                                            std::vector<double> a,
                                            std::vector<double> b) {
    if (a.empty() || b.empty()) return std::nullopt;
    ContrastResult c;
    c.label = std::move(label);
    c.paired = paired;
    c.delta_eta = delta_eta(a, b);
    try {
        c.test = paired ? stats::wilcoxon_signed_rank(a, b)
                        : stats::mann_whitney_u(a, b);
    } catch (const Error&) {
        return std::nullopt;  // e.g. all-zero differences
    }
    c.normality_a = try_shapiro(a);
    c.normality_b = try_shapiro(b);
    c.samples_a = std::move(a);
    c.samples_b = std::move(b);
    return c;
}

}  // namespace

std::vector<ContrastResult> build_contrasts(
    const std::vector<SurprisalSample>& samples, const HarmonyScheme& scheme) {
    const std::string& ml = scheme.minus_label;
    const std::string& pl = scheme.plus_label;

    auto gather = [&](const std::string& ctx, bool take_minus) {
        std::vector<double> out;
        for (const auto& s : samples)
            if (s.context == ctx)
                out.push_back(take_minus ? s.eta_minus : s.eta_plus);
        return out;
    };

    std::vector<ContrastResult> rows;
    auto add = [&](std::optional<ContrastResult> c) {
        if (c) rows.push_back(std::move(*c));
    };

    add(make_contrast(ml + "_" + ml + "/" + ml + "_" + pl, true,
                      gather(ml, true), gather(ml, false)));
    add(make_contrast(pl + "_" + pl + "/" + pl + "_" + ml, true,
                      gather(pl, false), gather(pl, true)));
    if (!scheme.neutral.empty())
        add(make_contrast("n_" + ml + "/n_" + pl, true, gather("n", true),
                          gather("n", false)));
    add(make_contrast(ml + "_" + pl + "/" + pl + "_" + ml, false,
                      gather(ml, false), gather(pl, true)));

    if (!scheme.neutral.empty()) {
        const std::string mn = ml + "_n";
        const std::string pn = pl + "_n";
        add(make_contrast(mn + "_" + ml + "/" + mn + "_" + pl, true,
                          gather(mn, true), gather(mn, false)));
        add(make_contrast(pn + "_" + pl + "/" + pn + "_" + ml, true,
                          gather(pn, false), gather(pn, true)));
        add(make_contrast("n_n_" + ml + "/n_n_" + pl, true,
                          gather("n_n", true), gather("n_n", false)));
        add(make_contrast(mn + "_" + pl + "/" + pn + "_" + ml, false,
                          gather(mn, false), gather(pn, true)));
    }

    // pooled harmonic vs disharmonic, both directions, paired per position
    std::vector<double> harm, dish;
    for (const auto& s : samples) {
        if (s.context == ml) {
            harm.push_back(s.eta_minus);
            dish.push_back(s.eta_plus);
        } else if (s.context == pl) {
            harm.push_back(s.eta_plus);
            dish.push_back(s.eta_minus);
        }
    }
    add(make_contrast(scheme.harmony_label + "_h/dish", true, std::move(harm),
                      std::move(dish)));
    return rows;
}

std::optional<ContrastResult> cross_feature_contrast(
    const std::vector<SurprisalSample>& samples_a, const HarmonyScheme& a,
    const std::vector<SurprisalSample>& samples_b, const HarmonyScheme& b) {
    auto pooled_dish = [](const std::vector<SurprisalSample>& samples,
                          const HarmonyScheme& scheme) {
        std::vector<double> out;
        for (const auto& s : samples) {
            if (s.context == scheme.minus_label) out.push_back(s.eta_plus);
            else if (s.context == scheme.plus_label) out.push_back(s.eta_minus);
        }
        return out;
    };
    return make_contrast(a.harmony_label + "/" + b.harmony_label + "_dish",
                         false, pooled_dish(samples_a, a),
                         pooled_dish(samples_b, b));
}

}  // namespace vh::surp
