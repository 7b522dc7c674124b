#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vh/plm.hpp"
#include "vh/stats.hpp"

namespace vh::surp {

struct HarmonyScheme {
    std::string language;
    std::string feature;            // back | round | atr | user-defined
    std::set<std::string> minus;    // e.g. -back (front) vowels
    std::set<std::string> plus;     // e.g. +back vowels
    std::set<std::string> neutral;
    // condition-code letters, e.g. f/b for back, u/r for round
    std::string minus_label;
    std::string plus_label;
    // letter used in the pooled harmonic/disharmonic row label
    std::string harmony_label;

    void apply_default_labels();
};

enum class VowelClass { Minus, Plus, Neutral, Unassigned };
VowelClass classify_vowel(const HarmonyScheme& scheme, const std::string& seg);

// Curated schemes for the five harmony languages of the study sample,
// keyed by ISO 639-3 code (fin, hun, mnc, khk, tur).
std::vector<HarmonyScheme> builtin_schemes();
std::vector<HarmonyScheme> builtin_schemes(const std::string& language);

// Derives +/-back or +/-round groups from the IPA feature table; central
// vowels are neutral for backness.
HarmonyScheme derive_scheme(const lex::PhonemeInventory& inventory,
                            const std::string& feature,
                            const std::string& language);

std::vector<HarmonyScheme> load_schemes_json(const std::string& path);
std::string schemes_to_json(const std::vector<HarmonyScheme>& schemes);

struct SurprisalSample {
    int form_index;   // index into the evaluated form list
    int position;     // target position t within the form
    std::string context;  // condition-code prefix, e.g. "f", "n", "b_n"
    double eta_minus;     // bits
    double eta_plus;      // bits
    std::optional<double> eta_neutral;
};

struct ContrastResult {
    std::string label;  // e.g. "f_f/f_b"
    double delta_eta;   // bits
    bool paired;
    stats::TestReport test;
    stats::TestReport normality_a;  // Shapiro-Wilk per side, when computable
    stats::TestReport normality_b;
    std::vector<double> samples_a, samples_b;
};

// -log2 p
double vowel_surprisal(double p);

// -log2 of the summed group mass; distribution over the model's output
// alphabet, group given as output indices
double group_surprisal(const num::VectorXd& distribution,
                       const std::vector<int>& group_indices);

// Condition-code context prefixes for position t (e.g. {"b"} or
// {"n", "b_n"}); empty when the nearest preceding vowel has no class.
std::vector<std::string> label_condition(const lex::WordForm& word, int t,
                                         const HarmonyScheme& scheme,
                                         const lex::PhonemeInventory& inventory);

struct EvaluationResult {
    std::vector<SurprisalSample> samples;
    int skipped_forms = 0;  // forms with segments unknown to the model
};

EvaluationResult evaluate_testset(const plm::TrainedModel& model,
                                  const std::vector<lex::WordForm>& forms,
                                  const lex::PhonemeInventory& inventory,
                                  const HarmonyScheme& scheme);

double delta_eta(const std::vector<double>& harmonic,
                 const std::vector<double>& disharmonic);
double surprisal_reduction(double delta);

// All standard contrast rows for one scheme (direction rows, the unpaired
// cross-direction row, neutral-context rows when the scheme has neutrals,
// and the pooled harmonic/disharmonic row).
std::vector<ContrastResult> build_contrasts(
    const std::vector<SurprisalSample>& samples, const HarmonyScheme& scheme);

// Cross-feature row comparing the pooled disharmonic conditions of two
// schemes (e.g. "f/r_dish").
std::optional<ContrastResult> cross_feature_contrast(
    const std::vector<SurprisalSample>& samples_a, const HarmonyScheme& a,
    const std::vector<SurprisalSample>& samples_b, const HarmonyScheme& b);

}  // namespace vh::surp
