#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vh/lexicon.hpp"
#include "vh/numerics.hpp"

namespace vh::plm {

inline constexpr const char* kBos = "<bos>";
inline constexpr const char* kMask = "<mask>";
inline constexpr const char* kEos = "<eos>";

// Input alphabet: inventory segments + BOS + MASK. Output alphabet: vowels +
// EOS. Indices are dense and stable (segments in sorted order).
struct Vocabulary {
    std::vector<std::string> input_symbols;
    std::vector<std::string> output_symbols;
    std::map<std::string, int> input_index;
    std::map<std::string, int> output_index;
    int bos_id = -1;
    int mask_id = -1;
    int eos_id = -1;  // index in the output alphabet

    static Vocabulary build(const lex::PhonemeInventory& inventory);
    int n_inputs() const { return static_cast<int>(input_symbols.size()); }
    int n_outputs() const { return static_cast<int>(output_symbols.size()); }
};

struct TrainingConfig {
    int embedding_size = 32;
    int hidden_size = 256;
    int layers = 2;
    double dropout = 0.33;
    int batch_size = 32;
    double mask_probability = 0.25;
    int max_epochs = 100;
    int patience = 3;
    double min_delta = 1e-3;  // nats
    bool eos_in_loss = true;
    double learning_rate = 1e-3;
    std::uint64_t seed = 1;
};

struct EpochRecord {
    double train_loss;  // nats per target
    double valid_loss;
};

struct TrainedModel {
    num::ModelParams params;
    Vocabulary vocab;
    TrainingConfig config;
    std::vector<EpochRecord> history;
    int best_epoch = -1;

    // Probability vectors over the output alphabet (vowels + EOS), one per
    // target position (EOS targets excluded). Positions index into
    // word.segments.
    struct Prediction {
        int position;
        num::VectorXd probs;
    };
    std::vector<Prediction> predict_distributions(
        const lex::WordForm& word, const lex::PhonemeInventory& inventory) const;
};

// Indices t such that segment t is a vowel and some vowel occurs before t.
// If with_eos, the end-of-word position (== segments.size(), target EOS) is
// appended when the word contains at least one vowel.
std::vector<int> target_positions(const lex::WordForm& word,
                                  const lex::PhonemeInventory& inventory,
                                  bool with_eos);

TrainedModel train(const std::vector<lex::WordForm>& train_forms,
                   const std::vector<lex::WordForm>& valid_forms,
                   const lex::PhonemeInventory& inventory,
                   const TrainingConfig& config);

// Model container round-trips f64 parameters bit-exactly.
void save_model(const TrainedModel& model, const std::string& path);
TrainedModel load_model(const std::string& path);

}  // namespace vh::plm
