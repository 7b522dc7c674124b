#include "vh/plm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "json.hpp"
#include "vh/errors.hpp"

namespace vh::plm {

using num::MatrixXd;
using num::MatrixXi;
using num::VectorXd;

Vocabulary Vocabulary::build(const lex::PhonemeInventory& inventory) {
    Vocabulary v;
    for (const auto& [seg, cls] : inventory.segments) {
        v.input_index[seg] = static_cast<int>(v.input_symbols.size());
        v.input_symbols.push_back(seg);
        if (cls.first == ipa::SegmentClass::Vowel) {
            v.output_index[seg] = static_cast<int>(v.output_symbols.size());
            v.output_symbols.push_back(seg);
        }
    }
    if (v.output_symbols.empty())
        throw InsufficientData("inventory has no vowels");
    v.bos_id = static_cast<int>(v.input_symbols.size());
    v.input_symbols.push_back(kBos);
    v.input_index[kBos] = v.bos_id;
    v.mask_id = static_cast<int>(v.input_symbols.size());
    v.input_symbols.push_back(kMask);
    v.input_index[kMask] = v.mask_id;
    v.eos_id = static_cast<int>(v.output_symbols.size());
    v.output_symbols.push_back(kEos);
    v.output_index[kEos] = v.eos_id;
    return v;
}

std::vector<int> target_positions(const lex::WordForm& word,
                                  const lex::PhonemeInventory& inventory,
                                  bool with_eos) {
    std::vector<int> out;
    bool seen_vowel = false;
    for (int t = 0; t < static_cast<int>(word.segments.size()); ++t) {
        const bool vowel = inventory.is_vowel(word.segments[t]);
        if (vowel && seen_vowel) out.push_back(t);
        seen_vowel = seen_vowel || vowel;
    }
    if (with_eos && seen_vowel)
        out.push_back(static_cast<int>(word.segments.size()));
    return out;
}

namespace {

std::vector<int> encode(const lex::WordForm& word, const Vocabulary& vocab) {
    std::vector<int> tokens;
    tokens.reserve(word.segments.size() + 1);
    tokens.push_back(vocab.bos_id);
    for (const auto& seg : word.segments) {
        auto it = vocab.input_index.find(seg);
        if (it == vocab.input_index.end())
            throw UnknownSegment("segment '" + seg + "' not in vocabulary");
        tokens.push_back(it->second);
    }
    return tokens;
}

struct BatchTargets {
    MatrixXi tokens;  // steps x batch, padded with MASK
    // (step, column, output index) triples
    struct Target {
        int step, col, out;
    };
    std::vector<Target> targets;
};

// Builds the padded token matrix and target list for a batch of forms.
// Targets at word position t are read from the hidden state at step t
// (the BOS prefix shifts everything by one).
BatchTargets make_batch(const std::vector<const lex::WordForm*>& words,
                        const Vocabulary& vocab,
                        const lex::PhonemeInventory& inventory, bool with_eos) {
    BatchTargets out;
    int steps = 0;
    std::vector<std::vector<int>> encoded;
    for (const auto* w : words) {
        encoded.push_back(encode(*w, vocab));
        steps = std::max(steps, static_cast<int>(encoded.back().size()));
    }
    out.tokens =
        MatrixXi::Constant(steps, static_cast<int>(words.size()), vocab.mask_id);
    for (int b = 0; b < static_cast<int>(words.size()); ++b) {
        for (int s = 0; s < static_cast<int>(encoded[b].size()); ++s)
            out.tokens(s, b) = encoded[b][s];
        for (int t : target_positions(*words[b], inventory, with_eos)) {
            int target_out =
                t == static_cast<int>(words[b]->segments.size())
                    ? vocab.eos_id
                    : vocab.output_index.at(words[b]->segments[t]);
            out.targets.push_back({t, b, target_out});
        }
    }
    return out;
}

void apply_input_masking(MatrixXi& tokens,
                         const std::vector<const lex::WordForm*>& words,
                         const Vocabulary& vocab, double p, Rng& rng) {
    for (int b = 0; b < static_cast<int>(words.size()); ++b) {
        const int len = static_cast<int>(words[b]->segments.size());
        for (int s = 1; s <= len; ++s)
            if (rng.bernoulli(p)) tokens(s, b) = vocab.mask_id;
    }
}

// Returns summed cross-entropy over targets; fills grads when given.
double batch_loss(const num::ModelParams& params, const Vocabulary& vocab,
                  const BatchTargets& batch, const num::ForwardCache& cache,
                  num::GradientSet* grads, double grad_scale) {
    std::vector<MatrixXd> d_h_top;
    if (grads) d_h_top.resize(cache.steps);
    double loss = 0.0;
    // group targets by step so the projection is applied once per step
    for (int s = 0; s < cache.steps; ++s) {
        std::vector<const BatchTargets::Target*> here;
        for (const auto& t : batch.targets)
            if (t.step == s) here.push_back(&t);
        if (here.empty()) continue;
        const MatrixXd h = cache.h_top(s);
        for (const auto* t : here) {
            VectorXd logits = params.proj * h.col(t->col) + params.proj_bias;
            VectorXd probs = num::softmax(logits);
            loss += num::cross_entropy(probs, t->out);
            if (grads) {
                VectorXd dlogits = probs;
                dlogits[t->out] -= 1.0;
                dlogits *= grad_scale;
                grads->proj.noalias() += dlogits * h.col(t->col).transpose();
                grads->proj_bias += dlogits;
                if (d_h_top[s].size() == 0)
                    d_h_top[s] = MatrixXd::Zero(h.rows(), cache.batch);
                d_h_top[s].col(t->col).noalias() +=
                    params.proj.transpose() * dlogits;
            }
        }
    }
    if (grads) num::lstm_backward(params, cache, d_h_top, *grads);
    return loss;
}

std::vector<std::vector<const lex::WordForm*>> make_batches(
    const std::vector<lex::WordForm>& forms, const std::vector<std::size_t>& order,
    int batch_size) {
    std::vector<std::vector<const lex::WordForm*>> batches;
    for (std::size_t i = 0; i < order.size(); i += batch_size) {
        std::vector<const lex::WordForm*> batch;
        for (std::size_t j = i;
             j < std::min(order.size(), i + static_cast<std::size_t>(batch_size));
             ++j)
            batch.push_back(&forms[order[j]]);
        batches.push_back(std::move(batch));
    }
    return batches;
}

double evaluate_loss(const num::ModelParams& params, const Vocabulary& vocab,
                     const std::vector<lex::WordForm>& forms,
                     const lex::PhonemeInventory& inventory,
                     const TrainingConfig& cfg) {
    std::vector<std::size_t> order(forms.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    double loss = 0.0;
    long count = 0;
    for (const auto& batch_words :
         make_batches(forms, order, cfg.batch_size)) {
        auto batch = make_batch(batch_words, vocab, inventory, cfg.eos_in_loss);
        if (batch.targets.empty()) continue;
        auto cache = num::lstm_forward(params, batch.tokens);
        loss += batch_loss(params, vocab, batch, cache, nullptr, 0.0);
        count += static_cast<long>(batch.targets.size());
    }
    if (count == 0) throw InsufficientData("no target positions in split");
    return loss / static_cast<double>(count);
}

}  // namespace

TrainedModel train(const std::vector<lex::WordForm>& train_forms,
                   const std::vector<lex::WordForm>& valid_forms,
                   const lex::PhonemeInventory& inventory,
                   const TrainingConfig& config) {
    if (train_forms.empty() || valid_forms.empty())
        throw InsufficientData("train and valid splits must be non-empty");
    if (config.mask_probability < 0.0 || config.mask_probability >= 1.0)
        throw BadSpec("mask probability must be in [0,1)");
    if (config.batch_size < 1) throw BadSpec("batch size must be >= 1");

    TrainedModel model;
    model.vocab = Vocabulary::build(inventory);
    model.config = config;

    Rng rng(config.seed);
    Rng init_rng = rng.fork(0);
    Rng epoch_rng = rng.fork(1);
    model.params = num::ModelParams::init(
        model.vocab.n_inputs(), model.vocab.n_outputs(), config.embedding_size,
        config.hidden_size, config.layers, init_rng);
    num::AdamState adam = num::AdamState::like(model.params);

    num::ModelParams best_params = model.params;
    double best_valid = std::numeric_limits<double>::infinity();
    int stall = 0;

    std::vector<std::size_t> order(train_forms.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        epoch_rng.shuffle(order);
        double epoch_loss = 0.0;
        long epoch_targets = 0;
        for (const auto& batch_words :
             make_batches(train_forms, order, config.batch_size)) {
            auto batch = make_batch(batch_words, model.vocab, inventory,
                                    config.eos_in_loss);
            if (batch.targets.empty()) continue;
            apply_input_masking(batch.tokens, batch_words, model.vocab,
                                config.mask_probability, epoch_rng);
            auto cache = num::lstm_forward(model.params, batch.tokens,
                                           config.dropout, &epoch_rng);
            num::GradientSet grads = model.params;
            grads.set_zero();
            const double scale = 1.0 / static_cast<double>(batch.targets.size());
            double loss = batch_loss(model.params, model.vocab, batch, cache,
                                     &grads, scale);
            if (!std::isfinite(loss)) throw NonFiniteLoss("training loss");
            epoch_loss += loss;
            epoch_targets += static_cast<long>(batch.targets.size());
            num::adam_update(model.params, grads, adam, config.learning_rate);
        }
        const double train_loss =
            epoch_loss / static_cast<double>(std::max(1L, epoch_targets));
        const double valid_loss = evaluate_loss(model.params, model.vocab,
                                                valid_forms, inventory, config);
        if (!std::isfinite(valid_loss)) throw NonFiniteLoss("validation loss");
        model.history.push_back({train_loss, valid_loss});

        if (valid_loss < best_valid - config.min_delta) {
            best_valid = valid_loss;
            best_params = model.params;
            model.best_epoch = epoch;
            stall = 0;
        } else {
            ++stall;
            if (stall >= config.patience) break;
        }
    }
    model.params = std::move(best_params);
    return model;
}

std::vector<TrainedModel::Prediction> TrainedModel::predict_distributions(
    const lex::WordForm& word, const lex::PhonemeInventory& inventory) const {
    std::vector<Prediction> out;
    auto positions = target_positions(word, inventory, /*with_eos=*/false);
    if (positions.empty()) return out;
    auto encoded = encode(word, vocab);
    MatrixXi tokens(static_cast<int>(encoded.size()), 1);
    for (int s = 0; s < static_cast<int>(encoded.size()); ++s)
        tokens(s, 0) = encoded[s];
    auto cache = num::lstm_forward(params, tokens);
    const std::vector<std::uint8_t> full(vocab.n_outputs(), 1);
    for (int t : positions) {
        VectorXd logits =
            params.proj * cache.h_top(t).col(0) + params.proj_bias;
        out.push_back({t, num::masked_softmax(logits, full)});
    }
    return out;
}

namespace {

void write_bytes(std::ostream& out, const void* data, std::size_t n) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}
void write_u64(std::ostream& out, std::uint64_t v) { write_bytes(out, &v, 8); }
void write_str(std::ostream& out, const std::string& s) {
    write_u64(out, s.size());
    write_bytes(out, s.data(), s.size());
}
std::uint64_t read_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 8);
    if (!in) throw IoFailure("truncated model file");
    return v;
}
std::string read_str(std::istream& in) {
    std::string s(read_u64(in), '\0');
    in.read(s.data(), static_cast<std::streamsize>(s.size()));
    if (!in) throw IoFailure("truncated model file");
    return s;
}

nlohmann::json config_to_json(const TrainingConfig& c) {
    return {{"embedding_size", c.embedding_size},
            {"hidden_size", c.hidden_size},
            {"layers", c.layers},
            {"dropout", c.dropout},
            {"batch_size", c.batch_size},
            {"mask_probability", c.mask_probability},
            {"max_epochs", c.max_epochs},
            {"patience", c.patience},
            {"min_delta", c.min_delta},
            {"eos_in_loss", c.eos_in_loss},
            {"learning_rate", c.learning_rate},
            {"seed", c.seed}};
}

TrainingConfig config_from_json(const nlohmann::json& j) {
    TrainingConfig c;
    c.embedding_size = j.at("embedding_size");
    c.hidden_size = j.at("hidden_size");
    c.layers = j.at("layers");
    c.dropout = j.at("dropout");
    c.batch_size = j.at("batch_size");
    c.mask_probability = j.at("mask_probability");
    c.max_epochs = j.at("max_epochs");
    c.patience = j.at("patience");
    c.min_delta = j.at("min_delta");
    c.eos_in_loss = j.at("eos_in_loss");
    c.learning_rate = j.at("learning_rate");
    c.seed = j.at("seed");
    return c;
}

constexpr char kMagic[4] = {'V', 'H', 'L', 'M'};

}  // namespace

void save_model(const TrainedModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("cannot write model file: " + path);
    write_bytes(out, kMagic, 4);
    write_u64(out, 1);  // version

    nlohmann::json header;
    header["input_symbols"] = model.vocab.input_symbols;
    header["config"] = config_to_json(model.config);
    header["best_epoch"] = model.best_epoch;
    header["history"] = nlohmann::json::array();
    for (const auto& e : model.history)
        header["history"].push_back({e.train_loss, e.valid_loss});
    // vowels are recoverable from the inventory, but storing both alphabets
    // keeps the file self-describing
    header["output_symbols"] = model.vocab.output_symbols;
    write_str(out, header.dump());

    auto tensors = model.params.tensors();
    write_u64(out, tensors.size());
    for (const auto& t : tensors) {
        write_str(out, t.name);
        write_u64(out, static_cast<std::uint64_t>(t.size));
        write_bytes(out, t.data, static_cast<std::size_t>(t.size) * 8);
    }
    if (!out) throw IoFailure("write failed: " + path);
}

TrainedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open model file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw IoFailure("not a model file: " + path);
    if (read_u64(in) != 1) throw IoFailure("unsupported model version");

    auto header = nlohmann::json::parse(read_str(in));
    TrainedModel model;
    model.config = config_from_json(header.at("config"));
    model.best_epoch = header.at("best_epoch");
    for (const auto& e : header.at("history"))
        model.history.push_back({e.at(0), e.at(1)});

    Vocabulary& v = model.vocab;
    v.input_symbols = header.at("input_symbols").get<std::vector<std::string>>();
    v.output_symbols =
        header.at("output_symbols").get<std::vector<std::string>>();
    for (int i = 0; i < static_cast<int>(v.input_symbols.size()); ++i)
        v.input_index[v.input_symbols[i]] = i;
    for (int i = 0; i < static_cast<int>(v.output_symbols.size()); ++i)
        v.output_index[v.output_symbols[i]] = i;
    v.bos_id = v.input_index.at(kBos);
    v.mask_id = v.input_index.at(kMask);
    v.eos_id = v.output_index.at(kEos);

    model.params = num::ModelParams::zeros(
        v.n_inputs(), v.n_outputs(), model.config.embedding_size,
        model.config.hidden_size, model.config.layers);
    const std::uint64_t n_tensors = read_u64(in);
    auto tensors = model.params.tensors();
    if (n_tensors != tensors.size())
        throw IoFailure("tensor count mismatch in model file");
    for (auto& t : tensors) {
        if (read_str(in) != t.name) throw IoFailure("tensor name mismatch");
        if (read_u64(in) != static_cast<std::uint64_t>(t.size))
            throw IoFailure("tensor shape mismatch");
        in.read(reinterpret_cast<char*>(t.data),
                static_cast<std::streamsize>(t.size) * 8);
        if (!in) throw IoFailure("truncated model file");
    }
    return model;
}

}  // namespace vh::plm
