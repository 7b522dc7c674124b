#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "vh/errors.hpp"
#include "vh/lexicon.hpp"
#include "vh/plm.hpp"

using namespace vh;

namespace {

lex::WordForm form(std::vector<std::string> segs) {
    lex::WordForm f;
    f.segments = std::move(segs);
    return f;
}

lex::PhonemeInventory inventory_of(
    const std::vector<std::vector<std::string>>& words) {
    lex::PhonemeInventory inv;
    for (const auto& w : words)
        for (const auto& s : w)
            if (!inv.contains(s))
                inv.segments[s] = {*ipa::classify(s), lex::ClassSource::Builtin};
    return inv;
}

plm::TrainingConfig tiny_config() {
    plm::TrainingConfig c;
    c.embedding_size = 4;
    c.hidden_size = 8;
    c.layers = 2;
    c.dropout = 0.2;
    c.batch_size = 8;
    c.max_epochs = 3;
    c.seed = 3;
    return c;
}

}  // namespace

TEST_CASE("vocabulary layout") {
    auto inv = inventory_of({{"k", "a"}, {"s", "i"}});
    auto v = plm::Vocabulary::build(inv);
    // segments sorted, then BOS and MASK
    CHECK(v.input_symbols ==
          std::vector<std::string>{"a", "i", "k", "s", plm::kBos, plm::kMask});
    CHECK(v.output_symbols == std::vector<std::string>{"a", "i", plm::kEos});
    CHECK(v.bos_id == 4);
    CHECK(v.mask_id == 5);
    CHECK(v.eos_id == 2);

    lex::PhonemeInventory no_vowels;
    no_vowels.segments["k"] = {ipa::SegmentClass::Consonant,
                              lex::ClassSource::Builtin};
    CHECK_THROWS_AS((void)plm::Vocabulary::build(no_vowels), InsufficientData);
}

TEST_CASE("target positions require a preceding vowel") {
    auto inv = inventory_of(
        {{"s", "i", "l", "m", "æ"}, {"k", "ɯ", "z"}, {"k", "ɯ", "z", "l", "a", "r"}});

    CHECK(plm::target_positions(form({"s", "i", "l", "m", "æ"}), inv, false) ==
          std::vector<int>{4});
    CHECK(plm::target_positions(form({"s", "i", "l", "m", "æ"}), inv, true) ==
          std::vector<int>{4, 5});

    // single vowel: no within-word targets, EOS target only
    CHECK(plm::target_positions(form({"k", "ɯ", "z"}), inv, false).empty());
    CHECK(plm::target_positions(form({"k", "ɯ", "z"}), inv, true) ==
          std::vector<int>{3});

    CHECK(plm::target_positions(form({"k", "ɯ", "z", "l", "a", "r"}), inv,
                                false) == std::vector<int>{4});

    // no vowels at all: no targets either way
    CHECK(plm::target_positions(form({"k", "s"}), inv, true).empty());
}

TEST_CASE("zero-weight model predicts the uniform distribution") {
    auto inv = inventory_of({{"k", "a", "t", "i", "p", "u"}});
    plm::TrainedModel model;
    model.vocab = plm::Vocabulary::build(inv);
    model.config = tiny_config();
    model.params = num::ModelParams::zeros(
        model.vocab.n_inputs(), model.vocab.n_outputs(), 4, 8, 2);

    auto preds =
        model.predict_distributions(form({"k", "a", "t", "i", "p", "u"}), inv);
    REQUIRE(preds.size() == 2);  // positions 3 and 5
    CHECK(preds[0].position == 3);
    CHECK(preds[1].position == 5);
    const int n_out = model.vocab.n_outputs();  // 3 vowels + EOS
    REQUIRE(n_out == 4);
    for (const auto& p : preds) {
        CHECK(p.probs.size() == n_out);
        for (int i = 0; i < n_out; ++i)
            CHECK(p.probs[i] == 0.25);  // exact: equal logits, power of two
        CHECK(p.probs.sum() == 1.0);
    }
}

TEST_CASE("prediction rejects unknown segments") {
    auto inv = inventory_of({{"k", "a"}});
    plm::TrainedModel model;
    model.vocab = plm::Vocabulary::build(inv);
    model.params =
        num::ModelParams::zeros(model.vocab.n_inputs(), model.vocab.n_outputs(),
                                2, 2, 1);
    auto inv2 = inventory_of({{"k", "a", "o"}});
    CHECK_THROWS_AS(
        (void)model.predict_distributions(form({"k", "a", "k", "o"}), inv2),
        UnknownSegment);
}

TEST_CASE("training runs, improves, and is deterministic") {
    lex::SyntheticSpec spec;
    spec.word_count = 120;
    spec.seed = 11;
    auto lexicon = lex::generate_synthetic_lexicon(spec);
    auto split = lex::split_dataset(lexicon, 5);

    auto cfg = tiny_config();
    auto m1 = plm::train(split.train, split.valid, lexicon.inventory, cfg);
    REQUIRE_FALSE(m1.history.empty());
    for (const auto& e : m1.history) {
        CHECK(std::isfinite(e.train_loss));
        CHECK(std::isfinite(e.valid_loss));
    }
    CHECK(m1.best_epoch >= 0);
    CHECK(m1.params.all_finite());

    auto m2 = plm::train(split.train, split.valid, lexicon.inventory, cfg);
    auto t1 = m1.params.tensors();
    auto t2 = m2.params.tensors();
    REQUIRE(t1.size() == t2.size());
    for (std::size_t k = 0; k < t1.size(); ++k) {
        REQUIRE(t1[k].size == t2[k].size);
        for (Eigen::Index i = 0; i < t1[k].size; ++i)
            CHECK(t1[k].data[i] == t2[k].data[i]);  // bitwise identical
    }
    REQUIRE(m1.history.size() == m2.history.size());
    for (std::size_t i = 0; i < m1.history.size(); ++i) {
        CHECK(m1.history[i].train_loss == m2.history[i].train_loss);
        CHECK(m1.history[i].valid_loss == m2.history[i].valid_loss);
    }
}

TEST_CASE("training config validation") {
    auto inv = inventory_of({{"k", "a"}});
    std::vector<lex::WordForm> forms = {form({"k", "a"})};
    plm::TrainingConfig bad = tiny_config();
    bad.mask_probability = 1.0;
    CHECK_THROWS_AS((void)plm::train(forms, forms, inv, bad), BadSpec);
    CHECK_THROWS_AS((void)plm::train({}, forms, inv, tiny_config()),
                    InsufficientData);
}

TEST_CASE("model snapshots round-trip bit-exactly") {
    lex::SyntheticSpec spec;
    spec.word_count = 60;
    spec.seed = 2;
    auto lexicon = lex::generate_synthetic_lexicon(spec);
    auto split = lex::split_dataset(lexicon, 9);
    auto cfg = tiny_config();
    cfg.max_epochs = 1;
    auto model = plm::train(split.train, split.valid, lexicon.inventory, cfg);

    const auto path =
        (std::filesystem::temp_directory_path() / "vh_model_test.bin").string();
    plm::save_model(model, path);
    auto loaded = plm::load_model(path);
    std::remove(path.c_str());

    CHECK(loaded.vocab.input_symbols == model.vocab.input_symbols);
    CHECK(loaded.vocab.output_symbols == model.vocab.output_symbols);
    CHECK(loaded.best_epoch == model.best_epoch);
    REQUIRE(loaded.history.size() == model.history.size());
    for (std::size_t i = 0; i < model.history.size(); ++i) {
        CHECK(loaded.history[i].train_loss == model.history[i].train_loss);
        CHECK(loaded.history[i].valid_loss == model.history[i].valid_loss);
    }
    auto a = model.params.tensors();
    auto b = loaded.params.tensors();
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        REQUIRE(a[k].size == b[k].size);
        for (Eigen::Index i = 0; i < a[k].size; ++i)
            CHECK(a[k].data[i] == b[k].data[i]);
    }

    // predictions from the loaded model are identical too
    auto w = lexicon.forms.front();
    auto p1 = model.predict_distributions(w, lexicon.inventory);
    auto p2 = loaded.predict_distributions(w, lexicon.inventory);
    REQUIRE(p1.size() == p2.size());
    for (std::size_t i = 0; i < p1.size(); ++i) {
        CHECK(p1[i].position == p2[i].position);
        CHECK((p1[i].probs - p2[i].probs).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("loading a non-model file fails cleanly") {
    const auto path =
        (std::filesystem::temp_directory_path() / "vh_not_a_model.bin").string();
    {
        std::FILE* f = std::fopen(path.c_str(), "wb");
        std::fputs("garbage", f);
        std::fclose(f);
    }
    CHECK_THROWS_AS((void)plm::load_model(path), IoFailure);
    std::remove(path.c_str());
}
