// vhq: vowel-harmony quantification toolkit command line.
//
// Subcommands:
//   ingest   parse + preprocess a word list, dump lexicon JSON
//   synth    generate a synthetic CV-skeleton corpus
//   train    train a phoneme language model, save a snapshot
//   analyze  score a test set with a trained model, run the contrasts
//   report   re-render tables/figures from a results JSON
//   run      the whole pipeline in one go

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "vh/errors.hpp"
#include "vh/lexicon.hpp"
#include "vh/plm.hpp"
#include "vh/report.hpp"
#include "vh/surprisal.hpp"

namespace {

vh::lex::ClassOverrides load_overrides(const std::string& path) {
    if (path.empty()) return {};
    std::ifstream in(path);
    if (!in) throw vh::IoFailure("cannot open overrides: " + path);
    return vh::lex::parse_overrides(in);
}

vh::lex::Lexicon ingest(const std::string& input, const std::string& language,
                        const std::string& override_path, bool raw) {
    auto lexicon = vh::lex::parse_wordlist_file(input, language,
                                                load_overrides(override_path));
    return raw ? lexicon : vh::lex::preprocess(lexicon);
}

std::vector<vh::surp::HarmonyScheme> pick_schemes(
    const vh::lex::PhonemeInventory& inventory, const std::string& language,
    const std::string& scheme_path, const std::vector<std::string>& features) {
    std::vector<vh::surp::HarmonyScheme> schemes;
    if (!scheme_path.empty()) {
        for (auto& s : vh::surp::load_schemes_json(scheme_path))
            if (s.language.empty() || s.language == language)
                schemes.push_back(std::move(s));
    } else {
        schemes = vh::surp::builtin_schemes(language);
    }
    if (schemes.empty())
        for (const auto& f : features)
            schemes.push_back(vh::surp::derive_scheme(inventory, f, language));
    return schemes;
}

void add_training_flags(CLI::App* cmd, vh::plm::TrainingConfig& tc) {
    cmd->add_option("--embedding-size", tc.embedding_size);
    cmd->add_option("--hidden-size", tc.hidden_size);
    cmd->add_option("--layers", tc.layers);
    cmd->add_option("--dropout", tc.dropout);
    cmd->add_option("--batch-size", tc.batch_size);
    cmd->add_option("--mask-probability", tc.mask_probability);
    cmd->add_option("--max-epochs", tc.max_epochs);
    cmd->add_option("--patience", tc.patience);
    cmd->add_option("--min-delta", tc.min_delta);
    cmd->add_option("--learning-rate", tc.learning_rate);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vowel-harmony quantification toolkit"};
    app.require_subcommand(1);

    std::string input, language, override_path, scheme_path, output;
    std::string model_path = "model.bin";
    std::vector<std::string> features = {"back"};
    std::uint64_t seed = 1;
    vh::plm::TrainingConfig tc;
    vh::lex::SyntheticSpec syn;

    auto* c_ingest = app.add_subcommand("ingest", "parse and preprocess");
    c_ingest->add_option("--input", input)->required();
    c_ingest->add_option("--language", language);
    c_ingest->add_option("--overrides", override_path);
    c_ingest->add_option("--output", output, "lexicon JSON (default stdout)");
    bool keep_raw = false;
    c_ingest->add_flag("--raw", keep_raw, "skip preprocessing");

    auto* c_synth = app.add_subcommand("synth", "generate a synthetic corpus");
    c_synth->add_option("--words", syn.word_count);
    c_synth->add_option("--min-vowels", syn.min_vowels);
    c_synth->add_option("--max-vowels", syn.max_vowels);
    c_synth->add_option("--strength", syn.harmony_strength);
    c_synth->add_option("--seed", syn.seed);
    c_synth->add_option("--language", syn.language);
    c_synth->add_option("--output", output, "TSV path (default stdout)");

    auto* c_train = app.add_subcommand("train", "train a phoneme LM");
    c_train->add_option("--input", input)->required();
    c_train->add_option("--language", language);
    c_train->add_option("--overrides", override_path);
    c_train->add_option("--seed", seed);
    c_train->add_option("--model", model_path, "snapshot path");
    add_training_flags(c_train, tc);

    auto* c_analyze = app.add_subcommand("analyze", "score + test a corpus");
    c_analyze->add_option("--model", model_path)->required();
    c_analyze->add_option("--input", input)->required();
    c_analyze->add_option("--language", language);
    c_analyze->add_option("--overrides", override_path);
    c_analyze->add_option("--schemes", scheme_path);
    c_analyze->add_option("--feature", features);
    c_analyze->add_option("--seed", seed, "split seed (held-out test part)");
    bool whole_input = false;
    c_analyze->add_flag("--all-forms", whole_input,
                        "score every form instead of the held-out split");
    c_analyze->add_option("--output", output, "results CSV (default stdout)");

    auto* c_report = app.add_subcommand("report", "results JSON to CSV");
    std::string results_path;
    c_report->add_option("--results", results_path)->required();
    c_report->add_option("--output", output)->required();

    auto* c_run = app.add_subcommand("run", "full pipeline");
    c_run->add_option("--input", input);
    c_run->add_option("--language", language);
    c_run->add_option("--overrides", override_path);
    c_run->add_option("--schemes", scheme_path);
    c_run->add_option("--feature", features);
    c_run->add_option("--seed", seed);
    std::string out_dir = "out";
    c_run->add_option("--output-dir", out_dir);
    bool synthetic = false;
    c_run->add_flag("--synthetic", synthetic);
    c_run->add_option("--words", syn.word_count);
    c_run->add_option("--strength", syn.harmony_strength);
    add_training_flags(c_run, tc);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*c_ingest) {
            auto lexicon = ingest(input, language, override_path, keep_raw);
            const auto json = vh::lex::lexicon_to_json(lexicon);
            if (output.empty()) {
                std::cout << json << '\n';
            } else {
                std::ofstream out(output);
                if (!out) throw vh::IoFailure("cannot write: " + output);
                out << json << '\n';
            }
        } else if (*c_synth) {
            auto lexicon = vh::lex::generate_synthetic_lexicon(syn);
            if (output.empty()) {
                vh::lex::write_wordlist_tsv(lexicon, std::cout);
            } else {
                std::ofstream out(output);
                if (!out) throw vh::IoFailure("cannot write: " + output);
                vh::lex::write_wordlist_tsv(lexicon, out);
            }
        } else if (*c_train) {
            auto lexicon = ingest(input, language, override_path, false);
            auto split = vh::lex::split_dataset(lexicon, seed);
            tc.seed = seed;
            auto model =
                vh::plm::train(split.train, split.valid, lexicon.inventory, tc);
            vh::plm::save_model(model, model_path);
            std::cerr << "trained " << model.history.size() << " epoch(s), best "
                      << model.best_epoch + 1 << ", snapshot " << model_path
                      << '\n';
        } else if (*c_analyze) {
            auto model = vh::plm::load_model(model_path);
            auto lexicon = ingest(input, language, override_path, false);
            std::vector<vh::lex::WordForm> forms;
            if (whole_input) {
                forms = lexicon.forms;
            } else {
                forms = vh::lex::split_dataset(lexicon, seed).test;
            }
            auto schemes = pick_schemes(lexicon.inventory, language,
                                        scheme_path, features);
            vh::report::ResultTable table;
            for (const auto& scheme : schemes) {
                auto eval = vh::surp::evaluate_testset(model, forms,
                                                       lexicon.inventory, scheme);
                for (const auto& c :
                     vh::surp::build_contrasts(eval.samples, scheme)) {
                    table.rows.push_back({c.label, scheme.feature, c.delta_eta,
                                          c.test.statistic, c.test.p_value,
                                          c.test.effect_size,
                                          c.paired ? "Wilcoxon" : "Mann-Whitney"});
                }
            }
            if (output.empty()) {
                std::cout << "condition,delta_eta,statistic,p_value,"
                             "effect_size,test\n";
                for (const auto& r : table.rows)
                    std::cout << r.condition << ',' << r.delta_eta << ','
                              << r.statistic << ',' << r.p_value << ','
                              << r.effect_size << ',' << r.test << '\n';
            } else {
                vh::report::emit_table_csv(table, output);
            }
        } else if (*c_report) {
            std::ifstream in(results_path);
            if (!in) throw vh::IoFailure("cannot open: " + results_path);
            nlohmann::json j;
            in >> j;
            vh::report::ResultTable table;
            for (const auto& r : j) {
                table.rows.push_back({r.at("condition").get<std::string>(),
                                      r.value("feature", std::string()),
                                      r.at("delta_eta").get<double>(),
                                      r.at("statistic").get<double>(),
                                      r.at("p_value").get<double>(),
                                      r.at("effect_size").get<double>(),
                                      r.at("test").get<std::string>()});
            }
            vh::report::emit_table_csv(table, output);
        } else if (*c_run) {
            vh::report::RunConfig rc;
            if (synthetic) {
                syn.language = language.empty() ? syn.language : language;
                rc.synthetic = syn;
            } else {
                if (input.empty())
                    throw vh::BadSpec("run needs --input or --synthetic");
                rc.input_path = input;
            }
            rc.language = language;
            rc.override_path = override_path;
            rc.scheme_path = scheme_path;
            rc.features = features;
            rc.training = tc;
            rc.seed = seed;
            rc.output_dir = out_dir;
            auto result = vh::report::run_pipeline(rc);
            std::cerr << result.table.rows.size() << " contrast row(s) in "
                      << out_dir << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
