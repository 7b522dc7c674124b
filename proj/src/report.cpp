#include "vh/report.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "vh/errors.hpp"

namespace vh::report {

namespace fs = std::filesystem;

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open for checksum: " + path);
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) {
        char b[3];
        std::snprintf(b, sizeof b, "%02x", digest[i]);
        hex += b;
    }
    return hex;
}

namespace {

std::string fmt4(double v) {
    char b[64];
    std::snprintf(b, sizeof b, "%.4f", v);
    return b;
}

std::string fmtp(double v) {
    char b[64];
    std::snprintf(b, sizeof b, "%.4g", v);
    return b;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoFailure("cannot write: " + path);
    return out;
}

double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * (static_cast<double>(v.size()) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}

}  // namespace

void emit_table_csv(const ResultTable& table, const std::string& path) {
    if (table.rows.empty()) throw EmptyTable("refusing to emit empty table");
    auto out = open_out(path);
    out << "condition,delta_eta,statistic,p_value,effect_size,test\n";
    for (const auto& r : table.rows) {
        out << r.condition << ',' << fmt4(r.delta_eta) << ','
            << fmt4(r.statistic) << ',' << fmtp(r.p_value) << ','
            << fmt4(r.effect_size) << ',' << r.test << '\n';
    }
    if (!out) throw IoFailure("write failed: " + path);
}

void emit_table_json(const ResultTable& table, const std::string& path) {
    if (table.rows.empty()) throw EmptyTable("refusing to emit empty table");
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : table.rows) {
        j.push_back({{"condition", r.condition},
                     {"feature", r.feature},
                     {"delta_eta", std::stod(fmt4(r.delta_eta))},
                     {"statistic", std::stod(fmt4(r.statistic))},
                     {"p_value", std::stod(fmtp(r.p_value))},
                     {"effect_size", std::stod(fmt4(r.effect_size))},
                     {"test", r.test}});
    }
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

void emit_boxplot(const std::vector<BoxplotGroup>& groups,
                  const std::string& title, const std::string& path,
                  std::optional<double> p_value) {
    if (groups.empty()) throw EmptySamples("boxplot needs at least one group");
    for (const auto& g : groups)
        if (g.values.empty())
            throw EmptySamples("boxplot group '" + g.label + "' is empty");

    double lo = groups[0].values[0], hi = lo;
    for (const auto& g : groups)
        for (double v : g.values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    if (hi == lo) hi = lo + 1.0;
    const double pad = 0.08 * (hi - lo);
    lo -= pad;
    hi += pad;

    const int width = 160 * static_cast<int>(groups.size()) + 80;
    const int height = 360;
    const int plot_top = 50, plot_bottom = height - 50;
    auto y_of = [&](double v) {
        return plot_bottom -
               (v - lo) / (hi - lo) * static_cast<double>(plot_bottom - plot_top);
    };

    auto out = open_out(path);
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' '
        << height << "\">\n"
        << "<style>text{font-family:sans-serif;font-size:13px}</style>\n"
        << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\">"
        << title << "</text>\n";

    for (std::size_t i = 0; i < groups.size(); ++i) {
        const auto& vals = groups[i].values;
        const double q1 = quantile(vals, 0.25);
        const double q2 = quantile(vals, 0.50);
        const double q3 = quantile(vals, 0.75);
        const double iqr = q3 - q1;
        double wlo = q1, whi = q3;
        for (double v : vals) {
            if (v >= q1 - 1.5 * iqr) wlo = std::min(wlo, v);
            if (v <= q3 + 1.5 * iqr) whi = std::max(whi, v);
        }
        const double cx = 80.0 + 160.0 * static_cast<double>(i) + 40.0;
        const double bw = 60.0;
        out << "<line x1=\"" << cx << "\" y1=\"" << y_of(wlo) << "\" x2=\""
            << cx << "\" y2=\"" << y_of(whi)
            << "\" stroke=\"black\"/>\n"
            << "<line x1=\"" << cx - bw / 4 << "\" y1=\"" << y_of(wlo)
            << "\" x2=\"" << cx + bw / 4 << "\" y2=\"" << y_of(wlo)
            << "\" stroke=\"black\"/>\n"
            << "<line x1=\"" << cx - bw / 4 << "\" y1=\"" << y_of(whi)
            << "\" x2=\"" << cx + bw / 4 << "\" y2=\"" << y_of(whi)
            << "\" stroke=\"black\"/>\n"
            << "<rect x=\"" << cx - bw / 2 << "\" y=\"" << y_of(q3)
            << "\" width=\"" << bw << "\" height=\""
            << std::max(0.0, y_of(q1) - y_of(q3))
            << "\" fill=\"#9ecae1\" stroke=\"black\"/>\n"
            << "<line x1=\"" << cx - bw / 2 << "\" y1=\"" << y_of(q2)
            << "\" x2=\"" << cx + bw / 2 << "\" y2=\"" << y_of(q2)
            << "\" stroke=\"black\" stroke-width=\"2\"/>\n"
            << "<text x=\"" << cx << "\" y=\"" << height - 25
            << "\" text-anchor=\"middle\">" << groups[i].label << "</text>\n";
    }

    if (p_value && groups.size() >= 2) {
        const char* mark = *p_value < 0.01 ? "**"
                           : *p_value < 0.05 ? "*"
                                             : "ns";
        const double x1 = 120.0, x2 = 120.0 + 160.0;
        const double y = plot_top - 8.0;
        out << "<line x1=\"" << x1 << "\" y1=\"" << y + 6 << "\" x2=\"" << x1
            << "\" y2=\"" << y << "\" stroke=\"black\"/>\n"
            << "<line x1=\"" << x1 << "\" y1=\"" << y << "\" x2=\"" << x2
            << "\" y2=\"" << y << "\" stroke=\"black\"/>\n"
            << "<line x1=\"" << x2 << "\" y1=\"" << y << "\" x2=\"" << x2
            << "\" y2=\"" << y + 6 << "\" stroke=\"black\"/>\n"
            << "<text x=\"" << (x1 + x2) / 2 << "\" y=\"" << y - 4
            << "\" text-anchor=\"middle\">" << mark << "</text>\n";
    }
    out << "</svg>\n";
    if (!out) throw IoFailure("write failed: " + path);
}

namespace {

void write_samples_csv(
    const std::vector<std::pair<surp::HarmonyScheme,
                                surp::EvaluationResult>>& evals,
    const std::string& path) {
    auto out = open_out(path);
    out << "feature,form_index,position,context,eta_minus,eta_plus,"
           "eta_neutral\n";
    for (const auto& [scheme, eval] : evals) {
        for (const auto& s : eval.samples) {
            out << scheme.feature << ',' << s.form_index << ',' << s.position
                << ',' << s.context << ',' << fmt4(s.eta_minus) << ','
                << fmt4(s.eta_plus) << ','
                << (s.eta_neutral ? fmt4(*s.eta_neutral) : std::string())
                << '\n';
        }
    }
}

}  // namespace

PipelineResult run_pipeline(const RunConfig& config) {
    fs::create_directories(config.output_dir);
    const auto out_path = [&](const std::string& name) {
        return (fs::path(config.output_dir) / name).string();
    };

    // ingest
    lex::Lexicon raw;
    if (config.synthetic) {
        raw = lex::generate_synthetic_lexicon(*config.synthetic);
    } else {
        lex::ClassOverrides overrides;
        if (!config.override_path.empty()) {
            std::ifstream in(config.override_path);
            if (!in)
                throw IoFailure("cannot open overrides: " + config.override_path);
            overrides = lex::parse_overrides(in);
        }
        raw = lex::parse_wordlist_file(config.input_path, config.language,
                                       overrides);
    }

    const auto lexicon = lex::preprocess(raw);
    const auto split = lex::split_dataset(lexicon, config.seed);

    plm::TrainingConfig tc = config.training;
    tc.seed = config.seed;
    PipelineResult result;
    result.model = plm::train(split.train, split.valid, lexicon.inventory, tc);

    // select schemes
    std::vector<surp::HarmonyScheme> schemes;
    const std::string lang =
        config.synthetic ? config.synthetic->language : config.language;
    if (!config.scheme_path.empty()) {
        for (auto& s : surp::load_schemes_json(config.scheme_path))
            if (s.language == lang || s.language.empty())
                schemes.push_back(std::move(s));
    } else {
        schemes = surp::builtin_schemes(lang);
    }
    if (schemes.empty()) {
        for (const auto& feature : config.features)
            schemes.push_back(
                surp::derive_scheme(lexicon.inventory, feature, lang));
    }

    // evaluate + test
    std::vector<std::pair<surp::HarmonyScheme, surp::EvaluationResult>> evals;
    for (const auto& scheme : schemes) {
        auto eval = surp::evaluate_testset(result.model, split.test,
                                           lexicon.inventory, scheme);
        result.skipped_forms = eval.skipped_forms;
        auto contrasts = surp::build_contrasts(eval.samples, scheme);
        for (const auto& c : contrasts) {
            result.table.rows.push_back(
                {c.label, scheme.feature, c.delta_eta, c.test.statistic,
                 c.test.p_value, c.test.effect_size,
                 c.paired ? "Wilcoxon" : "Mann-Whitney"});
        }
        result.contrasts.emplace_back(scheme, std::move(contrasts));
        evals.emplace_back(scheme, std::move(eval));
    }
    if (schemes.size() >= 2) {
        if (auto cross = surp::cross_feature_contrast(
                evals[0].second.samples, schemes[0], evals[1].second.samples,
                schemes[1])) {
            result.table.rows.push_back(
                {cross->label, schemes[0].feature + "/" + schemes[1].feature,
                 cross->delta_eta, cross->test.statistic, cross->test.p_value,
                 cross->test.effect_size, "Mann-Whitney"});
            result.contrasts.emplace_back(
                schemes[0],
                std::vector<surp::ContrastResult>{std::move(*cross)});
        }
    }

    // artifacts
    emit_table_csv(result.table, out_path("results.csv"));
    emit_table_json(result.table, out_path("results.json"));
    write_samples_csv(evals, out_path("samples.csv"));
    plm::save_model(result.model, out_path("model.bin"));

    for (const auto& [scheme, contrasts] : result.contrasts) {
        for (const auto& c : contrasts) {
            if (c.label != scheme.harmony_label + "_h/dish") continue;
            emit_boxplot({{"harmonic", c.samples_a},
                          {"disharmonic", c.samples_b}},
                         lang + " \xc2\xb1" + scheme.feature,
                         out_path("figure_" + scheme.feature + ".svg"),
                         c.test.p_value);
        }
    }

    nlohmann::json manifest;
    manifest["toolkit_version"] = "0.1.0";
    manifest["seed"] = config.seed;
    manifest["language"] = lang;
    manifest["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." +
                                std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                std::to_string(EIGEN_MINOR_VERSION);
    if (!config.input_path.empty()) {
        manifest["input"] = config.input_path;
        manifest["input_sha256"] = sha256_file(config.input_path);
    }
    if (config.synthetic) {
        manifest["synthetic"] = {
            {"word_count", config.synthetic->word_count},
            {"min_vowels", config.synthetic->min_vowels},
            {"max_vowels", config.synthetic->max_vowels},
            {"harmony_strength", config.synthetic->harmony_strength},
            {"seed", config.synthetic->seed}};
    }
    manifest["counts"] = {{"raw_forms", raw.forms.size()},
                          {"preprocessed_forms", lexicon.forms.size()},
                          {"train", split.train.size()},
                          {"valid", split.valid.size()},
                          {"test", split.test.size()},
                          {"skipped_test_forms", result.skipped_forms}};
    manifest["training"] = {{"epochs_run", result.model.history.size()},
                            {"best_epoch", result.model.best_epoch}};
    // normality checks are recorded but do not gate the choice of test
    nlohmann::json normality = nlohmann::json::array();
    for (const auto& [scheme, contrasts] : result.contrasts) {
        for (const auto& c : contrasts) {
            normality.push_back(
                {{"condition", c.label},
                 {"feature", scheme.feature},
                 {"shapiro_p_a", c.normality_a.test.empty()
                                     ? nlohmann::json()
                                     : nlohmann::json(c.normality_a.p_value)},
                 {"shapiro_p_b", c.normality_b.test.empty()
                                     ? nlohmann::json()
                                     : nlohmann::json(c.normality_b.p_value)}});
        }
    }
    manifest["normality"] = normality;
    auto mout = open_out(out_path("manifest.json"));
    mout << manifest.dump(2) << '\n';

    return result;
}

}  // namespace vh::report
