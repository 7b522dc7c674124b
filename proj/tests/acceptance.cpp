// Acceptance suite. Each criterion prints exactly one PASS/FAIL line; the
// exit status is nonzero if any requested criterion fails.
//
// Usage: acceptance [N]   (N in 1..8; no argument runs everything)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "vh/errors.hpp"
#include "vh/lexicon.hpp"
#include "vh/numerics.hpp"
#include "vh/plm.hpp"
#include "vh/report.hpp"
#include "vh/rng.hpp"
#include "vh/stats.hpp"
#include "vh/surprisal.hpp"

namespace fs = std::filesystem;
using namespace vh;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

// ---------------------------------------------------------------- criterion 1

// cross-entropy probe over the stacked LSTM, with gradients assembled the
// same way the trainer assembles them
struct CeProbe {
    struct Target {
        int step, col, out;
    };
    num::MatrixXi tokens;
    std::vector<Target> targets;

    double loss(const num::ModelParams& p) const {
        auto cache = num::lstm_forward(p, tokens);
        double total = 0.0;
        for (const auto& t : targets) {
            num::VectorXd logits =
                p.proj * cache.h_top(t.step).col(t.col) + p.proj_bias;
            total += num::cross_entropy(num::softmax(logits), t.out);
        }
        return total;
    }

    num::GradientSet grads(const num::ModelParams& p) const {
        auto cache = num::lstm_forward(p, tokens);
        num::GradientSet g = p;
        g.set_zero();
        std::vector<num::MatrixXd> d_h_top(cache.steps);
        for (const auto& t : targets) {
            num::VectorXd h = cache.h_top(t.step).col(t.col);
            num::VectorXd probs = num::softmax(p.proj * h + p.proj_bias);
            num::VectorXd dlogits = probs;
            dlogits[t.out] -= 1.0;
            g.proj.noalias() += dlogits * h.transpose();
            g.proj_bias += dlogits;
            if (d_h_top[t.step].size() == 0)
                d_h_top[t.step] =
                    num::MatrixXd::Zero(p.hidden_dim(), cache.batch);
            d_h_top[t.step].col(t.col).noalias() += p.proj.transpose() * dlogits;
        }
        num::lstm_backward(p, cache, d_h_top, g);
        return g;
    }
};

Outcome criterion_gradients() {
    constexpr double kTolerance = 1e-4;  // max relative error allowed
    Rng rng(101);
    double worst = 0.0;
    for (int cfg = 0; cfg < 20; ++cfg) {
        const int n_in = 5 + static_cast<int>(rng.uniform_int(6));
        const int n_out = 3 + static_cast<int>(rng.uniform_int(4));
        const int steps = 2 + static_cast<int>(rng.uniform_int(7));  // <= 8
        const int batch = 1 + static_cast<int>(rng.uniform_int(2));
        auto params = num::ModelParams::init(n_in, n_out, 4, 6, 2, rng);

        CeProbe probe;
        probe.tokens = num::MatrixXi(steps, batch);
        for (int s = 0; s < steps; ++s)
            for (int b = 0; b < batch; ++b)
                probe.tokens(s, b) = static_cast<int>(rng.uniform_int(n_in));
        const int n_targets = 1 + static_cast<int>(rng.uniform_int(3));
        for (int t = 0; t < n_targets; ++t)
            probe.targets.push_back(
                {static_cast<int>(rng.uniform_int(steps)),
                 static_cast<int>(rng.uniform_int(batch)),
                 static_cast<int>(rng.uniform_int(n_out))});

        auto analytic = probe.grads(params);
        Rng coord_rng = rng.fork(cfg);
        const double err = num::finite_diff_check(
            params, analytic,
            [&](const num::ModelParams& p) { return probe.loss(p); }, 1e-5, 4,
            coord_rng);
        worst = std::max(worst, err);
    }
    std::ostringstream d;
    d << "max relative error " << worst << " over 20 configs (tolerance "
      << kTolerance << ")";
    return {worst < kTolerance, d.str()};
}

// ---------------------------------------------------------------- criterion 2

Outcome criterion_normalization() {
    constexpr double kSumTolerance = 1e-9;
    lex::SyntheticSpec spec;
    spec.word_count = 60;
    spec.seed = 31;
    auto lexicon = lex::generate_synthetic_lexicon(spec);

    plm::TrainedModel model;
    model.vocab = plm::Vocabulary::build(lexicon.inventory);
    Rng rng(8);
    model.params = num::ModelParams::init(model.vocab.n_inputs(),
                                          model.vocab.n_outputs(), 8, 16, 2, rng);

    double worst_sum = 0.0;
    long checked = 0;
    for (const auto& word : lexicon.forms) {
        for (const auto& pred :
             model.predict_distributions(word, lexicon.inventory)) {
            // the distribution lives on vowels + EOS only; anything outside
            // that support has no coordinate at all, i.e. probability zero
            if (pred.probs.size() != model.vocab.n_outputs())
                return {false, "distribution leaves the restricted alphabet"};
            if (pred.probs.minCoeff() < 0.0)
                return {false, "negative probability"};
            worst_sum = std::max(worst_sum, std::abs(pred.probs.sum() - 1.0));
            ++checked;
        }
    }

    // a support mask excludes a symbol by assigning exactly zero
    num::VectorXd logits(3);
    logits << 0.3, -0.2, 1.0;
    auto masked = num::masked_softmax(logits, {1, 0, 1});
    if (masked[1] != 0.0) return {false, "masked symbol got nonzero mass"};

    std::ostringstream d;
    d << checked << " distributions, worst |sum-1| = " << worst_sum
      << " (tolerance " << kSumTolerance << ")";
    return {checked > 0 && worst_sum < kSumTolerance, d.str()};
}

// ---------------------------------------------------------------- criterion 3

Outcome criterion_uniform_model() {
    // seven vowels -> |output alphabet| = 8 including EOS, so both 1/8 and
    // log2(8) are exact in binary floating point and equality can be exact
    lex::PhonemeInventory inv;
    for (const char* v : {"i", "e", "y", "æ", "u", "o", "ɑ"})
        inv.segments[v] = {ipa::SegmentClass::Vowel, lex::ClassSource::Builtin};
    for (const char* c : {"p", "t", "k", "s"})
        inv.segments[c] = {ipa::SegmentClass::Consonant,
                           lex::ClassSource::Builtin};

    plm::TrainedModel model;
    model.vocab = plm::Vocabulary::build(inv);
    model.params = num::ModelParams::zeros(model.vocab.n_inputs(),
                                           model.vocab.n_outputs(), 4, 6, 2);
    const double expected = std::log2(8.0);

    lex::WordForm word;
    word.segments = {"k", "i", "t", "æ", "p", "u", "s", "o"};
    auto preds = model.predict_distributions(word, inv);
    if (preds.size() != 3) return {false, "unexpected target positions"};
    for (const auto& pred : preds) {
        for (int v = 0; v < model.vocab.n_outputs(); ++v) {
            const double eta = surp::group_surprisal(pred.probs, {v});
            if (eta != expected) {  // exact f64 equality required
                std::ostringstream d;
                d << "eta = " << eta << " != log2|out| = " << expected;
                return {false, d.str()};
            }
        }
    }
    return {true,
            "eta == log2(8) bit-exactly at every position and output symbol"};
}

// ---------------------------------------------------------------- criterion 4

Outcome criterion_preprocessing() {
    auto word = [](std::vector<std::string> segs) {
        lex::WordForm f;
        f.segments = std::move(segs);
        f.language = "tst";
        return f;
    };
    lex::Lexicon lexicon;
    lexicon.forms = {
        word({"s", "i", "l", "m", "æ"}),
        word({"s", "i", "l", "m", "æ"}),
        word({"s", "i", "l", "m", "æ", "sː", "æ"}),
        word({"s", "i", "l", "m", "æ", "d", "æ"}),
    };
    for (const auto& f : lexicon.forms)
        for (const auto& s : f.segments)
            if (!lexicon.inventory.contains(s))
                lexicon.inventory.segments[s] = {*ipa::classify(s),
                                                 lex::ClassSource::Builtin};

    auto out = lex::preprocess(lexicon);
    const std::vector<std::vector<std::string>> expected = {
        {"s", "i", "l", "m", "æ", "sː", "æ"},
        {"s", "i", "l", "m", "æ", "d", "æ"},
    };
    if (out.forms.size() != expected.size())
        return {false, "wrong survivor count: " +
                           std::to_string(out.forms.size())};
    for (std::size_t i = 0; i < expected.size(); ++i)
        if (out.forms[i].segments != expected[i])
            return {false, "survivor " + std::to_string(i) + " differs"};
    return {true, "duplicate collapsed and substring pruned, 4 forms -> 2"};
}

// ---------------------------------------------------------------- criterion 5

struct PooledRow {
    double delta = 0.0;
    double p = 1.0;
    bool found = false;
};

PooledRow pooled_contrast(double strength, std::uint64_t seed) {
    lex::SyntheticSpec spec;  // 8 vowels, 4 per class, 1000 forms, 2-4 vowels
    spec.harmony_strength = strength;
    spec.seed = seed;
    auto lexicon = lex::preprocess(lex::generate_synthetic_lexicon(spec));
    auto split = lex::split_dataset(lexicon, seed);

    plm::TrainingConfig cfg;
    cfg.embedding_size = 16;
    cfg.hidden_size = 64;
    cfg.layers = 2;
    cfg.batch_size = 32;
    cfg.max_epochs = 30;
    cfg.seed = seed;
    auto model = plm::train(split.train, split.valid, lexicon.inventory, cfg);

    auto scheme = surp::derive_scheme(lexicon.inventory, "back", "syn");
    auto eval =
        surp::evaluate_testset(model, split.test, lexicon.inventory, scheme);
    PooledRow row;
    for (const auto& c : surp::build_contrasts(eval.samples, scheme)) {
        if (c.label == scheme.harmony_label + "_h/dish") {
            row = {c.delta_eta, c.test.p_value, true};
        }
    }
    return row;
}

Outcome criterion_synthetic_detection() {
    const auto t0 = std::chrono::steady_clock::now();
    auto harmonic = pooled_contrast(1.0, 1);
    auto control = pooled_contrast(0.0, 1);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    std::ostringstream d;
    d << "harmony run delta=" << harmonic.delta << " p=" << harmonic.p
      << "; control delta=" << control.delta << "; " << secs << "s";
    if (!harmonic.found || !control.found)
        return {false, "pooled contrast row missing (" + d.str() + ")"};
    const bool ok = harmonic.delta <= -1.5 && harmonic.p < 0.01 &&
                    std::abs(control.delta) < 0.3 && secs < 300.0;
    return {ok, d.str()};
}

// ---------------------------------------------------------------- criterion 6

double oracle_wilcoxon_p(const std::vector<double>& a,
                         const std::vector<double>& b) {
    std::vector<double> d;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) d.push_back(a[i] - b[i]);
    const int n = static_cast<int>(d.size());
    std::vector<double> ad(d.size()), rank(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) ad[i] = std::fabs(d[i]);
    for (std::size_t i = 0; i < ad.size(); ++i) {
        double lesser = 0, equal = 0;
        for (double v : ad) {
            if (v < ad[i]) ++lesser;
            if (v == ad[i]) ++equal;
        }
        rank[i] = lesser + (equal + 1.0) / 2.0;
    }
    double wplus = 0;
    for (std::size_t i = 0; i < d.size(); ++i)
        if (d[i] > 0) wplus += rank[i];
    long le = 0, ge = 0;
    const long total = 1L << n;
    for (long mask = 0; mask < total; ++mask) {
        double w = 0;
        for (int i = 0; i < n; ++i)
            if (mask & (1L << i)) w += rank[i];
        if (w <= wplus + 1e-12) ++le;
        if (w >= wplus - 1e-12) ++ge;
    }
    return std::min(1.0,
                    2.0 * std::min(le, ge) / static_cast<double>(total));
}

double oracle_mwu_p(const std::vector<double>& a, const std::vector<double>& b) {
    const int n1 = static_cast<int>(a.size());
    const int n = n1 + static_cast<int>(b.size());
    std::vector<double> sorted = a;
    sorted.insert(sorted.end(), b.begin(), b.end());
    std::sort(sorted.begin(), sorted.end());
    double r1 = 0;
    for (double v : a)
        r1 += static_cast<double>(std::lower_bound(sorted.begin(), sorted.end(),
                                                   v) -
                                  sorted.begin()) +
              1.0;
    const double u_obs = r1 - n1 * (n1 + 1) / 2.0;
    std::vector<int> idx(n1);
    std::iota(idx.begin(), idx.end(), 1);
    long le = 0, ge = 0, total = 0;
    while (true) {
        double u = -n1 * (n1 + 1) / 2.0;
        for (int i : idx) u += i;
        ++total;
        if (u <= u_obs + 1e-12) ++le;
        if (u >= u_obs - 1e-12) ++ge;
        int k = n1 - 1;
        while (k >= 0 && idx[k] == n - (n1 - 1 - k)) --k;
        if (k < 0) break;
        ++idx[k];
        for (int j = k + 1; j < n1; ++j) idx[j] = idx[j - 1] + 1;
    }
    return std::min(1.0, 2.0 * std::min(le, ge) / static_cast<double>(total));
}

Outcome criterion_stats_oracles() {
    constexpr double kTol = 1e-10;
    Rng rng(606);
    double worst = 0.0;
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 5 + static_cast<int>(rng.uniform_int(6));  // 5..10
        std::vector<double> a(n), b(n);
        for (int i = 0; i < n; ++i) {
            a[i] = rng.uniform(0.0, 5.0);
            b[i] = rng.uniform(0.0, 5.0);
        }
        auto rep = stats::wilcoxon_signed_rank(a, b);
        if (!rep.exact) return {false, "wilcoxon not exact at n <= 10"};
        worst = std::max(worst, std::abs(rep.p_value - oracle_wilcoxon_p(a, b)));
    }
    for (int trial = 0; trial < 25; ++trial) {
        const int n1 = 3 + static_cast<int>(rng.uniform_int(6));  // 3..8
        const int n2 = 3 + static_cast<int>(rng.uniform_int(6));
        std::vector<double> a(n1), b(n2);
        for (auto& v : a) v = rng.uniform(0.0, 1.0);
        for (auto& v : b) v = rng.uniform(0.0, 1.0);
        auto rep = stats::mann_whitney_u(a, b);
        if (!rep.exact) return {false, "mann-whitney not exact on tie-free data"};
        worst = std::max(worst, std::abs(rep.p_value - oracle_mwu_p(a, b)));
    }

    const bool endpoints =
        stats::effect_size_paired(0.0, 7, 7) == -1.0 &&
        stats::effect_size_paired(49.0, 7, 7) == 1.0 &&
        stats::effect_size_paired(24.5, 7, 7) == 0.0 &&
        stats::effect_size_unpaired(0.0, 10.0) == 0.0 &&
        stats::effect_size_unpaired(10.0, 10.0) == 1.0 &&
        stats::effect_size_unpaired(-10.0, 10.0) == -1.0;

    std::ostringstream d;
    d << "worst |p - oracle| = " << worst << " over 50 cases (tolerance "
      << kTol << "); effect-size endpoints "
      << (endpoints ? "exact" : "WRONG");
    return {worst < kTol && endpoints, d.str()};
}

// ---------------------------------------------------------------- criterion 7

struct LangResult {
    bool ok = false;
    std::string detail;
};

std::string dataset_path() {
    if (const char* env = std::getenv("NORTHEURALEX_TSV")) return env;
    for (const char* p : {"data/northeuralex.tsv", "../data/northeuralex.tsv",
                          "/root/proj/data/northeuralex.tsv"})
        if (fs::exists(p)) return p;
    return {};
}

surp::ContrastResult* find_row(std::vector<surp::ContrastResult>& rows,
                               const std::string& label) {
    for (auto& r : rows)
        if (r.label == label) return &r;
    return nullptr;
}

Outcome criterion_real_data() {
    const auto path = dataset_path();
    if (path.empty())
        return {false,
                "word-list TSV not found; this environment has no network "
                "access so the dataset could not be fetched. Provide it via "
                "the NORTHEURALEX_TSV environment variable or "
                "data/northeuralex.tsv and rerun"};

    auto run_language = [&](const std::string& lang,
                            bool derived) -> std::vector<surp::ContrastResult> {
        auto lexicon = lex::preprocess(lex::parse_wordlist_file(path, lang));
        auto split = lex::split_dataset(lexicon, 1);
        plm::TrainingConfig cfg;  // full-size configuration
        cfg.seed = 1;
        auto model = plm::train(split.train, split.valid, lexicon.inventory, cfg);
        surp::HarmonyScheme scheme =
            derived ? surp::derive_scheme(lexicon.inventory, "back", lang)
                    : surp::builtin_schemes(lang).front();
        auto eval =
            surp::evaluate_testset(model, split.test, lexicon.inventory, scheme);
        return surp::build_contrasts(eval.samples, scheme);
    };

    std::ostringstream d;
    bool ok = true;
    try {
        auto tur = run_language("tur", false);
        auto* pooled = find_row(tur, "f_h/dish");
        const bool tur_ok = pooled && pooled->delta_eta < 0 &&
                            pooled->test.p_value < 0.01 &&
                            -pooled->delta_eta >= 1.5 && -pooled->delta_eta <= 6.0;
        if (pooled)
            d << "tur f_h/dish delta=" << pooled->delta_eta
              << " p=" << pooled->test.p_value << "; ";
        ok = ok && tur_ok;

        auto fin = run_language("fin", false);
        auto* ff = find_row(fin, "f_f/f_b");
        const bool fin_ok =
            ff && ff->delta_eta < 0 && ff->test.p_value < 0.01;
        if (ff)
            d << "fin f_f/f_b delta=" << ff->delta_eta
              << " p=" << ff->test.p_value << "; ";
        ok = ok && fin_ok;

        int flat = 0;
        for (const std::string lang : {"arb", "ain", "hye", "eus", "ekk"}) {
            try {
                auto rows = run_language(lang, true);
                auto* pr = find_row(rows, "f_h/dish");
                if (pr && (std::abs(pr->delta_eta) < 0.5 ||
                           pr->test.p_value >= 0.01))
                    ++flat;
                if (pr)
                    d << lang << " delta=" << pr->delta_eta
                      << " p=" << pr->test.p_value << "; ";
            } catch (const Error& e) {
                d << lang << " skipped (" << e.what() << "); ";
            }
        }
        d << flat << "/5 non-harmony languages flat";
        ok = ok && flat >= 4;
    } catch (const std::exception& e) {
        return {false, std::string("pipeline error: ") + e.what()};
    }
    return {ok, d.str()};
}

// ---------------------------------------------------------------- criterion 8

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome criterion_determinism() {
    report::RunConfig cfg;
    lex::SyntheticSpec spec;
    spec.word_count = 200;
    spec.seed = 3;
    spec.harmony_strength = 0.8;
    cfg.synthetic = spec;
    cfg.seed = 3;
    cfg.training.embedding_size = 8;
    cfg.training.hidden_size = 16;
    cfg.training.layers = 2;
    cfg.training.batch_size = 16;
    cfg.training.max_epochs = 4;

    const auto base = fs::temp_directory_path() / "vh_acceptance_det";
    fs::remove_all(base);
    cfg.output_dir = (base / "run1").string();
    report::run_pipeline(cfg);
    cfg.output_dir = (base / "run2").string();
    report::run_pipeline(cfg);

    bool same = true;
    std::string first_diff;
    for (const char* name : {"results.csv", "results.json", "samples.csv",
                             "model.bin"}) {
        if (!fs::exists(base / "run1" / name) ||
            !fs::exists(base / "run2" / name)) {
            same = false;
            first_diff = std::string(name) + " missing";
            break;
        }
        if (slurp(base / "run1" / name) != slurp(base / "run2" / name)) {
            same = false;
            first_diff = name;
            break;
        }
    }
    fs::remove_all(base);
    if (!same) return {false, first_diff + " differs between identical runs"};
    return {true, "results.csv/results.json/samples.csv/model.bin byte-identical"};
}

// -----------------------------------------------------------------------------

struct Criterion {
    const char* title;
    Outcome (*fn)();
};

const Criterion kCriteria[] = {
    {"gradient correctness", criterion_gradients},
    {"normalization and restriction", criterion_normalization},
    {"uniform-model identity", criterion_uniform_model},
    {"preprocessing fidelity", criterion_preprocessing},
    {"synthetic-harmony detection", criterion_synthetic_detection},
    {"statistics oracle equivalence", criterion_stats_oracles},
    {"qualitative reproduction on real data", criterion_real_data},
    {"determinism", criterion_determinism},
};

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    if (argc > 1) {
        only = std::atoi(argv[1]);
        if (only < 1 || only > 8) {
            std::cerr << "usage: acceptance [1-8]\n";
            return 2;
        }
    }
    bool all_pass = true;
    for (int i = 1; i <= 8; ++i) {
        if (only && i != only) continue;
        Outcome o;
        try {
            o = kCriteria[i - 1].fn();
        } catch (const std::exception& e) {
            o = {false, std::string("unexpected exception: ") + e.what()};
        }
        std::cout << "criterion " << i << " (" << kCriteria[i - 1].title
                  << "): " << (o.pass ? "PASS" : "FAIL") << " -- " << o.detail
                  << '\n';
        all_pass = all_pass && o.pass;
    }
    return all_pass ? 0 : 1;
}
