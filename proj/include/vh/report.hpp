#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vh/lexicon.hpp"
#include "vh/plm.hpp"
#include "vh/surprisal.hpp"

namespace vh::report {

struct RunConfig {
    std::string input_path;   // word list TSV; empty when synthetic
    std::optional<lex::SyntheticSpec> synthetic;
    std::string language;
    std::string override_path;  // optional segment-class override file
    std::string scheme_path;    // optional scheme JSON; builtin/derived otherwise
    std::vector<std::string> features = {"back"};  // used when deriving
    plm::TrainingConfig training;
    std::uint64_t seed = 1;
    std::string output_dir = "out";
};

struct ResultRow {
    std::string condition;
    std::string feature;
    double delta_eta;
    double statistic;
    double p_value;
    double effect_size;
    std::string test;  // Wilcoxon | Mann-Whitney
};

struct ResultTable {
    std::vector<ResultRow> rows;
};

struct PipelineResult {
    ResultTable table;
    std::vector<std::pair<surp::HarmonyScheme,
                          std::vector<surp::ContrastResult>>> contrasts;
    plm::TrainedModel model;
    int skipped_forms = 0;
};

// ingest -> preprocess -> split -> train -> evaluate -> test; writes
// results.csv/results.json, samples.csv, model.bin, manifest.json and one
// figure per feature into config.output_dir.
PipelineResult run_pipeline(const RunConfig& config);

void emit_table_csv(const ResultTable& table, const std::string& path);
void emit_table_json(const ResultTable& table, const std::string& path);

struct BoxplotGroup {
    std::string label;
    std::vector<double> values;
};

// Self-contained SVG with median/quartile/whisker boxes; when p_value is
// set, a significance bracket over the first two boxes is annotated with
// ** (p < 0.01), * (p < 0.05) or ns.
void emit_boxplot(const std::vector<BoxplotGroup>& groups,
                  const std::string& title, const std::string& path,
                  std::optional<double> p_value = std::nullopt);

std::string sha256_file(const std::string& path);

}  // namespace vh::report
