#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vidcap/analysis.hpp"
#include "vidcap/synth.hpp"
#include "vidcap/training.hpp"

namespace vidcap {

inline const std::vector<std::string> kAllSystems{"cnst", "asc", "fasc", "ret", "oracle",
                                                  "at", "at+video", "at+oracle", "video"};
inline const std::vector<std::string> kAllMetrics{"bleu4", "meteor", "rouge_l", "cider"};

bool is_neural_system(const std::string& system);
// Modality of a neural system ("at" -> asr, "oracle" -> oracle, ...).
Modality system_modality(const std::string& system);

struct ExperimentConfig {
  // Either a corpus file (with features_dir) or a synthetic block.
  std::optional<std::filesystem::path> corpus_path;
  std::filesystem::path features_dir;
  std::optional<SynthSpec> synthetic;
  std::uint64_t synthetic_seed = 1;

  int folds = 10;
  std::uint64_t split_seed = 0;
  std::vector<std::string> systems;
  std::string profile = "desk";
  HyperParams hparams;
  GridSpec grid;
  std::vector<std::string> metrics = kAllMetrics;

  std::vector<std::string> oracle_labels;
  double oracle_fraction = 1.0;
  std::vector<double> sweep_fractions{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::vector<std::string> sweep_systems{"oracle", "at+oracle"};
  int sweep_fold = 0;

  int analysis_min_freq = 5;
  std::size_t top_k = 10;
  DanParams dan;

  double alpha = 0.01;
  std::string pairing = "fold";  // or "segment"
  double fasc_threshold = 1.0;

  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 0;
  int jobs = 1;
};

struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> profile;
};

// Parses the JSON config; relative paths resolve against base_dir. Throws
// ConfigError for malformed or inconsistent settings.
ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir,
                              const CliOverrides& overrides = {});
ExperimentConfig load_config(const std::filesystem::path& file, const CliOverrides& overrides = {});
// Checks that inputs exist (ConfigError naming the path).
void check_inputs(const ExperimentConfig& cfg);
Corpus load_corpus(const ExperimentConfig& cfg);

// Each command writes its artifacts below cfg.output_dir. dry_run validates
// the configuration and returns a plan description without computing.
std::string cmd_run(const ExperimentConfig& cfg, bool dry_run = false);
std::string cmd_oracle_sweep(const ExperimentConfig& cfg, bool dry_run = false);
std::string cmd_analyze(const ExperimentConfig& cfg, bool dry_run = false);
// Writes the synthetic corpus as corpus.jsonl plus features/ under out_dir.
std::string cmd_synth(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, bool dry_run = false);
// Corpus statistics as JSON.
std::string cmd_stats(const ExperimentConfig& cfg, bool dry_run = false);
std::string cmd_ingest(const std::filesystem::path& corpus_path, const std::filesystem::path& features_dir,
                       bool dry_run = false);
std::string corpus_stats_json(const CorpusStats& s);

// Markdown tables from artifacts in output_dir; also written to report.md.
std::string cmd_report(const std::filesystem::path& output_dir);

}  // namespace vidcap
