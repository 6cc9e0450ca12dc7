#include "vidcap/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "vidcap/baselines.hpp"
#include "vidcap/checkpoint.hpp"
#include "vidcap/error.hpp"
#include "vidcap/log.hpp"
#include "vidcap/metrics.hpp"
#include "vidcap/parallel.hpp"
#include "vidcap/stats.hpp"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace vidcap {

bool is_neural_system(const std::string& s) {
  return s == "oracle" || s == "at" || s == "at+video" || s == "at+oracle" || s == "video";
}

Modality system_modality(const std::string& s) {
  if (s == "at") return Modality::kAsr;
  if (s == "at+video") return Modality::kAsrVideo;
  if (s == "oracle") return Modality::kOracle;
  if (s == "at+oracle") return Modality::kAsrOracle;
  if (s == "video") return Modality::kVideo;
  throw ConfigError("'" + s + "' is not a neural system");
}

// --- config -----------------------------------------------------------------

namespace {

void write_file(const fs::path& p, const std::string& content) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + p.string());
  f << content;
  if (!f) throw IoError("write failed for " + p.string());
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot read " + p.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path q(p);
  return q.is_absolute() ? q : base / q;
}

void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
  }
}

std::vector<std::string> read_label_file(const fs::path& p) {
  if (!fs::exists(p)) throw ConfigError("oracle label file not found: " + p.string());
  const std::string text = read_file(p);
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    const auto e = line.find_last_not_of(" \t\r");
    out.push_back(line.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const fs::path& base, const CliOverrides& ov) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  check_keys(j,
             {"corpus", "features_dir", "synthetic", "splits", "systems", "profile", "hparams", "grid", "metrics",
              "oracle", "analysis", "significance", "fasc_threshold", "output_dir", "seed", "jobs"},
             "config");
  ExperimentConfig c;
  try {
    c.seed = j.value("seed", std::uint64_t{0});
    if (ov.seed) c.seed = *ov.seed;
    if (j.contains("corpus")) {
      c.corpus_path = resolve(base, j.at("corpus").get<std::string>());
      c.features_dir = j.contains("features_dir") ? resolve(base, j.at("features_dir").get<std::string>())
                                                  : c.corpus_path->parent_path() / "features";
    }
    if (j.contains("synthetic")) {
      const auto& s = j.at("synthetic");
      if (!s.is_object()) throw ConfigError("'synthetic' must be an object");
      c.synthetic = synth_spec_from_json(s.dump());
      c.synthetic_seed = s.value("seed", std::uint64_t{1});
    }
    if (c.corpus_path && c.synthetic) throw ConfigError("config names both a corpus and a synthetic preset");
    if (!c.corpus_path && !c.synthetic) throw ConfigError("config names neither 'corpus' nor 'synthetic'");

    c.split_seed = c.seed;
    if (j.contains("splits")) {
      const auto& s = j.at("splits");
      check_keys(s, {"J", "seed"}, "splits");
      c.folds = s.value("J", c.folds);
      c.split_seed = s.value("seed", c.split_seed);
    }
    if (c.folds < 1) throw ConfigError("splits.J must be >= 1");

    if (j.contains("systems")) c.systems = j.at("systems").get<std::vector<std::string>>();
    std::set<std::string> seen;
    for (const auto& s : c.systems) {
      if (std::find(kAllSystems.begin(), kAllSystems.end(), s) == kAllSystems.end())
        throw ConfigError("unknown system '" + s + "'");
      if (!seen.insert(s).second) throw ConfigError("system '" + s + "' listed twice");
    }

    c.profile = ov.profile ? *ov.profile : j.value("profile", std::string("desk"));
    if (c.profile == "paper") {
      c.hparams = HyperParams::paper();
    } else if (c.profile == "desk" || c.profile == "custom") {
      c.hparams = HyperParams::desk();
    } else {
      throw ConfigError("unknown profile '" + c.profile + "' (paper, desk or custom)");
    }
    if (j.contains("hparams")) {
      auto merged = nlohmann::json::parse(c.hparams.to_json());
      const auto& h = j.at("hparams");
      check_keys(h,
                 {"d_model", "n_layers", "lambda_reg", "d_ffn", "n_heads", "batch_size", "lr", "train_steps",
                  "checkpoint_every", "k_frames", "max_input_tokens", "max_decode_len"},
                 "hparams");
      merged.merge_patch(h);
      if (h.contains("d_model") && !h.contains("d_ffn")) merged["d_ffn"] = merged["d_model"];
      c.hparams = HyperParams::from_json(merged.dump());
    }
    c.hparams.validate();
    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      check_keys(g, {"d_model", "n_layers", "lambda_reg"}, "grid");
      c.grid.d_model = g.value("d_model", std::vector<int>{c.hparams.d_model});
      c.grid.n_layers = g.value("n_layers", std::vector<int>{c.hparams.n_layers});
      c.grid.lambda_reg = g.value("lambda_reg", std::vector<double>{c.hparams.lambda_reg});
    } else {
      c.grid = c.profile == "paper" ? GridSpec::paper() : GridSpec::single(c.hparams);
    }
    (void)c.grid.cells(c.hparams);

    if (j.contains("metrics")) c.metrics = j.at("metrics").get<std::vector<std::string>>();
    if (c.metrics.empty()) throw ConfigError("metrics must not be empty");
    for (const auto& m : c.metrics)
      if (std::find(kAllMetrics.begin(), kAllMetrics.end(), m) == kAllMetrics.end())
        throw ConfigError("unknown metric '" + m + "'");

    if (j.contains("oracle")) {
      const auto& o = j.at("oracle");
      check_keys(o, {"labels", "labels_file", "fraction", "sweep_fractions", "sweep_systems", "sweep_fold"},
                 "oracle");
      if (o.contains("labels")) c.oracle_labels = o.at("labels").get<std::vector<std::string>>();
      if (o.contains("labels_file")) c.oracle_labels = read_label_file(resolve(base, o.at("labels_file").get<std::string>()));
      c.oracle_fraction = o.value("fraction", c.oracle_fraction);
      c.sweep_fractions = o.value("sweep_fractions", c.sweep_fractions);
      c.sweep_systems = o.value("sweep_systems", c.sweep_systems);
      c.sweep_fold = o.value("sweep_fold", c.sweep_fold);
    }
    if (c.oracle_labels.empty() && c.synthetic) c.oracle_labels = c.synthetic->object_words();
    auto frac_ok = [](double f) { return f > 0.0 && f <= 1.0; };
    if (!frac_ok(c.oracle_fraction)) throw ConfigError("oracle.fraction must lie in (0, 1]");
    for (double f : c.sweep_fractions)
      if (!frac_ok(f)) throw ConfigError("oracle.sweep_fractions must lie in (0, 1]");
    for (const auto& s : c.sweep_systems)
      if (!is_neural_system(s) || !uses_oracle(system_modality(s)))
        throw ConfigError("sweep system '" + s + "' takes no oracle input");
    if (c.sweep_fold < 0 || c.sweep_fold >= c.folds) throw ConfigError("oracle.sweep_fold out of range");

    if (j.contains("analysis")) {
      const auto& a = j.at("analysis");
      check_keys(a, {"min_freq", "top_k", "dan"}, "analysis");
      c.analysis_min_freq = a.value("min_freq", c.analysis_min_freq);
      c.top_k = a.value("top_k", c.top_k);
      if (a.contains("dan")) {
        const auto& d = a.at("dan");
        check_keys(d, {"hidden", "steps", "batch_size", "lr", "asr_min_count"}, "analysis.dan");
        c.dan.hidden = d.value("hidden", c.dan.hidden);
        c.dan.steps = d.value("steps", c.dan.steps);
        c.dan.batch_size = d.value("batch_size", c.dan.batch_size);
        c.dan.lr = d.value("lr", c.dan.lr);
        c.dan.asr_min_count = d.value("asr_min_count", c.dan.asr_min_count);
      }
    }
    if (c.analysis_min_freq < 1) throw ConfigError("analysis.min_freq must be >= 1");

    if (j.contains("significance")) {
      const auto& s = j.at("significance");
      check_keys(s, {"alpha", "pairing"}, "significance");
      c.alpha = s.value("alpha", c.alpha);
      c.pairing = s.value("pairing", c.pairing);
    }
    if (c.pairing != "segment" && c.pairing != "fold") throw ConfigError("significance.pairing must be segment or fold");
    if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ConfigError("significance.alpha must lie in (0, 1)");

    c.fasc_threshold = j.value("fasc_threshold", c.fasc_threshold);
    c.output_dir = resolve(base, j.value("output_dir", std::string("out")));
    c.jobs = ov.jobs ? *ov.jobs : j.value("jobs", 1);
    if (c.jobs < 1) throw ConfigError("jobs must be >= 1");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const ParseError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

ExperimentConfig load_config(const fs::path& file, const CliOverrides& ov) {
  if (!fs::exists(file)) throw ConfigError("config file not found: " + file.string());
  return parse_config(read_file(file), file.parent_path(), ov);
}

void check_inputs(const ExperimentConfig& cfg) {
  if (cfg.corpus_path && !fs::exists(*cfg.corpus_path))
    throw ConfigError("corpus file not found: " + cfg.corpus_path->string());
}

Corpus load_corpus(const ExperimentConfig& cfg) {
  check_inputs(cfg);
  if (cfg.corpus_path) return ingest(*cfg.corpus_path, cfg.features_dir);
  return generate_synthetic_corpus(*cfg.synthetic, cfg.synthetic_seed);
}

// --- shared fold plumbing -----------------------------------------------------

namespace {

struct FoldData {
  FoldSplit split;
  std::vector<const Segment*> train, dev, test;
  Vocabulary vocab;
};

std::vector<FoldData> prepare_folds(const Corpus& corpus, const std::vector<FoldSplit>& splits) {
  std::vector<FoldData> out;
  for (const auto& s : splits) {
    FoldData f;
    f.split = s;
    f.train = corpus.segments_of(s.train_ids);
    f.dev = corpus.segments_of(s.dev_ids);
    f.test = corpus.segments_of(s.test_ids);
    f.vocab = Vocabulary::build(f.train, 5);
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<Tokens> references(const std::vector<const Segment*>& segs) {
  std::vector<Tokens> r;
  for (const Segment* s : segs) r.push_back(s->caption.tokens);
  return r;
}

struct NeuralRun {
  std::vector<Tokens> predictions;
  GridResult grid;
};

NeuralRun run_neural(const ExperimentConfig& cfg, const Corpus& corpus, const FoldData& fd, const std::string& system,
                     double fraction) {
  const Modality m = system_modality(system);
  std::optional<OracleDetector> det;
  if (uses_oracle(m)) {
    if (cfg.oracle_labels.empty()) throw ConfigError("system '" + system + "' needs oracle labels");
    det.emplace(cfg.oracle_labels);
    det->fit_frequency(fd.train);
  }
  const OracleDetector* dp = det ? &*det : nullptr;
  const auto tr = make_examples(fd.train, fd.vocab, dp, fraction);
  const auto dv = make_examples(fd.dev, fd.vocab, dp, fraction);
  const auto te = make_examples(fd.test, fd.vocab, dp, fraction);
  HyperParams hp = cfg.hparams;
  // Shared across systems so modalities start from the same common weights.
  hp.seed = derive_seed(cfg.seed, "fold" + std::to_string(fd.split.fold_index));
  NeuralRun r;
  r.grid = grid_search(hp, cfg.grid, m, fd.vocab, corpus.feature_dim, tr, dv, 1);
  r.predictions = decode_examples(*r.grid.model, te, derive_seed(cfg.seed, "decode"));
  return r;
}

std::string task_name(const std::string& system, int fold) { return system + ".fold" + std::to_string(fold); }

ojson metric_json(const MetricReport& r, const DiversityReport& d) {
  ojson j;
  j["system"] = r.system;
  j["fold"] = r.fold;
  j["bleu4"] = r.bleu4;
  j["meteor"] = r.meteor;
  j["rouge_l"] = r.rouge_l;
  j["cider"] = r.cider;
  j["diversity"] = {{"vocab_coverage", d.vocab_coverage}, {"pct_not_copied", d.pct_not_copied},
                    {"pct_unique", d.pct_unique}};
  return j;
}

double metric_value(const MetricReport& r, const std::string& m) {
  if (m == "bleu4") return r.bleu4;
  if (m == "meteor") return r.meteor;
  if (m == "rouge_l") return r.rouge_l;
  return r.cider;
}

const std::vector<double>& metric_segments(const MetricReport& r, const std::string& m) {
  if (m == "bleu4") return r.seg_bleu4;
  if (m == "meteor") return r.seg_meteor;
  if (m == "rouge_l") return r.seg_rouge_l;
  return r.seg_cider;
}

std::string fmt(double x) {
  char b[64];
  std::snprintf(b, sizeof b, "%.6f", x);
  return b;
}

std::string systems_list(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
  return s;
}

}  // namespace

// --- run ----------------------------------------------------------------------

std::string cmd_run(const ExperimentConfig& cfg, bool dry_run) {
  check_inputs(cfg);
  if (cfg.systems.empty()) throw ConfigError("config lists no systems");
  for (const auto& s : cfg.systems)
    if (is_neural_system(s) && uses_oracle(system_modality(s)) && cfg.oracle_labels.empty())
      throw ConfigError("system '" + s + "' needs oracle labels (oracle.labels or oracle.labels_file)");
  if (dry_run) {
    return "run: " + std::to_string(cfg.folds) + " folds x {" + systems_list(cfg.systems) + "}, profile " +
           cfg.profile + ", " + std::to_string(cfg.grid.cells(cfg.hparams).size()) + " grid cell(s), output " +
           cfg.output_dir.string() + "\n";
  }
  const Corpus corpus = load_corpus(cfg);
  const auto splits = make_folds(corpus, cfg.folds, cfg.split_seed);
  fs::create_directories(cfg.output_dir);
  write_file(cfg.output_dir / "folds.json", folds_to_json(splits, cfg.split_seed) + "\n");
  const auto folds = prepare_folds(corpus, splits);

  const std::size_t S = cfg.systems.size(), F = folds.size();
  std::vector<MetricReport> reports(S * F);
  std::vector<DiversityReport> divs(S * F);
  parallel_for(S * F, cfg.jobs, [&](std::size_t t) {
    const std::size_t f = t / S, si = t % S;
    const auto& fd = folds[f];
    const std::string& sys = cfg.systems[si];
    log_info("run: " + task_name(sys, static_cast<int>(f)));
    std::vector<Tokens> preds;
    if (sys == "cnst") {
      const ConstantPredictor cp;
      for (const Segment* s : fd.test) preds.push_back(cp.predict(*s).tokens);
    } else if (sys == "asc") {
      for (const Segment* s : fd.test) preds.push_back(predict_asc(*s).tokens);
    } else if (sys == "fasc") {
      const FascModel m = fit_fasc(fd.train, cfg.fasc_threshold, static_cast<int>(f));
      for (const Segment* s : fd.test) preds.push_back(predict_fasc(m, *s).tokens);
    } else if (sys == "ret") {
      const RetrievalIndex idx = build_retrieval_index(fd.train, static_cast<int>(f));
      for (const Segment* s : fd.test) preds.push_back(predict_ret(idx, *s).tokens);
    } else {
      NeuralRun nr = run_neural(cfg, corpus, fd, sys, cfg.oracle_fraction);
      preds = std::move(nr.predictions);
      const fs::path base = cfg.output_dir / "models" / task_name(sys, static_cast<int>(f));
      fs::create_directories(base.parent_path());
      save_model(*nr.grid.model, base.string() + ".cfck");
      write_file(base.string() + ".manifest.json",
                 run_manifest_json(nr.grid, system_modality(sys), derive_seed(cfg.seed, "fold" + std::to_string(f))));
    }
    const auto refs = references(fd.test);
    MetricReport rep = score_all(preds, refs, sys, static_cast<int>(f));
    const DiversityReport div = diversity(preds, references(fd.train), fd.vocab);

    std::string jl;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      ojson p;
      p["segment_id"] = fd.test[i]->segment_id;
      p["system"] = sys;
      p["tokens"] = preds[i];
      jl += p.dump() + "\n";
    }
    const std::string name = task_name(sys, static_cast<int>(f));
    write_file(cfg.output_dir / "predictions" / (name + ".jsonl"), jl);
    write_file(cfg.output_dir / "reports" / (name + ".json"), metric_json(rep, div).dump(2) + "\n");
    std::string csv = "segment_id,metric,value\n";
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const auto& id = fd.test[i]->segment_id;
      csv += id + ",bleu4," + fmt(rep.seg_bleu4[i]) + "\n";
      csv += id + ",meteor," + fmt(rep.seg_meteor[i]) + "\n";
      csv += id + ",rouge_l," + fmt(rep.seg_rouge_l[i]) + "\n";
      csv += id + ",cider," + fmt(rep.seg_cider[i]) + "\n";
    }
    write_file(cfg.output_dir / "per_segment" / (name + ".csv"), csv);
    reports[t] = std::move(rep);
    divs[t] = div;
  });

  auto at = [&](std::size_t si, std::size_t f) -> const MetricReport& { return reports[f * S + si]; };

  // summary: mean over folds
  ojson summary;
  summary["folds"] = F;
  summary["metrics"] = cfg.metrics;
  auto rows = ojson::array();
  for (std::size_t si = 0; si < S; ++si) {
    ojson row;
    row["system"] = cfg.systems[si];
    ojson per_fold;
    for (const auto& m : cfg.metrics) {
      double sum = 0.0;
      std::vector<double> v;
      for (std::size_t f = 0; f < F; ++f) {
        v.push_back(metric_value(at(si, f), m));
        sum += v.back();
      }
      row[m] = sum / static_cast<double>(F);
      per_fold[m] = v;
    }
    row["per_fold"] = per_fold;
    rows.push_back(row);
  }
  summary["systems"] = rows;
  write_file(cfg.output_dir / "summary.json", summary.dump(2) + "\n");

  ojson dj;
  auto drows = ojson::array();
  for (std::size_t si = 0; si < S; ++si) {
    DiversityReport mean;
    for (std::size_t f = 0; f < F; ++f) {
      const auto& d = divs[f * S + si];
      mean.vocab_coverage += d.vocab_coverage / static_cast<double>(F);
      mean.pct_not_copied += d.pct_not_copied / static_cast<double>(F);
      mean.pct_unique += d.pct_unique / static_cast<double>(F);
    }
    drows.push_back({{"system", cfg.systems[si]},
                     {"vocab_coverage", mean.vocab_coverage},
                     {"pct_not_copied", mean.pct_not_copied},
                     {"pct_unique", mean.pct_unique}});
  }
  dj["systems"] = drows;
  write_file(cfg.output_dir / "diversity.json", dj.dump(2) + "\n");

  std::string msg = "run: wrote " + std::to_string(S * F) + " system/fold reports to " + cfg.output_dir.string() + "\n";
  if (F < 2) {
    log_warning("significance tests need at least 2 folds; skipped");
    return msg;
  }
  const double n_videos = static_cast<double>(corpus.videos.size());
  const double test_frac = static_cast<double>(splits.front().test_ids.size()) / n_videos;
  const double train_frac = static_cast<double>(splits.front().train_ids.size()) / n_videos;
  for (const auto& m : cfg.metrics) {
    ojson sj;
    sj["metric"] = m;
    sj["pairing"] = cfg.pairing;
    sj["alpha"] = cfg.alpha;
    sj["test_frac"] = test_frac;
    sj["train_frac"] = train_frac;
    auto pairs = ojson::array();
    for (std::size_t a = 0; a < S; ++a) {
      for (std::size_t b = a + 1; b < S; ++b) {
        std::vector<double> fa, fb, wa, wb;
        for (std::size_t f = 0; f < F; ++f) {
          fa.push_back(metric_value(at(a, f), m));
          fb.push_back(metric_value(at(b, f), m));
          if (cfg.pairing == "segment") {
            const auto& sa = metric_segments(at(a, f), m);
            const auto& sb = metric_segments(at(b, f), m);
            wa.insert(wa.end(), sa.begin(), sa.end());
            wb.insert(wb.end(), sb.begin(), sb.end());
          }
        }
        const auto r = combined_significance(fa, fb, test_frac, train_frac, cfg.alpha, wa, wb);
        ojson pj;
        pj["system_a"] = cfg.systems[a];
        pj["system_b"] = cfg.systems[b];
        double ma = 0.0, mb = 0.0;
        for (std::size_t f = 0; f < F; ++f) {
          ma += fa[f] / static_cast<double>(F);
          mb += fb[f] / static_cast<double>(F);
        }
        pj["mean_a"] = ma;
        pj["mean_b"] = mb;
        pj["n"] = r.n;
        pj["wilcoxon_p"] = r.wilcoxon_p;
        pj["corrected_t_p"] = r.corrected_t_p;
        pj["combined_p"] = r.combined_p;
        pj["significant"] = r.significant();
        pairs.push_back(pj);
      }
    }
    sj["pairs"] = pairs;
    write_file(cfg.output_dir / ("significance_" + m + ".json"), sj.dump(2) + "\n");
  }
  return msg;
}

// --- oracle sweep ---------------------------------------------------------------

std::string cmd_oracle_sweep(const ExperimentConfig& cfg, bool dry_run) {
  check_inputs(cfg);
  if (cfg.oracle_labels.empty()) throw ConfigError("oracle sweep needs oracle labels (oracle.labels or oracle.labels_file)");
  if (cfg.sweep_fractions.empty() || cfg.sweep_systems.empty()) throw ConfigError("oracle sweep has nothing to run");
  if (dry_run) {
    return "oracle-sweep: fold " + std::to_string(cfg.sweep_fold) + ", " + std::to_string(cfg.sweep_fractions.size()) +
           " fractions x {" + systems_list(cfg.sweep_systems) + "}, output " + cfg.output_dir.string() + "\n";
  }
  const Corpus corpus = load_corpus(cfg);
  const auto splits = make_folds(corpus, cfg.folds, cfg.split_seed);
  const auto folds = prepare_folds(corpus, {splits[static_cast<std::size_t>(cfg.sweep_fold)]});
  const auto& fd = folds.front();
  const std::size_t S = cfg.sweep_systems.size(), N = cfg.sweep_fractions.size();
  std::vector<double> score(S * N);
  parallel_for(S * N, cfg.jobs, [&](std::size_t t) {
    const std::size_t fi = t / S, si = t % S;
    const NeuralRun r = run_neural(cfg, corpus, fd, cfg.sweep_systems[si], cfg.sweep_fractions[fi]);
    score[t] = rouge_l(r.predictions, references(fd.test));
  });
  ojson j;
  j["fold"] = cfg.sweep_fold;
  j["metric"] = "rouge_l";
  j["fractions"] = cfg.sweep_fractions;
  auto series = ojson::array();
  std::string csv = "fraction,system,rouge_l\n";
  for (std::size_t si = 0; si < S; ++si) {
    std::vector<double> v;
    for (std::size_t fi = 0; fi < N; ++fi) v.push_back(score[fi * S + si]);
    series.push_back({{"system", cfg.sweep_systems[si]}, {"rouge_l", v}});
  }
  for (std::size_t fi = 0; fi < N; ++fi)
    for (std::size_t si = 0; si < S; ++si)
      csv += fmt(cfg.sweep_fractions[fi]) + "," + cfg.sweep_systems[si] + "," + fmt(score[fi * S + si]) + "\n";
  j["series"] = series;
  fs::create_directories(cfg.output_dir);
  write_file(cfg.output_dir / "sweep.json", j.dump(2) + "\n");
  write_file(cfg.output_dir / "sweep.csv", csv);
  return "oracle-sweep: wrote " + (cfg.output_dir / "sweep.json").string() + "\n";
}

// --- analysis -------------------------------------------------------------------

std::string cmd_analyze(const ExperimentConfig& cfg, bool dry_run) {
  check_inputs(cfg);
  if (dry_run) {
    return "analyze: " + std::to_string(cfg.folds) + " folds x {asr, video} classifiers, min_freq " +
           std::to_string(cfg.analysis_min_freq) + ", output " + cfg.output_dir.string() + "\n";
  }
  const Corpus corpus = load_corpus(cfg);
  const auto all = corpus.segments();
  std::vector<std::string> words;
  for (const auto& [w, n] : caption_word_frequencies(all))
    if (n >= cfg.analysis_min_freq) words.push_back(w);
  if (words.empty())
    throw ValidationError("no caption word reaches analysis.min_freq = " + std::to_string(cfg.analysis_min_freq) +
                          "; the report would be empty");
  const auto folds = prepare_folds(corpus, make_folds(corpus, cfg.folds, cfg.split_seed));
  if (corpus.feature_dim == 0) throw ConfigError("analysis needs frame features");
  std::vector<std::vector<FoldWordAuc>> per(folds.size());
  std::vector<ojson> training(folds.size());
  parallel_for(folds.size(), cfg.jobs, [&](std::size_t f) {
    const auto& fd = folds[f];
    DanParams p = cfg.dan;
    p.seed = derive_seed(cfg.seed, "dan-fold" + std::to_string(f));
    DanClassifier dt = make_dan(DanModality::kAsr, p, fd.vocab, fd.train, corpus.feature_dim);
    DanClassifier dv = make_dan(DanModality::kVideo, p, fd.vocab, fd.train, corpus.feature_dim);
    const auto rt = train_dan(dt, fd.train);
    const auto rv = train_dan(dv, fd.train);
    training[f] = {{"fold", f},
                   {"asr", {{"initial_loss", rt.initial_loss}, {"final_loss", rt.final_loss}}},
                   {"video", {{"initial_loss", rv.initial_loss}, {"final_loss", rv.final_loss}}}};
    per[f] = word_aucs(dt, dv, fd.test, words);
  });
  auto records = average_word_aucs(per, all);
  if (records.empty()) throw ValidationError("no qualifying word has both label classes in any test split");
  const auto rep = complementarity_report(std::move(records), cfg.top_k);
  fs::create_directories(cfg.output_dir);
  write_file(cfg.output_dir / "word_auc.csv", records_csv(rep.records));
  write_file(cfg.output_dir / "scatter.csv", scatter_csv(rep.records));
  write_file(cfg.output_dir / "complementarity.json", report_json(rep));
  ojson tj = ojson::array();
  for (auto& t : training) tj.push_back(t);
  write_file(cfg.output_dir / "classifier_training.json", tj.dump(2) + "\n");
  return "analyze: " + std::to_string(rep.records.size()) + " words; spearman(stated rate, delta) rho " +
         fmt(rep.stated_vs_delta.rho) + " p " + fmt(rep.stated_vs_delta.p) + "\n";
}

// --- corpus commands --------------------------------------------------------------

std::string corpus_stats_json(const CorpusStats& s) {
  ojson j;
  j["num_videos"] = s.num_videos;
  j["num_segments"] = s.num_segments;
  j["asr_len_mean"] = s.asr_len_mean;
  j["asr_len_median"] = s.asr_len_median;
  j["zero_asr_fraction"] = s.zero_asr_fraction;
  j["wpm_mean"] = s.wpm_mean;
  j["caption_len_mean"] = s.caption_len_mean;
  j["segments_per_video_mean"] = s.segments_per_video_mean;
  return j.dump(2) + "\n";
}

std::string cmd_synth(const ExperimentConfig& cfg, const fs::path& out_dir, bool dry_run) {
  const SynthSpec spec = cfg.synthetic ? *cfg.synthetic : SynthSpec{};
  if (dry_run) {
    return "synth: " + std::to_string(spec.num_videos) + " videos x " + std::to_string(spec.segments_per_video) +
           " segments into " + out_dir.string() + "\n";
  }
  const Corpus c = generate_synthetic_corpus(spec, cfg.synthetic_seed);
  fs::create_directories(out_dir);
  emit(c, out_dir / "corpus.jsonl", out_dir / "features");
  write_file(out_dir / "synth_spec.json", synth_spec_to_json(spec) + "\n");
  return corpus_stats_json(compute_stats(c));
}

std::string cmd_stats(const ExperimentConfig& cfg, bool dry_run) {
  check_inputs(cfg);
  if (dry_run) return "stats: corpus statistics\n";
  return corpus_stats_json(compute_stats(load_corpus(cfg)));
}

std::string cmd_ingest(const fs::path& corpus_path, const fs::path& features_dir, bool dry_run) {
  if (!fs::exists(corpus_path)) throw ConfigError("corpus file not found: " + corpus_path.string());
  if (dry_run) return "ingest: " + corpus_path.string() + "\n";
  return corpus_stats_json(compute_stats(ingest(corpus_path, features_dir)));
}

// --- report -----------------------------------------------------------------------

namespace {

nlohmann::json read_json(const fs::path& p) {
  try {
    return nlohmann::json::parse(read_file(p));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(p.string() + ": " + e.what());
  }
}

std::string cell(double v, int digits = 2) {
  char b[64];
  std::snprintf(b, sizeof b, "%.*f", digits, v);
  return b;
}

const std::map<std::string, std::string> kMetricTitle{
    {"bleu4", "BLEU-4"}, {"meteor", "METEOR"}, {"rouge_l", "ROUGE-L"}, {"cider", "CIDEr"}};

std::string main_table(const fs::path& dir) {
  const auto summary = read_json(dir / "summary.json");
  const auto metrics = summary.at("metrics").get<std::vector<std::string>>();
  const auto& systems = summary.at("systems");
  // significance lookup: (a, b) -> significant
  std::map<std::string, std::map<std::pair<std::string, std::string>, bool>> sig;
  for (const auto& m : metrics) {
    const fs::path p = dir / ("significance_" + m + ".json");
    if (!fs::exists(p)) continue;
    const auto sj = read_json(p);
    for (const auto& pr : sj.at("pairs")) {
      const auto a = pr.at("system_a").get<std::string>(), b = pr.at("system_b").get<std::string>();
      const bool s = pr.at("significant").get<bool>();
      sig[m][{a, b}] = s;
      sig[m][{b, a}] = s;
    }
  }
  std::string out = "## Main results (mean over " + std::to_string(summary.at("folds").get<int>()) + " folds)\n\n";
  out += "| System |";
  for (const auto& m : metrics) out += " " + kMetricTitle.at(m) + " |";
  out += "\n|---|";
  for (std::size_t i = 0; i < metrics.size(); ++i) out += "---:|";
  out += "\n";
  // per metric: best system, bold if it beats all others, else underline ties
  std::map<std::string, std::map<std::string, std::string>> mark;
  for (const auto& m : metrics) {
    std::string best;
    double bv = -1e300;
    for (const auto& s : systems) {
      const double v = s.at(m).get<double>();
      if (v > bv) {
        bv = v;
        best = s.at("system").get<std::string>();
      }
    }
    if (!sig.count(m) || systems.size() < 2) continue;
    bool beats_all = true;
    std::vector<std::string> tied{best};
    for (const auto& s : systems) {
      const auto name = s.at("system").get<std::string>();
      if (name == best) continue;
      if (!sig[m][{best, name}]) {
        beats_all = false;
        tied.push_back(name);
      }
    }
    if (beats_all) {
      mark[m][best] = "bold";
    } else {
      for (const auto& t : tied) mark[m][t] = "underline";
    }
  }
  for (const auto& s : systems) {
    const auto name = s.at("system").get<std::string>();
    out += "| " + name + " |";
    for (const auto& m : metrics) {
      std::string v = cell(s.at(m).get<double>());
      const auto it = mark[m].find(name);
      if (it != mark[m].end()) v = it->second == "bold" ? "**" + v + "**" : "<u>" + v + "</u>";
      out += " " + v + " |";
    }
    out += "\n";
  }
  out += "\nBold: significantly better than every other system; underline: statistical tie for best";
  if (sig.empty()) out += " (no significance files found)";
  out += ".\n\n";
  return out;
}

std::string diversity_table(const fs::path& dir) {
  const auto j = read_json(dir / "diversity.json");
  std::string out = "## Diversity\n\n| System | Vocab coverage % | Not copied % | Unique % |\n|---|---:|---:|---:|\n";
  for (const auto& s : j.at("systems")) {
    out += "| " + s.at("system").get<std::string>() + " | " + cell(s.at("vocab_coverage").get<double>()) + " | " +
           cell(s.at("pct_not_copied").get<double>()) + " | " + cell(s.at("pct_unique").get<double>()) + " |\n";
  }
  return out + "\n";
}

std::string significance_tables(const fs::path& dir) {
  std::string out;
  for (const auto& m : kAllMetrics) {
    const fs::path p = dir / ("significance_" + m + ".json");
    if (!fs::exists(p)) continue;
    const auto j = read_json(p);
    out += "## Significance: " + kMetricTitle.at(m) + " (" + j.at("pairing").get<std::string>() + " pairing, alpha " +
           cell(j.at("alpha").get<double>(), 3) + ")\n\n| A | B | mean A | mean B | Wilcoxon p | corrected t p | combined p |\n|---|---|---:|---:|---:|---:|---:|\n";
    for (const auto& pr : j.at("pairs")) {
      out += "| " + pr.at("system_a").get<std::string>() + " | " + pr.at("system_b").get<std::string>() + " | " +
             cell(pr.at("mean_a").get<double>()) + " | " + cell(pr.at("mean_b").get<double>()) + " | " +
             cell(pr.at("wilcoxon_p").get<double>(), 4) + " | " + cell(pr.at("corrected_t_p").get<double>(), 4) + " | " +
             cell(pr.at("combined_p").get<double>(), 4) + (pr.at("significant").get<bool>() ? " *" : "") + " |\n";
    }
    out += "\n";
  }
  return out;
}

std::string sweep_table(const fs::path& dir) {
  const auto j = read_json(dir / "sweep.json");
  const auto fr = j.at("fractions").get<std::vector<double>>();
  std::string out = "## Oracle sweep (ROUGE-L, fold " + std::to_string(j.at("fold").get<int>()) + ")\n\n| Fraction |";
  for (const auto& s : j.at("series")) out += " " + s.at("system").get<std::string>() + " |";
  out += "\n|---:|";
  for (std::size_t i = 0; i < j.at("series").size(); ++i) out += "---:|";
  out += "\n";
  for (std::size_t i = 0; i < fr.size(); ++i) {
    out += "| " + cell(fr[i]) + " |";
    for (const auto& s : j.at("series")) out += " " + cell(s.at("rouge_l").at(i).get<double>()) + " |";
    out += "\n";
  }
  return out + "\n";
}

std::string complementarity_tables(const fs::path& dir) {
  const auto j = read_json(dir / "complementarity.json");
  std::string out = "## Modality complementarity (" + std::to_string(j.at("num_words").get<int>()) + " words)\n\n";
  const std::pair<const char*, const char*> tables[] = {{"easiest", "auc_mu"},
                                                        {"hardest", "auc_mu"},
                                                        {"asr_better", "auc_delta"},
                                                        {"video_better", "auc_delta"}};
  for (const auto& [name, key] : tables) {
    out += "### " + std::string(name) + "\n\n| Word | " + key + " |\n|---|---:|\n";
    for (const auto& r : j.at(name)) out += "| " + r.at("word").get<std::string>() + " | " + cell(r.at(key).get<double>(), 1) + " |\n";
    out += "\n";
  }
  const auto& s1 = j.at("spearman_stated_rate_vs_delta");
  const auto& s2 = j.at("spearman_freq_vs_delta");
  out += "Spearman(stated rate, AUC delta): rho " + cell(s1.at("rho").get<double>(), 3) + ", p " +
         cell(s1.at("p").get<double>(), 4) + "\n\n";
  out += "Spearman(frequency, AUC delta): rho " + cell(s2.at("rho").get<double>(), 3) + ", p " +
         cell(s2.at("p").get<double>(), 4) + "\n\n";
  return out;
}

}  // namespace

std::string cmd_report(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("output directory not found: " + dir.string() + " (run `vidcap run` first)");
  std::string out = "# Results\n\n";
  bool any = false;
  std::vector<std::string> missing;
  if (fs::exists(dir / "summary.json")) {
    out += main_table(dir);
    if (fs::exists(dir / "diversity.json")) out += diversity_table(dir);
    out += significance_tables(dir);
    any = true;
  } else {
    missing.push_back("summary.json (vidcap run)");
  }
  if (fs::exists(dir / "sweep.json")) {
    out += sweep_table(dir);
    any = true;
  } else {
    missing.push_back("sweep.json (vidcap oracle-sweep)");
  }
  if (fs::exists(dir / "complementarity.json")) {
    out += complementarity_tables(dir);
    any = true;
  } else {
    missing.push_back("complementarity.json (vidcap analyze)");
  }
  if (!any) {
    std::string m = "no artifacts in " + dir.string() + "; missing:";
    for (const auto& x : missing) m += " " + x + ";";
    throw ConfigError(m);
  }
  write_file(dir / "report.md", out);
  return out;
}

}  // namespace vidcap
