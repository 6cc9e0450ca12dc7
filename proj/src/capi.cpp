#include "vidcap/vidcap.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <stdexcept>
#include <string>

#include "vidcap/error.hpp"
#include "vidcap/experiment.hpp"
#include "vidcap/log.hpp"
#include "vidcap/metrics.hpp"
#include "vidcap/stats.hpp"
#include "vidcap/text.hpp"

struct vidcap_config {
  vidcap::ExperimentConfig cfg;
};

struct vidcap_corpus {
  vidcap::Corpus corpus;
};

namespace {

thread_local std::string g_last_error;

vidcap_status fail(vidcap_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

// Runs fn, translating exceptions to status codes.
template <class F>
vidcap_status guard(F&& fn) {
  g_last_error.clear();
  try {
    fn();
    return VIDCAP_OK;
  } catch (const vidcap::ConfigError& e) {
    return fail(VIDCAP_ERR_CONFIG, e.what());
  } catch (const vidcap::ParseError& e) {
    return fail(VIDCAP_ERR_PARSE, e.what());
  } catch (const vidcap::ValidationError& e) {
    return fail(VIDCAP_ERR_VALIDATION, e.what());
  } catch (const vidcap::IoError& e) {
    return fail(VIDCAP_ERR_IO, e.what());
  } catch (const vidcap::NumericError& e) {
    return fail(VIDCAP_ERR_NUMERIC, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(VIDCAP_ERR_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(VIDCAP_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(VIDCAP_ERR_INTERNAL, "unknown exception");
  }
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

void put(char** out, const std::string& s) {
  if (out) *out = dup(s);
}

vidcap::CliOverrides to_overrides(const vidcap_overrides* o) {
  vidcap::CliOverrides ov;
  if (!o) return ov;
  if (o->has_seed) ov.seed = o->seed;
  if (o->jobs > 0) ov.jobs = o->jobs;
  if (o->profile) ov.profile = std::string(o->profile);
  return ov;
}

void need(const void* p, const char* what) {
  if (!p) throw std::invalid_argument(std::string(what) + " is NULL");
}

}  // namespace

#define VIDCAP_ARG_CHECK(p)                                                  \
  do {                                                                       \
    if (!(p)) return fail(VIDCAP_ERR_ARGUMENT, std::string(#p) + " is NULL"); \
  } while (0)

extern "C" {

const char* vidcap_version(void) { return "0.1.0"; }

const char* vidcap_last_error(void) { return g_last_error.c_str(); }

const char* vidcap_status_name(vidcap_status s) {
  switch (s) {
    case VIDCAP_OK: return "ok";
    case VIDCAP_ERR_INTERNAL: return "internal";
    case VIDCAP_ERR_CONFIG: return "config";
    case VIDCAP_ERR_PARSE: return "parse";
    case VIDCAP_ERR_VALIDATION: return "validation";
    case VIDCAP_ERR_IO: return "io";
    case VIDCAP_ERR_NUMERIC: return "numeric";
    case VIDCAP_ERR_ARGUMENT: return "argument";
  }
  return "unknown";
}

void vidcap_string_free(char* s) { std::free(s); }

vidcap_status vidcap_set_log_level(int level) {
  if (level < 0 || level > 4) return fail(VIDCAP_ERR_ARGUMENT, "log level must be 0..4");
  vidcap::set_log_level(static_cast<vidcap::LogLevel>(level));
  return VIDCAP_OK;
}

vidcap_status vidcap_config_load(const char* path, const vidcap_overrides* overrides, vidcap_config** out) {
  VIDCAP_ARG_CHECK(path);
  VIDCAP_ARG_CHECK(out);
  *out = nullptr;
  return guard([&] {
    auto c = std::make_unique<vidcap_config>();
    c->cfg = vidcap::load_config(path, to_overrides(overrides));
    *out = c.release();
  });
}

vidcap_status vidcap_config_parse(const char* json_text, const char* base_dir, const vidcap_overrides* overrides,
                                  vidcap_config** out) {
  VIDCAP_ARG_CHECK(json_text);
  VIDCAP_ARG_CHECK(out);
  *out = nullptr;
  return guard([&] {
    auto c = std::make_unique<vidcap_config>();
    const std::filesystem::path base = base_dir ? std::filesystem::path(base_dir) : std::filesystem::current_path();
    c->cfg = vidcap::parse_config(json_text, base, to_overrides(overrides));
    *out = c.release();
  });
}

void vidcap_config_free(vidcap_config* cfg) { delete cfg; }

vidcap_status vidcap_config_output_dir(const vidcap_config* cfg, char** out) {
  VIDCAP_ARG_CHECK(cfg);
  VIDCAP_ARG_CHECK(out);
  return guard([&] { put(out, cfg->cfg.output_dir.string()); });
}

vidcap_status vidcap_run(const vidcap_config* cfg, int dry_run, char** out) {
  VIDCAP_ARG_CHECK(cfg);
  return guard([&] { put(out, vidcap::cmd_run(cfg->cfg, dry_run != 0)); });
}

vidcap_status vidcap_oracle_sweep(const vidcap_config* cfg, int dry_run, char** out) {
  VIDCAP_ARG_CHECK(cfg);
  return guard([&] { put(out, vidcap::cmd_oracle_sweep(cfg->cfg, dry_run != 0)); });
}

vidcap_status vidcap_analyze(const vidcap_config* cfg, int dry_run, char** out) {
  VIDCAP_ARG_CHECK(cfg);
  return guard([&] { put(out, vidcap::cmd_analyze(cfg->cfg, dry_run != 0)); });
}

vidcap_status vidcap_stats(const vidcap_config* cfg, int dry_run, char** out) {
  VIDCAP_ARG_CHECK(cfg);
  return guard([&] { put(out, vidcap::cmd_stats(cfg->cfg, dry_run != 0)); });
}

vidcap_status vidcap_synth(const vidcap_config* cfg, const char* out_dir, int dry_run, char** out) {
  VIDCAP_ARG_CHECK(out_dir);
  return guard([&] {
    vidcap::ExperimentConfig c;
    if (cfg) c = cfg->cfg;
    put(out, vidcap::cmd_synth(c, out_dir, dry_run != 0));
  });
}

vidcap_status vidcap_ingest(const char* corpus_path, const char* features_dir, int dry_run, char** out) {
  VIDCAP_ARG_CHECK(corpus_path);
  return guard([&] {
    const std::filesystem::path cp(corpus_path);
    const std::filesystem::path fd = features_dir ? std::filesystem::path(features_dir) : cp.parent_path() / "features";
    put(out, vidcap::cmd_ingest(cp, fd, dry_run != 0));
  });
}

vidcap_status vidcap_report(const char* output_dir, char** out) {
  VIDCAP_ARG_CHECK(output_dir);
  return guard([&] { put(out, vidcap::cmd_report(output_dir)); });
}

vidcap_status vidcap_corpus_load(const char* corpus_path, const char* features_dir, vidcap_corpus** out) {
  VIDCAP_ARG_CHECK(corpus_path);
  VIDCAP_ARG_CHECK(out);
  *out = nullptr;
  return guard([&] {
    const std::filesystem::path cp(corpus_path);
    if (!std::filesystem::exists(cp)) throw vidcap::ConfigError("corpus file not found: " + cp.string());
    auto c = std::make_unique<vidcap_corpus>();
    c->corpus = vidcap::ingest(cp, features_dir ? std::filesystem::path(features_dir) : cp.parent_path() / "features");
    *out = c.release();
  });
}

vidcap_status vidcap_corpus_from_config(const vidcap_config* cfg, vidcap_corpus** out) {
  VIDCAP_ARG_CHECK(cfg);
  VIDCAP_ARG_CHECK(out);
  *out = nullptr;
  return guard([&] {
    auto c = std::make_unique<vidcap_corpus>();
    c->corpus = vidcap::load_corpus(cfg->cfg);
    *out = c.release();
  });
}

void vidcap_corpus_free(vidcap_corpus* corpus) { delete corpus; }

vidcap_status vidcap_corpus_counts(const vidcap_corpus* corpus, size_t* num_videos, size_t* num_segments,
                                   size_t* feature_dim) {
  VIDCAP_ARG_CHECK(corpus);
  if (num_videos) *num_videos = corpus->corpus.videos.size();
  if (num_segments) *num_segments = corpus->corpus.num_segments();
  if (feature_dim) *feature_dim = corpus->corpus.feature_dim;
  return VIDCAP_OK;
}

vidcap_status vidcap_corpus_stats_json(const vidcap_corpus* corpus, char** out) {
  VIDCAP_ARG_CHECK(corpus);
  VIDCAP_ARG_CHECK(out);
  return guard([&] { put(out, vidcap::corpus_stats_json(vidcap::compute_stats(corpus->corpus))); });
}

vidcap_status vidcap_score(const char* metric, const char* const* candidates, const char* const* references, size_t n,
                           double* out) {
  VIDCAP_ARG_CHECK(metric);
  VIDCAP_ARG_CHECK(out);
  if (n > 0 && (!candidates || !references)) return fail(VIDCAP_ERR_ARGUMENT, "caption arrays are NULL");
  const std::string m(metric);
  if (m != "bleu4" && m != "meteor" && m != "rouge_l" && m != "cider")
    return fail(VIDCAP_ERR_ARGUMENT, "unknown metric '" + m + "'");
  return guard([&] {
    std::vector<vidcap::Tokens> c, r;
    for (size_t i = 0; i < n; ++i) {
      need(candidates[i], "candidate");
      need(references[i], "reference");
      c.push_back(vidcap::tokenize(candidates[i]));
      r.push_back(vidcap::tokenize(references[i]));
    }
    if (m == "bleu4") *out = vidcap::bleu4(c, r);
    else if (m == "meteor") *out = vidcap::meteor(c, r);
    else if (m == "rouge_l") *out = vidcap::rouge_l(c, r);
    else *out = vidcap::cider(c, r);
  });
}

vidcap_status vidcap_roc_auc(const double* scores, const int* labels, size_t n, double* out) {
  VIDCAP_ARG_CHECK(out);
  if (n > 0 && (!scores || !labels)) return fail(VIDCAP_ERR_ARGUMENT, "input arrays are NULL");
  return guard([&] { *out = vidcap::roc_auc({scores, n}, {labels, n}); });
}

vidcap_status vidcap_significance(const double* a, const double* b, size_t n, double test_frac, double train_frac,
                                  double alpha, double* combined_p, int* significant) {
  VIDCAP_ARG_CHECK(combined_p);
  if (n > 0 && (!a || !b)) return fail(VIDCAP_ERR_ARGUMENT, "input arrays are NULL");
  return guard([&] {
    const auto r = vidcap::combined_significance({a, n}, {b, n}, test_frac, train_frac, alpha);
    *combined_p = r.combined_p;
    if (significant) *significant = r.significant() ? 1 : 0;
  });
}

}  // extern "C"
