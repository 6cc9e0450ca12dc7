#include "vidcap/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>

#include <json.hpp>

#include "vidcap/error.hpp"

namespace vidcap {

using nlohmann::json;

std::vector<std::string> SynthSpec::effective_never_spoken() const {
  if (never_spoken.empty() && never_spoken_default) return cookware;
  return never_spoken;
}

std::vector<std::string> SynthSpec::object_words() const {
  std::vector<std::string> out = ingredients;
  out.insert(out.end(), cookware.begin(), cookware.end());
  return out;
}

namespace {

template <typename T>
void read_opt(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

}  // namespace

SynthSpec synth_spec_from_json(const std::string& text) {
  SynthSpec s;
  try {
    const json j = json::parse(text);
    read_opt(j, "actions", s.actions);
    read_opt(j, "ingredients", s.ingredients);
    read_opt(j, "cookware", s.cookware);
    read_opt(j, "modifiers", s.modifiers);
    read_opt(j, "fillers", s.fillers);
    read_opt(j, "synonyms", s.synonyms);
    read_opt(j, "never_spoken", s.never_spoken);
    read_opt(j, "never_spoken_default", s.never_spoken_default);
    read_opt(j, "num_videos", s.num_videos);
    read_opt(j, "segments_per_video", s.segments_per_video);
    read_opt(j, "p_drop", s.p_drop);
    read_opt(j, "modifier_drop_scale", s.modifier_drop_scale);
    read_opt(j, "function_drop_scale", s.function_drop_scale);
    read_opt(j, "p_synonym", s.p_synonym);
    read_opt(j, "p_modifier", s.p_modifier);
    read_opt(j, "p_empty_asr", s.p_empty_asr);
    read_opt(j, "fillers_min", s.fillers_min);
    read_opt(j, "fillers_max", s.fillers_max);
    read_opt(j, "p_action_follows_cookware", s.p_action_follows_cookware);
    read_opt(j, "ingredient_skew", s.ingredient_skew);
    read_opt(j, "cookware_skew", s.cookware_skew);
    read_opt(j, "feature_dim", s.feature_dim);
    read_opt(j, "frames_min", s.frames_min);
    read_opt(j, "frames_max", s.frames_max);
    read_opt(j, "p_visible", s.p_visible);
    read_opt(j, "p_distractor", s.p_distractor);
    read_opt(j, "noise_std", s.noise_std);
    read_opt(j, "words_per_minute", s.words_per_minute);
  } catch (const json::exception& e) {
    throw ParseError(std::string("synthetic spec: ") + e.what());
  }
  return s;
}

std::string synth_spec_to_json(const SynthSpec& s) {
  json j;
  j["actions"] = s.actions;
  j["ingredients"] = s.ingredients;
  j["cookware"] = s.cookware;
  j["modifiers"] = s.modifiers;
  j["fillers"] = s.fillers;
  j["synonyms"] = s.synonyms;
  j["never_spoken"] = s.never_spoken;
  j["never_spoken_default"] = s.never_spoken_default;
  j["num_videos"] = s.num_videos;
  j["segments_per_video"] = s.segments_per_video;
  j["p_drop"] = s.p_drop;
  j["modifier_drop_scale"] = s.modifier_drop_scale;
  j["function_drop_scale"] = s.function_drop_scale;
  j["p_synonym"] = s.p_synonym;
  j["p_modifier"] = s.p_modifier;
  j["p_empty_asr"] = s.p_empty_asr;
  j["fillers_min"] = s.fillers_min;
  j["fillers_max"] = s.fillers_max;
  j["p_action_follows_cookware"] = s.p_action_follows_cookware;
  j["ingredient_skew"] = s.ingredient_skew;
  j["cookware_skew"] = s.cookware_skew;
  j["feature_dim"] = s.feature_dim;
  j["frames_min"] = s.frames_min;
  j["frames_max"] = s.frames_max;
  j["p_visible"] = s.p_visible;
  j["p_distractor"] = s.p_distractor;
  j["noise_std"] = s.noise_std;
  j["words_per_minute"] = s.words_per_minute;
  return j.dump(2);
}

namespace {

void check_spec(const SynthSpec& s) {
  if (s.actions.empty() || s.ingredients.empty() || s.cookware.empty()) {
    throw ValidationError("synthetic spec: actions, ingredients and cookware must be non-empty");
  }
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError(std::string("synthetic spec: ") + name + " not in [0,1]");
  };
  prob(s.p_synonym, "p_synonym");
  prob(s.p_modifier, "p_modifier");
  prob(s.p_empty_asr, "p_empty_asr");
  prob(s.p_action_follows_cookware, "p_action_follows_cookware");
  prob(s.p_visible, "p_visible");
  prob(s.p_distractor, "p_distractor");
  if (s.p_drop < 0.0 || s.p_drop * 1.8 > 1.0) throw ValidationError("synthetic spec: p_drop must lie in [0, 1/1.8]");
  if (s.p_modifier > 0.0 && s.modifiers.empty()) throw ValidationError("synthetic spec: p_modifier > 0 needs modifiers");
  if (s.fillers_min < 0 || s.fillers_max < s.fillers_min) throw ValidationError("synthetic spec: bad filler range");
  if (s.fillers_max > 0 && s.fillers.empty()) throw ValidationError("synthetic spec: filler range needs fillers");
  if (s.frames_min < 0 || s.frames_max < s.frames_min) throw ValidationError("synthetic spec: bad frame range");
  if (s.feature_dim == 0) throw ValidationError("synthetic spec: feature_dim must be > 0");
  if (s.num_videos == 0 || s.segments_per_video == 0) throw ValidationError("synthetic spec: empty corpus");
  if (!(s.words_per_minute > 0.0)) throw ValidationError("synthetic spec: words_per_minute must be > 0");
  std::set<std::string> seen;
  for (const auto* list : {&s.actions, &s.ingredients, &s.cookware, &s.modifiers}) {
    for (const auto& w : *list) {
      if (w.empty() || !seen.insert(w).second) throw ValidationError("synthetic spec: duplicate or empty word '" + w + "'");
    }
  }
}

std::vector<double> skew_weights(std::size_t n, double s) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = 1.0 / std::pow(static_cast<double>(i + 1), s);
  return w;
}

// Dropout multiplier for position i of an n-word list: 0.2 .. 1.8.
double ramp(std::size_t i, std::size_t n) {
  if (n <= 1) return 1.0;
  return 0.2 + 1.6 * static_cast<double>(i) / static_cast<double>(n - 1);
}

}  // namespace

Corpus generate_synthetic_corpus(const SynthSpec& spec, std::uint64_t seed) {
  check_spec(spec);
  const auto never = spec.effective_never_spoken();
  const std::set<std::string> never_set(never.begin(), never.end());

  std::map<std::string, double> drop;
  for (std::size_t i = 0; i < spec.actions.size(); ++i) drop[spec.actions[i]] = spec.p_drop * ramp(i, spec.actions.size());
  for (std::size_t i = 0; i < spec.ingredients.size(); ++i)
    drop[spec.ingredients[i]] = spec.p_drop * ramp(i, spec.ingredients.size());
  for (const auto& m : spec.modifiers) drop[m] = spec.p_drop * spec.modifier_drop_scale;
  for (const auto& c : spec.cookware) drop[c] = spec.p_drop;
  const double function_drop = spec.p_drop * spec.function_drop_scale;

  // Object embeddings: one fixed random vector per ingredient and cookware.
  const auto objects = spec.object_words();
  std::map<std::string, std::vector<float>> embedding;
  {
    std::mt19937_64 rng(derive_seed(seed, "object-embeddings"));
    std::normal_distribution<double> nd(0.0, 1.0);
    for (const auto& o : objects) {
      auto& e = embedding[o];
      e.resize(spec.feature_dim);
      for (auto& x : e) x = static_cast<float>(nd(rng));
    }
  }

  const auto ing_w = skew_weights(spec.ingredients.size(), spec.ingredient_skew);
  const auto cook_w = skew_weights(spec.cookware.size(), spec.cookware_skew);

  Corpus corpus;
  std::size_t global = 0;
  for (std::size_t v = 0; v < spec.num_videos; ++v) {
    Video video;
    char buf[32];
    std::snprintf(buf, sizeof buf, "vid%05zu", v);
    video.video_id = buf;
    double t = 0.0;
    for (std::size_t k = 0; k < spec.segments_per_video; ++k, ++global) {
      std::mt19937_64 rng(derive_seed(seed, global));
      std::uniform_real_distribution<double> u01(0.0, 1.0);
      auto pick = [&](const std::vector<std::string>& list) -> const std::string& {
        return list[std::uniform_int_distribution<std::size_t>(0, list.size() - 1)(rng)];
      };

      const std::size_t cook_i = std::discrete_distribution<std::size_t>(cook_w.begin(), cook_w.end())(rng);
      const std::string& cook = spec.cookware[cook_i];
      const std::string& action = u01(rng) < spec.p_action_follows_cookware
                                      ? spec.actions[cook_i % spec.actions.size()]
                                      : pick(spec.actions);
      const std::string& ing = spec.ingredients[std::discrete_distribution<std::size_t>(ing_w.begin(), ing_w.end())(rng)];
      std::string modifier;
      if (u01(rng) < spec.p_modifier) modifier = pick(spec.modifiers);

      Tokens caption{action, "the"};
      if (!modifier.empty()) caption.push_back(modifier);
      caption.insert(caption.end(), {ing, "in", "the", cook});

      Tokens asr;
      if (u01(rng) >= spec.p_empty_asr) {
        for (const auto& w : caption) {
          if (never_set.count(w)) continue;
          auto it = drop.find(w);
          const double p = it == drop.end() ? function_drop : it->second;
          if (u01(rng) < p) continue;
          auto syn = spec.synonyms.find(w);
          if (syn != spec.synonyms.end() && !syn->second.empty() && u01(rng) < spec.p_synonym) {
            asr.push_back(pick(syn->second));
          } else {
            asr.push_back(w);
          }
        }
        const int n_fill = std::uniform_int_distribution<int>(spec.fillers_min, spec.fillers_max)(rng);
        for (int f = 0; f < n_fill; ++f) {
          const auto pos = std::uniform_int_distribution<std::size_t>(0, asr.size())(rng);
          asr.insert(asr.begin() + static_cast<std::ptrdiff_t>(pos), pick(spec.fillers));
        }
      }

      Segment seg;
      std::snprintf(buf, sizeof buf, "%s_s%02zu", video.video_id.c_str(), k);
      seg.segment_id = buf;
      const double gap = 1.0 + 4.0 * u01(rng);
      const double words = static_cast<double>(std::max<std::size_t>(asr.size(), 3));
      const double dur = words * 60.0 / spec.words_per_minute * (0.8 + 0.45 * u01(rng));
      seg.start_s = t + gap;
      seg.end_s = seg.start_s + dur;
      t = seg.end_s;
      seg.caption = {caption, TokenSource::kCaption};
      seg.asr = {asr, TokenSource::kAsr};

      const int n_frames = std::uniform_int_distribution<int>(spec.frames_min, spec.frames_max)(rng);
      if (n_frames > 0) {
        auto& fr = seg.frames;
        fr.rows = static_cast<std::size_t>(n_frames);
        fr.cols = spec.feature_dim;
        fr.data.assign(fr.rows * fr.cols, 0.0f);
        std::normal_distribution<double> noise(0.0, spec.noise_std);
        for (std::size_t r = 0; r < fr.rows; ++r) {
          float* row = fr.data.data() + r * fr.cols;
          auto add = [&](const std::string& obj) {
            const auto& e = embedding.at(obj);
            for (std::size_t d = 0; d < fr.cols; ++d) row[d] += e[d];
          };
          if (u01(rng) < spec.p_visible) add(ing);
          if (u01(rng) < spec.p_visible) add(cook);
          if (u01(rng) < spec.p_distractor) add(pick(objects));
          for (std::size_t d = 0; d < fr.cols; ++d) row[d] += static_cast<float>(noise(rng));
          fr.frame_times.push_back(seg.start_s + dur * (static_cast<double>(r) + 0.5) / static_cast<double>(fr.rows));
        }
      }
      video.segments.push_back(std::move(seg));
    }
    video.duration_s = t + 5.0;
    corpus.videos.push_back(std::move(video));
  }
  validate(corpus);
  return corpus;
}

}  // namespace vidcap
