#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vidcap/corpus.hpp"

namespace vidcap {

// Parameters of the synthetic cooking corpus. Captions follow
//   ACTION the [MODIFIER] INGREDIENT in the COOKWARE
// ASR is the caption with per-word dropout, synonym substitution and filler
// insertion; words listed in never_spoken are always omitted. Frame features
// are sums of fixed per-object embeddings (ingredient and cookware only) plus
// Gaussian noise, so modifiers are speech-only and never-spoken words are
// vision-only.
struct SynthSpec {
  std::vector<std::string> actions{"fry", "boil", "mix", "bake"};
  std::vector<std::string> ingredients{"oil",  "salt",  "onion",  "garlic", "chicken", "rice",
                                       "pasta", "tomato", "cheese", "flour", "egg",     "pepper"};
  std::vector<std::string> cookware{"pan", "pot", "bowl", "oven", "skillet", "saucepan", "plate", "tray"};
  std::vector<std::string> modifiers{"olive", "vegetable", "sea", "white", "black", "fresh", "dried", "red"};
  std::vector<std::string> fillers{"um",   "uh",  "so",   "now",   "we",     "are",  "going",
                                   "just", "you", "know", "okay",  "gonna",  "really", "nice",
                                   "like", "right", "that", "little", "here", "go"};
  std::map<std::string, std::vector<std::string>> synonyms{
      {"fry", {"sizzle", "saute"}}, {"boil", {"simmer"}},       {"mix", {"combine", "whisk"}},
      {"bake", {"roast"}},          {"onion", {"onions"}},      {"tomato", {"tomatoes"}},
      {"egg", {"eggs"}},            {"chicken", {"chickens"}}};
  // Defaults to the cookware list when left empty and never_spoken_default is set.
  std::vector<std::string> never_spoken;
  bool never_spoken_default = true;

  std::size_t num_videos = 200;
  std::size_t segments_per_video = 5;

  // Base dropout; per-word rates are p_drop times a multiplier that ramps
  // from 0.2 to 1.8 along the action and ingredient lists.
  double p_drop = 0.35;
  double modifier_drop_scale = 0.3;
  double function_drop_scale = 0.5;
  double p_synonym = 0.15;
  double p_modifier = 0.3;
  double p_empty_asr = 0.016;
  int fillers_min = 3;
  int fillers_max = 12;
  // Probability that the action is the one paired with the cookware.
  double p_action_follows_cookware = 0.85;
  double ingredient_skew = 0.5;
  double cookware_skew = 0.3;

  std::size_t feature_dim = 32;
  int frames_min = 8;
  int frames_max = 20;
  double p_visible = 0.8;
  double p_distractor = 0.3;
  double noise_std = 6.0;
  double words_per_minute = 140.0;

  std::vector<std::string> effective_never_spoken() const;
  // Ingredients followed by cookware: the preset's object labels.
  std::vector<std::string> object_words() const;
};

SynthSpec synth_spec_from_json(const std::string& text);
std::string synth_spec_to_json(const SynthSpec& spec);

// Deterministic in (spec, seed). Throws ValidationError for inconsistent specs.
Corpus generate_synthetic_corpus(const SynthSpec& spec, std::uint64_t seed);

}  // namespace vidcap
