#include "vidcap/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "vidcap/error.hpp"
#include "vidcap/features_io.hpp"

namespace vidcap {

using nlohmann::json;

std::size_t Corpus::num_segments() const {
  std::size_t n = 0;
  for (const auto& v : videos) n += v.segments.size();
  return n;
}

std::vector<const Segment*> Corpus::segments() const {
  std::vector<const Segment*> out;
  out.reserve(num_segments());
  for (const auto& v : videos)
    for (const auto& s : v.segments) out.push_back(&s);
  return out;
}

std::vector<const Segment*> Corpus::segments_of(const std::vector<std::string>& video_ids) const {
  std::set<std::string> wanted(video_ids.begin(), video_ids.end());
  std::vector<const Segment*> out;
  for (const auto& v : videos) {
    if (!wanted.count(v.video_id)) continue;
    for (const auto& s : v.segments) out.push_back(&s);
  }
  return out;
}

const Video* Corpus::find_video(const std::string& id) const {
  auto it = std::lower_bound(videos.begin(), videos.end(), id,
                             [](const Video& v, const std::string& key) { return v.video_id < key; });
  return it != videos.end() && it->video_id == id ? &*it : nullptr;
}

namespace {

void check_tokens(const TokenSequence& seq, const std::string& where) {
  for (const auto& t : seq.tokens) {
    if (t.empty()) throw ValidationError(where + ": empty token");
    if (std::any_of(t.begin(), t.end(), [](unsigned char c) { return std::isspace(c); })) {
      throw ValidationError(where + ": token '" + t + "' contains whitespace");
    }
  }
}

}  // namespace

void validate(Corpus& corpus) {
  std::sort(corpus.videos.begin(), corpus.videos.end(),
            [](const Video& a, const Video& b) { return a.video_id < b.video_id; });
  for (std::size_t i = 1; i < corpus.videos.size(); ++i) {
    if (corpus.videos[i].video_id == corpus.videos[i - 1].video_id) {
      throw ValidationError("duplicate video_id " + corpus.videos[i].video_id);
    }
  }
  std::size_t dim = 0;
  std::string dim_owner;
  for (auto& video : corpus.videos) {
    if (video.video_id.empty()) throw ValidationError("empty video_id");
    if (!(video.duration_s > 0.0) || !std::isfinite(video.duration_s)) {
      throw ValidationError("video " + video.video_id + ": duration_s must be > 0");
    }
    std::set<std::string> ids;
    for (std::size_t i = 0; i < video.segments.size(); ++i) {
      auto& seg = video.segments[i];
      const std::string where = "video " + video.video_id + " segment " + seg.segment_id;
      if (!ids.insert(seg.segment_id).second) throw ValidationError(where + ": duplicate segment_id");
      if (!(seg.start_s < seg.end_s)) throw ValidationError(where + ": end_s must exceed start_s");
      if (seg.start_s < 0.0 || seg.end_s > video.duration_s) {
        throw ValidationError(where + ": interval outside [0, duration_s]");
      }
      if (i > 0) {
        const auto& prev = video.segments[i - 1];
        if (seg.start_s < prev.start_s) throw ValidationError(where + ": segments not ordered by start");
        if (seg.start_s < prev.end_s) throw ValidationError(where + ": overlaps " + prev.segment_id);
      }
      if (seg.caption.empty()) throw ValidationError(where + ": empty caption");
      seg.caption.source = TokenSource::kCaption;
      seg.asr.source = TokenSource::kAsr;
      check_tokens(seg.caption, where);
      check_tokens(seg.asr, where);

      auto& fr = seg.frames;
      if (fr.rows == 0) {
        fr = FrameFeatureSet{};
        continue;
      }
      if (fr.cols == 0 || fr.data.size() != fr.rows * fr.cols) {
        throw ValidationError(where + ": malformed frame matrix");
      }
      if (!std::all_of(fr.data.begin(), fr.data.end(), [](float x) { return std::isfinite(x); })) {
        throw ValidationError(where + ": non-finite frame feature");
      }
      if (!fr.frame_times.empty()) {
        if (fr.frame_times.size() != fr.rows) throw ValidationError(where + ": frame_times length");
        if (!std::is_sorted(fr.frame_times.begin(), fr.frame_times.end())) {
          throw ValidationError(where + ": frame_times not nondecreasing");
        }
      }
      if (dim == 0) {
        dim = fr.cols;
        dim_owner = seg.segment_id;
      } else if (fr.cols != dim) {
        throw ValidationError(where + ": feature dimension " + std::to_string(fr.cols) +
                              " differs from corpus dimension " + std::to_string(dim) +
                              " (first seen in segment " + dim_owner + ")");
      }
    }
  }
  corpus.feature_dim = dim;
}

Corpus ingest(const std::filesystem::path& corpus_path, const std::filesystem::path& features_dir) {
  std::ifstream in(corpus_path);
  if (!in) throw IoError("cannot open corpus file " + corpus_path.string());
  Corpus corpus;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    const std::string at = corpus_path.string() + ":" + std::to_string(lineno);
    try {
      const json rec = json::parse(line);
      Video video;
      video.video_id = rec.at("video_id").get<std::string>();
      video.duration_s = rec.at("duration_s").get<double>();
      if (rec.contains("language_hint") && !rec["language_hint"].is_null()) {
        video.language_hint = rec["language_hint"].get<std::string>();
      }
      for (const auto& js : rec.at("segments")) {
        Segment seg;
        seg.segment_id = js.at("segment_id").get<std::string>();
        seg.start_s = js.at("start_s").get<double>();
        seg.end_s = js.at("end_s").get<double>();
        seg.caption = {tokenize(js.at("caption").get<std::string>()), TokenSource::kCaption};
        seg.asr = {normalize_tokens(js.at("asr").get<Tokens>()), TokenSource::kAsr};
        const auto& ref = js.at("features_ref");
        if (!ref.is_null()) {
          const auto path = features_dir / ref.get<std::string>();
          if (!std::filesystem::exists(path)) {
            throw ValidationError("segment " + seg.segment_id + ": feature file " + path.string() +
                                  " does not exist");
          }
          seg.frames = read_feature_file(path);
          if (js.contains("frame_times")) seg.frames.frame_times = js["frame_times"].get<std::vector<double>>();
        }
        video.segments.push_back(std::move(seg));
      }
      corpus.videos.push_back(std::move(video));
    } catch (const json::exception& e) {
      throw ParseError(at + ": malformed record: " + e.what());
    }
  }
  validate(corpus);
  return corpus;
}

void emit(const Corpus& corpus, const std::filesystem::path& corpus_path,
          const std::filesystem::path& features_dir) {
  std::filesystem::create_directories(features_dir);
  if (corpus_path.has_parent_path()) std::filesystem::create_directories(corpus_path.parent_path());
  std::ofstream out(corpus_path, std::ios::trunc);
  if (!out) throw IoError("cannot write corpus file " + corpus_path.string());
  for (const auto& video : corpus.videos) {
    json rec;
    rec["video_id"] = video.video_id;
    rec["duration_s"] = video.duration_s;
    if (video.language_hint) rec["language_hint"] = *video.language_hint;
    json segs = json::array();
    for (const auto& seg : video.segments) {
      json js;
      js["segment_id"] = seg.segment_id;
      js["start_s"] = seg.start_s;
      js["end_s"] = seg.end_s;
      js["caption"] = join(seg.caption.tokens);
      js["asr"] = seg.asr.tokens;
      if (seg.frames.empty()) {
        js["features_ref"] = nullptr;
      } else {
        const std::string ref = video.video_id + "__" + seg.segment_id + ".cfwf";
        write_feature_file(features_dir / ref, seg.frames);
        js["features_ref"] = ref;
        if (!seg.frames.frame_times.empty()) js["frame_times"] = seg.frames.frame_times;
      }
      segs.push_back(std::move(js));
    }
    rec["segments"] = std::move(segs);
    out << rec.dump() << '\n';
  }
  if (!out) throw IoError("short write to " + corpus_path.string());
}

CorpusStats compute_stats(const Corpus& corpus) {
  const auto segs = corpus.segments();
  if (segs.empty()) throw ValidationError("compute_stats: corpus has no segments");
  CorpusStats st;
  st.num_videos = corpus.videos.size();
  st.num_segments = segs.size();
  std::vector<double> lens;
  double wpm_sum = 0.0, cap_sum = 0.0;
  std::size_t wpm_n = 0, zero = 0;
  for (const auto* s : segs) {
    lens.push_back(static_cast<double>(s->asr.size()));
    cap_sum += static_cast<double>(s->caption.size());
    if (s->asr.empty()) ++zero;
    if (s->duration() > 0.0) {
      wpm_sum += static_cast<double>(s->asr.size()) / (s->duration() / 60.0);
      ++wpm_n;
    }
  }
  const double n = static_cast<double>(segs.size());
  st.asr_len_mean = std::accumulate(lens.begin(), lens.end(), 0.0) / n;
  std::sort(lens.begin(), lens.end());
  const std::size_t m = lens.size() / 2;
  st.asr_len_median = lens.size() % 2 ? lens[m] : 0.5 * (lens[m - 1] + lens[m]);
  st.zero_asr_fraction = static_cast<double>(zero) / n;
  st.wpm_mean = wpm_n ? wpm_sum / static_cast<double>(wpm_n) : 0.0;
  st.caption_len_mean = cap_sum / n;
  st.segments_per_video_mean = n / static_cast<double>(corpus.videos.size());
  return st;
}

// ---------------------------------------------------------------------------

Vocabulary::Vocabulary() : id_to_word_{"<pad>", "<unk>", "<s>", "</s>"} {
  for (int i = 0; i < kNumReserved; ++i) word_to_id_[id_to_word_[i]] = i;
}

Vocabulary Vocabulary::from_token_lists(std::span<const Tokens* const> lists, int min_count) {
  std::map<std::string, int> counts;
  for (const auto* toks : lists)
    for (const auto& t : *toks) ++counts[t];
  Vocabulary v;
  v.min_count_ = min_count;
  for (const auto& [w, c] : counts) {
    if (c < min_count || v.word_to_id_.count(w)) continue;
    v.word_to_id_[w] = static_cast<int>(v.id_to_word_.size());
    v.id_to_word_.push_back(w);
  }
  if (v.size() == kNumReserved) {
    throw ValidationError("vocabulary is empty: no word occurs at least " + std::to_string(min_count) +
                          " times");
  }
  return v;
}

Vocabulary Vocabulary::build(std::span<const Segment* const> train_segments, int min_count) {
  if (train_segments.empty()) throw ValidationError("build_vocabulary: no training segments");
  std::vector<const Tokens*> lists;
  lists.reserve(train_segments.size());
  for (const auto* s : train_segments) lists.push_back(&s->caption.tokens);
  return from_token_lists(lists, min_count);
}

int Vocabulary::id(const std::string& word) const {
  auto it = word_to_id_.find(word);
  return it == word_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::word(int id) const { return id_to_word_.at(static_cast<std::size_t>(id)); }

std::vector<int> Vocabulary::encode(const Tokens& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

// ---------------------------------------------------------------------------

std::vector<FoldSplit> make_folds(std::vector<std::string> ids, int num_folds, std::uint64_t seed) {
  if (num_folds < 1) throw ConfigError("make_folds: J must be >= 1");
  if (ids.size() < 3) throw ValidationError("make_folds: need at least 3 videos, got " + std::to_string(ids.size()));
  std::sort(ids.begin(), ids.end());
  const std::size_t n = ids.size();
  const std::size_t n_holdout = std::max<std::size_t>(1, n / 10);
  std::mt19937_64 rng(seed);
  std::vector<FoldSplit> folds;
  for (int j = 0; j < num_folds; ++j) {
    auto perm = ids;
    std::shuffle(perm.begin(), perm.end(), rng);
    FoldSplit f;
    f.fold_index = j;
    f.seed = seed;
    f.test_ids.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_holdout));
    f.dev_ids.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_holdout),
                     perm.begin() + static_cast<std::ptrdiff_t>(2 * n_holdout));
    f.train_ids.assign(perm.begin() + static_cast<std::ptrdiff_t>(2 * n_holdout), perm.end());
    std::sort(f.train_ids.begin(), f.train_ids.end());
    std::sort(f.dev_ids.begin(), f.dev_ids.end());
    std::sort(f.test_ids.begin(), f.test_ids.end());
    folds.push_back(std::move(f));
  }
  return folds;
}

std::vector<FoldSplit> make_folds(const Corpus& corpus, int num_folds, std::uint64_t seed) {
  std::vector<std::string> ids;
  for (const auto& v : corpus.videos) ids.push_back(v.video_id);
  return make_folds(std::move(ids), num_folds, seed);
}

std::string folds_to_json(const std::vector<FoldSplit>& folds, std::uint64_t seed) {
  json j;
  j["seed"] = seed;
  j["J"] = folds.size();
  j["folds"] = json::array();
  for (const auto& f : folds) {
    j["folds"].push_back({{"train", f.train_ids}, {"dev", f.dev_ids}, {"test", f.test_ids}});
  }
  return j.dump(2);
}

std::vector<FoldSplit> folds_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    const auto seed = j.at("seed").get<std::uint64_t>();
    std::vector<FoldSplit> out;
    int idx = 0;
    for (const auto& jf : j.at("folds")) {
      FoldSplit f;
      f.fold_index = idx++;
      f.seed = seed;
      f.train_ids = jf.at("train").get<std::vector<std::string>>();
      f.dev_ids = jf.at("dev").get<std::vector<std::string>>();
      f.test_ids = jf.at("test").get<std::vector<std::string>>();
      out.push_back(std::move(f));
    }
    return out;
  } catch (const json::exception& e) {
    throw ParseError(std::string("splits file: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

Tokens truncate_tokens(const Tokens& tokens, std::size_t max_tokens) {
  if (tokens.size() <= max_tokens) return tokens;
  return Tokens(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(max_tokens));
}

PreparedExample preprocess(const Segment& segment, const Vocabulary& vocab, std::size_t max_input_tokens) {
  PreparedExample ex;
  ex.input_ids = vocab.encode(truncate_tokens(segment.asr.tokens, max_input_tokens));
  ex.caption_ids.push_back(Vocabulary::kBos);
  for (int id : vocab.encode(segment.caption.tokens)) ex.caption_ids.push_back(id);
  ex.caption_ids.push_back(Vocabulary::kEos);
  return ex;
}

}  // namespace vidcap
