#include "vidcap/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "vidcap/error.hpp"

namespace vidcap {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_f64(std::string& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

struct Reader {
  const std::string& buf;
  std::size_t at = 0;
  std::string path;

  void need(std::size_t n) {
    if (at + n > buf.size()) throw ParseError("checkpoint " + path + ": truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[at + i])) << (8 * i);
    at += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[at + i])) << (8 * i);
    at += 8;
    return std::bit_cast<double>(v);
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf.substr(at, n);
    at += n;
    return s;
  }
};

}  // namespace

void save_model(const TransformerModel& model, const std::filesystem::path& path) {
  nlohmann::ordered_json h;
  h["hparams"] = nlohmann::json::parse(model.hparams().to_json());
  h["modality"] = modality_name(model.modality());
  h["feature_dim"] = model.feature_dim();
  h["vocab"] = std::vector<std::string>(model.vocab().words().begin(), model.vocab().words().end());
  const std::string header = h.dump();

  std::string out = "CFCK";
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(header.size()));
  out += header;
  put_u32(out, static_cast<std::uint32_t>(model.params().size()));
  for (const auto& p : model.params()) {
    put_u32(out, static_cast<std::uint32_t>(p.name.size()));
    out += p.name;
    put_u32(out, static_cast<std::uint32_t>(p.value.rows()));
    put_u32(out, static_cast<std::uint32_t>(p.value.cols()));
    for (Eigen::Index i = 0; i < p.value.size(); ++i) put_f64(out, p.value.data()[i]);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write checkpoint " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed for checkpoint " + path.string());
}

std::unique_ptr<TransformerModel> load_model(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint " + path.string());
  const std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Reader r{buf, 0, path.string()};
  if (r.bytes(4) != "CFCK") throw ParseError("checkpoint " + path.string() + ": bad magic");
  const auto version = r.u32();
  if (version != kCheckpointVersion)
    throw ParseError("checkpoint " + path.string() + ": unsupported version " + std::to_string(version));
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(r.bytes(r.u32()));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("checkpoint " + path.string() + ": bad header: " + e.what());
  }
  const HyperParams hp = HyperParams::from_json(h.at("hparams").dump());
  const Modality m = parse_modality(h.at("modality").get<std::string>());
  const auto words = h.at("vocab").get<std::vector<std::string>>();
  const Tokens* lists[] = {&words};
  Vocabulary vocab = Vocabulary::from_token_lists(lists, 1);
  auto model = std::make_unique<TransformerModel>(hp, m, std::move(vocab), h.at("feature_dim").get<std::size_t>());
  const auto blocks = r.u32();
  if (blocks != model->params().size()) throw ParseError("checkpoint " + path.string() + ": parameter count mismatch");
  for (std::uint32_t b = 0; b < blocks; ++b) {
    const std::string name = r.bytes(r.u32());
    auto& p = model->params().get(name);
    const auto rows = r.u32(), cols = r.u32();
    if (rows != p.value.rows() || cols != p.value.cols())
      throw ParseError("checkpoint " + path.string() + ": shape mismatch for " + name);
    for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = r.f64();
  }
  if (r.at != buf.size()) throw ParseError("checkpoint " + path.string() + ": trailing bytes");
  return model;
}

std::string run_manifest_json(const GridResult& grid, Modality modality, std::uint64_t seed) {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["modality"] = modality_name(modality);
  j["best_cell"] = grid.best_cell;
  auto cells = nlohmann::ordered_json::array();
  for (const auto& c : grid.cells) {
    nlohmann::ordered_json cj;
    cj["hparams"] = nlohmann::ordered_json::parse(c.hparams.to_json());
    cj["error"] = c.error;
    auto cks = nlohmann::ordered_json::array();
    for (const auto& ck : c.result.checkpoints) cks.push_back({{"step", ck.step}, {"dev_rouge_l", ck.dev_rouge_l}});
    cj["checkpoints"] = cks;
    cj["best_step"] = c.result.checkpoints.empty() ? 0 : c.result.checkpoints[c.result.best].step;
    cells.push_back(cj);
  }
  j["cells"] = cells;
  return j.dump(2) + "\n";
}

}  // namespace vidcap
