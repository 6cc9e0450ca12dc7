#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "vidcap/training.hpp"

namespace vidcap {

// Binary model file: "CFCK", u32 version, u32 length + JSON header (hparams,
// modality, feature_dim, vocabulary), u32 block count, then per block u32
// name length, name, u32 rows, u32 cols and rows*cols little-endian f64.
constexpr std::uint32_t kCheckpointVersion = 1;

void save_model(const TransformerModel& model, const std::filesystem::path& path);
std::unique_ptr<TransformerModel> load_model(const std::filesystem::path& path);

// {seed, modality, cells:[{hparams, error, checkpoints:[{step, dev_rouge_l}], best_step}], best_cell}
std::string run_manifest_json(const GridResult& grid, Modality modality, std::uint64_t seed);

}  // namespace vidcap
