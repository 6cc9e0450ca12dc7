#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace vidcap {

using Tokens = std::vector<std::string>;

// Lowercases, splits on whitespace and emits every punctuation character as
// its own token. Never produces empty tokens.
Tokens tokenize(std::string_view text);

// Applies tokenize() to every element and concatenates the results.
Tokens normalize_tokens(const Tokens& raw);

std::string join(const Tokens& tokens, std::string_view sep = " ");

// 64-bit FNV-1a. Used for seed derivation, so it must be stable across
// platforms and runs (std::hash is not).
std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ULL);

// Mixes a base seed with a label into an independent stream seed.
std::uint64_t derive_seed(std::uint64_t base, std::string_view label);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

}  // namespace vidcap
