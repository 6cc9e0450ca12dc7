#include "vidcap/text.hpp"

#include <cctype>

namespace vidcap {

Tokens tokenize(std::string_view text) {
  Tokens out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush();
    } else if (std::ispunct(c) && c != '\'') {
      flush();
      out.emplace_back(1, static_cast<char>(c));
    } else {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  return out;
}

Tokens normalize_tokens(const Tokens& raw) {
  Tokens out;
  out.reserve(raw.size());
  for (const auto& t : raw) {
    for (auto& piece : tokenize(t)) out.push_back(std::move(piece));
  }
  return out;
}

std::string join(const Tokens& tokens, std::string_view sep) {
  std::string s;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) s.append(sep);
    s.append(tokens[i]);
  }
  return s;
}

std::uint64_t fnv1a(std::string_view s, std::uint64_t h) {
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {
// splitmix64 finalizer
std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::string_view label) {
  return mix(base ^ fnv1a(label));
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return mix(mix(base) + index);
}

}  // namespace vidcap
