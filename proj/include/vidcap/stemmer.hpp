#pragma once

#include <string>

namespace vidcap {

// Porter (1980) suffix-stripping stemmer for lowercase ASCII words.
std::string porter_stem(const std::string& word);

}  // namespace vidcap
