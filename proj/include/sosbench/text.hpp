#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sosbench::text {

// UTF-8 <-> UTF-32. All span arithmetic in this project is in code points.
std::u32string to_u32(std::string_view utf8);
std::string to_u8(std::u32string_view utf32);

// Number of code points in a UTF-8 string.
std::size_t cp_length(std::string_view utf8);

// Substring by code-point offsets [start, end).
std::string cp_substr(std::string_view utf8, std::size_t start, std::size_t end);

// The string with code points [start, end) removed.
std::string cp_erase(std::string_view utf8, std::size_t start, std::size_t end);

struct NormalizeOptions {
  // Aggressive Arabic folding: alef variants -> bare alef, ta-marbuta -> ha.
  // Tatweel and diacritic stripping is always on for Arabic-script text.
  bool arabic_aggressive = false;
};

// NFC, case folding for cased scripts, Arabic tatweel/diacritic stripping,
// whitespace collapsed to single spaces, trimmed. Total and idempotent.
std::string normalize_text(std::string_view raw, const NormalizeOptions& opts = {});

// Words of an already-normalized string, split on anything that is neither a
// letter nor a digit. Empty tokens dropped.
std::vector<std::string> split_words(std::string_view normalized);

// TSV field escaping: tab -> \t, newline -> \n, CR -> \r, backslash -> \\.
std::string tsv_escape(std::string_view raw);
std::string tsv_unescape(std::string_view escaped);

// Split one TSV line into fields (no quoting; fields are escaped as above
// but this does not unescape).
std::vector<std::string> split_tsv(std::string_view line);

// FNV-1a 64-bit over raw bytes; the project's stable hash.
std::uint64_t stable_hash(std::string_view bytes, std::uint64_t seed = 1469598103934665603ULL);

}  // namespace sosbench::text
