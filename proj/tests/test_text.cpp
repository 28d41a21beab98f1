#include <random>

#include "doctest.h"
#include "sosbench/text.hpp"

using namespace sosbench::text;

TEST_CASE("normalize folds case and whitespace") {
  CHECK(normalize_text("  HaTeFul ") == "hateful");
  CHECK(normalize_text("a   b\t\tc") == "a b c");
  CHECK(normalize_text("") == "");
  CHECK(normalize_text("   ") == "");
}

TEST_CASE("normalize strips Arabic tatweel and diacritics") {
  CHECK(normalize_text("كـــلب") == "كلب");
  CHECK(normalize_text("مُحَمَّد") == "محمد");
}

TEST_CASE("aggressive Arabic folding is opt-in") {
  NormalizeOptions aggressive{.arabic_aggressive = true};
  CHECK(normalize_text("أسد") == "أسد");
  CHECK(normalize_text("أسد", aggressive) == "اسد");
  CHECK(normalize_text("مدرسة", aggressive) == "مدرسه");
}

TEST_CASE("normalize applies NFC") {
  // "é" as e + combining acute composes to the single code point.
  std::string decomposed = "caf\x65\xcc\x81";
  CHECK(normalize_text(decomposed) == "café");
}

TEST_CASE("normalize handles German casing") {
  CHECK(normalize_text("GROSSARTIG Übel") == "grossartig übel");
}

TEST_CASE("normalize is idempotent on random strings") {
  std::mt19937 rng(7);
  const std::string pool[] = {"Hate", "كـلب", "  ", "Übel", "مُدَرِّس", "x", "\t",
                              "CAFÉ", "e\xcc\x81", "ـ", "7"};
  for (int trial = 0; trial < 200; ++trial) {
    std::string s;
    int parts = 1 + static_cast<int>(rng() % 6);
    for (int i = 0; i < parts; ++i) s += pool[rng() % std::size(pool)];
    std::string once = normalize_text(s);
    CHECK(normalize_text(once) == once);
  }
}

TEST_CASE("code point helpers") {
  CHECK(cp_length("abc") == 3);
  CHECK(cp_length("كلب") == 3);
  CHECK(cp_substr("كلب أبيض", 4, 8) == "أبيض");
  CHECK(cp_erase("abcdef", 1, 3) == "adef");
  CHECK(to_u8(to_u32("سلام world")) == "سلام world");
}

TEST_CASE("split_words drops punctuation") {
  auto w = split_words("yes, and no.");
  REQUIRE(w.size() == 3);
  CHECK(w[0] == "yes");
  CHECK(w[1] == "and");
  CHECK(w[2] == "no");
  CHECK(split_words("!!!").empty());
}

TEST_CASE("tsv escaping round-trips") {
  std::mt19937 rng(11);
  const char pool[] = "ab\t\n\r\\cd";
  for (int trial = 0; trial < 300; ++trial) {
    std::string s;
    for (std::size_t i = 0; i < rng() % 12; ++i) s += pool[rng() % (sizeof(pool) - 1)];
    std::string esc = tsv_escape(s);
    CHECK(esc.find('\t') == std::string::npos);
    CHECK(esc.find('\n') == std::string::npos);
    CHECK(tsv_unescape(esc) == s);
  }
}

TEST_CASE("split_tsv keeps empty fields") {
  auto f = split_tsv("a\t\tb");
  REQUIRE(f.size() == 3);
  CHECK(f[1].empty());
}
