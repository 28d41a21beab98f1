#include <random>

#include "doctest.h"
#include "sosbench/analysis.hpp"
#include "sosbench/errors.hpp"
#include "test_util.hpp"

using namespace sosbench;
using namespace sosbench::analysis;

namespace {

ScoredRecord rec(const std::string& model, const std::string& identity, Gender g,
                 double value, SensitiveAttribute attr = SensitiveAttribute::kEthnicity,
                 GroupStatus status = GroupStatus::kMarginalized,
                 const std::string& region = "uk", const std::string& lang = "en-uk") {
  return ScoredRecord{model, lang, region, attr, status, g, identity, value};
}

}  // namespace

TEST_CASE("dist_stats on a tiny sample") {
  auto s = dist_stats({0.2, 0.4});
  CHECK(s.n == 2);
  CHECK(s.mean == doctest::Approx(0.3));
  CHECK(s.variance == doctest::Approx(0.01));  // population variance
  CHECK(s.min == doctest::Approx(0.2));
  CHECK(s.max == doctest::Approx(0.4));
  CHECK(s.median == doctest::Approx(0.3));
  CHECK(s.outliers.empty());

  auto one = dist_stats({5.0});
  CHECK(one.n == 1);
  CHECK(one.variance == 0.0);
  CHECK(one.q1 == 5.0);
  CHECK(one.q3 == 5.0);

  CHECK_THROWS_AS(dist_stats({}), EmptyInputError);
}

TEST_CASE("dist_stats quantiles interpolate on the sorted sample") {
  // h = (n-1)p: for n=5, q1 sits exactly on index 1.
  auto s = dist_stats({4, 1, 3, 2, 5});
  CHECK(s.q1 == doctest::Approx(2.0));
  CHECK(s.median == doctest::Approx(3.0));
  CHECK(s.q3 == doctest::Approx(4.0));
  // n=4: q1 interpolates between the first two order statistics.
  s = dist_stats({1, 2, 3, 4});
  CHECK(s.q1 == doctest::Approx(1.75));
  CHECK(s.median == doctest::Approx(2.5));
  CHECK(s.q3 == doctest::Approx(3.25));
}

TEST_CASE("median of an odd-length sample is the middle element") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t n = 1 + 2 * (rng() % 20);
    std::vector<double> values(n);
    for (auto& v : values) v = dist(rng);
    auto s = dist_stats(values);
    std::sort(values.begin(), values.end());
    CHECK(s.median == values[n / 2]);
  }
}

TEST_CASE("dist_stats flags points beyond the 1.5 IQR whiskers") {
  auto s = dist_stats({1, 2, 3, 4, 100});
  REQUIRE(s.outliers.size() == 1);
  CHECK(s.outliers[0] == 100.0);
}

TEST_CASE("aggregate groups by the requested dimensions") {
  std::vector<ScoredRecord> records = {
      rec("m1", "a", Gender::kMale, 0.2),
      rec("m1", "a", Gender::kFemale, 0.4),
      rec("m1", "b", Gender::kMale, 0.6),
      rec("m2", "a", Gender::kMale, 0.8),
  };
  auto coarse = aggregate(records, GroupLevel{});
  REQUIRE(coarse.size() == 2);  // one group per model
  GroupKey k1{"m1", "en-uk", "uk", {}, {}, {}, {}};
  REQUIRE(coarse.count(k1) == 1);
  CHECK(coarse.at(k1).n == 3);
  CHECK(coarse.at(k1).mean == doctest::Approx(0.4));

  auto fine = aggregate(records, GroupLevel{true, true, true, true});
  CHECK(fine.size() == 4);
  for (const auto& [key, st] : fine) CHECK(st.n == 1);
}

TEST_CASE("coarse aggregation equals re-aggregating fine groups") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  std::vector<ScoredRecord> records;
  const SensitiveAttribute attrs[] = {SensitiveAttribute::kGender,
                                      SensitiveAttribute::kReligion};
  for (int i = 0; i < 400; ++i) {
    records.push_back(rec("m" + std::to_string(rng() % 3),
                          "id" + std::to_string(rng() % 5),
                          kAllGenders[rng() % 3], dist(rng), attrs[rng() % 2],
                          rng() % 2 ? GroupStatus::kMarginalized : GroupStatus::kDominant));
  }
  auto coarse = aggregate(records, GroupLevel{});
  auto fine = aggregate(records, GroupLevel{true, true, true, true});
  // Recombine fine means weighted by n; must match the coarse mean exactly
  // up to float noise.
  std::map<GroupKey, std::pair<double, std::size_t>> acc;
  for (const auto& [key, st] : fine) {
    GroupKey coarse_key{key.model, key.language, key.region, {}, {}, {}, {}};
    auto& a = acc[coarse_key];
    a.first += st.mean * static_cast<double>(st.n);
    a.second += st.n;
  }
  REQUIRE(acc.size() == coarse.size());
  for (const auto& [key, a] : acc) {
    REQUIRE(coarse.count(key) == 1);
    CHECK(coarse.at(key).mean ==
          doctest::Approx(a.first / static_cast<double>(a.second)).epsilon(1e-12));
    CHECK(coarse.at(key).n == a.second);
  }
}

TEST_CASE("intersectional diffs per attribute") {
  std::vector<ScoredRecord> records = {
      rec("m1", "a", Gender::kFemale, 1.5),
      rec("m1", "a", Gender::kFemale, 0.5),  // cell mean 1.0
      rec("m1", "a", Gender::kMale, 0.0),    // diff +1
      rec("m1", "b", Gender::kFemale, 0.0),
      rec("m1", "b", Gender::kMale, 1.0),    // diff -1
      rec("m1", "c", Gender::kFemale, 9.0),  // male side missing, skipped
  };
  auto diffs = intersectional_diffs(records, Gender::kFemale, Gender::kMale);
  REQUIRE(diffs.size() == 1);
  const auto& d = diffs[0];
  CHECK(d.attribute == SensitiveAttribute::kEthnicity);
  CHECK(d.n_cells == 2);
  CHECK(d.n_skipped == 1);
  CHECK(d.max_diff == doctest::Approx(1.0));
  CHECK(d.mean_diff == doctest::Approx(0.0));
  CHECK(d.variance == doctest::Approx(1.0));
}

TEST_CASE("top biased identities rank by mean, ties lexicographic") {
  std::vector<ScoredRecord> records = {
      rec("m1", "zeta", Gender::kMale, 0.5),
      rec("m2", "zeta", Gender::kMale, 0.7),  // mean 0.6
      rec("m1", "alpha", Gender::kMale, 0.6),
      rec("m2", "alpha", Gender::kMale, 0.6),  // mean 0.6, ties with zeta
      rec("m1", "mid", Gender::kMale, 0.9),
      rec("m1", "other_region", Gender::kMale, 5.0, SensitiveAttribute::kEthnicity,
          GroupStatus::kMarginalized, "de"),
      rec("m1", "other_attr", Gender::kMale, 5.0, SensitiveAttribute::kReligion),
  };
  auto top = top_biased_identities(records, SensitiveAttribute::kEthnicity, "uk", 2);
  REQUIRE(top.size() == 2);
  CHECK(top[0].identity_id == "mid");
  CHECK(top[0].mean_score == doctest::Approx(0.9));
  CHECK(top[1].identity_id == "alpha");  // beats zeta lexicographically

  auto all = top_biased_identities(records, SensitiveAttribute::kEthnicity, "uk", 99);
  CHECK(all.size() == 3);
  CHECK_THROWS_AS(top_biased_identities(records, SensitiveAttribute::kEthnicity, "uk", 0),
                  EmptyInputError);
}

TEST_CASE("refugee heatmap includes nationals and marks missing cells") {
  std::vector<ScoredRecord> records = {
      rec("m1", "syrian", Gender::kMale, 0.3, SensitiveAttribute::kRefugee),
      rec("m2", "syrian", Gender::kMale, 0.5, SensitiveAttribute::kRefugee),
      rec("m1", "german", Gender::kMale, 0.1, SensitiveAttribute::kEthnicity,
          GroupStatus::kDominant),
      // wrong gender, must not leak into the male heatmap
      rec("m2", "german", Gender::kFemale, 0.9, SensitiveAttribute::kEthnicity,
          GroupStatus::kDominant),
  };
  auto hm = refugee_heatmap(records, "uk", Gender::kMale);
  REQUIRE(hm.models == std::vector<std::string>{"m1", "m2"});
  REQUIRE(hm.identities == std::vector<std::string>{"german", "syrian"});
  REQUIRE(hm.cells.size() == 2);
  REQUIRE(hm.cells[0][0].has_value());
  CHECK(*hm.cells[0][0] == doctest::Approx(0.1));
  REQUIRE(hm.cells[0][1].has_value());
  CHECK(*hm.cells[0][1] == doctest::Approx(0.3));
  CHECK_FALSE(hm.cells[1][0].has_value());  // m2 never scored german males
  REQUIRE(hm.cells[1][1].has_value());
  CHECK(*hm.cells[1][1] == doctest::Approx(0.5));
}

TEST_CASE("csv writers emit stable headers and NA markers") {
  testutil::TempDir tmp("analysis_csv");
  std::vector<ScoredRecord> records = {rec("m1", "a", Gender::kMale, 0.25)};
  auto groups = aggregate(records, GroupLevel{});
  auto agg_path = tmp.sub("agg.csv");
  write_aggregate_csv(groups, agg_path);
  std::string agg = testutil::slurp(agg_path);
  CHECK(agg.find("model,language,region,attribute,") == 0);
  CHECK(agg.find("m1,en-uk,uk") != std::string::npos);
  CHECK(agg.find("0.25") != std::string::npos);

  std::vector<ScoredRecord> hm_records = {
      rec("m1", "syrian", Gender::kMale, 0.3, SensitiveAttribute::kRefugee),
      rec("m2", "other", Gender::kMale, 0.4, SensitiveAttribute::kRefugee),
  };
  auto hm_path = tmp.sub("hm.csv");
  write_heatmap_csv(refugee_heatmap(hm_records, "uk"), hm_path);
  std::string hm = testutil::slurp(hm_path);
  CHECK(hm.find("NA") != std::string::npos);  // missing cells, never zero

  // Writing the same data twice is byte-identical.
  auto again = tmp.sub("agg2.csv");
  write_aggregate_csv(groups, again);
  CHECK(testutil::slurp(again) == agg);
}

TEST_CASE("format_double round-trips shortest decimal") {
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(0.0) == "0");
  CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
  CHECK(std::stod(format_double(0.1 + 0.2)) == 0.1 + 0.2);
}
