#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sosbench/registry.hpp"

namespace sosbench::analysis {

// One scored record at the finest granularity the dumps provide.
struct ScoredRecord {
  std::string model;
  LanguageCode language;
  std::string region;
  SensitiveAttribute attribute{};
  GroupStatus status{};
  Gender gender{};
  std::string identity_id;
  double value = 0;
};

// Which dimensions a grouping keeps, beyond the always-present
// (model, language, region) prefix.
struct GroupLevel {
  bool by_attribute = false;
  bool by_status = false;
  bool by_gender = false;
  bool by_identity = false;
};

struct GroupKey {
  std::string model;
  LanguageCode language;
  std::string region;
  std::optional<SensitiveAttribute> attribute;
  std::optional<GroupStatus> status;
  std::optional<Gender> gender;
  std::optional<std::string> identity_id;

  auto operator<=>(const GroupKey&) const = default;
};

struct DistStats {
  std::size_t n = 0;
  double mean = 0;
  double variance = 0;  // population
  double min = 0;
  double q1 = 0;
  double median = 0;
  double q3 = 0;
  double max = 0;
  std::vector<double> outliers;  // beyond 1.5*IQR whiskers
};

// Quantiles by linear interpolation on the sorted sample (inclusive,
// h = (n-1)p); median of an odd-length list is the middle element exactly.
DistStats dist_stats(std::vector<double> values);

std::map<GroupKey, DistStats> aggregate(const std::vector<ScoredRecord>& records,
                                        const GroupLevel& level);

struct IntersectionalDiff {
  SensitiveAttribute attribute{};
  Gender contrast_a{};
  Gender contrast_b{};
  std::size_t n_cells = 0;    // (model, identity) cells with both genders
  std::size_t n_skipped = 0;  // cells missing one gender
  double max_diff = 0;
  double mean_diff = 0;
  double variance = 0;  // population
};

// Statistics of score(a) - score(b) over (model, identity) cells, one row
// per attribute. Cell score is the mean over that cell's records of the
// respective gender.
std::vector<IntersectionalDiff> intersectional_diffs(
    const std::vector<ScoredRecord>& records, Gender contrast_a, Gender contrast_b);

struct RankedIdentity {
  std::string identity_id;
  double mean_score = 0;  // mean across models
  GroupStatus status{};
};

// Identities of (attribute, region) ranked by mean score across models,
// descending; ties broken lexicographically by id.
std::vector<RankedIdentity> top_biased_identities(const std::vector<ScoredRecord>& records,
                                                  SensitiveAttribute attribute,
                                                  const std::string& region, std::size_t k);

struct Heatmap {
  std::vector<std::string> models;      // row order
  std::vector<std::string> identities;  // column order
  // cells[row][col]; nullopt marks a missing cell, never zero.
  std::vector<std::vector<std::optional<double>>> cells;
};

// model x identity mean-score matrix over refugee-attribute identities plus
// the region's dominant (national) identities, filtered to one gender.
Heatmap refugee_heatmap(const std::vector<ScoredRecord>& records,
                        const std::string& region, Gender gender = Gender::kMale);

// Tidy long-format CSV writers (UTF-8, header row).
void write_aggregate_csv(const std::map<GroupKey, DistStats>& groups,
                         const std::string& path);
void write_intersectional_csv(const std::vector<IntersectionalDiff>& diffs,
                              const std::string& path);
void write_top_identities_csv(
    const std::vector<std::tuple<SensitiveAttribute, std::string, RankedIdentity>>& rows,
    const std::string& path);
void write_heatmap_csv(const Heatmap& hm, const std::string& path);

// Shortest round-trip decimal formatting; the one float format used in all
// emitted files.
std::string format_double(double v);

}  // namespace sosbench::analysis
