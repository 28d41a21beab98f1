#include "sosbench/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <tuple>

#include "sosbench/errors.hpp"

namespace sosbench::analysis {

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

namespace {

double quantile(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  double h = p * static_cast<double>(n - 1);
  std::size_t lo = static_cast<std::size_t>(std::floor(h));
  std::size_t hi = std::min(lo + 1, n - 1);
  double frac = h - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

DistStats dist_stats(std::vector<double> values) {
  if (values.empty()) throw EmptyInputError("dist_stats: no values");
  std::sort(values.begin(), values.end());
  DistStats s;
  s.n = values.size();
  double sum = 0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  double ss = 0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.variance = ss / static_cast<double>(s.n);
  s.min = values.front();
  s.max = values.back();
  s.q1 = quantile(values, 0.25);
  s.median = quantile(values, 0.5);
  s.q3 = quantile(values, 0.75);
  double iqr = s.q3 - s.q1;
  double lo = s.q1 - 1.5 * iqr, hi = s.q3 + 1.5 * iqr;
  for (double v : values)
    if (v < lo || v > hi) s.outliers.push_back(v);
  return s;
}

std::map<GroupKey, DistStats> aggregate(const std::vector<ScoredRecord>& records,
                                        const GroupLevel& level) {
  std::map<GroupKey, std::vector<double>> buckets;
  for (const auto& r : records) {
    GroupKey key;
    key.model = r.model;
    key.language = r.language;
    key.region = r.region;
    if (level.by_attribute) key.attribute = r.attribute;
    if (level.by_status) key.status = r.status;
    if (level.by_gender) key.gender = r.gender;
    if (level.by_identity) key.identity_id = r.identity_id;
    buckets[key].push_back(r.value);
  }
  std::map<GroupKey, DistStats> out;
  for (auto& [key, values] : buckets) out.emplace(key, dist_stats(std::move(values)));
  return out;
}

std::vector<IntersectionalDiff> intersectional_diffs(
    const std::vector<ScoredRecord>& records, Gender contrast_a, Gender contrast_b) {
  // attribute -> (model, identity) -> per-gender running sums
  struct CellSums {
    double sum_a = 0, sum_b = 0;
    std::size_t n_a = 0, n_b = 0;
  };
  std::map<SensitiveAttribute, std::map<std::pair<std::string, std::string>, CellSums>>
      cells;
  for (const auto& r : records) {
    if (r.gender != contrast_a && r.gender != contrast_b) continue;
    auto& c = cells[r.attribute][{r.model, r.identity_id}];
    if (r.gender == contrast_a) {
      c.sum_a += r.value;
      ++c.n_a;
    } else {
      c.sum_b += r.value;
      ++c.n_b;
    }
  }
  std::vector<IntersectionalDiff> out;
  for (const auto& [attr, by_cell] : cells) {
    IntersectionalDiff d;
    d.attribute = attr;
    d.contrast_a = contrast_a;
    d.contrast_b = contrast_b;
    std::vector<double> diffs;
    for (const auto& [cell, sums] : by_cell) {
      if (sums.n_a == 0 || sums.n_b == 0) {
        ++d.n_skipped;
        continue;
      }
      diffs.push_back(sums.sum_a / static_cast<double>(sums.n_a) -
                      sums.sum_b / static_cast<double>(sums.n_b));
    }
    d.n_cells = diffs.size();
    if (!diffs.empty()) {
      d.max_diff = *std::max_element(diffs.begin(), diffs.end());
      double sum = 0;
      for (double v : diffs) sum += v;
      d.mean_diff = sum / static_cast<double>(diffs.size());
      double ss = 0;
      for (double v : diffs) ss += (v - d.mean_diff) * (v - d.mean_diff);
      d.variance = ss / static_cast<double>(diffs.size());
    }
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<RankedIdentity> top_biased_identities(const std::vector<ScoredRecord>& records,
                                                  SensitiveAttribute attribute,
                                                  const std::string& region,
                                                  std::size_t k) {
  if (k < 1) throw EmptyInputError("top_biased_identities: k must be >= 1");
  struct Acc {
    double sum = 0;
    std::size_t n = 0;
    GroupStatus status{};
  };
  std::map<std::string, Acc> by_identity;
  for (const auto& r : records) {
    if (r.attribute != attribute || r.region != region) continue;
    auto& a = by_identity[r.identity_id];
    a.sum += r.value;
    ++a.n;
    a.status = r.status;
  }
  std::vector<RankedIdentity> ranked;
  for (const auto& [id, acc] : by_identity)
    ranked.push_back({id, acc.sum / static_cast<double>(acc.n), acc.status});
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.mean_score != b.mean_score) return a.mean_score > b.mean_score;
    return a.identity_id < b.identity_id;
  });
  if (ranked.size() > k) ranked.resize(k);
  return ranked;
}

Heatmap refugee_heatmap(const std::vector<ScoredRecord>& records,
                        const std::string& region, Gender gender) {
  struct Acc {
    double sum = 0;
    std::size_t n = 0;
  };
  std::map<std::pair<std::string, std::string>, Acc> cells;  // (model, identity)
  std::set<std::string> models, identities;
  for (const auto& r : records) {
    if (r.region != region || r.gender != gender) continue;
    // Refugee groups plus the national dominant groups of the region.
    bool relevant = r.attribute == SensitiveAttribute::kRefugee ||
                    r.status == GroupStatus::kDominant;
    if (!relevant) continue;
    auto& a = cells[{r.model, r.identity_id}];
    a.sum += r.value;
    ++a.n;
    models.insert(r.model);
    identities.insert(r.identity_id);
  }
  Heatmap hm;
  hm.models.assign(models.begin(), models.end());
  hm.identities.assign(identities.begin(), identities.end());
  for (const auto& m : hm.models) {
    std::vector<std::optional<double>> row;
    for (const auto& id : hm.identities) {
      auto it = cells.find({m, id});
      if (it == cells.end() || it->second.n == 0)
        row.push_back(std::nullopt);
      else
        row.push_back(it->second.sum / static_cast<double>(it->second.n));
    }
    hm.cells.push_back(std::move(row));
  }
  return hm;
}

namespace {

std::string opt_attr(const std::optional<SensitiveAttribute>& a) {
  return a ? to_string(*a) : "";
}

}  // namespace

void write_aggregate_csv(const std::map<GroupKey, DistStats>& groups,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(path + ": cannot write");
  out << "model,language,region,attribute,status,gender,identity_id,"
         "n,mean,variance,min,q1,median,q3,max,n_outliers\n";
  for (const auto& [key, st] : groups) {
    out << key.model << ',' << key.language << ',' << key.region << ','
        << opt_attr(key.attribute) << ',' << (key.status ? to_string(*key.status) : "")
        << ',' << (key.gender ? to_string(*key.gender) : "") << ','
        << (key.identity_id ? *key.identity_id : "") << ',' << st.n << ','
        << format_double(st.mean) << ',' << format_double(st.variance) << ','
        << format_double(st.min) << ',' << format_double(st.q1) << ','
        << format_double(st.median) << ',' << format_double(st.q3) << ','
        << format_double(st.max) << ',' << st.outliers.size() << '\n';
  }
}

void write_intersectional_csv(const std::vector<IntersectionalDiff>& diffs,
                              const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(path + ": cannot write");
  out << "attribute,contrast_a,contrast_b,n_cells,n_skipped,max_diff,mean_diff,variance\n";
  for (const auto& d : diffs) {
    out << to_string(d.attribute) << ',' << to_string(d.contrast_a) << ','
        << to_string(d.contrast_b) << ',' << d.n_cells << ',' << d.n_skipped << ','
        << format_double(d.max_diff) << ',' << format_double(d.mean_diff) << ','
        << format_double(d.variance) << '\n';
  }
}

void write_top_identities_csv(
    const std::vector<std::tuple<SensitiveAttribute, std::string, RankedIdentity>>& rows,
    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(path + ": cannot write");
  out << "attribute,region,identity_id,mean_score,status\n";
  for (const auto& [attr, region, ri] : rows) {
    out << to_string(attr) << ',' << region << ',' << ri.identity_id << ','
        << format_double(ri.mean_score) << ',' << to_string(ri.status) << '\n';
  }
}

void write_heatmap_csv(const Heatmap& hm, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(path + ": cannot write");
  out << "model";
  for (const auto& id : hm.identities) out << ',' << id;
  out << '\n';
  for (std::size_t r = 0; r < hm.models.size(); ++r) {
    out << hm.models[r];
    for (const auto& cell : hm.cells[r])
      out << ',' << (cell ? format_double(*cell) : "NA");
    out << '\n';
  }
}

}  // namespace sosbench::analysis
