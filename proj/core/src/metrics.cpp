#include "mixda/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

namespace mixda {

namespace {

void require_paired(std::span<const int> preds, std::span<const int> golds, const char* what) {
  if (preds.size() != golds.size())
    throw DataError(std::string(what) + ": " + std::to_string(preds.size()) +
                    " predictions vs " + std::to_string(golds.size()) + " golds");
  if (preds.empty()) throw DataError(std::string(what) + ": empty inputs");
}

}  // namespace

double accuracy(std::span<const int> preds, std::span<const int> golds) {
  require_paired(preds, golds, "accuracy");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i] == golds[i]) ++correct;
  return static_cast<double>(correct) / preds.size();
}

double micro_f1(std::span<const int> preds, std::span<const int> golds) {
  require_paired(preds, golds, "micro_f1");
  std::set<int> classes(preds.begin(), preds.end());
  classes.insert(golds.begin(), golds.end());
  std::int64_t tp = 0, fp = 0, fn = 0;
  for (int c : classes) {
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const bool p = preds[i] == c, g = golds[i] == c;
      if (p && g) ++tp;
      else if (p) ++fp;
      else if (g) ++fn;
    }
  }
  const double denom = 2.0 * tp + fp + fn;
  return denom == 0.0 ? 0.0 : 2.0 * tp / denom;
}

double macro_f1(std::span<const int> preds, std::span<const int> golds) {
  require_paired(preds, golds, "macro_f1");
  std::set<int> classes(preds.begin(), preds.end());
  classes.insert(golds.begin(), golds.end());
  double total = 0.0;
  for (int c : classes) {
    std::int64_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const bool p = preds[i] == c, g = golds[i] == c;
      if (p && g) ++tp;
      else if (p) ++fp;
      else if (g) ++fn;
    }
    const double denom = 2.0 * tp + fp + fn;
    total += denom == 0.0 ? 0.0 : 2.0 * tp / denom;
  }
  return total / static_cast<double>(classes.size());
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw DataError("pearson: length mismatch " + std::to_string(x.size()) + " vs " +
                    std::to_string(y.size()));
  if (x.size() < 2) throw DataError("pearson: need at least 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw DataError("pearson: correlation undefined for a constant vector");
  return sxy / std::sqrt(sxx * syy);
}

SeedAggregate aggregate_seeds(const std::vector<double>& values) {
  if (values.empty()) throw DataError("aggregate_seeds: no values");
  SeedAggregate agg;
  agg.values = values;
  for (double v : values) agg.mean += v;
  agg.mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - agg.mean) * (v - agg.mean);
  agg.stddev = std::sqrt(var / static_cast<double>(values.size()));
  return agg;
}

std::string format_mean_std_percent(const SeedAggregate& agg) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.1f±%.1f", agg.mean * 100.0, agg.stddev * 100.0);
  return buf;
}

std::map<int, int> class_support(std::span<const int> golds) {
  std::map<int, int> support;
  for (int g : golds) ++support[g];
  return support;
}

}  // namespace mixda
