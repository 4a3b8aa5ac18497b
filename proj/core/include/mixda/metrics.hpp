#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "mixda/errors.hpp"

namespace mixda {

struct MetricReport {
  std::string name;
  double value = 0.0;
  std::map<int, int> support;  // gold count per class (classification only)
};

double accuracy(std::span<const int> preds, std::span<const int> golds);

// F1 from globally pooled TP/FP/FN counts; equals accuracy for single-label
// multi-class predictions.
double micro_f1(std::span<const int> preds, std::span<const int> golds);

// Unweighted mean of per-class F1 over classes present in preds or golds.
// A class with zero precision and recall contributes 0.
double macro_f1(std::span<const int> preds, std::span<const int> golds);

// Sample Pearson correlation; throws DataError when either input is constant
// or shorter than 2.
double pearson(std::span<const double> x, std::span<const double> y);

struct SeedAggregate {
  std::vector<double> values;
  double mean = 0.0;
  double stddev = 0.0;  // population (divisor n)
};

SeedAggregate aggregate_seeds(const std::vector<double>& values);

// "52.2±4.9": percent with one decimal.
std::string format_mean_std_percent(const SeedAggregate& agg);

std::map<int, int> class_support(std::span<const int> golds);

}  // namespace mixda
