#pragma once

#include <span>
#include <string>
#include <vector>

#include "hosdp/sdp.hpp"

namespace hosdp {

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Any zero denominator makes the affected statistic 0.
Prf prf(std::size_t correct, std::size_t predicted, std::size_t gold);

struct LabelCounts {
  std::string label;
  std::size_t gold = 0;
  std::size_t predicted = 0;
  std::size_t correct = 0;
};

struct F1Report {
  std::size_t sentences = 0;
  std::size_t gold = 0;
  std::size_t predicted = 0;
  std::size_t correct_unlabeled = 0;
  std::size_t correct_labeled = 0;
  std::vector<LabelCounts> per_label;  // sorted by label; empty unless requested

  Prf labeled() const { return prf(correct_labeled, predicted, gold); }
  Prf unlabeled() const { return prf(correct_unlabeled, predicted, gold); }
};

// ROOT arcs are ordinary edges from node 0 and are counted. Throws
// AlignmentError naming the first sentence whose length or forms differ.
F1Report lf1(const Corpus& predicted, const Corpus& gold, bool per_label = false);
F1Report lf1_graphs(std::span<const SemanticGraph> predicted, std::span<const SemanticGraph> gold,
                    bool per_label = false);

// Unweighted mean of labeled F1; throws ConfigError on an empty list.
double macro_average(std::span<const F1Report> reports);

struct LengthBucket {
  std::size_t lo = 0;  // inclusive token counts
  std::size_t hi = 0;
  F1Report report;
};

// Sentences grouped by token count into [1, width], [width+1, 2*width], ...;
// only non-empty buckets are returned, in ascending order.
std::vector<LengthBucket> length_buckets(const Corpus& predicted, const Corpus& gold,
                                         std::size_t width = 10);

std::string format_report(const F1Report& report);
std::string format_report_tsv(const F1Report& report);
std::string format_buckets_tsv(const std::vector<LengthBucket>& buckets);

}  // namespace hosdp
