#include "hosdp/evaluator.hpp"

#include <cstdio>
#include <map>
#include <set>
#include <tuple>

#include "hosdp/error.hpp"

namespace hosdp {

Prf prf(std::size_t correct, std::size_t predicted, std::size_t gold) {
  Prf r;
  if (predicted) r.precision = static_cast<double>(correct) / static_cast<double>(predicted);
  if (gold) r.recall = static_cast<double>(correct) / static_cast<double>(gold);
  if (r.precision + r.recall > 0.0) r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

namespace {

void count_sentence(const SemanticGraph& pred, const SemanticGraph& gold, F1Report& report,
                    std::map<std::string, LabelCounts>* labels) {
  report.sentences += 1;
  report.gold += gold.edges().size();
  report.predicted += pred.edges().size();
  // Both edge lists are sorted by (head, dep, label) with unique pairs, so a
  // merge walk finds the shared pairs.
  const auto& p = pred.edges();
  const auto& g = gold.edges();
  std::size_t a = 0, b = 0;
  while (a < p.size() && b < g.size()) {
    auto pk = std::tie(p[a].head, p[a].dep);
    auto gk = std::tie(g[b].head, g[b].dep);
    if (pk < gk) {
      ++a;
    } else if (gk < pk) {
      ++b;
    } else {
      report.correct_unlabeled += 1;
      if (p[a].label == g[b].label) {
        report.correct_labeled += 1;
        if (labels) (*labels)[p[a].label].correct += 1;
      }
      ++a;
      ++b;
    }
  }
  if (labels) {
    for (const Edge& e : p) (*labels)[e.label].predicted += 1;
    for (const Edge& e : g) (*labels)[e.label].gold += 1;
  }
}

void finish_labels(std::map<std::string, LabelCounts>& labels, F1Report& report) {
  for (auto& [name, counts] : labels) {
    counts.label = name;
    report.per_label.push_back(counts);
  }
}

void check_aligned(const Corpus& predicted, const Corpus& gold) {
  if (predicted.size() != gold.size())
    throw AlignmentError("corpora differ in size: " + std::to_string(predicted.size()) +
                         " predicted vs " + std::to_string(gold.size()) + " gold sentences");
  for (std::size_t s = 0; s < gold.size(); ++s) {
    const auto& pt = predicted.items[s].sentence.tokens;
    const auto& gt = gold.items[s].sentence.tokens;
    bool same = pt.size() == gt.size();
    for (std::size_t i = 0; same && i < gt.size(); ++i) same = pt[i].form == gt[i].form;
    if (!same) throw AlignmentError("sentence " + std::to_string(s + 1) + " is not aligned");
  }
}

}  // namespace

F1Report lf1_graphs(std::span<const SemanticGraph> predicted, std::span<const SemanticGraph> gold,
                    bool per_label) {
  if (predicted.size() != gold.size())
    throw AlignmentError("graph lists differ in size: " + std::to_string(predicted.size()) +
                         " vs " + std::to_string(gold.size()));
  F1Report report;
  std::map<std::string, LabelCounts> labels;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    if (predicted[s].size() != gold[s].size())
      throw AlignmentError("sentence " + std::to_string(s + 1) + " is not aligned");
    count_sentence(predicted[s], gold[s], report, per_label ? &labels : nullptr);
  }
  if (per_label) finish_labels(labels, report);
  return report;
}

F1Report lf1(const Corpus& predicted, const Corpus& gold, bool per_label) {
  check_aligned(predicted, gold);
  F1Report report;
  std::map<std::string, LabelCounts> labels;
  for (std::size_t s = 0; s < gold.size(); ++s)
    count_sentence(predicted.items[s].graph, gold.items[s].graph, report,
                   per_label ? &labels : nullptr);
  if (per_label) finish_labels(labels, report);
  return report;
}

double macro_average(std::span<const F1Report> reports) {
  if (reports.empty()) throw ConfigError("macro_average needs at least one report");
  double total = 0.0;
  for (const auto& r : reports) total += r.labeled().f1;
  return total / static_cast<double>(reports.size());
}

std::vector<LengthBucket> length_buckets(const Corpus& predicted, const Corpus& gold,
                                         std::size_t width) {
  if (width == 0) throw ConfigError("bucket width must be positive");
  check_aligned(predicted, gold);
  std::map<std::size_t, LengthBucket> by_index;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    std::size_t n = gold.items[s].sentence.size();
    std::size_t idx = n == 0 ? 0 : (n - 1) / width;
    auto& b = by_index[idx];
    b.lo = idx * width + 1;
    b.hi = (idx + 1) * width;
    count_sentence(predicted.items[s].graph, gold.items[s].graph, b.report, nullptr);
  }
  std::vector<LengthBucket> out;
  for (auto& [idx, b] : by_index) out.push_back(std::move(b));
  return out;
}

namespace {

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

std::string format_report(const F1Report& r) {
  Prf l = r.labeled(), u = r.unlabeled();
  std::string out;
  out += "sentences " + std::to_string(r.sentences) + "  gold edges " + std::to_string(r.gold) +
         "  predicted edges " + std::to_string(r.predicted) + "\n";
  out += "labeled    P " + fixed(l.precision) + "  R " + fixed(l.recall) + "  F1 " + fixed(l.f1) +
         "  (correct " + std::to_string(r.correct_labeled) + ")\n";
  out += "unlabeled  P " + fixed(u.precision) + "  R " + fixed(u.recall) + "  F1 " + fixed(u.f1) +
         "  (correct " + std::to_string(r.correct_unlabeled) + ")\n";
  if (!r.per_label.empty()) {
    out += "per label:\n";
    for (const auto& c : r.per_label) {
      Prf p = prf(c.correct, c.predicted, c.gold);
      out += "  " + c.label + "  gold " + std::to_string(c.gold) + "  predicted " +
             std::to_string(c.predicted) + "  F1 " + fixed(p.f1) + "\n";
    }
  }
  return out;
}

std::string format_report_tsv(const F1Report& r) {
  Prf l = r.labeled(), u = r.unlabeled();
  std::string out =
      "sentences\tgold\tpredicted\tcorrect_unlabeled\tcorrect_labeled\tUP\tUR\tUF1\tLP\tLR\tLF1\n";
  out += std::to_string(r.sentences) + "\t" + std::to_string(r.gold) + "\t" +
         std::to_string(r.predicted) + "\t" + std::to_string(r.correct_unlabeled) + "\t" +
         std::to_string(r.correct_labeled) + "\t" + fixed(u.precision) + "\t" + fixed(u.recall) +
         "\t" + fixed(u.f1) + "\t" + fixed(l.precision) + "\t" + fixed(l.recall) + "\t" +
         fixed(l.f1) + "\n";
  for (const auto& c : r.per_label) {
    Prf p = prf(c.correct, c.predicted, c.gold);
    out += "label\t" + c.label + "\t" + std::to_string(c.gold) + "\t" +
           std::to_string(c.predicted) + "\t" + std::to_string(c.correct) + "\t" + fixed(p.f1) +
           "\n";
  }
  return out;
}

std::string format_buckets_tsv(const std::vector<LengthBucket>& buckets) {
  std::string out = "lo\thi\tsentences\tgold\tpredicted\tcorrect_unlabeled\tcorrect_labeled\tUF1\tLF1\n";
  for (const auto& b : buckets) {
    const F1Report& r = b.report;
    out += std::to_string(b.lo) + "\t" + std::to_string(b.hi) + "\t" +
           std::to_string(r.sentences) + "\t" + std::to_string(r.gold) + "\t" +
           std::to_string(r.predicted) + "\t" + std::to_string(r.correct_unlabeled) + "\t" +
           std::to_string(r.correct_labeled) + "\t" + fixed(r.unlabeled().f1) + "\t" +
           fixed(r.labeled().f1) + "\n";
  }
  return out;
}

}  // namespace hosdp
