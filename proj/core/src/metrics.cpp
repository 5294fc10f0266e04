#include "absinstruct/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <unordered_map>

#include "absinstruct/error.hpp"

namespace absinstruct::metrics {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.empty() || b.empty()) return 0;
  // Two rolling rows keep this O(min) in memory.
  std::vector<size_t> prev(b.size() + 1, 0);
  std::vector<size_t> row(b.size() + 1, 0);
  for (size_t i = 1; i <= a.size(); ++i) {
    for (size_t j = 1; j <= b.size(); ++j) {
      if (a[i - 1] == b[j - 1]) {
        row[j] = prev[j - 1] + 1;
      } else {
        row[j] = std::max(prev[j], row[j - 1]);
      }
    }
    std::swap(prev, row);
  }
  return prev[b.size()];
}

double rouge_l(const std::vector<std::string>& candidate_tokens,
               const std::vector<std::string>& reference_tokens) {
  if (candidate_tokens.empty() || reference_tokens.empty()) return 0.0;
  size_t lcs = lcs_length(candidate_tokens, reference_tokens);
  if (lcs == 0) return 0.0;
  // 2PR/(P+R) reduces to 2*LCS/(|cand|+|ref|), which is exact in doubles for
  // the small integer counts involved.
  return 2.0 * static_cast<double>(lcs) /
         static_cast<double>(candidate_tokens.size() + reference_tokens.size());
}

double rouge_l(std::string_view candidate, std::string_view reference) {
  return rouge_l(tokenize(candidate), tokenize(reference));
}

namespace {

std::map<std::vector<std::string_view>, int> ngram_counts(
    const std::vector<std::string>& tokens, size_t n) {
  std::map<std::vector<std::string_view>, int> counts;
  if (tokens.size() < n) return counts;
  for (size_t i = 0; i + n <= tokens.size(); ++i) {
    std::vector<std::string_view> gram(tokens.begin() + i, tokens.begin() + i + n);
    ++counts[gram];
  }
  return counts;
}

}  // namespace

double bleu(std::string_view candidate, std::string_view reference, int max_n) {
  const auto cand = tokenize(candidate);
  const auto ref = tokenize(reference);
  if (cand.empty() || ref.empty()) return 0.0;

  constexpr double kEpsilon = 1e-9;
  const size_t effective_n = std::min<size_t>(static_cast<size_t>(max_n), cand.size());
  double log_precision_sum = 0.0;
  for (size_t n = 1; n <= effective_n; ++n) {
    const auto cand_grams = ngram_counts(cand, n);
    const auto ref_grams = ngram_counts(ref, n);
    double clipped = 0.0;
    double total = 0.0;
    for (const auto& [gram, count] : cand_grams) {
      total += count;
      auto it = ref_grams.find(gram);
      if (it != ref_grams.end()) clipped += std::min(count, it->second);
    }
    log_precision_sum += std::log(std::max(clipped, kEpsilon) / total);
  }
  double score = std::exp(log_precision_sum / static_cast<double>(effective_n));
  if (cand.size() < ref.size()) {
    score *= std::exp(1.0 - static_cast<double>(ref.size()) / static_cast<double>(cand.size()));
  }
  return score;
}

// ---------------------------------------------------------------------------
// Porter stemmer, following the published algorithm (steps 1a-5b).

namespace {

class PorterContext {
 public:
  explicit PorterContext(std::string word) : word_(std::move(word)) {}

  std::string run() {
    if (word_.size() <= 2) return word_;
    step1a();
    step1b();
    step1c();
    step2();
    step3();
    step4();
    step5a();
    step5b();
    return word_;
  }

 private:
  std::string word_;
  size_t stem_end_ = 0;  // end of the stem (exclusive) for the matched suffix

  bool is_consonant(size_t i) const {
    char c = word_[i];
    if (c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u') return false;
    if (c == 'y') return i == 0 ? true : !is_consonant(i - 1);
    return true;
  }

  // Measure of word_[0, stem_end_): the m in [C](VC)^m[V].
  int measure() const {
    int m = 0;
    size_t i = 0;
    while (i < stem_end_ && is_consonant(i)) ++i;
    while (i < stem_end_) {
      while (i < stem_end_ && !is_consonant(i)) ++i;
      if (i == stem_end_) break;
      ++m;
      while (i < stem_end_ && is_consonant(i)) ++i;
    }
    return m;
  }

  bool vowel_in_stem() const {
    for (size_t i = 0; i < stem_end_; ++i)
      if (!is_consonant(i)) return true;
    return false;
  }

  bool double_consonant_at(size_t end) const {
    return end >= 2 && word_[end - 1] == word_[end - 2] && is_consonant(end - 1);
  }

  // cvc at the end of word_[0, end), final consonant not w, x or y.
  bool ends_cvc(size_t end) const {
    if (end < 3) return false;
    if (!is_consonant(end - 1) || is_consonant(end - 2) || !is_consonant(end - 3)) return false;
    char c = word_[end - 1];
    return c != 'w' && c != 'x' && c != 'y';
  }

  bool ends_with(std::string_view suffix) {
    if (word_.size() < suffix.size()) return false;
    if (word_.compare(word_.size() - suffix.size(), suffix.size(), suffix) != 0) return false;
    stem_end_ = word_.size() - suffix.size();
    return true;
  }

  void replace_suffix(std::string_view replacement) {
    word_.resize(stem_end_);
    word_.append(replacement);
  }

  // (m > condition_m) suffix -> replacement
  bool rule(std::string_view suffix, std::string_view replacement, int min_measure) {
    if (!ends_with(suffix)) return false;
    if (measure() > min_measure) replace_suffix(replacement);
    return true;  // suffix matched; stop scanning this rule group
  }

  void step1a() {
    if (ends_with("sses")) {
      replace_suffix("ss");
    } else if (ends_with("ies")) {
      replace_suffix("i");
    } else if (ends_with("ss")) {
      // keep
    } else if (ends_with("s")) {
      replace_suffix("");
    }
  }

  void step1b() {
    if (ends_with("eed")) {
      if (measure() > 0) replace_suffix("ee");
      return;
    }
    bool stripped = false;
    if (ends_with("ed")) {
      if (vowel_in_stem()) {
        replace_suffix("");
        stripped = true;
      }
    } else if (ends_with("ing")) {
      if (vowel_in_stem()) {
        replace_suffix("");
        stripped = true;
      }
    }
    if (!stripped) return;
    if (ends_with("at") || ends_with("bl") || ends_with("iz")) {
      word_.push_back('e');
    } else if (double_consonant_at(word_.size())) {
      char last = word_.back();
      if (last != 'l' && last != 's' && last != 'z') word_.pop_back();
    } else {
      stem_end_ = word_.size();
      if (measure() == 1 && ends_cvc(word_.size())) word_.push_back('e');
    }
  }

  void step1c() {
    if (ends_with("y") && vowel_in_stem()) word_.back() = 'i';
  }

  void step2() {
    if (word_.size() < 3) return;
    switch (word_[word_.size() - 2]) {
      case 'a':
        if (rule("ational", "ate", 0)) return;
        if (rule("tional", "tion", 0)) return;
        break;
      case 'c':
        if (rule("enci", "ence", 0)) return;
        if (rule("anci", "ance", 0)) return;
        break;
      case 'e':
        if (rule("izer", "ize", 0)) return;
        break;
      case 'l':
        if (rule("abli", "able", 0)) return;
        if (rule("alli", "al", 0)) return;
        if (rule("entli", "ent", 0)) return;
        if (rule("eli", "e", 0)) return;
        if (rule("ousli", "ous", 0)) return;
        break;
      case 'o':
        if (rule("ization", "ize", 0)) return;
        if (rule("ation", "ate", 0)) return;
        if (rule("ator", "ate", 0)) return;
        break;
      case 's':
        if (rule("alism", "al", 0)) return;
        if (rule("iveness", "ive", 0)) return;
        if (rule("fulness", "ful", 0)) return;
        if (rule("ousness", "ous", 0)) return;
        break;
      case 't':
        if (rule("aliti", "al", 0)) return;
        if (rule("iviti", "ive", 0)) return;
        if (rule("biliti", "ble", 0)) return;
        break;
      default:
        break;
    }
  }

  void step3() {
    switch (word_.back()) {
      case 'e':
        if (rule("icate", "ic", 0)) return;
        if (rule("ative", "", 0)) return;
        if (rule("alize", "al", 0)) return;
        break;
      case 'i':
        if (rule("iciti", "ic", 0)) return;
        break;
      case 'l':
        if (rule("ical", "ic", 0)) return;
        if (rule("ful", "", 0)) return;
        break;
      case 's':
        if (rule("ness", "", 0)) return;
        break;
      default:
        break;
    }
  }

  void step4() {
    static constexpr std::string_view kSuffixes[] = {
        "al",  "ance", "ence", "er",   "ic",   "able", "ible", "ant",  "ement",
        "ment", "ent",  "ion",  "ou",   "ism",  "ate",  "iti",  "ous",  "ive",
        "ize"};
    for (std::string_view suffix : kSuffixes) {
      if (!ends_with(suffix)) continue;
      if (suffix == "ion" &&
          !(stem_end_ > 0 && (word_[stem_end_ - 1] == 's' || word_[stem_end_ - 1] == 't')))
        continue;  // "ion" only drops after s or t; keep scanning
      if (measure() > 1) replace_suffix("");
      return;
    }
  }

  void step5a() {
    if (!ends_with("e")) return;
    int m = measure();
    if (m > 1 || (m == 1 && !ends_cvc(stem_end_))) replace_suffix("");
  }

  void step5b() {
    stem_end_ = word_.size();
    if (measure() > 1 && double_consonant_at(word_.size()) && word_.back() == 'l')
      word_.pop_back();
  }
};

}  // namespace

std::string porter_stem(std::string_view word) {
  return PorterContext(std::string(word)).run();
}

// ---------------------------------------------------------------------------
// Meteor alignment: branch-and-bound over candidate positions with a greedy
// seed, preferring (most exact matches, most total matches, fewest chunks).

namespace {

struct Alignment {
  std::vector<int> ref_for_cand;  // -1 = unmatched
  int exact = 0;
  int total = 0;
  int chunks = 0;
};

int count_chunks(const std::vector<int>& ref_for_cand) {
  int chunks = 0;
  int prev_ref = -2;
  bool in_chunk = false;
  for (size_t i = 0; i < ref_for_cand.size(); ++i) {
    int j = ref_for_cand[i];
    if (j < 0) {
      in_chunk = false;
      prev_ref = -2;
      continue;
    }
    if (!in_chunk || j != prev_ref + 1) ++chunks;
    in_chunk = true;
    prev_ref = j;
  }
  return chunks;
}

bool better(const Alignment& a, const Alignment& b) {
  if (a.exact != b.exact) return a.exact > b.exact;
  if (a.total != b.total) return a.total > b.total;
  return a.chunks < b.chunks;
}

class AlignmentSearch {
 public:
  AlignmentSearch(const std::vector<std::string>& cand, const std::vector<std::string>& ref) {
    n_ = cand.size();
    m_ = ref.size();
    std::vector<std::string> cand_stems(n_), ref_stems(m_);
    for (size_t i = 0; i < n_; ++i) cand_stems[i] = porter_stem(cand[i]);
    for (size_t j = 0; j < m_; ++j) ref_stems[j] = porter_stem(ref[j]);
    exact_.resize(n_);
    stem_.resize(n_);
    for (size_t i = 0; i < n_; ++i) {
      for (size_t j = 0; j < m_; ++j) {
        if (cand[i] == ref[j]) {
          exact_[i].push_back(static_cast<int>(j));
        } else if (cand_stems[i] == ref_stems[j]) {
          stem_[i].push_back(static_cast<int>(j));
        }
      }
    }
    // Suffix upper bounds: how many candidate positions from i on could
    // possibly match anything.
    can_exact_.assign(n_ + 1, 0);
    can_any_.assign(n_ + 1, 0);
    for (size_t i = n_; i-- > 0;) {
      can_exact_[i] = can_exact_[i + 1] + (exact_[i].empty() ? 0 : 1);
      can_any_[i] = can_any_[i + 1] + (exact_[i].empty() && stem_[i].empty() ? 0 : 1);
    }
  }

  Alignment run() {
    best_ = greedy();
    used_.assign(m_, false);
    current_.ref_for_cand.assign(n_, -1);
    nodes_ = 0;
    dfs(0, -2);
    return best_;
  }

 private:
  static constexpr long kNodeBudget = 500000;

  Alignment greedy() const {
    Alignment a;
    a.ref_for_cand.assign(n_, -1);
    std::vector<bool> used(m_, false);
    for (size_t i = 0; i < n_; ++i) {  // exact stage first
      for (int j : exact_[i]) {
        if (!used[j]) {
          a.ref_for_cand[i] = j;
          used[j] = true;
          ++a.exact;
          break;
        }
      }
    }
    for (size_t i = 0; i < n_; ++i) {
      if (a.ref_for_cand[i] >= 0) continue;
      for (int j : stem_[i]) {
        if (!used[j]) {
          a.ref_for_cand[i] = j;
          used[j] = true;
          break;
        }
      }
    }
    a.total = 0;
    for (int j : a.ref_for_cand)
      if (j >= 0) ++a.total;
    a.chunks = count_chunks(a.ref_for_cand);
    return a;
  }

  void dfs(size_t i, int prev_ref) {
    if (++nodes_ > kNodeBudget) return;
    // Optimistic bound check.
    if (current_.exact + can_exact_[i] < best_.exact) return;
    if (current_.exact + can_exact_[i] == best_.exact &&
        current_.total + can_any_[i] < best_.total)
      return;
    if (i == n_) {
      Alignment finished = current_;
      finished.chunks = count_chunks(finished.ref_for_cand);
      if (better(finished, best_)) best_ = finished;
      return;
    }
    auto try_match = [&](int j, bool is_exact) {
      if (used_[j]) return;
      used_[j] = true;
      current_.ref_for_cand[i] = j;
      current_.exact += is_exact ? 1 : 0;
      current_.total += 1;
      dfs(i + 1, j);
      current_.total -= 1;
      current_.exact -= is_exact ? 1 : 0;
      current_.ref_for_cand[i] = -1;
      used_[j] = false;
    };
    // Contiguous continuation first so good chunk counts are found early.
    for (int j : exact_[i])
      if (j == prev_ref + 1) try_match(j, true);
    for (int j : exact_[i])
      if (j != prev_ref + 1) try_match(j, true);
    for (int j : stem_[i])
      if (j == prev_ref + 1) try_match(j, false);
    for (int j : stem_[i])
      if (j != prev_ref + 1) try_match(j, false);
    dfs(i + 1, -2);  // leave candidate i unmatched
  }

  size_t n_ = 0, m_ = 0;
  std::vector<std::vector<int>> exact_, stem_;
  std::vector<int> can_exact_, can_any_;
  std::vector<bool> used_;
  Alignment current_, best_;
  long nodes_ = 0;
};

}  // namespace

double meteor(std::string_view candidate, std::string_view reference) {
  const auto cand = tokenize(candidate);
  const auto ref = tokenize(reference);
  if (cand.empty() || ref.empty()) return 0.0;

  AlignmentSearch search(cand, ref);
  Alignment alignment = search.run();
  if (alignment.total == 0) return 0.0;

  const double matches = alignment.total;
  const double precision = matches / static_cast<double>(cand.size());
  const double recall = matches / static_cast<double>(ref.size());
  constexpr double kAlpha = 0.9, kBeta = 3.0, kGamma = 0.5;
  const double f_mean =
      precision * recall / (kAlpha * precision + (1.0 - kAlpha) * recall);
  const double penalty =
      kGamma * std::pow(static_cast<double>(alignment.chunks) / matches, kBeta);
  return f_mean * (1.0 - penalty);
}

ClassificationReport classification_report(const std::vector<int>& predictions,
                                           const std::vector<int>& golds) {
  if (predictions.empty()) throw Error("classification_report: empty input");
  if (predictions.size() != golds.size())
    throw Error("classification_report: length mismatch (" +
                std::to_string(predictions.size()) + " vs " + std::to_string(golds.size()) + ")");

  size_t correct = 0;
  // Confusion counts indexed [gold][pred] over {0,1}.
  size_t confusion[2][2] = {{0, 0}, {0, 0}};
  for (size_t i = 0; i < predictions.size(); ++i) {
    int pred = predictions[i] ? 1 : 0;
    int gold = golds[i] ? 1 : 0;
    if (pred == gold) ++correct;
    ++confusion[gold][pred];
  }

  auto f1_for = [&](int cls) {
    double tp = static_cast<double>(confusion[cls][cls]);
    double fp = static_cast<double>(confusion[1 - cls][cls]);
    double fn = static_cast<double>(confusion[cls][1 - cls]);
    double precision = (tp + fp) > 0 ? tp / (tp + fp) : 0.0;
    double recall = (tp + fn) > 0 ? tp / (tp + fn) : 0.0;
    return (precision + recall) > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  };

  ClassificationReport report;
  report.n = predictions.size();
  report.accuracy = static_cast<double>(correct) / static_cast<double>(report.n);
  report.f1_positive = f1_for(1);
  report.f1_negative = f1_for(0);
  report.macro_f1 = (report.f1_positive + report.f1_negative) / 2.0;
  return report;
}

}  // namespace absinstruct::metrics
