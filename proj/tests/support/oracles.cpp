#include "oracles.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <sstream>

namespace interflow::testing {

namespace {

std::vector<std::string> words_of(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

// The generator only uses the abbreviations listed here.
bool sentence_end(std::string w) {
  while (!w.empty() && (w.back() == '"' || w.back() == ')' || w.back() == '\'')) w.pop_back();
  if (w.empty()) return false;
  char c = w.back();
  if (c != '.' && c != '!' && c != '?') return false;
  std::string lower;
  for (char ch : w) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return !(lower == "dr." || lower == "e.g." || lower == "etc." || lower == "mr.");
}

}  // namespace

std::vector<OracleWindow> oracle_windows(const std::vector<TranscriptSegment>& stream, std::size_t min_words,
                                         bool flush) {
  std::vector<std::string> all;
  for (const auto& s : stream) {
    if (!s.final) continue;
    auto w = words_of(s.text);
    all.insert(all.end(), w.begin(), w.end());
  }
  std::vector<OracleWindow> out;
  OracleWindow cur;
  for (const auto& w : all) {
    cur.words.push_back(w);
    if (cur.words.size() >= min_words && sentence_end(w)) {
      cur.boundary = true;
      out.push_back(cur);
      cur = {};
    }
  }
  if (flush && !cur.words.empty()) {
    cur.boundary = sentence_end(cur.words.back());
    out.push_back(cur);
  }
  return out;
}

std::vector<TranscriptSegment> oracle_ring(const std::vector<TranscriptSegment>& pushed, double now,
                                           double horizon, double retention) {
  double h = std::min(horizon, retention);
  std::vector<TranscriptSegment> out;
  for (const auto& s : pushed)
    if (s.end >= now - h && s.start <= now) out.push_back(s);
  return out;
}

std::vector<std::vector<std::int64_t>> oracle_groups(const std::vector<std::int64_t>& arrivals,
                                                     std::int64_t gap) {
  std::vector<std::vector<std::int64_t>> groups;
  for (std::size_t i = 0; i < arrivals.size(); ++i) {
    if (i == 0 || arrivals[i] - arrivals[i - 1] >= gap) groups.emplace_back();
    groups.back().push_back(arrivals[i]);
  }
  return groups;
}

std::size_t oracle_select(const std::vector<double>& arrivals, const std::vector<int>& totals) {
  std::vector<std::size_t> idx(totals.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (totals[a] != totals[b]) return totals[a] > totals[b];
    if (arrivals[a] != arrivals[b]) return arrivals[a] < arrivals[b];
    return a < b;
  });
  return idx.front();
}

}  // namespace interflow::testing
