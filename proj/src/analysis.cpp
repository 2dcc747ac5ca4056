#include "chartrans/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>

#include "chartrans/error.hpp"

namespace chartrans {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

bool normalize(std::vector<double>& v) {
  const double norm = std::sqrt(dot(v, v));
  if (norm == 0.0 || !std::isfinite(norm)) return false;
  for (double& x : v) x /= norm;
  return true;
}

std::vector<double> zscores(const std::vector<double>& xs) {
  std::vector<double> z(xs.size(), 0.0);
  if (xs.empty()) return z;
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size());
  const double sd = std::sqrt(var);
  if (!(sd > 1e-12)) return z;
  for (std::size_t i = 0; i < xs.size(); ++i) z[i] = (xs[i] - mean) / sd;
  return z;
}

}  // namespace

DocVector doc_vector(const DocTrace& trace) {
  if (trace.vectors.empty()) throw InputError("doc_vector: empty trace for " + trace.id);
  const std::size_t dim = trace.vectors.front().size();
  std::vector<double> sum(dim, 0.0);
  for (const auto& v : trace.vectors) {
    if (v.size() != dim) throw InputError("doc_vector: mixed trace dimensions in " + trace.id);
    for (std::size_t i = 0; i < dim; ++i) sum[i] += v[i];
  }
  if (!normalize(sum)) {
    throw ContractError("doc_vector: trace of " + trace.id + " sums to a zero vector");
  }
  return {trace.id, std::move(sum)};
}

double cosine(const DocVector& a, const DocVector& b) {
  if (a.values.size() != b.values.size()) {
    throw DimensionError("cosine: dimensions " + std::to_string(a.values.size()) + " and " +
                         std::to_string(b.values.size()) + " differ");
  }
  return std::clamp(dot(a.values, b.values), -1.0, 1.0);
}

ClusterResult kmeans(const std::vector<DocVector>& vectors, std::size_t k, std::uint64_t seed,
                     std::size_t max_iter) {
  const std::size_t n = vectors.size();
  if (k < 1) throw InputError("kmeans: k must be >= 1");
  if (k > n) throw InputError("kmeans: k = " + std::to_string(k) + " exceeds " +
                              std::to_string(n) + " points");
  const std::size_t dim = vectors.front().values.size();
  for (const auto& v : vectors) {
    if (v.values.size() != dim) throw DimensionError("kmeans: mixed vector dimensions");
  }
  auto sim = [&](std::size_t i, const std::vector<double>& c) { return dot(vectors[i].values, c); };

  // k-means++ seeding on cosine distance.
  std::mt19937_64 rng(seed);
  ClusterResult res;
  res.k = k;
  std::vector<char> chosen(n, 0);
  std::size_t first = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  res.centroids.push_back(vectors[first].values);
  chosen[first] = 1;
  std::vector<double> best_sim(n, -2.0);
  while (res.centroids.size() < k) {
    std::vector<double> weights(n, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      best_sim[i] = std::max(best_sim[i], sim(i, res.centroids.back()));
      const double d = chosen[i] ? 0.0 : std::max(0.0, 1.0 - best_sim[i]);
      weights[i] = d * d;
      total += weights[i];
    }
    if (total <= 0.0) {
      // remaining points duplicate existing centres
      for (std::size_t i = 0; i < n; ++i) weights[i] = chosen[i] ? 0.0 : 1.0;
    }
    const std::size_t pick = std::discrete_distribution<std::size_t>(weights.begin(),
                                                                     weights.end())(rng);
    chosen[pick] = 1;
    res.centroids.push_back(vectors[pick].values);
  }

  res.assignment.assign(n, 0);
  std::vector<double> point_sim(n, 0.0);
  auto assign = [&] {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_s = sim(i, res.centroids[0]);
      for (std::size_t c = 1; c < k; ++c) {
        const double s = sim(i, res.centroids[c]);
        if (s > best_s) {
          best_s = s;
          best = c;
        }
      }
      changed |= best != res.assignment[i];
      res.assignment[i] = best;
      point_sim[i] = best_s;
    }
    return changed;
  };
  auto inertia = [&] {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += 1.0 - sim(i, res.centroids[res.assignment[i]]);
    return std::max(0.0, total);
  };

  assign();
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      auto& s = sums[res.assignment[i]];
      for (std::size_t d = 0; d < dim; ++d) s[d] += vectors[i].values[d];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (normalize(sums[c])) {
        res.centroids[c] = std::move(sums[c]);
        continue;
      }
      // Degenerate cluster: re-seed from the point farthest from its centre.
      std::size_t far = 0;
      for (std::size_t i = 1; i < n; ++i) {
        if (point_sim[i] < point_sim[far]) far = i;
      }
      res.centroids[c] = vectors[far].values;
      point_sim[far] = 1.0;
    }
    ++res.iterations;
    const bool changed = assign();
    res.inertia_history.push_back(inertia());
    if (!changed) break;
  }
  res.inertia = inertia();
  return res;
}

std::vector<Neighbor> nearest_neighbors(const DocVector& query, const std::vector<DocVector>& pool,
                                        std::size_t top_k) {
  if (top_k < 1) throw InputError("nearest_neighbors: top_k must be >= 1");
  if (pool.empty()) throw InputError("nearest_neighbors: empty pool");
  std::vector<Neighbor> all;
  all.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) all.push_back({i, pool[i].id, cosine(query, pool[i])});
  const std::size_t keep = std::min(top_k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(),
                    [](const Neighbor& a, const Neighbor& b) {
                      if (a.score != b.score) return a.score > b.score;
                      if (a.id != b.id) return a.id < b.id;
                      return a.index < b.index;
                    });
  all.resize(keep);
  return all;
}

std::vector<NllPoint> next_window_nll(const std::vector<std::string>& words,
                                      const ModelBundle& predictor, std::size_t window) {
  if (window < 1) throw InputError("next_window_nll: window must be >= 1");
  if (words.size() < 2 * window) {
    throw InputError("next_window_nll: document has " + std::to_string(words.size()) +
                     " words, needs at least " + std::to_string(2 * window));
  }
  predictor.params.validate(predictor.config);
  const auto windows = word_windows(words, window, 1);
  std::vector<NllPoint> out;
  for (std::size_t t = 0; t + 2 * window <= words.size(); ++t) {
    const auto& context = windows[t];
    const auto& next = windows[t + window];
    const auto enc =
        encode(predictor.params, predictor.config, encode_chars(predictor.vocab, context.text, false));
    const double nll = sequence_nll(predictor.params, predictor.config, enc,
                                    encode_chars(predictor.vocab, next.text, false));
    out.push_back({t + window, nll});
  }
  return out;
}

std::vector<RawSignal> raw_signals(const StreamDocument& doc, const std::vector<NllPoint>& nll) {
  std::vector<RawSignal> out;
  out.reserve(nll.size());
  for (const auto& p : nll) {
    if (p.position >= doc.tokens.size()) {
      throw InputError("raw_signals: position outside document " + doc.id);
    }
    RawSignal s{p.position, p.nll, std::nullopt, false};
    if (p.position > 0) {
      const auto& prev = doc.tokens[p.position - 1];
      const auto& cur = doc.tokens[p.position];
      if (prev.end && cur.start) s.pause = std::max(0.0, *cur.start - *prev.end);
      if (prev.speaker && cur.speaker) s.speaker_change = *prev.speaker != *cur.speaker;
    }
    out.push_back(s);
  }
  return out;
}

std::vector<BoundarySignal> fuse_signals(const std::vector<RawSignal>& raw,
                                         const FusionConfig& fusion) {
  if (fusion.alpha < 0 || fusion.beta < 0 || fusion.gamma < 0) {
    throw InputError("fusion weights must be non-negative");
  }
  std::vector<double> nll, pauses;
  for (const auto& r : raw) {
    nll.push_back(r.nll);
    if (r.pause) pauses.push_back(*r.pause);
  }
  const auto nll_z = zscores(nll);
  const auto pause_z = zscores(pauses);
  std::vector<BoundarySignal> out;
  std::size_t pi = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    BoundarySignal s;
    s.position = raw[i].position;
    s.nll_z = nll_z[i];
    s.pause_z = raw[i].pause ? pause_z[pi++] : 0.0;
    s.speaker_change = raw[i].speaker_change ? 1 : 0;
    s.combined = fusion.alpha * s.nll_z + fusion.beta * s.pause_z + fusion.gamma * s.speaker_change;
    out.push_back(s);
  }
  return out;
}

std::vector<std::size_t> detect_boundaries(const std::vector<BoundarySignal>& signals,
                                           double z_threshold, std::size_t min_gap) {
  if (signals.size() < 3) throw InputError("detect_boundaries: need at least 3 signals");
  std::vector<const BoundarySignal*> candidates;
  for (const auto& s : signals) {
    if (s.combined > z_threshold) candidates.push_back(&s);
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const BoundarySignal* a, const BoundarySignal* b) {
                     if (a->combined != b->combined) return a->combined > b->combined;
                     return a->position < b->position;
                   });
  std::vector<std::size_t> kept;
  for (const auto* c : candidates) {
    const bool clear = std::all_of(kept.begin(), kept.end(), [&](std::size_t k) {
      const std::size_t gap = k > c->position ? k - c->position : c->position - k;
      return gap >= min_gap;
    });
    if (clear) kept.push_back(c->position);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

Segmentation segment_document(const StreamDocument& doc, const ModelBundle& predictor,
                              const FusionConfig& fusion, std::size_t window) {
  Segmentation seg;
  seg.signals = fuse_signals(raw_signals(doc, next_window_nll(doc.words(), predictor, window)),
                             fusion);
  seg.boundaries = detect_boundaries(seg.signals, fusion.z_threshold, fusion.min_gap);
  return seg;
}

double purity(const std::vector<std::size_t>& assignment, const std::vector<std::string>& labels) {
  if (assignment.size() != labels.size()) {
    throw DimensionError("purity: assignment and label counts differ");
  }
  if (assignment.empty()) throw InputError("purity: no points");
  std::map<std::size_t, std::map<std::string, std::size_t>> counts;
  for (std::size_t i = 0; i < labels.size(); ++i) ++counts[assignment[i]][labels[i]];
  std::size_t hit = 0;
  for (const auto& [cluster, by_label] : counts) {
    std::size_t best = 0;
    for (const auto& [label, n] : by_label) best = std::max(best, n);
    hit += best;
  }
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

BoundaryScore score_boundaries(const std::vector<std::size_t>& predicted,
                               const std::vector<std::size_t>& actual, std::size_t tolerance) {
  BoundaryScore s;
  s.predicted = predicted.size();
  s.actual = actual.size();
  std::vector<std::size_t> pred = predicted;
  std::sort(pred.begin(), pred.end());
  std::vector<bool> used(actual.size(), false);
  for (const auto p : pred) {
    std::optional<std::size_t> best;
    std::size_t best_dist = 0;
    for (std::size_t j = 0; j < actual.size(); ++j) {
      if (used[j]) continue;
      const std::size_t d = p > actual[j] ? p - actual[j] : actual[j] - p;
      if (d > tolerance) continue;
      if (!best || d < best_dist || (d == best_dist && actual[j] < actual[*best])) {
        best = j;
        best_dist = d;
      }
    }
    if (best) {
      used[*best] = true;
      ++s.true_positives;
    }
  }
  const double tp = static_cast<double>(s.true_positives);
  s.precision = s.predicted ? tp / static_cast<double>(s.predicted) : 0.0;
  s.recall = s.actual ? tp / static_cast<double>(s.actual) : 0.0;
  s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
                                      : 0.0;
  return s;
}

SeamContrast seam_contrast(const std::vector<NllPoint>& nll,
                           const std::vector<std::size_t>& boundaries, std::size_t window) {
  SeamContrast out;
  double seam = 0.0, within = 0.0;
  for (const auto& pt : nll) {
    bool at_seam = false, crosses = false;
    for (const auto b : boundaries) {
      if (b == pt.position) at_seam = true;
      // context [p - window, p) and prediction [p, p + window) both in one story
      if (b + window > pt.position && b < pt.position + window) crosses = true;
    }
    if (at_seam) {
      seam += pt.nll;
      ++out.seam_points;
    } else if (!crosses) {
      within += pt.nll;
      ++out.within_points;
    }
  }
  if (out.seam_points) out.seam_mean = seam / static_cast<double>(out.seam_points);
  if (out.within_points) out.within_mean = within / static_cast<double>(out.within_points);
  return out;
}

void write_vectors_tsv(const std::vector<DocVector>& vectors, std::ostream& out) {
  char buf[32];
  for (const auto& v : vectors) {
    out << v.id;
    for (double x : v.values) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
      out << '\t' << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
    }
    out << '\n';
  }
}

std::vector<DocVector> read_vectors_tsv(std::istream& in) {
  std::vector<DocVector> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    DocVector v;
    std::size_t pos = line.find('\t');
    v.id = line.substr(0, pos);
    while (pos != std::string::npos) {
      const std::size_t begin = pos + 1;
      pos = line.find('\t', begin);
      const std::size_t end = pos == std::string::npos ? line.size() : pos;
      double x = 0.0;
      auto [ptr, ec] = std::from_chars(line.data() + begin, line.data() + end, x);
      if (ec != std::errc() || ptr != line.data() + end) {
        throw FormatError("vector file line " + std::to_string(line_no) + ": bad number");
      }
      v.values.push_back(x);
    }
    if (v.values.empty()) throw FormatError("vector file line " + std::to_string(line_no) +
                                            " has no values");
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace chartrans
