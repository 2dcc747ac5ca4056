#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "chartrans/bundle.hpp"
#include "chartrans/corpus.hpp"

namespace chartrans {

struct DocTrace {
  std::string id;
  std::vector<std::vector<float>> vectors;  // one per sliding-window step
};

struct DocVector {
  std::string id;
  std::vector<double> values;  // unit length
};

// Sum of the trace, L2-normalised. Throws InputError on an empty trace or
// mixed dimensions, ContractError when the sum has zero norm.
DocVector doc_vector(const DocTrace& trace);

// Dot product of two unit vectors.
double cosine(const DocVector& a, const DocVector& b);

struct ClusterResult {
  std::size_t k = 0;
  std::vector<std::size_t> assignment;
  std::vector<std::vector<double>> centroids;  // unit length
  double inertia = 0.0;                        // sum over points of 1 - cos(point, centroid)
  std::vector<double> inertia_history;         // after every Lloyd iteration
  std::size_t iterations = 0;
};

// Spherical k-means with k-means++ seeding.
ClusterResult kmeans(const std::vector<DocVector>& vectors, std::size_t k, std::uint64_t seed,
                     std::size_t max_iter = 100);

struct Neighbor {
  std::size_t index = 0;  // position in the pool
  std::string id;
  double score = 0.0;
};

// Top-k by descending cosine; ties by ascending id.
std::vector<Neighbor> nearest_neighbors(const DocVector& query, const std::vector<DocVector>& pool,
                                        std::size_t top_k);

struct NllPoint {
  std::size_t position = 0;  // first word of the predicted window
  double nll = 0.0;
};

// For every t: NLL of words [t+window, t+2*window) given words [t, t+window).
std::vector<NllPoint> next_window_nll(const std::vector<std::string>& words,
                                      const ModelBundle& predictor, std::size_t window = 5);

struct RawSignal {
  std::size_t position = 0;
  double nll = 0.0;
  std::optional<double> pause;  // silence before the word at `position`
  bool speaker_change = false;
};

struct FusionConfig {
  double alpha = 1.0;  // NLL
  double beta = 0.5;   // pause
  double gamma = 1.0;  // speaker change
  double z_threshold = 2.0;
  std::size_t min_gap = 5;
};

struct BoundarySignal {
  std::size_t position = 0;
  double nll_z = 0.0;
  double pause_z = 0.0;
  int speaker_change = 0;
  double combined = 0.0;
};

// Pairs every NLL point with the pause and speaker turn before its word.
std::vector<RawSignal> raw_signals(const StreamDocument& doc, const std::vector<NllPoint>& nll);

// Population z-scores over the document; zero variance gives z = 0, missing
// pauses give pause_z = 0.
std::vector<BoundarySignal> fuse_signals(const std::vector<RawSignal>& raw,
                                         const FusionConfig& fusion);

// Positions whose combined score exceeds z_threshold, strongest first, each
// suppressing any later pick within min_gap words. Returned in ascending order.
std::vector<std::size_t> detect_boundaries(const std::vector<BoundarySignal>& signals,
                                           double z_threshold, std::size_t min_gap);

struct Segmentation {
  std::vector<BoundarySignal> signals;
  std::vector<std::size_t> boundaries;
};

Segmentation segment_document(const StreamDocument& doc, const ModelBundle& predictor,
                              const FusionConfig& fusion = {}, std::size_t window = 5);

// Fraction of points whose cluster's majority label is their own label.
double purity(const std::vector<std::size_t>& assignment, const std::vector<std::string>& labels);

struct BoundaryScore {
  std::size_t true_positives = 0;
  std::size_t predicted = 0;
  std::size_t actual = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// One-to-one matching: each prediction (ascending) takes the nearest unmatched
// true boundary within `tolerance` words, the earlier one on ties.
BoundaryScore score_boundaries(const std::vector<std::size_t>& predicted,
                               const std::vector<std::size_t>& actual, std::size_t tolerance);

struct SeamContrast {
  double seam_mean = 0.0;    // NLL at positions equal to a true boundary
  double within_mean = 0.0;  // NLL where context and predicted window stay in one story
  std::size_t seam_points = 0;
  std::size_t within_points = 0;
};

SeamContrast seam_contrast(const std::vector<NllPoint>& nll,
                           const std::vector<std::size_t>& boundaries, std::size_t window = 5);

void write_vectors_tsv(const std::vector<DocVector>& vectors, std::ostream& out);
std::vector<DocVector> read_vectors_tsv(std::istream& in);

}  // namespace chartrans
