#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ltn/config.hpp"
#include "ltn/model.hpp"

namespace ltn {

struct LabeledFeatures {
  Matrix x;            // n x d
  std::vector<int> y;  // n labels in [0, num_classes)
};

struct ProbeOptions {
  std::size_t steps = 400;
  double learning_rate = 0.5;
  double l2 = 1e-3;
};

struct ProbeResult {
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::size_t num_classes = 0;
};

/// Multinomial logistic regression by full-batch gradient descent on
/// standardized features; returns top-1 accuracies. Throws if the training
/// labels contain fewer than two classes.
ProbeResult fit_linear_probe(const LabeledFeatures& train, const LabeledFeatures& test, const ProbeOptions& options);

/// Frozen-encoder features for `clips_per_stream` unaugmented clips per
/// stream at random starts. `blended` selects f' instead of f.
LabeledFeatures extract_features(const Network& net, const RunConfig& config, std::span<const Stream> streams,
                                 std::size_t clips_per_stream, bool blended, Rng& rng);

/// Full protocol: fresh labeled probe streams, features, classifier.
ProbeResult linear_probe(const Network& net, const RunConfig& config);

/// Average ranks (ties share the mean rank) and their Pearson correlation.
double spearman(std::span<const double> a, std::span<const double> b);

struct AlignmentResult {
  double rho = 0.0;           // |Spearman| of the leading principal coordinate vs t_start
  bool degenerate = false;    // trajectory had no variance; rho forced to 0
  std::vector<double> t_start;
  Matrix coords;              // K x 2 principal coordinates for plotting
  double rho_original = 0.0;  // same metric on f instead of f'
};

/// Metric on a K x M trajectory of span coordinates ordered by t_start.
AlignmentResult align_coordinates(const Matrix& span_coords, std::span<const double> t_start);

/// Samples K uniform segments of `stream`, navigates them, projects onto the
/// basis span, and scores time-order alignment.
AlignmentResult time_alignment(const Network& net, const RunConfig& config, const Stream& stream, std::size_t k);

/// Noise-free analysis stream number `index` from the run's data world.
Stream analysis_stream(const RunConfig& config, std::size_t index, int class_label = 0);

}  // namespace ltn
