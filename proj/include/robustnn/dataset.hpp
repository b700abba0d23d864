#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "robustnn/geometry.hpp"

namespace robustnn {

using FeatureMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// m feature vectors in R^n2 with dense nonnegative integer labels.
/// Immutable after construction.
class LabeledDataset {
 public:
  LabeledDataset(FeatureMatrix features, std::vector<int> labels,
                 std::vector<std::string> label_names = {});

  std::size_t size() const { return labels_.size(); }
  int dim() const { return static_cast<int>(features_.cols()); }

  const FeatureMatrix& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }
  int label(std::size_t i) const { return labels_[i]; }
  Vector point(std::size_t i) const { return features_.row(static_cast<Eigen::Index>(i)).transpose(); }

  /// Sorted distinct labels.
  std::vector<int> classes() const;
  /// Original string labels when the file used non-integer labels; entry k
  /// names label k. Empty for integer-labelled data.
  const std::vector<std::string>& label_names() const { return label_names_; }

  /// Rows at the given indices, in the given order.
  LabeledDataset subset(const std::vector<std::size_t>& indices) const;

  bool operator==(const LabeledDataset& other) const;

 private:
  FeatureMatrix features_;
  std::vector<int> labels_;
  std::vector<std::string> label_names_;
};

class DatasetParseError : public std::runtime_error {
 public:
  DatasetParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// CSV without header: label, then n2 decimal reals per row.
LabeledDataset parse_dataset(const std::string& text);
LabeledDataset load_dataset(const std::filesystem::path& path);

/// Writes 17-significant-digit decimals so that loading is value-exact.
std::string format_dataset(const LabeledDataset& ds);
void save_dataset(const LabeledDataset& ds, const std::filesystem::path& path);

/// Class k points are centers.row(k) + stddev * N(0, I); labels are 0..K-1.
LabeledDataset gen_gaussian_clusters(const FeatureMatrix& centers,
                                     const std::vector<std::size_t>& per_class,
                                     double stddev, std::uint64_t seed);

struct ToyGeometry {
  double segment_length = 1.0;  ///< D
  double gap = 10.0;            ///< r
  std::size_t per_class = 1;    ///< m
  double tradeoff = 0.5;        ///< c

  void validate() const;
};

/// Class 0 uniform on [(0,0),(D,0)], class 1 uniform on [(D+r,0),(2D+r,0)].
LabeledDataset gen_toy_segments(const ToyGeometry& geom, std::uint64_t seed);
LabeledDataset gen_toy_segments(const ToyGeometry& geom, Rng& rng);

/// Minimum Euclidean distance over all pairs with different labels.
double min_interclass_distance(const LabeledDataset& ds);

struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;
};

/// Exact linear-scan nearest neighbor; ties go to the lowest index.
Neighbor nearest_neighbor(const LabeledDataset& ds, const Vector& query);

/// Squared Euclidean distance between row i of ds and a query.
double squared_distance(const LabeledDataset& ds, std::size_t i, const Vector& query);

}  // namespace robustnn
