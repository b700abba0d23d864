#include "robustnn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace robustnn {

LabeledDataset::LabeledDataset(FeatureMatrix features, std::vector<int> labels,
                               std::vector<std::string> label_names)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      label_names_(std::move(label_names)) {
  if (labels_.empty()) throw std::invalid_argument("dataset must contain at least one point");
  if (static_cast<std::size_t>(features_.rows()) != labels_.size()) {
    throw std::invalid_argument("feature row count does not match label count");
  }
  if (features_.cols() < 1) throw std::invalid_argument("feature dimension must be positive");
  if (!features_.allFinite()) throw std::invalid_argument("features must be finite");
  for (int y : labels_) {
    if (y < 0) throw std::invalid_argument("labels must be nonnegative");
  }
}

std::vector<int> LabeledDataset::classes() const {
  std::set<int> s(labels_.begin(), labels_.end());
  return {s.begin(), s.end()};
}

LabeledDataset LabeledDataset::subset(const std::vector<std::size_t>& indices) const {
  FeatureMatrix f(static_cast<Eigen::Index>(indices.size()), features_.cols());
  std::vector<int> y;
  y.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    f.row(static_cast<Eigen::Index>(r)) = features_.row(static_cast<Eigen::Index>(indices[r]));
    y.push_back(labels_[indices[r]]);
  }
  return LabeledDataset(std::move(f), std::move(y), label_names_);
}

bool LabeledDataset::operator==(const LabeledDataset& other) const {
  return labels_ == other.labels_ && features_.rows() == other.features_.rows() &&
         features_.cols() == other.features_.cols() && features_ == other.features_;
}

DatasetParseError::DatasetParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

bool parse_double(const std::string& cell, double& out) {
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

bool parse_label(const std::string& cell, int& out) {
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && out >= 0;
}

}  // namespace

LabeledDataset parse_dataset(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::vector<std::string> raw_labels;
  std::vector<std::size_t> line_numbers;
  std::size_t width = 0;

  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() < 2) throw DatasetParseError(line_no, "expected a label and at least one feature");
    if (width == 0) width = cells.size();
    if (cells.size() != width) {
      throw DatasetParseError(line_no, "ragged row: expected " + std::to_string(width - 1) +
                                           " features, found " + std::to_string(cells.size() - 1));
    }
    if (cells[0].empty()) throw DatasetParseError(line_no, "empty label");
    std::vector<double> values(width - 1);
    for (std::size_t c = 1; c < width; ++c) {
      if (!parse_double(cells[c], values[c - 1])) {
        throw DatasetParseError(line_no, "non-numeric feature '" + cells[c] + "'");
      }
    }
    raw_labels.push_back(cells[0]);
    rows.push_back(std::move(values));
    line_numbers.push_back(line_no);
  }
  if (rows.empty()) throw DatasetParseError(line_no, "empty dataset");

  std::vector<int> labels(rows.size());
  std::vector<std::string> names;
  bool all_integer = true;
  for (std::size_t i = 0; i < rows.size() && all_integer; ++i) {
    all_integer = parse_label(raw_labels[i], labels[i]);
  }
  if (!all_integer) {
    // String labels: dense ids in order of first appearance.
    std::map<std::string, int> ids;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto [it, inserted] = ids.emplace(raw_labels[i], static_cast<int>(names.size()));
      if (inserted) names.push_back(raw_labels[i]);
      labels[i] = it->second;
    }
  }

  FeatureMatrix f(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width - 1));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c + 1 < width; ++c)
      f(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return LabeledDataset(std::move(f), std::move(labels), std::move(names));
}

LabeledDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_dataset(buffer.str());
}

std::string format_dataset(const LabeledDataset& ds) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!ds.label_names().empty()) out << ds.label_names()[static_cast<std::size_t>(ds.label(i))];
    else out << ds.label(i);
    for (int c = 0; c < ds.dim(); ++c) {
      out << ',' << ds.features()(static_cast<Eigen::Index>(i), c);
    }
    out << '\n';
  }
  return out.str();
}

void save_dataset(const LabeledDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dataset file " + path.string());
  out << format_dataset(ds);
}

LabeledDataset gen_gaussian_clusters(const FeatureMatrix& centers,
                                     const std::vector<std::size_t>& per_class,
                                     double stddev, std::uint64_t seed) {
  const auto k = static_cast<std::size_t>(centers.rows());
  if (k == 0 || per_class.size() != k) {
    throw std::invalid_argument("need one per-class count for every center");
  }
  if (!(stddev >= 0.0)) throw std::invalid_argument("stddev must be nonnegative");
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = a + 1; b < k; ++b)
      if (centers.row(static_cast<Eigen::Index>(a)) == centers.row(static_cast<Eigen::Index>(b)))
        throw std::invalid_argument("cluster centers must be pairwise distinct");
  if (k < 2) std::cerr << "warning: a single cluster cannot exercise classification\n";

  std::size_t total = 0;
  for (auto c : per_class) total += c;
  FeatureMatrix f(static_cast<Eigen::Index>(total), centers.cols());
  std::vector<int> labels;
  labels.reserve(total);
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Index row = 0;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t j = 0; j < per_class[c]; ++j, ++row) {
      for (Eigen::Index d = 0; d < centers.cols(); ++d) {
        f(row, d) = centers(static_cast<Eigen::Index>(c), d) + stddev * normal(rng);
      }
      labels.push_back(static_cast<int>(c));
    }
  }
  return LabeledDataset(std::move(f), std::move(labels));
}

void ToyGeometry::validate() const {
  if (!(segment_length > 0.0) || !(gap > 0.0) || !(tradeoff > 0.0) || per_class < 1) {
    throw std::invalid_argument("toy geometry needs D, r, c > 0 and m >= 1");
  }
}

LabeledDataset gen_toy_segments(const ToyGeometry& geom, Rng& rng) {
  geom.validate();
  const double d = geom.segment_length;
  const auto m = static_cast<Eigen::Index>(geom.per_class);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  FeatureMatrix f = FeatureMatrix::Zero(2 * m, 2);
  std::vector<int> labels(static_cast<std::size_t>(2 * m));
  for (Eigen::Index i = 0; i < m; ++i) {
    f(i, 0) = d * unit(rng);
    labels[static_cast<std::size_t>(i)] = 0;
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    f(m + i, 0) = d + geom.gap + d * unit(rng);
    labels[static_cast<std::size_t>(m + i)] = 1;
  }
  return LabeledDataset(std::move(f), std::move(labels));
}

LabeledDataset gen_toy_segments(const ToyGeometry& geom, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return gen_toy_segments(geom, rng);
}

double min_interclass_distance(const LabeledDataset& ds) {
  const auto& f = ds.features();
  double best = std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = i + 1; j < ds.size(); ++j) {
      if (ds.label(i) == ds.label(j)) continue;
      any = true;
      const double d = (f.row(static_cast<Eigen::Index>(i)) - f.row(static_cast<Eigen::Index>(j))).squaredNorm();
      best = std::min(best, d);
    }
  }
  if (!any) throw std::invalid_argument("interclass distance is undefined for a single-class dataset");
  return std::sqrt(best);
}

double squared_distance(const LabeledDataset& ds, std::size_t i, const Vector& query) {
  return (ds.features().row(static_cast<Eigen::Index>(i)).transpose() - query).squaredNorm();
}

Neighbor nearest_neighbor(const LabeledDataset& ds, const Vector& query) {
  if (query.size() != ds.dim()) throw DimensionError("query dimension does not match dataset");
  Neighbor best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double d = squared_distance(ds, i, query);
    if (d < best.distance) best = {i, d};
  }
  best.distance = std::sqrt(best.distance);
  return best;
}

}  // namespace robustnn
