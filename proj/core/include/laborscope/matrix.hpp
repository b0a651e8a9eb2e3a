#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace laborscope {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class MatrixKind { raw, tfidf };

std::string_view to_string(MatrixKind kind);
MatrixKind matrix_kind_from_string(std::string_view text);

/// Dense region x occupation matrix with its axis labels.
///
/// `values(r, o)` is employment (raw) or a TF-IDF weight (tfidf). Names are
/// optional display strings; when present they parallel the code vectors.
struct RegionOccupationMatrix {
  Matrix values;
  std::vector<std::string> region_labels;
  std::vector<std::string> occupation_labels;
  MatrixKind kind = MatrixKind::raw;
  std::vector<std::string> region_names;
  std::vector<std::string> occupation_names;

  Eigen::Index regions() const { return values.rows(); }
  Eigen::Index occupations() const { return values.cols(); }

  /// Throws DataError if labels disagree with the shape or an entry is negative/non-finite.
  void validate() const;

  std::ptrdiff_t region_index(std::string_view code) const;
  std::string occupation_name(Eigen::Index j) const;
  std::string region_name(Eigen::Index i) const;
};

/// CSV layout: corner cell "kind=<raw|tfidf>", occupation codes across the first
/// row, region codes down the first column. Names, when present, go to a
/// "<path>.labels.csv" sidecar (axis,code,name). Paths ending in ".bin" use the
/// binary cache instead.
void write_matrix(const std::filesystem::path& path, const RegionOccupationMatrix& m);
RegionOccupationMatrix read_matrix(const std::filesystem::path& path);

/// Plain labelled CSV for an arbitrary matrix (used for W, H, heatmaps).
void write_labelled_csv(const std::filesystem::path& path, const Matrix& values,
                        const std::vector<std::string>& row_labels,
                        const std::vector<std::string>& col_labels,
                        std::string_view corner = "");

struct LabelledMatrix {
  Matrix values;
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  std::string corner;
};

LabelledMatrix read_labelled_csv(const std::filesystem::path& path);

bool is_binary_path(const std::filesystem::path& path);

}  // namespace laborscope
