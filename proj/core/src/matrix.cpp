#include "laborscope/matrix.hpp"

#include "laborscope/binary_io.hpp"
#include "laborscope/csv.hpp"
#include "laborscope/error.hpp"

#include <cmath>
#include <fstream>
#include <map>

namespace laborscope {

std::string_view to_string(MatrixKind kind) {
  return kind == MatrixKind::raw ? "raw" : "tfidf";
}

MatrixKind matrix_kind_from_string(std::string_view text) {
  if (text == "raw") return MatrixKind::raw;
  if (text == "tfidf") return MatrixKind::tfidf;
  throw DataError("unknown matrix kind '" + std::string(text) + "'");
}

void RegionOccupationMatrix::validate() const {
  if (static_cast<std::size_t>(values.rows()) != region_labels.size() ||
      static_cast<std::size_t>(values.cols()) != occupation_labels.size()) {
    throw DataError("matrix labels do not match its shape");
  }
  if (!region_names.empty() && region_names.size() != region_labels.size()) {
    throw DataError("region names do not match region labels");
  }
  if (!occupation_names.empty() && occupation_names.size() != occupation_labels.size()) {
    throw DataError("occupation names do not match occupation labels");
  }
  if (!values.allFinite()) throw DataError("matrix has non-finite entries");
  if (values.size() > 0 && values.minCoeff() < 0.0) throw DataError("matrix has negative entries");
}

std::ptrdiff_t RegionOccupationMatrix::region_index(std::string_view code) const {
  for (std::size_t i = 0; i < region_labels.size(); ++i) {
    if (region_labels[i] == code) return static_cast<std::ptrdiff_t>(i);
  }
  return -1;
}

std::string RegionOccupationMatrix::occupation_name(Eigen::Index j) const {
  return occupation_names.empty() ? std::string() : occupation_names[static_cast<std::size_t>(j)];
}

std::string RegionOccupationMatrix::region_name(Eigen::Index i) const {
  return region_names.empty() ? std::string() : region_names[static_cast<std::size_t>(i)];
}

bool is_binary_path(const std::filesystem::path& path) { return path.extension() == ".bin"; }

void write_labelled_csv(const std::filesystem::path& path, const Matrix& values,
                        const std::vector<std::string>& row_labels,
                        const std::vector<std::string>& col_labels, std::string_view corner) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << csv::escape(corner);
  for (const auto& c : col_labels) out << ',' << csv::escape(c);
  out << '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    out << csv::escape(row_labels[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < values.cols(); ++j) out << ',' << csv::format_double(values(i, j));
    out << '\n';
  }
}

LabelledMatrix read_labelled_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  bool first = true;
  auto header = csv::next_line(in, first);
  if (!header) throw DataError(path.string() + ": empty matrix file");
  auto cols = csv::split_line(*header);
  LabelledMatrix m;
  m.corner = cols.front();
  m.col_labels.assign(cols.begin() + 1, cols.end());
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (auto line = csv::next_line(in, first)) {
    ++line_no;
    auto fields = csv::split_line(*line);
    if (fields.size() != cols.size()) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(cols.size()) + " fields");
    }
    m.row_labels.push_back(fields.front());
    std::vector<double> row;
    row.reserve(fields.size() - 1);
    for (std::size_t j = 1; j < fields.size(); ++j) {
      auto v = csv::parse_number(fields[j]);
      if (!v) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad number '" +
                        fields[j] + "'");
      }
      row.push_back(*v);
    }
    rows.push_back(std::move(row));
  }
  m.values.resize(static_cast<Eigen::Index>(rows.size()),
                  static_cast<Eigen::Index>(m.col_labels.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

namespace {

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return path.string() + ".labels.csv";
}

void write_matrix_binary(const std::filesystem::path& path, const RegionOccupationMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  binary::Writer w(out, binary::Payload::matrix);
  w.u8(m.kind == MatrixKind::raw ? 0 : 1);
  w.str_array(m.region_labels);
  w.str_array(m.occupation_labels);
  w.str_array(m.region_names);
  w.str_array(m.occupation_names);
  w.u64(static_cast<std::uint64_t>(m.values.rows()));
  w.u64(static_cast<std::uint64_t>(m.values.cols()));
  // Column-major, one contiguous block per occupation.
  w.f64_array(m.values.data(), static_cast<std::size_t>(m.values.size()));
}

RegionOccupationMatrix read_matrix_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  binary::Reader r(in, binary::Payload::matrix);
  RegionOccupationMatrix m;
  m.kind = r.u8() == 0 ? MatrixKind::raw : MatrixKind::tfidf;
  m.region_labels = r.str_array();
  m.occupation_labels = r.str_array();
  m.region_names = r.str_array();
  m.occupation_names = r.str_array();
  const auto rows = static_cast<Eigen::Index>(r.u64());
  const auto cols = static_cast<Eigen::Index>(r.u64());
  m.values.resize(rows, cols);
  r.f64_array(m.values.data(), static_cast<std::size_t>(m.values.size()));
  m.validate();
  return m;
}

}  // namespace

void write_matrix(const std::filesystem::path& path, const RegionOccupationMatrix& m) {
  m.validate();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (is_binary_path(path)) {
    write_matrix_binary(path, m);
    return;
  }
  write_labelled_csv(path, m.values, m.region_labels, m.occupation_labels,
                     "kind=" + std::string(to_string(m.kind)));
  const auto side = sidecar_path(path);
  if (m.region_names.empty() && m.occupation_names.empty()) {
    std::filesystem::remove(side);
    return;
  }
  std::ofstream out(side, std::ios::binary);
  if (!out) throw DataError("cannot write " + side.string());
  out << "axis,code,name\n";
  for (std::size_t i = 0; i < m.region_names.size(); ++i) {
    out << "region," << csv::escape(m.region_labels[i]) << ',' << csv::escape(m.region_names[i])
        << '\n';
  }
  for (std::size_t j = 0; j < m.occupation_names.size(); ++j) {
    out << "occupation," << csv::escape(m.occupation_labels[j]) << ','
        << csv::escape(m.occupation_names[j]) << '\n';
  }
}

RegionOccupationMatrix read_matrix(const std::filesystem::path& path) {
  if (binary::has_magic(path)) return read_matrix_binary(path);
  auto lm = read_labelled_csv(path);
  RegionOccupationMatrix m;
  const std::string prefix = "kind=";
  if (lm.corner.rfind(prefix, 0) == 0) {
    m.kind = matrix_kind_from_string(lm.corner.substr(prefix.size()));
  }
  m.values = std::move(lm.values);
  m.region_labels = std::move(lm.row_labels);
  m.occupation_labels = std::move(lm.col_labels);

  const auto side = sidecar_path(path);
  if (std::filesystem::exists(side)) {
    std::map<std::string, std::string> regions;
    std::map<std::string, std::string> occupations;
    std::ifstream in(side, std::ios::binary);
    bool first = true;
    csv::next_line(in, first);  // header
    while (auto line = csv::next_line(in, first)) {
      auto f = csv::split_line(*line);
      if (f.size() != 3) throw DataError(side.string() + ": expected axis,code,name");
      (f[0] == "region" ? regions : occupations)[f[1]] = f[2];
    }
    if (!regions.empty()) {
      for (const auto& c : m.region_labels) m.region_names.push_back(regions[c]);
    }
    if (!occupations.empty()) {
      for (const auto& c : m.occupation_labels) m.occupation_names.push_back(occupations[c]);
    }
  }
  m.validate();
  return m;
}

}  // namespace laborscope
