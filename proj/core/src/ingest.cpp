#include "laborscope/ingest.hpp"

#include "laborscope/binary_io.hpp"
#include "laborscope/csv.hpp"
#include "laborscope/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <tuple>
#include <unordered_map>

namespace laborscope {

namespace {

auto record_key(const EmploymentRecord& r) {
  return std::tie(r.year, r.region_code, r.occupation_code);
}

std::optional<int> parse_int(std::string_view text) {
  const std::string t = csv::trim(text);
  int value = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) return std::nullopt;
  return value;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

}  // namespace

// ---------------------------------------------------------------------------
// Crosswalk

void Crosswalk::add(int year, std::string old_code, std::string canonical_code) {
  auto key = std::make_pair(year, old_code);
  if (auto it = index_.find(key); it != index_.end()) {
    if (it->second != canonical_code) {
      throw DataError("crosswalk maps (" + std::to_string(year) + ", " + old_code +
                      ") to both " + it->second + " and " + canonical_code);
    }
    return;
  }
  index_.emplace(std::move(key), canonical_code);
  entries_.push_back({year, std::move(old_code), std::move(canonical_code)});
}

std::optional<std::string> Crosswalk::lookup(int year, std::string_view code) const {
  auto it = index_.find(std::make_pair(year, std::string(code)));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Crosswalk Crosswalk::read_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  bool first = true;
  auto header = csv::next_line(in, first);
  if (!header) throw DataError(path.string() + ": empty crosswalk file");
  const auto cols = csv::split_line(*header);
  auto find = [&](std::string_view name) {
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (csv::trim(cols[i]) == name) return i;
    }
    throw DataError(path.string() + ": missing column '" + std::string(name) + "'");
  };
  const auto year_col = find("year");
  const auto old_col = find("old_code");
  const auto new_col = find("canonical_code");
  Crosswalk xwalk;
  std::size_t line_no = 1;
  while (auto line = csv::next_line(in, first)) {
    ++line_no;
    const auto fields = csv::split_line(*line);
    const auto needed = std::max({year_col, old_col, new_col});
    if (fields.size() <= needed) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": too few fields");
    }
    auto year = parse_int(fields[year_col]);
    if (!year) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad year '" +
                      fields[year_col] + "'");
    }
    xwalk.add(*year, csv::trim(fields[old_col]), csv::trim(fields[new_col]));
  }
  return xwalk;
}

// ---------------------------------------------------------------------------
// EmploymentTable

EmploymentTable EmploymentTable::from_records(std::vector<EmploymentRecord> records,
                                              Duplicates policy) {
  for (const auto& r : records) {
    if (r.region_code.empty() || r.occupation_code.empty()) {
      throw DataError("record with empty region or occupation code");
    }
    if (!std::isfinite(r.employment) || r.employment < 0.0) {
      throw DataError("negative or non-finite employment for " + r.region_code + "/" +
                      r.occupation_code + " in " + std::to_string(r.year));
    }
  }
  std::stable_sort(records.begin(), records.end(),
                   [](const auto& a, const auto& b) { return record_key(a) < record_key(b); });

  EmploymentTable t;
  t.records_.reserve(records.size());
  for (auto& r : records) {
    if (!t.records_.empty() && record_key(t.records_.back()) == record_key(r)) {
      if (policy == Duplicates::reject) {
        throw DataError("duplicate record for region " + r.region_code + ", occupation " +
                        r.occupation_code + ", year " + std::to_string(r.year));
      }
      t.records_.back().employment += r.employment;
      continue;
    }
    t.records_.push_back(std::move(r));
  }

  std::set<std::string> regions;
  std::set<std::string> occupations;
  std::set<int> years;
  for (const auto& r : t.records_) {
    regions.insert(r.region_code);
    occupations.insert(r.occupation_code);
    years.insert(r.year);
    // Records are year-ascending, so later years overwrite earlier names.
    if (!r.region_name.empty()) t.region_names_[r.region_code] = r.region_name;
    if (!r.occupation_name.empty()) t.occupation_names_[r.occupation_code] = r.occupation_name;
  }
  t.regions_.assign(regions.begin(), regions.end());
  t.occupations_.assign(occupations.begin(), occupations.end());
  t.years_.assign(years.begin(), years.end());
  return t;
}

std::string EmploymentTable::region_name(std::string_view code) const {
  auto it = region_names_.find(code);
  return it == region_names_.end() ? std::string() : it->second;
}

std::string EmploymentTable::occupation_name(std::string_view code) const {
  auto it = occupation_names_.find(code);
  return it == occupation_names_.end() ? std::string() : it->second;
}

double EmploymentTable::region_total(std::string_view region, int year) const {
  double total = 0.0;
  for (const auto& r : records_) {
    if (r.year == year && r.region_code == region) total += r.employment;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Parsing

ParseResult parse_csv(std::istream& in, const CsvFormat& format, std::string_view source) {
  const std::string src(source);
  bool first = true;
  auto header_line = csv::next_line(in, first);
  if (!header_line) throw DataError(src + ": missing header row");
  const auto header = csv::split_line(*header_line, format.delimiter);

  auto find_column = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (csv::trim(header[i]) == name) return i;
    }
    throw DataError(src + ": missing column '" + name + "'");
  };

  const auto area_col = find_column(format.area_code);
  const auto area_name_col = find_column(format.area_name);
  const auto occ_col = find_column(format.occupation_code);
  const auto occ_name_col = find_column(format.occupation_name);
  const auto emp_col = find_column(format.employment);
  std::optional<std::size_t> year_col;
  if (!format.fixed_year) year_col = find_column(format.year);
  std::optional<std::size_t> group_col;
  if (format.group_column) group_col = find_column(*format.group_column);

  std::size_t max_col = std::max({area_col, area_name_col, occ_col, occ_name_col, emp_col});
  if (year_col) max_col = std::max(max_col, *year_col);
  if (group_col) max_col = std::max(max_col, *group_col);

  ParseResult result;
  std::vector<EmploymentRecord> records;
  std::set<std::tuple<int, std::string, std::string>> seen;
  std::size_t data_rows = 0;
  std::size_t line_no = 1;

  while (auto line = csv::next_line(in, first)) {
    ++line_no;
    const auto fields = csv::split_line(*line, format.delimiter);
    if (group_col && fields.size() > *group_col) {
      const auto group = csv::trim(fields[*group_col]);
      if (std::find(format.group_values.begin(), format.group_values.end(), group) ==
          format.group_values.end()) {
        ++result.filtered;
        continue;
      }
    }
    ++data_rows;
    if (fields.size() <= max_col) {
      result.row_errors.push_back({line_no, "expected at least " + std::to_string(max_col + 1) +
                                                " fields, found " + std::to_string(fields.size())});
      continue;
    }
    const auto emp_text = csv::trim(fields[emp_col]);
    if (std::find(format.suppression_markers.begin(), format.suppression_markers.end(),
                  emp_text) != format.suppression_markers.end()) {
      ++result.dropped;
      continue;
    }
    const auto employment = csv::parse_number(emp_text);
    if (!employment || !std::isfinite(*employment) || *employment < 0.0) {
      result.row_errors.push_back({line_no, "unreadable employment '" + emp_text + "'"});
      continue;
    }
    int year = 0;
    if (format.fixed_year) {
      year = *format.fixed_year;
    } else if (auto y = parse_int(fields[*year_col])) {
      year = *y;
    } else {
      result.row_errors.push_back({line_no, "unreadable year '" + fields[*year_col] + "'"});
      continue;
    }
    EmploymentRecord rec;
    rec.region_code = csv::trim(fields[area_col]);
    rec.region_name = csv::trim(fields[area_name_col]);
    rec.occupation_code = csv::trim(fields[occ_col]);
    rec.occupation_name = csv::trim(fields[occ_name_col]);
    rec.year = year;
    rec.employment = *employment;
    if (rec.region_code.empty() || rec.occupation_code.empty()) {
      result.row_errors.push_back({line_no, "empty area or occupation code"});
      continue;
    }
    if (!seen.emplace(year, rec.region_code, rec.occupation_code).second) {
      result.row_errors.push_back({line_no, "duplicate record for " + rec.region_code + "/" +
                                                rec.occupation_code + " in " +
                                                std::to_string(year)});
      continue;
    }
    records.push_back(std::move(rec));
  }

  if (data_rows > 0 && 2 * result.row_errors.size() > data_rows) {
    std::ostringstream msg;
    msg << src << ": " << result.row_errors.size() << " of " << data_rows
        << " rows failed to parse";
    for (std::size_t i = 0; i < std::min<std::size_t>(3, result.row_errors.size()); ++i) {
      msg << "; line " << result.row_errors[i].line << ": " << result.row_errors[i].message;
    }
    throw DataError(msg.str());
  }
  result.table = EmploymentTable::from_records(std::move(records));
  return result;
}

ParseResult parse_csv(const std::filesystem::path& path, const CsvFormat& format) {
  auto in = open_input(path);
  return parse_csv(in, format, path.string());
}

EmploymentTable concat(const std::vector<EmploymentTable>& tables) {
  std::vector<EmploymentRecord> all;
  for (const auto& t : tables) all.insert(all.end(), t.records().begin(), t.records().end());
  return EmploymentTable::from_records(std::move(all), EmploymentTable::Duplicates::sum);
}

// ---------------------------------------------------------------------------
// Transformations

EmploymentTable apply_crosswalk(const EmploymentTable& table, const Crosswalk& xwalk) {
  if (xwalk.empty()) return table;
  std::vector<EmploymentRecord> records = table.records();
  for (auto& r : records) {
    if (auto canonical = xwalk.lookup(r.year, r.region_code)) r.region_code = *canonical;
  }
  return EmploymentTable::from_records(std::move(records), EmploymentTable::Duplicates::sum);
}

EmploymentTable restrict_consistent(const EmploymentTable& table, const std::set<int>& years) {
  if (years.empty()) throw ConfigError("restrict_consistent: year set is empty");
  std::unordered_map<std::string, std::set<int>> present;
  for (const auto& r : table.records()) {
    if (years.count(r.year)) present[r.region_code].insert(r.year);
  }
  std::set<std::string> keep;
  for (const auto& [region, ys] : present) {
    if (ys.size() == years.size()) keep.insert(region);
  }
  if (keep.empty()) throw DataError("no consistent regions across the requested years");
  std::vector<EmploymentRecord> records;
  for (const auto& r : table.records()) {
    if (keep.count(r.region_code)) records.push_back(r);
  }
  return EmploymentTable::from_records(std::move(records));
}

namespace {

RegionOccupationMatrix empty_matrix_for(const EmploymentTable& table) {
  RegionOccupationMatrix m;
  m.kind = MatrixKind::raw;
  m.region_labels = table.regions();
  m.occupation_labels = table.occupations();
  m.values = Matrix::Zero(static_cast<Eigen::Index>(m.region_labels.size()),
                          static_cast<Eigen::Index>(m.occupation_labels.size()));
  for (const auto& code : m.region_labels) m.region_names.push_back(table.region_name(code));
  for (const auto& code : m.occupation_labels) {
    m.occupation_names.push_back(table.occupation_name(code));
  }
  return m;
}

template <class Pred>
RegionOccupationMatrix fill_matrix(const EmploymentTable& table, Pred include) {
  auto m = empty_matrix_for(table);
  std::unordered_map<std::string, Eigen::Index> row;
  std::unordered_map<std::string, Eigen::Index> col;
  for (std::size_t i = 0; i < m.region_labels.size(); ++i) {
    row[m.region_labels[i]] = static_cast<Eigen::Index>(i);
  }
  for (std::size_t j = 0; j < m.occupation_labels.size(); ++j) {
    col[m.occupation_labels[j]] = static_cast<Eigen::Index>(j);
  }
  for (const auto& r : table.records()) {
    if (include(r.year)) m.values(row.at(r.region_code), col.at(r.occupation_code)) += r.employment;
  }
  return m;
}

}  // namespace

RegionOccupationMatrix to_matrix(const EmploymentTable& table, int year) {
  const auto& ys = table.years();
  if (std::find(ys.begin(), ys.end(), year) == ys.end()) {
    throw DataError("year " + std::to_string(year) + " not present in table");
  }
  return fill_matrix(table, [year](int y) { return y == year; });
}

RegionOccupationMatrix pooled_matrix(const EmploymentTable& table, const std::set<int>& years) {
  if (table.empty()) throw DataError("cannot build a matrix from an empty table");
  return fill_matrix(table, [&years](int y) { return years.empty() || years.count(y) > 0; });
}

// ---------------------------------------------------------------------------
// Serialization

void write_table_csv(const std::filesystem::path& path, const EmploymentTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  const CsvFormat fmt;
  out << csv::join({fmt.area_code, fmt.area_name, fmt.occupation_code, fmt.occupation_name,
                    fmt.employment, fmt.year})
      << '\n';
  for (const auto& r : table.records()) {
    out << csv::join({r.region_code, r.region_name, r.occupation_code, r.occupation_name,
                      csv::format_double(r.employment), std::to_string(r.year)})
        << '\n';
  }
}

void write_table_binary(const std::filesystem::path& path, const EmploymentTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  binary::Writer w(out, binary::Payload::table);
  const auto& recs = table.records();
  std::vector<std::string> column;
  column.reserve(recs.size());
  auto write_strings = [&](auto member) {
    column.clear();
    for (const auto& r : recs) column.push_back(r.*member);
    w.str_array(column);
  };
  write_strings(&EmploymentRecord::region_code);
  write_strings(&EmploymentRecord::region_name);
  write_strings(&EmploymentRecord::occupation_code);
  write_strings(&EmploymentRecord::occupation_name);
  w.u64(recs.size());
  for (const auto& r : recs) w.i32(r.year);
  std::vector<double> emp;
  emp.reserve(recs.size());
  for (const auto& r : recs) emp.push_back(r.employment);
  w.f64_array(emp.data(), emp.size());
}

EmploymentTable read_table(const std::filesystem::path& path) {
  if (!binary::has_magic(path)) {
    CsvFormat fmt;
    return parse_csv(path, fmt).table;
  }
  auto in = open_input(path);
  binary::Reader r(in, binary::Payload::table);
  auto region_codes = r.str_array();
  auto region_names = r.str_array();
  auto occ_codes = r.str_array();
  auto occ_names = r.str_array();
  const auto n = r.u64();
  if (region_codes.size() != n || region_names.size() != n || occ_codes.size() != n ||
      occ_names.size() != n) {
    throw DataError(path.string() + ": inconsistent column lengths");
  }
  std::vector<int> years(n);
  for (auto& y : years) y = r.i32();
  std::vector<double> emp(n);
  r.f64_array(emp.data(), n);
  std::vector<EmploymentRecord> records(n);
  for (std::size_t i = 0; i < n; ++i) {
    records[i] = {std::move(region_codes[i]), std::move(region_names[i]), std::move(occ_codes[i]),
                  std::move(occ_names[i]), years[i], emp[i]};
  }
  return EmploymentTable::from_records(std::move(records));
}

void write_table(const std::filesystem::path& path, const EmploymentTable& table) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (is_binary_path(path)) {
    write_table_binary(path, table);
  } else {
    write_table_csv(path, table);
  }
}

}  // namespace laborscope
