#pragma once

#include "laborscope/matrix.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace laborscope {

struct EmploymentRecord {
  std::string region_code;
  std::string region_name;
  std::string occupation_code;
  std::string occupation_name;
  int year = 0;
  double employment = 0.0;
};

/// Functional (year, old_code) -> canonical_code mapping for area codes that
/// changed between survey years.
class Crosswalk {
 public:
  struct Entry {
    int year = 0;
    std::string old_code;
    std::string canonical_code;
  };

  Crosswalk() = default;

  /// Throws DataError if (year, old_code) is already mapped to a different code.
  void add(int year, std::string old_code, std::string canonical_code);

  std::optional<std::string> lookup(int year, std::string_view code) const;
  const std::vector<Entry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  /// CSV with header year,old_code,canonical_code.
  static Crosswalk read_csv(const std::filesystem::path& path);

 private:
  std::vector<Entry> entries_;
  std::map<std::pair<int, std::string>, std::string, std::less<>> index_;
};

/// Long-form employment table. Records are kept sorted by (year, region,
/// occupation); index sets are lexicographic by code.
class EmploymentTable {
 public:
  enum class Duplicates { reject, sum };

  EmploymentTable() = default;

  /// Builds the table and its index sets. Negative or non-finite employment is
  /// a DataError; duplicate (region, occupation, year) keys are either rejected
  /// or summed.
  static EmploymentTable from_records(std::vector<EmploymentRecord> records,
                                      Duplicates policy = Duplicates::reject);

  const std::vector<EmploymentRecord>& records() const { return records_; }
  const std::vector<std::string>& regions() const { return regions_; }
  const std::vector<std::string>& occupations() const { return occupations_; }
  const std::vector<int>& years() const { return years_; }
  bool empty() const { return records_.empty(); }
  std::size_t size() const { return records_.size(); }

  /// Display names; the latest year's name wins when a code was renamed.
  std::string region_name(std::string_view code) const;
  std::string occupation_name(std::string_view code) const;

  /// Total employment of a region in one year (0 if absent).
  double region_total(std::string_view region, int year) const;

 private:
  std::vector<EmploymentRecord> records_;
  std::vector<std::string> regions_;
  std::vector<std::string> occupations_;
  std::vector<int> years_;
  std::map<std::string, std::string, std::less<>> region_names_;
  std::map<std::string, std::string, std::less<>> occupation_names_;
};

/// Column mapping for employment CSVs. Defaults follow the OES flat-file headers.
struct CsvFormat {
  std::string area_code = "AREA";
  std::string area_name = "AREA_TITLE";
  std::string occupation_code = "OCC_CODE";
  std::string occupation_name = "OCC_TITLE";
  std::string employment = "TOT_EMP";
  std::string year = "YEAR";
  /// Used when the file has no year column (OES publishes one file per year).
  std::optional<int> fixed_year;
  /// Employment cells equal to one of these mark a suppressed estimate.
  std::vector<std::string> suppression_markers = {"**", "#", ""};
  /// Optional row filter, e.g. OCC_GROUP == "detailed" to skip aggregate rows.
  std::optional<std::string> group_column;
  std::vector<std::string> group_values;
  char delimiter = ',';
};

struct RowIssue {
  std::size_t line = 0;
  std::string message;
};

struct ParseResult {
  EmploymentTable table;
  std::size_t dropped = 0;        // suppressed employment cells
  std::size_t filtered = 0;       // rows excluded by the group filter
  std::vector<RowIssue> row_errors;
};

/// Parses a long-form CSV. Missing configured columns are a format error
/// naming the column; malformed rows are collected and only fatal when they
/// exceed half of the data rows.
ParseResult parse_csv(const std::filesystem::path& path, const CsvFormat& format);
ParseResult parse_csv(std::istream& in, const CsvFormat& format,
                      std::string_view source = "<stream>");

/// Merges several tables (e.g. one file per year). Duplicate keys are summed.
EmploymentTable concat(const std::vector<EmploymentTable>& tables);

EmploymentTable apply_crosswalk(const EmploymentTable& table, const Crosswalk& xwalk);

/// Keeps regions with at least one record in every requested year.
EmploymentTable restrict_consistent(const EmploymentTable& table, const std::set<int>& years);

RegionOccupationMatrix to_matrix(const EmploymentTable& table, int year);

/// Region x occupation matrix of employment summed over the given years
/// (all years when empty). Used for the integrated multi-year fit.
RegionOccupationMatrix pooled_matrix(const EmploymentTable& table, const std::set<int>& years = {});

/// Long-form CSV in the default CsvFormat column names.
void write_table_csv(const std::filesystem::path& path, const EmploymentTable& table);
void write_table_binary(const std::filesystem::path& path, const EmploymentTable& table);
/// Reads either representation (binary detected by magic).
EmploymentTable read_table(const std::filesystem::path& path);

void write_table(const std::filesystem::path& path, const EmploymentTable& table);

}  // namespace laborscope
