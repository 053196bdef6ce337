#pragma once

#include <string>
#include <vector>

#include "vus/data.hpp"

namespace vus {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

/// RFC 4180 reader: quoted fields, embedded commas/quotes/newlines, CRLF.
CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text);

std::string csv_escape(const std::string& field);
std::string to_csv(const CsvTable& table);
void write_csv(const std::string& path, const CsvTable& table);

/// Round-trip exact formatting of doubles (17 significant digits).
std::string fmt_full(double x);

struct ColumnMap {
  std::string test;
  std::vector<std::string> covariates;
  std::string verified;
  std::string disease;
};

/// Ingests a dataset: verification flag in {0,1}; disease in {1,2,3} for
/// verified rows and empty for unverified rows. Throws SchemaError.
Dataset dataset_from_csv(const CsvTable& table, const ColumnMap& columns,
                         const std::vector<std::string>& iv_names,
                         bool negate_test = false);

/// Columns: test, covariates..., verified, disease (empty when unverified).
CsvTable dataset_to_csv(const Dataset& data);

}  // namespace vus
