#include "vus/csv.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace vus {

int CsvTable::column(const std::string& name) const {
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] == name) return static_cast<int>(c);
  return -1;
}

CsvTable parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
      continue;
    }
    switch (ch) {
      case '"':
        quoted = true;
        any = true;
        break;
      case ',':
        record.push_back(field);
        field.clear();
        any = true;
        break;
      case '\r':
        break;
      case '\n':
        if (any || !field.empty() || !record.empty()) {
          record.push_back(field);
          records.push_back(record);
        }
        field.clear();
        record.clear();
        any = false;
        break;
      default:
        field += ch;
        any = true;
    }
  }
  if (any || !field.empty() || !record.empty()) {
    record.push_back(field);
    records.push_back(record);
  }
  if (records.empty()) throw SchemaError("CSV input is empty");
  CsvTable t;
  t.header = records.front();
  t.rows.assign(records.begin() + 1, records.end());
  for (const auto& row : t.rows)
    if (row.size() != t.header.size())
      throw SchemaError("CSV row has " + std::to_string(row.size()) +
                        " fields, header has " + std::to_string(t.header.size()));
  return t;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string to_csv(const CsvTable& table) {
  std::string out;
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += csv_escape(row[c]);
    }
    out += "\r\n";
  };
  emit(table.header);
  for (const auto& row : table.rows) emit(row);
  return out;
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << to_csv(table);
}

std::string fmt_full(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace {

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw SchemaError("cannot parse " + what + " value '" + s + "'");
  }
}

}  // namespace

Dataset dataset_from_csv(const CsvTable& table, const ColumnMap& columns,
                         const std::vector<std::string>& iv_names,
                         bool negate_test) {
  const int ct = table.column(columns.test);
  if (ct < 0) throw SchemaError("missing test column '" + columns.test + "'");
  const int cv = table.column(columns.verified);
  if (cv < 0) throw SchemaError("missing verified column '" + columns.verified + "'");
  const int cd = table.column(columns.disease);
  if (cd < 0) throw SchemaError("missing disease column '" + columns.disease + "'");
  std::vector<int> ca;
  for (const auto& name : columns.covariates) {
    if (name == columns.test)
      throw SchemaError("test column cannot also be a covariate");
    const int c = table.column(name);
    if (c < 0) throw SchemaError("missing covariate column '" + name + "'");
    ca.push_back(c);
  }

  std::vector<int> a1_cols;
  for (std::size_t j = 0; j < columns.covariates.size(); ++j) {
    const auto& name = columns.covariates[j];
    if (std::find(iv_names.begin(), iv_names.end(), name) == iv_names.end())
      a1_cols.push_back(static_cast<int>(j));
  }
  for (const auto& iv : iv_names)
    if (std::find(columns.covariates.begin(), columns.covariates.end(), iv) ==
        columns.covariates.end())
      throw SchemaError("instrumental variable '" + iv + "' is not a covariate");

  const int n = static_cast<int>(table.rows.size());
  Dataset ds;
  ds.covariate_names = columns.covariates;
  ds.a1_cols = a1_cols;
  ds.t.resize(n);
  ds.a.resize(n, static_cast<int>(ca.size()));
  ds.v.resize(n);
  ds.d_obs.assign(n, 0);
  ds.d_true.assign(n, 0);
  for (int i = 0; i < n; ++i) {
    const auto& row = table.rows[i];
    ds.t[i] = parse_double(row[ct], "test");
    if (negate_test) ds.t[i] = -ds.t[i];
    for (std::size_t j = 0; j < ca.size(); ++j)
      ds.a(i, static_cast<int>(j)) = parse_double(row[ca[j]], "covariate");
    const std::string& vfield = row[cv];
    if (vfield != "0" && vfield != "1")
      throw SchemaError("row " + std::to_string(i + 2) +
                        ": verified flag must be 0 or 1, got '" + vfield + "'");
    ds.v[i] = vfield == "1";
    const std::string& dfield = row[cd];
    if (ds.v[i]) {
      if (dfield != "1" && dfield != "2" && dfield != "3")
        throw SchemaError("row " + std::to_string(i + 2) +
                          ": verified subject needs disease class 1, 2 or 3, got '" +
                          dfield + "'");
      ds.d_obs[i] = dfield[0] - '0';
    } else if (!dfield.empty()) {
      throw SchemaError("row " + std::to_string(i + 2) +
                        ": unverified subject must have an empty disease field");
    }
  }
  ds.validate();
  return ds;
}

CsvTable dataset_to_csv(const Dataset& data) {
  CsvTable t;
  t.header.push_back("test");
  for (const auto& name : data.covariate_names) t.header.push_back(name);
  t.header.push_back("verified");
  t.header.push_back("disease");
  for (int i = 0; i < data.n(); ++i) {
    std::vector<std::string> row;
    row.push_back(fmt_full(data.t[i]));
    for (int c = 0; c < data.n_covariates(); ++c)
      row.push_back(fmt_full(data.a(i, c)));
    row.push_back(data.v[i] ? "1" : "0");
    row.push_back(data.v[i] ? std::to_string(data.d_obs[i]) : "");
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace vus
