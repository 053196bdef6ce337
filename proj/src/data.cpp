#include "vus/data.hpp"

#include <algorithm>
#include <set>

namespace vus {

const char* method_name(Method m) {
  switch (m) {
    case Method::FI: return "FI";
    case Method::MSI: return "MSI";
    case Method::IPW: return "IPW";
    case Method::PDR: return "PDR";
    case Method::Naive: return "Naive";
    case Method::Full: return "Full";
  }
  return "?";
}

int Dataset::n_verified() const {
  int k = 0;
  for (auto f : v) k += f != 0;
  return k;
}

Eigen::VectorXd Dataset::a1(int i) const {
  Eigen::VectorXd out(static_cast<int>(a1_cols.size()));
  for (std::size_t j = 0; j < a1_cols.size(); ++j) out[j] = a(i, a1_cols[j]);
  return out;
}

std::vector<int> Dataset::a2_cols() const {
  std::set<int> in_a1(a1_cols.begin(), a1_cols.end());
  std::vector<int> out;
  for (int c = 0; c < n_covariates(); ++c)
    if (!in_a1.count(c)) out.push_back(c);
  return out;
}

Dataset Dataset::from_subjects(const std::vector<Subject>& subjects,
                               std::vector<std::string> names,
                               std::vector<int> a1_cols) {
  Dataset ds;
  const int n = static_cast<int>(subjects.size());
  const int m = n > 0 ? static_cast<int>(subjects[0].a.size()) : 0;
  ds.t.resize(n);
  ds.a.resize(n, m);
  ds.v.resize(n);
  ds.d_obs.assign(n, 0);
  ds.d_true.assign(n, 0);
  for (int i = 0; i < n; ++i) {
    const Subject& s = subjects[i];
    if (static_cast<int>(s.a.size()) != m)
      throw SchemaError("subjects have inconsistent covariate dimensions");
    ds.t[i] = s.t;
    ds.a.row(i) = s.a.transpose();
    ds.v[i] = s.verified ? 1 : 0;
    if (s.disease) ds.d_obs[i] = *s.disease;
  }
  ds.covariate_names = std::move(names);
  ds.a1_cols = std::move(a1_cols);
  ds.validate();
  return ds;
}

void Dataset::validate() const {
  const int nn = n();
  const int m = n_covariates();
  if (static_cast<int>(v.size()) != nn || static_cast<int>(d_obs.size()) != nn ||
      static_cast<int>(d_true.size()) != nn || a.rows() != nn)
    throw SchemaError("dataset column lengths disagree");
  if (static_cast<int>(covariate_names.size()) != m)
    throw SchemaError("covariate name count does not match covariate columns");
  std::set<int> seen;
  for (int c : a1_cols) {
    if (c < 0 || c >= m) throw SchemaError("a1 column index out of range");
    if (!seen.insert(c).second) throw SchemaError("duplicate a1 column index");
  }
  for (int i = 0; i < nn; ++i) {
    if (v[i] != 0 && v[i] != 1) throw SchemaError("verification flag must be 0 or 1");
    if (d_obs[i] < 0 || d_obs[i] > 3 || d_true[i] < 0 || d_true[i] > 3)
      throw SchemaError("disease class must be 1, 2 or 3");
    if (v[i] == 1 && d_obs[i] == 0)
      throw SchemaError("verified subject " + std::to_string(i) + " has no disease status");
    if (!std::isfinite(t[i])) throw SchemaError("non-finite test value");
    for (int c = 0; c < m; ++c)
      if (!std::isfinite(a(i, c))) throw SchemaError("non-finite covariate value");
  }
}

}  // namespace vus
