#include "dina/dataset.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dina {

void Dataset::validate() const {
  if (X.rows() < 1 || X.cols() < 1) throw std::invalid_argument("Dataset: empty covariate matrix");
  if (!X.allFinite()) throw std::invalid_argument("Dataset: non-finite covariate");
  if (w.size() != X.rows() || y.size() != X.rows())
    throw std::invalid_argument("Dataset: row count mismatch");
  if (family.is_cox() != delta.has_value())
    throw std::invalid_argument("Dataset: delta present iff family is Cox");
  if (delta && delta->size() != X.rows())
    throw std::invalid_argument("Dataset: delta length mismatch");
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    if (w[i] < 0 || w[i] >= n_arms) throw std::invalid_argument("Dataset: arm index out of range");
    const double yi = y[i];
    switch (family.kind()) {
      case FamilyKind::Bernoulli:
        if (yi != 0.0 && yi != 1.0) throw std::invalid_argument("Dataset: Bernoulli y must be 0/1");
        break;
      case FamilyKind::Poisson:
        if (yi < 0.0 || yi != std::floor(yi))
          throw std::invalid_argument("Dataset: Poisson y must be a nonnegative integer");
        break;
      case FamilyKind::CoxFull:
      case FamilyKind::CoxPartial:
        if (yi < 0.0) throw std::invalid_argument("Dataset: Cox time must be nonnegative");
        if ((*delta)[i] != 0.0 && (*delta)[i] != 1.0)
          throw std::invalid_argument("Dataset: delta must be 0/1");
        break;
      default:
        break;
    }
  }
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& idx) const {
  Dataset out;
  out.family = family;
  out.n_arms = n_arms;
  out.X.resize(static_cast<Eigen::Index>(idx.size()), X.cols());
  out.w.resize(static_cast<Eigen::Index>(idx.size()));
  out.y.resize(static_cast<Eigen::Index>(idx.size()));
  if (delta) out.delta = Eigen::VectorXd(static_cast<Eigen::Index>(idx.size()));
  for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(idx.size()); ++k) {
    out.X.row(k) = X.row(idx[k]);
    out.w[k] = w[idx[k]];
    out.y[k] = y[idx[k]];
    if (delta) (*out.delta)[k] = (*delta)[idx[k]];
  }
  return out;
}

void write_dataset_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.precision(17);
  for (Eigen::Index j = 0; j < data.d(); ++j) out << 'x' << (j + 1) << ',';
  out << "w,y";
  if (data.delta) out << ",delta";
  out << '\n';
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    for (Eigen::Index j = 0; j < data.d(); ++j) out << data.X(i, j) << ',';
    out << data.w[i] << ',' << data.y[i];
    if (data.delta) out << ',' << (*data.delta)[i];
    out << '\n';
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

[[noreturn]] void parse_fail(const std::string& path, std::size_t row, const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(row) + ": " + what);
}

}  // namespace

Dataset read_dataset_csv(const std::string& path, const Family& family) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);

  int d = 0;
  while (d < static_cast<int>(header.size()) && header[d] == "x" + std::to_string(d + 1)) ++d;
  if (d == 0) parse_fail(path, 1, "expected covariate columns x1..xd");
  const int w_col = d;
  const int y_col = d + 1;
  int delta_col = -1;
  if (w_col >= static_cast<int>(header.size()) || header[w_col] != "w")
    parse_fail(path, 1, "missing column 'w'");
  if (y_col >= static_cast<int>(header.size()) || header[y_col] != "y")
    parse_fail(path, 1, "missing column 'y'");
  if (static_cast<int>(header.size()) > d + 2) {
    if (header[d + 2] != "delta") parse_fail(path, 1, "unexpected column '" + header[d + 2] + "'");
    delta_col = d + 2;
  }
  if (family.is_cox() && delta_col < 0) parse_fail(path, 1, "missing column 'delta'");

  std::vector<std::array<double, 3>> tail;
  std::vector<double> xs;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (static_cast<int>(cells.size()) != static_cast<int>(header.size()))
      parse_fail(path, row, "expected " + std::to_string(header.size()) + " fields");
    std::array<double, 3> t{0.0, 0.0, 1.0};
    try {
      for (int j = 0; j < d; ++j) xs.push_back(std::stod(cells[j]));
      t[0] = std::stod(cells[w_col]);
      t[1] = std::stod(cells[y_col]);
      if (delta_col >= 0) t[2] = std::stod(cells[delta_col]);
    } catch (const std::exception&) {
      parse_fail(path, row, "non-numeric field");
    }
    tail.push_back(t);
  }
  const Eigen::Index n = static_cast<Eigen::Index>(tail.size());
  if (n == 0) parse_fail(path, row, "no data rows");

  Dataset data;
  data.family = family;
  data.X.resize(n, d);
  data.w.resize(n);
  data.y.resize(n);
  if (family.is_cox()) data.delta = Eigen::VectorXd(n);
  int max_arm = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) data.X(i, j) = xs[static_cast<std::size_t>(i) * d + j];
    data.w[i] = static_cast<int>(tail[i][0]);
    data.y[i] = tail[i][1];
    if (data.delta) (*data.delta)[i] = tail[i][2];
    max_arm = std::max(max_arm, data.w[i]);
  }
  data.n_arms = std::max(2, max_arm + 1);
  data.validate();
  return data;
}

}  // namespace dina
