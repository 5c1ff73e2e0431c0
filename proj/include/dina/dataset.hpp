#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "dina/family.hpp"

namespace dina {

// Row-per-unit design: X(i, :) are the covariates of unit i, w[i] the arm
// index (0..n_arms-1), y[i] the response (for Cox the censored time), and
// delta[i] the event indicator, present iff the family is Cox.
struct Dataset {
  Family family = Family::gaussian();
  Eigen::MatrixXd X;
  Eigen::VectorXi w;
  Eigen::VectorXd y;
  std::optional<Eigen::VectorXd> delta;
  int n_arms = 2;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index d() const { return X.cols(); }

  // throws std::invalid_argument on any inconsistency
  void validate() const;

  Dataset subset(const std::vector<Eigen::Index>& idx) const;
};

// CSV schema: header x1..xd,w,y[,delta]; the family is carried by the run
// configuration, not the file.
void write_dataset_csv(const Dataset& data, const std::string& path);
Dataset read_dataset_csv(const std::string& path, const Family& family);

}  // namespace dina
